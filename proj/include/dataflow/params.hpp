#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "dataflow/errors.hpp"

namespace dataflow {

/// Model constants shared by the microscopic lattice and the macroscopic
/// conservation-law model. The processing-rate field alpha(x) is carried
/// separately as a RateField; operations on scalars take alpha directly.
///
/// Immutable after construction in practice; safe to share across threads.
struct ModelParams {
    double rho_star = 0.8;  ///< density needed to process at full speed (ramp knee)
    double eta = 0.5;       ///< neighbor-throttling strength (stages per processor)
    double r = 0.5;         ///< plateau density of front-type data
    double alpha_bar = 0.1; ///< mean processing rate

    void validate() const {
        if (!(rho_star > 0.0) || !std::isfinite(rho_star))
            throw ConfigError("ModelParams: rho_star must be positive and finite");
        if (!(eta > 0.0) || !std::isfinite(eta))
            throw ConfigError("ModelParams: eta must be positive and finite");
    }

    /// Front scenarios additionally require 0 < r < rho_star.
    void validate_front() const {
        validate();
        if (!(r > 0.0 && r < rho_star))
            throw ConfigError("ModelParams: front data requires 0 < r < rho_star");
    }
};

/// Processing rate alpha(x) sampled at the nx cell centers x_i = (i + 1/2)/nx
/// of the periodic unit torus.
struct RateField {
    std::vector<double> a;

    static RateField constant(double value, int nx) {
        RateField f;
        f.a.assign(static_cast<std::size_t>(nx), value);
        f.validate();
        return f;
    }

    template <class F>
    static RateField sample(F&& fn, int nx) {
        RateField f;
        f.a.resize(static_cast<std::size_t>(nx));
        for (int i = 0; i < nx; ++i)
            f.a[static_cast<std::size_t>(i)] = fn((i + 0.5) / nx);
        f.validate();
        return f;
    }

    double operator[](std::size_t i) const { return a[i]; }
    int size() const { return static_cast<int>(a.size()); }

    double max() const {
        double m = 0.0;
        for (double v : a) m = std::max(m, v);
        return m;
    }

    /// Midpoint-rule integral over the torus (equals the mean since |T| = 1).
    double mean() const {
        double s = 0.0;
        for (double v : a) s += v;
        return s / static_cast<double>(a.size());
    }

    void validate() const {
        if (a.empty()) throw ConfigError("RateField: empty sample vector");
        for (double v : a)
            if (!(v >= 0.0) || !std::isfinite(v))
                throw ConfigError("RateField: rates must be >= 0 and finite");
    }
};

} // namespace dataflow
