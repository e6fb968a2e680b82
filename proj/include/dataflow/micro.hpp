#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "dataflow/errors.hpp"
#include "dataflow/params.hpp"

namespace dataflow {

/// State of the processor-stage lattice. q(i, k) is the amount of data in
/// stage k of processor i (both 0-based); processors wrap periodically in i,
/// mirroring the torus of the macroscopic model. outflow(i) accumulates the
/// data that left the final stage of processor i.
///
/// One driver steps a MicroState at a time; distinct states are independent.
class MicroState {
public:
    MicroState(int i_max, int k_max, double q_star)
        : i_max_(i_max), k_max_(k_max), q_star_(q_star),
          q_(static_cast<std::size_t>(i_max) * k_max, 0.0),
          outflow_(static_cast<std::size_t>(i_max), 0.0),
          a_(static_cast<std::size_t>(i_max), 0.0) {
        if (i_max < 1 || k_max < 1) throw ConfigError("MicroState: i_max and k_max must be >= 1");
        if (!(q_star > 0.0)) throw ConfigError("MicroState: q_star must be > 0");
    }

    int processors() const { return i_max_; }
    int stages() const { return k_max_; }
    double q_star() const { return q_star_; }
    double eta() const { return static_cast<double>(k_max_) / i_max_; }

    double& q(int i, int k) { return q_[idx(i, k)]; }
    double q(int i, int k) const { return q_[idx(i, k)]; }
    double& rate(int i) { return a_[static_cast<std::size_t>(i)]; }
    double rate(int i) const { return a_[static_cast<std::size_t>(i)]; }
    double outflow(int i) const { return outflow_[static_cast<std::size_t>(i)]; }

    double t = 0.0;

    std::size_t idx(int i, int k) const {
        return static_cast<std::size_t>(i) * k_max_ + static_cast<std::size_t>(k);
    }
    int wrap(int i) const {
        if (i < 0) return i + i_max_;
        if (i >= i_max_) return i - i_max_;
        return i;
    }

    const std::vector<double>& raw_q() const { return q_; }
    std::vector<double>& raw_q() { return q_; }
    std::vector<double>& raw_outflow() { return outflow_; }
    const std::vector<double>& raw_outflow() const { return outflow_; }

private:
    int i_max_, k_max_;
    double q_star_;
    std::vector<double> q_;
    std::vector<double> outflow_;
    std::vector<double> a_;
};

/// Q_{i,k}: total data in processor i that has traversed the first k-1 stages
/// by now, i.e. sum_{j>=k} q(i,j) plus the accumulated final-stage outflow.
/// Accumulated back-to-front so bulk code can reproduce it bit for bit.
inline double cumulative_Q(const MicroState& s, int i, int k) {
    if (i < 0 || i >= s.processors() || k < 0 || k >= s.stages())
        throw std::out_of_range("cumulative_Q: index out of range");
    double acc = s.outflow(i);
    for (int j = s.stages() - 1; j >= k; --j) acc += s.q(i, j);
    return acc;
}

namespace detail {
inline double micro_flux_from(double a_i, double q_ik, double dplus, double dminus, double q_star) {
    const double v2 = std::min(q_ik, std::min(std::max(dplus, 0.0), std::max(dminus, 0.0)));
    const double v1 = std::max(0.0, std::min(1.0, v2 / q_star));
    return a_i * v1;
}
} // namespace detail

/// Flow of data out of stage k of processor i: a_i * v1(v2(...); q_star),
/// where v2 gauges the usable data locally and in the two lattice neighbors.
/// Always in [0, a_i].
inline double micro_flux(const MicroState& s, int i, int k) {
    const double q_ik = s.q(i, k);
    const double Qc = cumulative_Q(s, i, k);
    const double dplus = cumulative_Q(s, s.wrap(i + 1), k) - Qc + q_ik;
    const double dminus = cumulative_Q(s, s.wrap(i - 1), k) - Qc + q_ik;
    return detail::micro_flux_from(s.rate(i), q_ik, dplus, dminus, s.q_star());
}

/// One explicit Euler step; all fluxes evaluated at the pre-step state.
/// f_in is the per-processor inflow into stage 0 (empty means zero).
/// Undershoots in [-1e-12, 0] are clipped to 0; anything worse throws.
inline void micro_step(MicroState& s, double dt, const std::vector<double>& f_in = {}) {
    const int im = s.processors(), km = s.stages();
    if (!(dt > 0.0)) throw std::invalid_argument("micro_step: dt must be > 0");
    if (!f_in.empty() && static_cast<int>(f_in.size()) != im)
        throw std::invalid_argument("micro_step: f_in size mismatch");

    // suffix sums Q(i,k); same accumulation order as cumulative_Q
    std::vector<double> Q(static_cast<std::size_t>(im) * km);
    for (int i = 0; i < im; ++i) {
        double acc = s.outflow(i);
        for (int k = km - 1; k >= 0; --k) {
            acc += s.q(i, k);
            Q[s.idx(i, k)] = acc;
        }
    }

    std::vector<double> f(static_cast<std::size_t>(im) * km);
    for (int i = 0; i < im; ++i) {
        const int ip = s.wrap(i + 1), in = s.wrap(i - 1);
        for (int k = 0; k < km; ++k) {
            const double q_ik = s.q(i, k);
            const double Qc = Q[s.idx(i, k)];
            f[s.idx(i, k)] = detail::micro_flux_from(s.rate(i), q_ik,
                                                     Q[s.idx(ip, k)] - Qc + q_ik,
                                                     Q[s.idx(in, k)] - Qc + q_ik, s.q_star());
        }
    }

    for (int i = 0; i < im; ++i) {
        double upstream = f_in.empty() ? 0.0 : f_in[static_cast<std::size_t>(i)];
        for (int k = 0; k < km; ++k) {
            const double out = f[s.idx(i, k)];
            double v = s.q(i, k) + dt * (upstream - out);
            if (v < 0.0) {
                if (v < -1e-12)
                    throw StabilityError("micro_step: q(" + std::to_string(i) + "," +
                                         std::to_string(k) + ") = " + std::to_string(v) +
                                         " went negative; dt too large");
                v = 0.0;
            }
            s.q(i, k) = v;
            upstream = out;
        }
        s.raw_outflow()[static_cast<std::size_t>(i)] += dt * upstream;
    }
    s.t += dt;
}

/// Positivity-preserving Euler step size: the flux out of a stage is at most
/// a_i q / q_star, so dt <= q_star / max a keeps q >= 0. The macro CFL under
/// the continuum scaling gives dt <= (1/k_max)/max a; the binding one wins.
inline double micro_default_dt(const MicroState& s) {
    double amax = 0.0;
    for (int i = 0; i < s.processors(); ++i) amax = std::max(amax, s.rate(i));
    if (amax <= 0.0) return 1.0 / s.stages();
    return std::min(1.0 / s.stages(), s.q_star()) / amax;
}

/// Builds a lattice matching macroscopic data: q0 = rho0(x_i, z_k)/k_max,
/// q_star = rho_star/k_max, a_i = alpha(x_i), sampled at cell centers.
/// Requires k_max/i_max to equal params.eta exactly.
template <class Rho0, class Alpha>
MicroState micro_from_macro(Rho0&& rho0, Alpha&& alpha, const ModelParams& p, int i_max, int k_max) {
    p.validate();
    if (static_cast<double>(k_max) / i_max != p.eta)
        throw ConfigError("micro_from_macro: k_max/i_max does not equal eta");
    MicroState s(i_max, k_max, p.rho_star / k_max);
    for (int i = 0; i < i_max; ++i) {
        const double xi = (i + 0.5) / i_max;
        s.rate(i) = alpha(xi);
        for (int k = 0; k < k_max; ++k) {
            const double v = rho0(xi, (k + 0.5) / k_max) / k_max;
            if (!std::isfinite(v) || v < 0.0)
                throw ConfigError("micro_from_macro: rho0 sample must be finite and >= 0");
            s.q(i, k) = v;
        }
    }
    return s;
}

/// Advances to time T with the default step, clipping the final step.
inline void micro_run(MicroState& s, double T, const std::vector<double>& f_in = {}) {
    const double dt0 = micro_default_dt(s);
    while (s.t < T - 1e-12 * std::max(1.0, T)) {
        micro_step(s, std::min(dt0, T - s.t), f_in);
    }
    s.t = T;
}

/// Density seen by the lattice: rho(x_i, z_k) = q(i,k) * k_max, laid out as
/// i*k_max + k to match FieldState on an aligned grid.
inline std::vector<double> micro_density(const MicroState& s) {
    std::vector<double> rho(s.raw_q().size());
    for (std::size_t n = 0; n < rho.size(); ++n) rho[n] = s.raw_q()[n] * s.stages();
    return rho;
}

} // namespace dataflow
