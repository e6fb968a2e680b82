#pragma once

#include <algorithm>
#include <cmath>
#include <future>
#include <string>
#include <utility>
#include <vector>

#include "dataflow/errors.hpp"
#include "dataflow/front.hpp"
#include "dataflow/macro_solver.hpp"
#include "dataflow/params.hpp"

namespace dataflow {

/// Processor-rate policy: either a constant rate alpha_bar, or the
/// priority-to-trailing allocation
///   alpha(x) = C rho_star (zeta_max - zeta0(x)),
/// normalized so the midpoint-rule integral of alpha over the torus is
/// alpha_bar.
struct PolicySpec {
    enum class Kind { Constant, Priority };
    Kind kind = Kind::Constant;
    double alpha_bar = 0.5;
    double zeta_max = 0.0;      ///< priority only; must exceed max zeta0
    FrontProfile zeta0;         ///< priority only; initial front on the x-grid
};

/// Normalization constant C of the priority policy.
inline double priority_c_alpha(const PolicySpec& spec, const ModelParams& p) {
    const double zmax = *std::max_element(spec.zeta0.zeta.begin(), spec.zeta0.zeta.end());
    if (!(spec.zeta_max > zmax))
        throw ConfigError("policy_alpha: zeta_max must exceed max zeta0");
    double mean = 0.0;
    for (double z : spec.zeta0.zeta) mean += p.rho_star * (spec.zeta_max - z);
    mean /= static_cast<double>(spec.zeta0.zeta.size());
    return spec.alpha_bar / mean;
}

inline RateField policy_alpha(const PolicySpec& spec, const ModelParams& p, int nx) {
    if (!(spec.alpha_bar > 0.0)) throw ConfigError("policy_alpha: alpha_bar must be > 0");
    if (spec.kind == PolicySpec::Kind::Constant) return RateField::constant(spec.alpha_bar, nx);
    if (spec.zeta0.size() != nx) throw ConfigError("policy_alpha: zeta0 size must match nx");
    const double c = priority_c_alpha(spec, p);
    RateField f;
    f.a.resize(static_cast<std::size_t>(nx));
    for (int i = 0; i < nx; ++i)
        f.a[static_cast<std::size_t>(i)] =
            c * p.rho_star * (spec.zeta_max - spec.zeta0.zeta[static_cast<std::size_t>(i)]);
    f.validate();
    return f;
}

/// Accumulates the quantities of interest at fixed stages z:
///   omega1(t,z) = int_0^t int_T Phi dx ds   (cumulative outflow through z)
///   omega2(t,z) = int_T Phi dx              (current outflow)
///   omega3(t,z) = int_0^t int_T rho dx ds   (cumulative load)
/// x-integrals by the midpoint rule over cells, t-integrals by the trapezoid
/// rule over accepted steps. Phi is evaluated on the cell row nearest z.
class QoiTracker {
public:
    struct Series {
        double z = 0.0;
        std::vector<double> t, omega1, omega2, omega3;
    };

    QoiTracker(const Grid& g, const ModelParams& p, RateField alpha, const std::vector<double>& zs)
        : grid_(g), params_(p), alpha_(std::move(alpha)) {
        for (double z : zs) {
            if (!(z > 0.0 && z < 1.0)) throw ConfigError("QoiTracker: z must lie in (0, 1)");
            Tracked tr;
            tr.row = std::clamp(static_cast<int>(std::lround(z / g.dz - 0.5)), 0, g.nz - 1);
            tr.series.z = z;
            tracked_.push_back(std::move(tr));
        }
    }

    void observe(const FieldState& st) {
        for (Tracked& tr : tracked_) {
            double phi_sum = 0.0, rho_sum = 0.0;
            for (int i = 0; i < grid_.nx; ++i) {
                const std::size_t c = grid_.idx(i, tr.row);
                phi_sum += flux_phi(st.R[c], st.S[c], alpha_[static_cast<std::size_t>(i)], params_);
                rho_sum += st.R[c];
            }
            const double w2 = phi_sum / grid_.nx;
            const double load = rho_sum / grid_.nx;
            if (!tr.series.t.empty()) {
                const double dt = st.t - tr.series.t.back();
                tr.w1 += 0.5 * dt * (w2 + tr.series.omega2.back());
                tr.w3 += 0.5 * dt * (load + tr.prev_load);
            }
            tr.series.t.push_back(st.t);
            tr.series.omega1.push_back(tr.w1);
            tr.series.omega2.push_back(w2);
            tr.series.omega3.push_back(tr.w3);
            tr.prev_load = load;
        }
    }

    std::vector<Series> series() const {
        std::vector<Series> out;
        out.reserve(tracked_.size());
        for (const Tracked& tr : tracked_) out.push_back(tr.series);
        return out;
    }

private:
    struct Tracked {
        int row = 0;
        double w1 = 0.0, w3 = 0.0, prev_load = 0.0;
        Series series;
    };
    Grid grid_;
    ModelParams params_;
    RateField alpha_;
    std::vector<Tracked> tracked_;
};

struct PolicyRun {
    std::string name;
    RateField alpha;
    std::vector<QoiTracker::Series> series;
    RunResult result;
};

/// Runs the macroscopic solver once per policy from identical initial data
/// and returns the omega time series per policy and per requested z. Member
/// simulations run concurrently; results are merged in the given order.
inline std::vector<PolicyRun> policy_compare(const FieldState& init, const Grid& g,
                                             const ModelParams& p,
                                             const std::vector<std::pair<std::string, PolicySpec>>& policies,
                                             const std::vector<double>& z_list,
                                             const std::vector<double>& output_times,
                                             double rho_b) {
    std::vector<std::future<PolicyRun>> jobs;
    jobs.reserve(policies.size());
    for (const auto& [name, spec] : policies) {
        jobs.push_back(std::async(std::launch::async, [&, name, spec]() {
            PolicyRun pr;
            pr.name = name;
            pr.alpha = policy_alpha(spec, p, g.nx);
            QoiTracker tracker(g, p, pr.alpha, z_list);
            RunOptions opt;
            opt.output_times = output_times;
            opt.rho_b = rho_b;
            pr.result = run(init, g, p, pr.alpha, opt,
                            [&tracker](const FieldState& st) { tracker.observe(st); });
            pr.series = tracker.series();
            return pr;
        }));
    }
    std::vector<PolicyRun> out;
    out.reserve(jobs.size());
    for (auto& j : jobs) out.push_back(j.get());
    return out;
}

} // namespace dataflow
