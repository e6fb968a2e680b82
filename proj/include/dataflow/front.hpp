#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dataflow/field.hpp"
#include "dataflow/flux.hpp"
#include "dataflow/grid.hpp"
#include "dataflow/params.hpp"
#include "dataflow/throttle.hpp"

namespace dataflow {

/// Front position zeta(x_i) >= 0 sampled at the nx cell centers of the
/// periodic x-grid.
struct FrontProfile {
    std::vector<double> zeta;
    double t = 0.0;

    FrontProfile() = default;
    explicit FrontProfile(std::vector<double> z, double t_ = 0.0) : zeta(std::move(z)), t(t_) {}

    template <class F>
    static FrontProfile sample(F&& fn, int nx, double t_ = 0.0) {
        FrontProfile f;
        f.t = t_;
        f.zeta.resize(static_cast<std::size_t>(nx));
        for (int i = 0; i < nx; ++i) f.zeta[static_cast<std::size_t>(i)] = fn((i + 0.5) / nx);
        return f;
    }

    int size() const { return static_cast<int>(zeta.size()); }
};

/// Propagation speed of a single front: (alpha/rho_star) W2(dzeta/dx), i.e.
/// (alpha/rho_star)(1 - eta |dzeta/dx|) below the stall threshold, 0 above.
inline double front_speed(double dzeta_dx, double alpha, const ModelParams& p) {
    return (alpha / p.rho_star) * symmetric_w2(dzeta_dx, p.eta);
}

/// Evolves d/dt zeta = (alpha(x)/rho_star) W2(d/dx zeta) with a first-order
/// monotone scheme built from one-sided slopes and the Godunov speed of the
/// tent Hamiltonian:
///   p- <= p+ (fan):   W2 at the point of [p-, p+] nearest zero
///   p+ <  p- (shock): W2 at the endpoint farthest from zero
/// Both selections are >= 0, so the front never retreats. Internal
/// sub-stepping enforces dt <= dx rho_star / (max alpha * eta).
inline FrontProfile front_evolve(const FrontProfile& zeta0, const RateField& alpha,
                                 const ModelParams& p, double T) {
    p.validate();
    const int n = zeta0.size();
    if (n < 3) throw std::invalid_argument("front_evolve: need at least 3 samples");
    if (alpha.size() != n) throw std::invalid_argument("front_evolve: alpha size mismatch");
    for (double z : zeta0.zeta)
        if (!std::isfinite(z)) throw std::domain_error("front_evolve: non-finite zeta0");

    FrontProfile cur = zeta0;
    if (!(T > 0.0)) return cur;
    const double amax = alpha.max();
    if (amax <= 0.0) {
        cur.t += T;
        return cur;
    }

    const double dx = 1.0 / n;
    const double dt_cfl = dx * p.rho_star / (amax * p.eta);
    const long nsteps = std::max(1L, static_cast<long>(std::ceil(T / dt_cfl)));
    const double dt = T / nsteps;

    std::vector<double> next(static_cast<std::size_t>(n));
    for (long s = 0; s < nsteps; ++s) {
        for (int i = 0; i < n; ++i) {
            const int ip = (i + 1 == n) ? 0 : i + 1;
            const int im = (i == 0) ? n - 1 : i - 1;
            const double pm = (cur.zeta[i] - cur.zeta[im]) / dx;
            const double pp = (cur.zeta[ip] - cur.zeta[i]) / dx;
            double grad;
            if (pm <= pp)
                grad = (pm <= 0.0 && 0.0 <= pp) ? 0.0 : (pm > 0.0 ? pm : pp);
            else
                grad = std::abs(pm) >= std::abs(pp) ? pm : pp;
            next[static_cast<std::size_t>(i)] =
                cur.zeta[i] + dt * front_speed(grad, alpha[static_cast<std::size_t>(i)], p);
        }
        cur.zeta.swap(next);
    }
    cur.t = zeta0.t + T;
    return cur;
}

/// Closed-form front for the V-shaped initial profile
/// zeta0(x) = (1 - 2 z0)|x - 0.5| + z0 when the slope is below the stall
/// threshold (eta (1 - 2 z0) < 1): the sides translate at the throttled
/// speed while the overtaking flat tip spreads at full speed.
inline double front_vshape_solution(double x, double t, double z0, double alpha,
                                    const ModelParams& p) {
    const double slope = 1.0 - 2.0 * z0;
    if (!(p.eta * slope < 1.0))
        throw std::domain_error(
            "front_vshape_solution: eta*(1-2*z0) >= 1; use front_stalled_solution");
    const double c = alpha / p.rho_star;
    const double zeta0 = slope * std::abs(x - 0.5) + z0;
    return std::max(zeta0 + c * (1.0 - p.eta * slope) * t, z0 + c * t);
}

/// Stalled counterpart (eta (1 - 2 z0) > 1): the slanted sides do not move at
/// all until the full-speed tip overtakes them.
inline double front_stalled_solution(double x, double t, double z0, double alpha,
                                     const ModelParams& p) {
    const double slope = 1.0 - 2.0 * z0;
    const double c = alpha / p.rho_star;
    const double zeta0 = slope * std::abs(x - 0.5) + z0;
    return std::max(zeta0, z0 + c * t);
}

/// Exact single-front weak solution sampled as cell averages:
/// rho = r H(zeta - z) (exact partial fill of the crossed cell) and
/// sigma = rho * dzeta/dx with a central difference for the slope.
inline FieldState density_from_front(const FrontProfile& f, double r, const Grid& g) {
    if (f.size() != g.nx) throw std::invalid_argument("density_from_front: profile/grid mismatch");
    FieldState st(g);
    st.t = f.t;
    for (int i = 0; i < g.nx; ++i) {
        const int ip = g.wrap_x(i + 1);
        const int im = g.wrap_x(i - 1);
        const double slope = (f.zeta[static_cast<std::size_t>(ip)] -
                              f.zeta[static_cast<std::size_t>(im)]) / (2.0 * g.dx);
        const double zi = f.zeta[static_cast<std::size_t>(i)];
        for (int j = 0; j < g.nz; ++j) {
            const double fill = std::clamp((zi - g.z_edge(j)) / g.dz, 0.0, 1.0);
            st.R[g.idx(i, j)] = r * fill;
            st.S[g.idx(i, j)] = r * fill * slope;
        }
    }
    return st;
}

/// Speeds of a stacked pair of fronts (lower plateau r1 up to zeta1, r2 from
/// zeta1 to zeta2). Returns (d/dt zeta1, d/dt zeta2).
inline std::pair<double, double> two_front_speeds(double dz1_dx, double dz2_dx, double r1,
                                                  double r2, double alpha, const ModelParams& p) {
    if (r1 == r2)
        throw std::invalid_argument("two_front_speeds: r1 == r2 degenerates to a single front");
    if (!(r1 > 0.0 && r1 < p.rho_star && r2 > 0.0 && r2 < p.rho_star))
        throw std::domain_error("two_front_speeds: plateau densities must lie in (0, rho_star)");
    const double w2_upper = symmetric_w2(dz2_dx, p.eta);
    const double speed2 = (alpha / p.rho_star) * w2_upper;
    const double mixed = ((r1 - r2) / r1) * dz1_dx + (r2 / r1) * dz2_dx;
    const double speed1 = alpha / (p.rho_star * (r2 - r1)) *
                          (r2 * w2_upper - r1 * symmetric_w2(mixed, p.eta));
    return {speed1, speed2};
}

/// Rankine-Hugoniot residual Phi_l - Phi_r - dzeta/dt (rho_l - rho_r).
/// Zero (to round-off) for admissible fronts.
inline double rh_residual(double rho_l, double sigma_l, double rho_r, double sigma_r,
                          double dzeta_dt, double alpha, const ModelParams& p) {
    return flux_phi(rho_l, sigma_l, alpha, p) - flux_phi(rho_r, sigma_r, alpha, p) -
           dzeta_dt * (rho_l - rho_r);
}

/// Locates the front in a simulated field: per column, the topmost z where
/// the linear interpolant of R crosses r/2. Returns 0 for empty columns and
/// the domain top when the plateau has reached it.
inline FrontProfile extract_front(const FieldState& st, double r, const Grid& g) {
    FrontProfile f;
    f.t = st.t;
    f.zeta.assign(static_cast<std::size_t>(g.nx), 0.0);
    const double half = 0.5 * r;
    for (int i = 0; i < g.nx; ++i) {
        if (st.R[g.idx(i, g.nz - 1)] >= half) {
            f.zeta[static_cast<std::size_t>(i)] = 1.0;
            continue;
        }
        for (int j = g.nz - 2; j >= 0; --j) {
            const double lo = st.R[g.idx(i, j)];
            const double hi = st.R[g.idx(i, j + 1)];
            if (lo >= half && hi < half) {
                f.zeta[static_cast<std::size_t>(i)] = g.z(j) + g.dz * (lo - half) / (lo - hi);
                break;
            }
        }
    }
    return f;
}

} // namespace dataflow
