#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "dataflow/errors.hpp"
#include "dataflow/field.hpp"
#include "dataflow/flux.hpp"
#include "dataflow/grid.hpp"
#include "dataflow/numeric.hpp"
#include "dataflow/params.hpp"

namespace dataflow {

/// Cell averages of the initial density by tensor 3-point Gauss quadrature.
template <class Rho0>
std::vector<double> init_density(Rho0&& rho0, const Grid& g) {
    std::vector<double> R(g.size());
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.nz; ++j) {
            const double v = cell_average3(rho0, g.x(i), g.z(j), g.dx, g.dz);
            if (!std::isfinite(v)) throw ConfigError("init_density: non-finite rho0 sample");
            R[g.idx(i, j)] = v;
        }
    return R;
}

/// Initial S by a midpoint rule in z of the consistency relation
/// sigma = d/dx integral_z^inf rho dy, with a central difference across the
/// cell edges in x:
///   S0_ij = (1/dx) sum_{l=j}^{nz-1} [rho0(x_{i+1/2}, z_l) - rho0(x_{i-1/2}, z_l)] dz.
template <class Rho0>
std::vector<double> init_sigma(Rho0&& rho0, const Grid& g) {
    std::vector<double> S(g.size());
    for (int i = 0; i < g.nx; ++i) {
        const double xr = g.x_edge(i + 1);
        const double xl = g.x_edge(i);
        double acc = 0.0;
        for (int j = g.nz - 1; j >= 0; --j) {
            const double d = rho0(xr, g.z(j)) - rho0(xl, g.z(j));
            if (!std::isfinite(d)) throw ConfigError("init_sigma: non-finite rho0 sample");
            acc += d * (g.dz / g.dx);
            S[g.idx(i, j)] = acc;
        }
    }
    return S;
}

template <class Rho0>
FieldState init_state(Rho0&& rho0, const Grid& g) {
    FieldState st(g);
    st.R = init_density(rho0, g);
    st.S = init_sigma(rho0, g);
    return st;
}

/// Lax-Friedrichs flux across the edge between a lower cell (R_lo, S_lo) and
/// an upper cell (R_hi, S_hi), with the global wave speed a and the local
/// processing rate alpha_i.
inline double numerical_flux(double R_lo, double S_lo, double R_hi, double S_hi,
                             double a, double alpha_i, const ModelParams& p) {
    return 0.5 * (flux_phi(R_hi, S_hi, alpha_i, p) + flux_phi(R_lo, S_lo, alpha_i, p) -
                  a * (R_hi - R_lo));
}

/// a^n = max over cells of |dPhi/drho|. Near-vacuum cells contribute nothing
/// (their flux is identically zero under the kRhoFloor guard).
inline double max_wave_speed(const FieldState& st, const Grid& g, const RateField& alpha,
                             const ModelParams& p) {
    double a = 0.0;
    for (int i = 0; i < g.nx; ++i) {
        const double al = alpha[static_cast<std::size_t>(i)];
        for (int j = 0; j < g.nz; ++j) {
            const std::size_t c = g.idx(i, j);
            if (st.R[c] <= kRhoFloor) continue;
            a = std::max(a, std::abs(dphi_drho(st.R[c], st.S[c], al, p)));
        }
    }
    return a;
}

/// Dynamic time step dt = dz / a^n. When nothing moves (a^n = 0) the idle
/// fallback dz * rho_star / max alpha keeps the run advancing.
inline double adaptive_dt(const FieldState& st, const Grid& g, const RateField& alpha,
                          const ModelParams& p) {
    const double a = max_wave_speed(st, g, alpha, p);
    if (a > 0.0) return g.dz / a;
    const double amax = alpha.max();
    if (amax > 0.0) return g.dz * p.rho_star / amax;
    return g.dz;
}

/// Per-step mass accounting. All masses carry the cell volume dx*dz; inflow
/// and outflow are the Lax-Friedrichs fluxes through the bottom and top edge
/// integrated over the step. defect() is the unexplained mass and should sit
/// at machine precision.
struct StepLedger {
    double t_before = 0.0;
    double dt = 0.0;
    double mass_before = 0.0;
    double mass_after = 0.0;
    double inflow = 0.0;
    double outflow = 0.0;
    double boundary_delta = 0.0; ///< mass injected by the boundary-row overwrites
    double min_R = 0.0;
    double max_R = 0.0;

    double defect() const {
        return (mass_after - mass_before) - (inflow - outflow) - boundary_delta;
    }
};

/// One step of the fully discrete scheme (formal eps -> 0 limit of the
/// relaxation discretization):
///   1. R update: Lax-Friedrichs differences in z plus the 1/4 x-diffusion
///      stencil, periodic in x;
///   2. boundary rows: Dirichlet R = rho_b at j = 0, Neumann copy at the top;
///   3. S rebuilt by the backward recursion from S = 0 at the top row;
///   4. t advances by dt.
/// dt must come from adaptive_dt (possibly clipped down to hit an output
/// time); a is the wave speed the caller used there. The flux into the first
/// cell uses the prescribed boundary density as the lower state with the
/// first row's S (the paper leaves this edge flux unspecified).
inline StepLedger step(FieldState& st, const Grid& g, const ModelParams& p,
                       const RateField& alpha, double rho_b, double dt, double a) {
    const int nx = g.nx, nz = g.nz;
    const double lam = dt / g.dz;

    StepLedger led;
    led.t_before = st.t;
    led.dt = dt;
    {
        KahanSum m;
        for (double v : st.R) m.add(v);
        led.mass_before = m.value() * g.dx * g.dz;
    }

    std::vector<double> Rnew(st.R.size());
    KahanSum flux_bottom, flux_top;
    for (int i = 0; i < nx; ++i) {
        const int ip = g.wrap_x(i + 1);
        const int im = g.wrap_x(i - 1);
        const double al = alpha[static_cast<std::size_t>(i)];
        double F_lo = numerical_flux(rho_b, st.S[g.idx(i, 0)], st.R[g.idx(i, 0)],
                                     st.S[g.idx(i, 0)], a, al, p);
        flux_bottom.add(F_lo);
        for (int j = 0; j < nz; ++j) {
            const std::size_t c = g.idx(i, j);
            const double F_hi =
                (j + 1 < nz) ? numerical_flux(st.R[c], st.S[c], st.R[g.idx(i, j + 1)],
                                              st.S[g.idx(i, j + 1)], a, al, p)
                             : flux_phi(st.R[c], st.S[c], al, p); // Neumann ghost above
            Rnew[c] = st.R[c] - lam * (F_hi - F_lo) +
                      0.25 * (st.R[g.idx(ip, j)] - 2.0 * st.R[c] + st.R[g.idx(im, j)]);
            F_lo = F_hi;
        }
        flux_top.add(F_lo);
    }
    led.inflow = flux_bottom.value() * dt * g.dx;
    led.outflow = flux_top.value() * dt * g.dx;

    KahanSum bnd;
    for (int i = 0; i < nx; ++i) {
        const std::size_t bot = g.idx(i, 0);
        bnd.add(rho_b - Rnew[bot]);
        Rnew[bot] = rho_b;
        const std::size_t top = g.idx(i, nz - 1);
        const std::size_t below = g.idx(i, nz - 2);
        bnd.add(Rnew[below] - Rnew[top]);
        Rnew[top] = Rnew[below];
    }
    led.boundary_delta = bnd.value() * g.dx * g.dz;

    {
        KahanSum m;
        double rmin = std::numeric_limits<double>::infinity();
        double rmax = -rmin;
        for (double v : Rnew) {
            if (!std::isfinite(v))
                throw DivergenceError("step: non-finite density at t = " + std::to_string(st.t) +
                                      ", step " + std::to_string(st.step_count));
            m.add(v);
            rmin = std::min(rmin, v);
            rmax = std::max(rmax, v);
        }
        led.mass_after = m.value() * g.dx * g.dz;
        led.min_R = rmin;
        led.max_R = rmax;
    }

    st.R = std::move(Rnew);

    // S recursion from the top: S_{i,nz-1} = 0, then
    // S_ij = (dz/2dx)(R_{i+1,j} - R_{i-1,j}) + S_{i,j+1}.
    const double cx = g.dz / (2.0 * g.dx);
    for (int i = 0; i < nx; ++i) {
        const int ip = g.wrap_x(i + 1);
        const int im = g.wrap_x(i - 1);
        st.S[g.idx(i, nz - 1)] = 0.0;
        double acc = 0.0;
        for (int j = nz - 2; j >= 0; --j) {
            acc += cx * (st.R[g.idx(ip, j)] - st.R[g.idx(im, j)]);
            st.S[g.idx(i, j)] = acc;
        }
    }

    st.t += dt;
    ++st.step_count;
    return led;
}

struct RunOptions {
    std::vector<double> output_times; ///< snapshot times, ascending; empty = initial only
    double rho_b = 0.0;               ///< inflow density at z = 0
    double divergence_factor = 10.0;  ///< abort when max R exceeds this times the data scale
    double top_row_threshold = 1e-6;  ///< density at z ~ 1 flagging an assumption violation
};

struct RunResult {
    std::vector<FieldState> snapshots;
    std::vector<StepLedger> ledgers;
    bool assumption_violated = false; ///< data reached the top of the domain
};

/// Repeated step() with the adaptive dt, the final partial step clipped to
/// land exactly on each requested output time. The observer is called on the
/// initial state and after every accepted step.
template <class Observer>
RunResult run(FieldState state, const Grid& g, const ModelParams& p, const RateField& alpha,
              const RunOptions& opt, Observer&& observe) {
    p.validate();
    if (static_cast<int>(alpha.a.size()) != g.nx)
        throw ConfigError("run: alpha field size does not match the grid");

    RunResult out;
    double scale = opt.rho_b;
    for (double v : state.R) scale = std::max(scale, v);
    const double blowup = opt.divergence_factor * scale;

    std::vector<double> targets = opt.output_times;
    std::sort(targets.begin(), targets.end());

    observe(state);
    for (double target : targets) {
        while (state.t < target - 1e-12 * std::max(1.0, target)) {
            const double a = max_wave_speed(state, g, alpha, p);
            double dt = a > 0.0 ? g.dz / a : adaptive_dt(state, g, alpha, p);
            dt = std::min(dt, target - state.t);
            StepLedger led = step(state, g, p, alpha, opt.rho_b, dt, a);
            if (blowup > 0.0 && led.max_R > blowup)
                throw DivergenceError("run: density exceeded " + std::to_string(blowup) +
                                      " at t = " + std::to_string(state.t));
            out.ledgers.push_back(led);
            observe(state);
        }
        state.t = target; // snap away the accumulated round-off
        for (int i = 0; i < g.nx; ++i)
            if (state.R[g.idx(i, g.nz - 2)] > opt.top_row_threshold) out.assumption_violated = true;
        out.snapshots.push_back(state);
    }
    if (targets.empty()) out.snapshots.push_back(state);
    return out;
}

inline RunResult run(FieldState state, const Grid& g, const ModelParams& p,
                     const RateField& alpha, const RunOptions& opt) {
    return run(std::move(state), g, p, alpha, opt, [](const FieldState&) {});
}

} // namespace dataflow
