#pragma once

#include <cmath>
#include <stdexcept>

#include "dataflow/params.hpp"
#include "dataflow/throttle.hpp"

namespace dataflow {

/// Densities below this are treated as vacuum: Phi <= alpha*rho/rho_star -> 0
/// as rho -> 0, and guarding here avoids overflow in s = sigma/rho.
inline constexpr double kRhoFloor = 1e-14;

/// Macroscopic flux Phi(rho, sigma) = alpha * w1(rho * W2(sigma/rho)),
/// with Phi = 0 at rho = 0. Always in [0, alpha].
inline double flux_phi(double rho, double sigma, double alpha, const ModelParams& p) {
    if (std::isnan(rho) || rho < 0.0)
        throw std::domain_error("flux_phi: rho must be a non-negative number");
    detail::require_finite(sigma, "flux_phi");
    detail::require_finite(alpha, "flux_phi");
    if (rho < kRhoFloor) return 0.0;
    const double u = rho * symmetric_w2(sigma / rho, p.eta);
    return alpha * ramp_w1(u, p.rho_star);
}

/// d(Phi)/d(rho) = (alpha/rho_star) * (W2(s) - s*W2'(s)) with s = sigma/rho.
/// On the tent |s| <= 1/eta the bracket collapses to 1 identically, so the
/// value alpha/rho_star is returned without round-off. At the ramp knee
/// (rho*W2 = rho_star) the ramp-side value is used, which is the safe choice
/// for the CFL bound.
inline double dphi_drho(double rho, double sigma, double alpha, const ModelParams& p) {
    if (!(rho > 0.0)) throw std::domain_error("dphi_drho: rho must be > 0");
    detail::require_finite(sigma, "dphi_drho");
    const double s = sigma / rho;
    if (std::abs(s) > 1.0 / p.eta) return 0.0;     // flat region of W2
    if (rho * symmetric_w2(s, p.eta) > p.rho_star) // w1 saturated
        return 0.0;
    return alpha / p.rho_star;
}

/// d(Phi)/d(sigma) = (alpha/rho_star) * W2'(s), same conventions as above.
inline double dphi_dsigma(double rho, double sigma, double alpha, const ModelParams& p) {
    if (!(rho > 0.0)) throw std::domain_error("dphi_dsigma: rho must be > 0");
    detail::require_finite(sigma, "dphi_dsigma");
    const double s = sigma / rho;
    if (rho * symmetric_w2(s, p.eta) > p.rho_star) return 0.0;
    return (alpha / p.rho_star) * symmetric_w2_prime(s, p.eta);
}

/// Discriminant d_eps(xi) of the characteristic polynomial of the relaxation
/// system, valid for 0 < |s| < 1/eta. Negative values flag complex
/// eigenvalues (loss of hyperbolicity); the region shrinks as eps -> 0+.
inline double hyperbolicity_discriminant(double xi1, double xi2, double s, double eps,
                                         double alpha, const ModelParams& p) {
    const double abs_s = std::abs(s);
    if (!(abs_s > 0.0 && abs_s < 1.0 / p.eta))
        throw std::domain_error("hyperbolicity_discriminant: formula requires 0 < |s| < 1/eta");
    if (!(eps > 0.0)) throw std::domain_error("hyperbolicity_discriminant: eps must be > 0");
    detail::require_finite(xi1, "hyperbolicity_discriminant");
    detail::require_finite(xi2, "hyperbolicity_discriminant");
    if (xi2 == 0.0) return 0.0;
    const double pref = xi2 / (eps * p.rho_star);
    const double sgn = s > 0.0 ? 1.0 : -1.0;
    const double d = eps * alpha - p.rho_star;
    return pref * pref * (d * d - 4.0 * sgn * eps * alpha * p.rho_star * p.eta * (xi1 / xi2));
}

} // namespace dataflow
