#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dataflow {

namespace detail {
inline void require_finite(double v, const char* who) {
    if (!std::isfinite(v)) throw std::domain_error(std::string(who) + ": non-finite input");
}
} // namespace detail

/// Linear ramp w1(u) = min{max{u/rho_star, 0}, 1}: the fraction of full speed
/// available when u units of usable data are present.
inline double ramp_w1(double u, double rho_star) {
    detail::require_finite(u, "ramp_w1");
    if (!(rho_star > 0.0)) throw std::domain_error("ramp_w1: rho_star must be > 0");
    return std::min(std::max(u / rho_star, 0.0), 1.0);
}

/// One-sided neighbor throttle: min{1, max{1 + eta*s, 0}}. Equals 1 for
/// s >= 0 and 0 for s <= -1/eta.
inline double w2_bar(double s, double eta) {
    detail::require_finite(s, "w2_bar");
    if (!(eta > 0.0)) throw std::domain_error("w2_bar: eta must be > 0");
    return std::min(1.0, std::max(1.0 + eta * s, 0.0));
}

/// Symmetric tent W2(s) = min{w2_bar(s), w2_bar(-s)} = max{0, 1 - eta|s|}.
inline double symmetric_w2(double s, double eta) {
    detail::require_finite(s, "symmetric_w2");
    if (!(eta > 0.0)) throw std::domain_error("symmetric_w2: eta must be > 0");
    return std::max(0.0, 1.0 - eta * std::abs(s));
}

/// Derivative of W2 with the kink convention W2'(0) := 0 and
/// W2'(+-1/eta) := value from inside the tent (-+eta). Flat (zero) outside.
inline double symmetric_w2_prime(double s, double eta) {
    detail::require_finite(s, "symmetric_w2_prime");
    if (!(eta > 0.0)) throw std::domain_error("symmetric_w2_prime: eta must be > 0");
    if (s == 0.0) return 0.0;
    if (std::abs(s) > 1.0 / eta) return 0.0;
    return s > 0.0 ? -eta : eta;
}

} // namespace dataflow
