#pragma once

#include <cmath>
#include <cstddef>

namespace dataflow {

/// Neumaier-compensated accumulator. The conservation ledgers are audited at
/// machine precision, so plain summation over 1e4+ cells is not good enough.
class KahanSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

namespace gauss3 {
// 3-point Gauss-Legendre rule scaled to [-1/2, 1/2]; exact through degree 5.
inline constexpr double nodes[3] = {-0.3872983346207417, 0.0, 0.3872983346207417};
inline constexpr double weights[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
} // namespace gauss3

/// Average of f over the cell [xc - dx/2, xc + dx/2] x [zc - dz/2, zc + dz/2]
/// by a tensor 3-point Gauss rule.
template <class F>
double cell_average3(F&& f, double xc, double zc, double dx, double dz) {
    double acc = 0.0;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            acc += gauss3::weights[a] * gauss3::weights[b] *
                   f(xc + gauss3::nodes[a] * dx, zc + gauss3::nodes[b] * dz);
    return acc;
}

} // namespace dataflow
