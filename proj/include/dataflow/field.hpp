#pragma once

#include <vector>

#include "dataflow/grid.hpp"

namespace dataflow {

/// Cell averages of the density R and the auxiliary variable S at one time
/// level, laid out row-major in i (x index) with j (z index) contiguous.
/// Owned by a single driver while stepping; copies are independent.
struct FieldState {
    std::vector<double> R;
    std::vector<double> S;
    double t = 0.0;
    long step_count = 0;

    FieldState() = default;
    explicit FieldState(const Grid& g) : R(g.size(), 0.0), S(g.size(), 0.0) {}
};

} // namespace dataflow
