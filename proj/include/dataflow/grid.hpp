#pragma once

#include <cstddef>

#include "dataflow/errors.hpp"

namespace dataflow {

/// Uniform cell-centered mesh over (x, z) in [0,1) x [0,1], periodic in x.
/// Cells are indexed 0-based; cell (i, j) is centered at
/// ((i + 1/2) dx, (j + 1/2) dz) with edges on multiples of dx and dz.
struct Grid {
    int nx = 0;
    int nz = 0;
    double dx = 0.0;
    double dz = 0.0;

    Grid(int nx_, int nz_) : nx(nx_), nz(nz_) {
        if (nx < 3 || nz < 3) throw ConfigError("Grid: nx and nz must be >= 3");
        dx = 1.0 / nx;
        dz = 1.0 / nz;
    }

    double x(int i) const { return (i + 0.5) * dx; }
    double z(int j) const { return (j + 0.5) * dz; }
    double x_edge(int i) const { return i * dx; } ///< left edge of cell i
    double z_edge(int j) const { return j * dz; } ///< bottom edge of cell j

    int wrap_x(int i) const {
        if (i < 0) return i + nx;
        if (i >= nx) return i - nx;
        return i;
    }

    std::size_t idx(int i, int j) const {
        return static_cast<std::size_t>(i) * nz + static_cast<std::size_t>(j);
    }
    std::size_t size() const { return static_cast<std::size_t>(nx) * nz; }
};

} // namespace dataflow
