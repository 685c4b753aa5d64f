#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "bonnetlab/errors.hpp"

namespace bonnetlab {

/// Uniform node-centered grid over the coordinate patch (x1, x2).
/// Node (i, j) sits at (x1_min + i*h1, x2_min + j*h2), 0 <= i < n1, 0 <= j < n2.
struct Grid2 {
    double x1_min = 0.0, x1_max = 1.0;
    double x2_min = 0.0, x2_max = 1.0;
    int n1 = 0, n2 = 0;

    Grid2() = default;
    Grid2(double x1_lo, double x1_hi, int nodes1, double x2_lo, double x2_hi, int nodes2)
        : x1_min(x1_lo), x1_max(x1_hi), x2_min(x2_lo), x2_max(x2_hi), n1(nodes1), n2(nodes2) {
        if (n1 < 5 || n2 < 5)
            throw InvariantError("GRID_TOO_SMALL",
                                 "grid needs at least 5 nodes per axis, got " +
                                     std::to_string(n1) + "x" + std::to_string(n2));
        if (!(x1_max > x1_min) || !(x2_max > x2_min))
            throw InvariantError("GRID_BOUNDS", "grid bounds must satisfy max > min");
        if (!std::isfinite(x1_min) || !std::isfinite(x1_max) || !std::isfinite(x2_min) ||
            !std::isfinite(x2_max))
            throw InvariantError("GRID_BOUNDS", "grid bounds must be finite");
    }

    double h1() const { return (x1_max - x1_min) / (n1 - 1); }
    double h2() const { return (x2_max - x2_min) / (n2 - 1); }
    double x1(int i) const { return x1_min + i * h1(); }
    double x2(int j) const { return x2_min + j * h2(); }
    std::size_t size() const { return static_cast<std::size_t>(n1) * static_cast<std::size_t>(n2); }
    std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(n2) +
               static_cast<std::size_t>(j);
    }
    bool interior(int i, int j) const { return i > 0 && i < n1 - 1 && j > 0 && j < n2 - 1; }

    friend bool operator==(const Grid2& a, const Grid2& b) {
        return a.x1_min == b.x1_min && a.x1_max == b.x1_max && a.x2_min == b.x2_min &&
               a.x2_max == b.x2_max && a.n1 == b.n1 && a.n2 == b.n2;
    }
};

/// Grid2 plus a third axis sampling sigma, the value of the linear factor
/// s = C^3 x^3 + ... + C^r x^r. All Case 1 formulas divide by s, so the
/// sampled range must stay strictly positive.
struct Grid3 {
    Grid2 base;
    double sigma_min = 1.0, sigma_max = 2.0;
    int n3 = 0;

    Grid3() = default;
    Grid3(const Grid2& g2, double s_lo, double s_hi, int nodes3)
        : base(g2), sigma_min(s_lo), sigma_max(s_hi), n3(nodes3) {
        if (n3 < 5)
            throw InvariantError("GRID_TOO_SMALL",
                                 "sigma axis needs at least 5 nodes, got " + std::to_string(n3));
        if (!(sigma_max > sigma_min))
            throw InvariantError("GRID_BOUNDS", "sigma bounds must satisfy max > min");
        if (!(sigma_min > 0.0))
            throw DomainError("sigma_min must be > 0 (the linear factor s may not vanish)");
    }

    double h3() const { return (sigma_max - sigma_min) / (n3 - 1); }
    double sigma(int k) const { return sigma_min + k * h3(); }
};

/// Same bounds, node counts (n-1)*factor + 1; every coarse node is a fine node.
inline Grid2 grid_refine(const Grid2& grid, int factor) {
    if (factor < 2) throw DomainError("refinement factor must be >= 2");
    const std::int64_t m1 = static_cast<std::int64_t>(grid.n1 - 1) * factor + 1;
    const std::int64_t m2 = static_cast<std::int64_t>(grid.n2 - 1) * factor + 1;
    if (m1 > (1 << 24) || m2 > (1 << 24))
        throw CapacityError("refined grid exceeds the node-count cap");
    return Grid2(grid.x1_min, grid.x1_max, static_cast<int>(m1), grid.x2_min, grid.x2_max,
                 static_cast<int>(m2));
}

} // namespace bonnetlab
