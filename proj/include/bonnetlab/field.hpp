#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "bonnetlab/errors.hpp"
#include "bonnetlab/grid.hpp"

namespace bonnetlab {

/// L-infinity and root-mean-square norms of a sampled field.
struct NormPair {
    double linf = 0.0;
    double l2 = 0.0;
};

/// Real scalar field on a Grid2, row-major over (i, j). No NaN/inf is ever
/// admitted; constructors and mutators validate.
class ScalarField2 {
public:
    ScalarField2() = default;

    explicit ScalarField2(const Grid2& grid, double fill = 0.0)
        : grid_(grid), values_(grid.size(), fill) {
        if (!std::isfinite(fill)) throw InvariantError("FIELD_NONFINITE", "fill value not finite");
    }

    ScalarField2(const Grid2& grid, std::vector<double> values)
        : grid_(grid), values_(std::move(values)) {
        if (values_.size() != grid_.size())
            throw ShapeError("value count " + std::to_string(values_.size()) +
                             " does not match grid size " + std::to_string(grid_.size()));
        validate_finite();
    }

    const Grid2& grid() const { return grid_; }
    const std::vector<double>& values() const { return values_; }

    double operator()(int i, int j) const { return values_[grid_.index(i, j)]; }
    double& at(int i, int j) { return values_[grid_.index(i, j)]; }

    void set(int i, int j, double v) {
        if (!std::isfinite(v))
            throw InvariantError("FIELD_NONFINITE", "assigning non-finite value at node (" +
                                                        std::to_string(i) + "," +
                                                        std::to_string(j) + ")");
        values_[grid_.index(i, j)] = v;
    }

    void validate_finite() const {
        for (std::size_t k = 0; k < values_.size(); ++k)
            if (!std::isfinite(values_[k]))
                throw InvariantError("FIELD_NONFINITE",
                                     "non-finite value at flat index " + std::to_string(k));
    }

    /// Pointwise map; fn(x1, x2, value) -> value. Throws if fn produces non-finite.
    template <typename Fn>
    ScalarField2 map(Fn&& fn) const {
        ScalarField2 out(grid_);
        for (int i = 0; i < grid_.n1; ++i)
            for (int j = 0; j < grid_.n2; ++j)
                out.set(i, j, fn(grid_.x1(i), grid_.x2(j), (*this)(i, j)));
        return out;
    }

    friend ScalarField2 operator+(const ScalarField2& a, const ScalarField2& b) {
        return zip(a, b, [](double x, double y) { return x + y; });
    }
    friend ScalarField2 operator-(const ScalarField2& a, const ScalarField2& b) {
        return zip(a, b, [](double x, double y) { return x - y; });
    }
    friend ScalarField2 operator*(const ScalarField2& a, const ScalarField2& b) {
        return zip(a, b, [](double x, double y) { return x * y; });
    }
    friend ScalarField2 operator*(double a, const ScalarField2& f) {
        ScalarField2 out(f.grid_);
        for (std::size_t k = 0; k < f.values_.size(); ++k) out.values_[k] = a * f.values_[k];
        out.validate_finite();
        return out;
    }

    static ScalarField2 zip(const ScalarField2& a, const ScalarField2& b,
                            const std::function<double(double, double)>& fn) {
        if (!(a.grid_ == b.grid_)) throw ShapeError("field grids differ");
        ScalarField2 out(a.grid_);
        for (std::size_t k = 0; k < a.values_.size(); ++k)
            out.values_[k] = fn(a.values_[k], b.values_[k]);
        out.validate_finite();
        return out;
    }

    /// Builds a field by sampling fn(x1, x2) at each node.
    static ScalarField2 sample(const Grid2& grid, const std::function<double(double, double)>& fn) {
        ScalarField2 out(grid);
        for (int i = 0; i < grid.n1; ++i)
            for (int j = 0; j < grid.n2; ++j) out.set(i, j, fn(grid.x1(i), grid.x2(j)));
        return out;
    }

    static ScalarField2 constant(const Grid2& grid, double v) { return ScalarField2(grid, v); }

private:
    Grid2 grid_;
    std::vector<double> values_;
};

/// Norms in fixed row-major node order (deterministic; never parallelized).
/// With interior_only the one-node boundary ring is excluded.
inline NormPair field_norms(const ScalarField2& field, bool interior_only = false) {
    const Grid2& g = field.grid();
    const int i0 = interior_only ? 1 : 0;
    const int j0 = interior_only ? 1 : 0;
    const int i1 = interior_only ? g.n1 - 1 : g.n1;
    const int j1 = interior_only ? g.n2 - 1 : g.n2;
    if (i0 >= i1 || j0 >= j1) throw DomainError("grid has no interior nodes");
    double linf = 0.0, sumsq = 0.0;
    std::size_t count = 0;
    for (int i = i0; i < i1; ++i)
        for (int j = j0; j < j1; ++j) {
            const double v = field(i, j);
            const double a = std::fabs(v);
            if (a > linf) linf = a;
            sumsq += v * v;
            ++count;
        }
    return {linf, std::sqrt(sumsq / static_cast<double>(count))};
}

} // namespace bonnetlab
