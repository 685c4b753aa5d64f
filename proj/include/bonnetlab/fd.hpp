#pragma once

#include <string>

#include "bonnetlab/errors.hpp"
#include "bonnetlab/field.hpp"
#include "bonnetlab/parallel.hpp"

namespace bonnetlab {

// Finite-difference first derivative along x1 (axis=1) or x2 (axis=2).
// Centered stencil of the requested order (2 or 4) where it fits; the
// boundary ring always uses one-sided 2nd-order stencils, and for order 4 the
// next-to-boundary ring falls back to the centered 2nd-order stencil. Exact
// for polynomials of degree <= 2 everywhere (degree <= 4 in the 4th-order
// interior).
inline ScalarField2 partial(const ScalarField2& field, int axis, int order = 2) {
    if (axis != 1 && axis != 2) throw DomainError("axis must be 1 or 2");
    if (order != 2 && order != 4) throw DomainError("stencil order must be 2 or 4");
    const Grid2& g = field.grid();
    const int n = (axis == 1) ? g.n1 : g.n2;
    const double h = (axis == 1) ? g.h1() : g.h2();
    if (n < order + 3)
        throw StencilError("axis with " + std::to_string(n) + " nodes is too small for order " +
                           std::to_string(order));

    ScalarField2 out(g);
    const int lines = (axis == 1) ? g.n2 : g.n1;
    auto f = [&](int along, int line) {
        return (axis == 1) ? field(along, line) : field(line, along);
    };
    auto put = [&](ScalarField2& dst, int along, int line, double v) {
        if (axis == 1)
            dst.at(along, line) = v;
        else
            dst.at(line, along) = v;
    };

    parallel_for(static_cast<std::size_t>(lines), [&](std::size_t lu) {
        const int line = static_cast<int>(lu);
        put(out, 0, line, (-3.0 * f(0, line) + 4.0 * f(1, line) - f(2, line)) / (2.0 * h));
        put(out, n - 1, line,
            (3.0 * f(n - 1, line) - 4.0 * f(n - 2, line) + f(n - 3, line)) / (2.0 * h));
        for (int i = 1; i < n - 1; ++i) {
            double v;
            if (order == 4 && i >= 2 && i <= n - 3) {
                v = (f(i - 2, line) - 8.0 * f(i - 1, line) + 8.0 * f(i + 1, line) -
                     f(i + 2, line)) /
                    (12.0 * h);
            } else {
                v = (f(i + 1, line) - f(i - 1, line)) / (2.0 * h);
            }
            put(out, i, line, v);
        }
    });
    out.validate_finite();
    return out;
}

// Second derivative along one axis, 2nd order: centered three-point stencil in
// the interior, one-sided four-point stencils on the boundary ring.
inline ScalarField2 second_partial(const ScalarField2& field, int axis) {
    if (axis != 1 && axis != 2) throw DomainError("axis must be 1 or 2");
    const Grid2& g = field.grid();
    const int n = (axis == 1) ? g.n1 : g.n2;
    const double h = (axis == 1) ? g.h1() : g.h2();
    if (n < 5) throw StencilError("axis too small for the second-derivative stencil");

    ScalarField2 out(g);
    const int lines = (axis == 1) ? g.n2 : g.n1;
    auto f = [&](int along, int line) {
        return (axis == 1) ? field(along, line) : field(line, along);
    };
    auto put = [&](ScalarField2& dst, int along, int line, double v) {
        if (axis == 1)
            dst.at(along, line) = v;
        else
            dst.at(line, along) = v;
    };
    const double h2 = h * h;
    parallel_for(static_cast<std::size_t>(lines), [&](std::size_t lu) {
        const int line = static_cast<int>(lu);
        put(out, 0, line,
            (2.0 * f(0, line) - 5.0 * f(1, line) + 4.0 * f(2, line) - f(3, line)) / h2);
        put(out, n - 1, line,
            (2.0 * f(n - 1, line) - 5.0 * f(n - 2, line) + 4.0 * f(n - 3, line) - f(n - 4, line)) /
                h2);
        for (int i = 1; i < n - 1; ++i)
            put(out, i, line, (f(i + 1, line) - 2.0 * f(i, line) + f(i - 1, line)) / h2);
    });
    out.validate_finite();
    return out;
}

} // namespace bonnetlab
