#pragma once

// Closed-form fixtures shared across the test suites.

#include <cmath>
#include <numbers>
#include <optional>

#include "bonnetlab/bonnet.hpp"
#include "bonnetlab/grid.hpp"
#include "bonnetlab/separable.hpp"
#include "bonnetlab/tensorlab.hpp"

namespace fixtures {

using namespace bonnetlab;

inline Grid2 unit_grid(int nodes = 33) { return Grid2(0.0, 1.0, nodes, 0.0, 1.0, nodes); }

inline Grid3 sigma_grid(const Grid2& g, int n3 = 17) { return Grid3(g, 1.0, 2.0, n3); }

/// Case 2 constants: frakH = frakJ = 1, theta = pi/2. Satisfies every
/// constraint exactly; g = I, b = [[1,1],[1,1]] on the 1-2 block.
inline BonnetFields example_a(int nodes = 33) {
    const Grid2 g = unit_grid(nodes);
    return BonnetFields::make(ScalarField2(g, 1.0), ScalarField2(g, 1.0),
                              ScalarField2(g, std::numbers::pi / 2.0), std::nullopt, 3);
}

/// Case 1 with n = 3, C^3 = 1 (kappa = 1), frakH = 1, frakJ = sqrt(2),
/// theta = pi/2; the kappa balance frakJ^2 = frakH^2 + kappa makes the
/// Liouville equation hold. g11 = g22 = s^2/sqrt(2), b11 = b22 = s/sqrt(2),
/// b12 = s.
inline BonnetFields example_b(int nodes = 33) {
    const Grid2 g = unit_grid(nodes);
    return BonnetFields::make(ScalarField2(g, 1.0), ScalarField2(g, std::sqrt(2.0)),
                              ScalarField2(g, std::numbers::pi / 2.0), LinearFactor({1.0}), 3);
}

/// Case 1 with kappa = 1 but the Case 2 constants of example A: the
/// Liouville equation is violated by exactly 2*kappa = 2, and the
/// constructed tensors fail the Gauss oracle.
inline BonnetFields kappa_violated(int nodes = 33) {
    const Grid2 g = unit_grid(nodes);
    return BonnetFields::make(ScalarField2(g, 1.0), ScalarField2(g, 1.0),
                              ScalarField2(g, std::numbers::pi / 2.0), LinearFactor({1.0}), 3);
}

/// Round 3-sphere chart of radius R on a patch away from the poles:
/// g = diag(R^2, R^2 sin^2 x1, R^2 sin^2 x1 sin^2 x2), b = g / R. Satisfies
/// Gauss-Codazzi exactly, so oracle residuals measure pure discretization
/// error.
inline TensorData sphere_chart(double R, int nodes) {
    const Grid2 g(0.4, std::numbers::pi - 0.4, nodes, 0.4, std::numbers::pi - 0.4, nodes);
    TensorData td(3, g);
    ScalarField2 g22 = ScalarField2::sample(
        g, [R](double x1, double) { return R * R * std::sin(x1) * std::sin(x1); });
    ScalarField2 g33 = ScalarField2::sample(g, [R](double x1, double x2) {
        return R * R * std::sin(x1) * std::sin(x1) * std::sin(x2) * std::sin(x2);
    });
    td.set_g(1, 1, SeparableComponent::constant(g, R * R, 0));
    td.set_g(2, 2, SeparableComponent(g22, 0));
    td.set_g(3, 3, SeparableComponent(g33, 0));
    td.set_b(1, 1, SeparableComponent::constant(g, R, 0));
    td.set_b(2, 2, SeparableComponent((1.0 / R) * g22, 0));
    td.set_b(3, 3, SeparableComponent((1.0 / R) * g33, 0));
    return td;
}

} // namespace fixtures
