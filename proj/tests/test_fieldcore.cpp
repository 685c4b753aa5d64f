#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "bonnetlab/csv.hpp"
#include "bonnetlab/fd.hpp"
#include "bonnetlab/field.hpp"
#include "bonnetlab/grid.hpp"

using namespace bonnetlab;
using Catch::Approx;

namespace {

ScalarField2 sample1d(const Grid2& g, double (*fn)(double), int axis) {
    return ScalarField2::sample(g, [&](double x1, double x2) { return fn(axis == 1 ? x1 : x2); });
}

double max_error(const ScalarField2& got, const ScalarField2& expect, bool interior_only) {
    return field_norms(got - expect, interior_only).linf;
}

} // namespace

TEST_CASE("Grid2 enforces its invariants") {
    CHECK_THROWS_AS(Grid2(0, 1, 4, 0, 1, 33), InvariantError);
    CHECK_THROWS_AS(Grid2(0, 1, 33, 0, 1, 3), InvariantError);
    CHECK_THROWS_AS(Grid2(1, 1, 33, 0, 1, 33), InvariantError);
    CHECK_THROWS_AS(Grid2(0, -1, 33, 0, 1, 33), InvariantError);
    const Grid2 g(0, 1, 5, 0, 2, 9);
    CHECK(g.h1() == Approx(0.25));
    CHECK(g.h2() == Approx(0.25));
    CHECK(g.x1(4) == Approx(1.0));
}

TEST_CASE("Grid3 requires a strictly positive sigma range") {
    const Grid2 g(0, 1, 5, 0, 1, 5);
    CHECK_THROWS_AS(Grid3(g, -1.0, 2.0, 5), DomainError);
    CHECK_THROWS_AS(Grid3(g, 0.0, 2.0, 5), DomainError);
    const Grid3 g3(g, 1.0, 2.0, 17);
    CHECK(g3.sigma(16) == Approx(2.0));
}

TEST_CASE("grid_refine arithmetic and nesting") {
    const Grid2 g5(0, 1, 5, 0, 1, 5);
    CHECK(grid_refine(g5, 2).n1 == 9);
    const Grid2 g33(0, 1, 33, 0, 1, 33);
    CHECK(grid_refine(g33, 4).n1 == 129);
    CHECK_THROWS_AS(grid_refine(g33, 1), DomainError);
    CHECK_THROWS_AS(grid_refine(g33, 1 << 21), CapacityError);

    // coarse node i coincides with fine node 2i (exact for the binary span)
    const Grid2 fine = grid_refine(g33, 2);
    for (int i = 0; i < g33.n1; ++i) CHECK(g33.x1(i) == fine.x1(2 * i));
}

TEST_CASE("ScalarField2 rejects non-finite values") {
    const Grid2 g(0, 1, 5, 0, 1, 5);
    ScalarField2 f(g, 1.0);
    CHECK_THROWS_AS(f.set(0, 0, std::nan("")), InvariantError);
    std::vector<double> vals(g.size(), 0.0);
    vals[3] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(ScalarField2(g, vals), InvariantError);
}

TEST_CASE("partial of a constant field is identically zero") {
    const Grid2 g(0, 1, 9, 0, 1, 9);
    const ScalarField2 c(g, 3.25);
    for (int axis : {1, 2})
        for (int order : {2, 4}) CHECK(field_norms(partial(c, axis, order)).linf == 0.0);
}

TEST_CASE("partial matches the closed-form derivative of sin at order 2") {
    const Grid2 g(0.0, std::numbers::pi, 65, 0.0, 1.0, 5);
    const ScalarField2 f = sample1d(g, std::sin, 1);
    const ScalarField2 expect = sample1d(g, std::cos, 1);
    CHECK(max_error(partial(f, 1, 2), expect, false) <= 1e-3);
}

TEST_CASE("order-2 interior error shrinks ~4x under refinement") {
    auto interior_err = [](int n) {
        const Grid2 g(0.0, std::numbers::pi, n, 0.0, 1.0, 5);
        return max_error(partial(sample1d(g, std::sin, 1), 1, 2), sample1d(g, std::cos, 1), true);
    };
    const double ratio = interior_err(65) / interior_err(129);
    CHECK(ratio == Approx(4.0).margin(0.8)); // +-20%
}

TEST_CASE("order-4 interior converges at fourth order") {
    auto interior_err = [](int n) {
        const Grid2 g(0.0, std::numbers::pi, n, 0.0, 1.0, 5);
        const ScalarField2 d = partial(sample1d(g, std::sin, 1), 1, 4);
        const ScalarField2 expect = sample1d(g, std::cos, 1);
        // skip two rings so only the centered 4th-order stencil is measured
        double m = 0.0;
        for (int i = 2; i < g.n1 - 2; ++i)
            for (int j = 0; j < g.n2; ++j) m = std::max(m, std::fabs(d(i, j) - expect(i, j)));
        return m;
    };
    const double ratio = interior_err(33) / interior_err(65);
    CHECK(ratio > 11.0);
    CHECK(ratio < 22.0);
}

TEST_CASE("partial is exact on degree-1 polynomials everywhere") {
    const Grid2 g(0.0, 2.0, 9, -1.0, 1.0, 7);
    const ScalarField2 f =
        ScalarField2::sample(g, [](double x1, double x2) { return 2.0 * x1 - 3.0 * x2 + 0.5; });
    CHECK(max_error(partial(f, 1, 2), ScalarField2(g, 2.0), false) <= 1e-12);
    CHECK(max_error(partial(f, 2, 2), ScalarField2(g, -3.0), false) <= 1e-12);
    CHECK(max_error(partial(f, 1, 4), ScalarField2(g, 2.0), false) <= 1e-12);
}

TEST_CASE("partial is linear (property)") {
    const Grid2 g(0.0, 1.0, 17, 0.0, 1.0, 13);
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    for (int round = 0; round < 20; ++round) {
        const double a = dist(rng), b = dist(rng);
        ScalarField2 f(g), w(g);
        for (int i = 0; i < g.n1; ++i)
            for (int j = 0; j < g.n2; ++j) {
                f.at(i, j) = dist(rng);
                w.at(i, j) = dist(rng);
            }
        for (int axis : {1, 2}) {
            const ScalarField2 lhs = partial(a * f + b * w, axis);
            const ScalarField2 rhs = a * partial(f, axis) + b * partial(w, axis);
            CHECK(field_norms(lhs - rhs).linf <= 1e-11 * field_norms(rhs).linf + 1e-13);
        }
    }
}

TEST_CASE("mixed partials commute on the interior") {
    const Grid2 g(0.0, 1.0, 33, 0.0, 1.0, 33);
    const ScalarField2 f = ScalarField2::sample(
        g, [](double x1, double x2) { return std::sin(2 * x1 + 1) * std::exp(x2); });
    const ScalarField2 d12 = partial(partial(f, 1), 2);
    const ScalarField2 d21 = partial(partial(f, 2), 1);
    CHECK(field_norms(d12 - d21, true).linf <= 1e-10);
}

TEST_CASE("second_partial matches closed forms to O(h^2)") {
    const Grid2 g(0.0, 1.0, 65, 0.0, 1.0, 5);
    const ScalarField2 f = sample1d(g, std::exp, 1);
    CHECK(max_error(second_partial(f, 1), f, true) <= 1e-3);
    // exact on quadratics in the interior
    const ScalarField2 q =
        ScalarField2::sample(g, [](double x1, double) { return 3.0 * x1 * x1; });
    CHECK(max_error(second_partial(q, 1), ScalarField2(g, 6.0), false) <= 1e-10);
}

TEST_CASE("StencilError when the axis is too small for the order") {
    const Grid2 g(0, 1, 5, 0, 1, 5);
    const ScalarField2 f(g, 1.0);
    CHECK_THROWS_AS(partial(f, 1, 4), StencilError);
    CHECK_NOTHROW(partial(f, 1, 2));
}

TEST_CASE("field_norms trivia") {
    const Grid2 g(0, 1, 11, 0, 1, 11);
    CHECK(field_norms(ScalarField2(g, 0.0)).linf == 0.0);
    CHECK(field_norms(ScalarField2(g, 0.0)).l2 == 0.0);
    CHECK(field_norms(ScalarField2(g, 1.0)).linf == 1.0);
    CHECK(field_norms(ScalarField2(g, 1.0)).l2 == Approx(1.0));
    const ScalarField2 x1 = ScalarField2::sample(g, [](double a, double) { return a; });
    CHECK(field_norms(x1, false).linf == 1.0);
    CHECK(field_norms(x1, true).linf == Approx(0.9)); // ring excluded
    CHECK(field_norms(x1).l2 <= field_norms(x1).linf);
}

TEST_CASE("norms are deterministic across repeated evaluation") {
    const Grid2 g(0, 1, 33, 0, 1, 33);
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> dist(-1, 1);
    ScalarField2 f(g);
    for (int i = 0; i < g.n1; ++i)
        for (int j = 0; j < g.n2; ++j) f.at(i, j) = dist(rng);
    const NormPair a = field_norms(f);
    const NormPair b = field_norms(f);
    CHECK(a.linf == b.linf);
    CHECK(a.l2 == b.l2);
}

TEST_CASE("grid CSV round-trips bitwise") {
    const Grid2 g(0.0, 1.0, 7, -2.0, 3.0, 5);
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> dist(-10, 10);
    ScalarField2 f(g);
    for (int i = 0; i < g.n1; ++i)
        for (int j = 0; j < g.n2; ++j) f.at(i, j) = dist(rng);

    std::ostringstream out;
    write_field_csv(out, f, ComponentTag{"g11", 2});
    std::istringstream in(out.str());
    const FieldCsv back = read_field_csv(in);
    REQUIRE(back.field.grid() == g);
    CHECK(back.field.values() == f.values());
    REQUIRE(back.tag.has_value());
    CHECK(back.tag->name == "g11");
    CHECK(back.tag->s_power == 2);
}

TEST_CASE("format_double emits shortest round-trip decimals") {
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(-0.25) == "-0.25");
    const double v = 1.0 / 3.0;
    CHECK(std::stod(format_double(v)) == v);
}

TEST_CASE("malformed CSV inputs are rejected") {
    std::istringstream missing("i,j,value\n");
    CHECK_THROWS_AS(read_field_csv(missing), IoError);
    std::istringstream short_rows("# grid n1=5 n2=5 x1=[0,1] x2=[0,1]\n0,0,1.5\n");
    CHECK_THROWS_AS(read_field_csv(short_rows), IoError);
}
