#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bonnetlab/errors.hpp"
#include "bonnetlab/fd.hpp"
#include "bonnetlab/field.hpp"
#include "bonnetlab/report.hpp"
#include "bonnetlab/separable.hpp"

namespace bonnetlab {

// Patch admissibility: below this magnitude H or J the frame degenerates and
// operations refuse to proceed rather than return garbage.
inline constexpr double kAdmissibleFloor = 1e-9;

/// Normal-curvature scalars in the bisecting frame: k along E1, kbar along
/// E2, t off-diagonal. Pointwise k + kbar = 2H and ((k-kbar)/2)^2 + t^2 = J^2.
struct FrameScalars {
    SeparableComponent k, kbar, t;
};

/// Principal curvature data of the 1-2 block: k1, k2, their half-sum H and
/// half-difference J, and the angle theta between e1 and e1'.
struct PrincipalData {
    SeparableComponent H, J, k1, k2;
    ScalarField2 theta;
};

/// Connection-form scalars in the adapted frame: h = w_2^1(E1),
/// hbar = w_1^2(E2), and T_p = C^p / s (empty in Case 2). Keeps the g11 it
/// was derived from; the frame derivatives E1, E2 need the metric weight.
struct ConnectionScalars {
    SeparableComponent h, hbar;
    std::optional<LinearFactor> linfac;
    SeparableComponent g11;

    SeparableComponent T(int p) const {
        if (!linfac) throw DomainError("no T_p scalars in Case 2");
        return SeparableComponent::constant(g11.grid(), linfac->coefficient(p), -1);
    }
};

/// Small dense square matrix (row-major), used for shape operators.
struct DenseMatrix {
    int n = 0;
    std::vector<double> a;

    explicit DenseMatrix(int size) : n(size), a(static_cast<std::size_t>(size) * size, 0.0) {}
    double& at(int r, int c) { return a[static_cast<std::size_t>(r) * n + c]; }
    double at(int r, int c) const { return a[static_cast<std::size_t>(r) * n + c]; }
};

/// Eigenvalues of a symmetric 2x2 matrix [[a, b], [b, d]], descending.
inline std::pair<double, double> sym2x2_eigenvalues(double a, double b, double d) {
    const double mean = 0.5 * (a + d);
    const double disc = std::hypot(0.5 * (a - d), b);
    return {mean + disc, mean - disc};
}

namespace detail {

inline void require_same_grid(const Grid2& a, const Grid2& b, const char* what) {
    if (!(a == b)) throw ShapeError(std::string("grid mismatch in ") + what);
}

// Residual fields may carry s-powers outside the component range [-2, 2].
struct ResidualField {
    ScalarField2 base;
    int power = 0;
};

inline ResidualEntry make_entry(std::string key, const ResidualField& r, const Grid3* grid3,
                                double tol) {
    const SeparableNorms norms = separable_norms(r.base, r.power, grid3);
    double w = 1.0;
    if (grid3 != nullptr && r.power != 0) {
        w = 0.0;
        for (int k = 0; k < grid3->n3; ++k)
            w = std::max(w, std::pow(grid3->sigma(k), r.power));
    }
    ScalarField2 heat = r.base.map([w](double, double, double v) { return std::fabs(v) * w; });
    return ResidualEntry::judge(std::move(key), norms.full, norms.interior, tol, std::move(heat));
}

} // namespace detail

/// k = H + J cos(theta), kbar = H - J cos(theta), t = J sin(theta).
inline FrameScalars frame_scalars(const SeparableComponent& H, const SeparableComponent& J,
                                  const ScalarField2& theta) {
    detail::require_same_grid(H.grid(), J.grid(), "frame_scalars");
    detail::require_same_grid(H.grid(), theta.grid(), "frame_scalars");
    if (H.s_power != J.s_power)
        throw ShapeError("H and J must carry the same s-power");
    const Grid2& g = H.grid();
    ScalarField2 kb(g), kbarb(g), tb(g);
    for (int i = 0; i < g.n1; ++i)
        for (int j = 0; j < g.n2; ++j) {
            const double Hv = H.base(i, j);
            const double Jv = J.base(i, j);
            const double th = theta(i, j);
            if (std::fabs(Hv) < kAdmissibleFloor)
                throw InvariantError("INVARIANT_H_ZERO", "|H| below the admissible floor");
            if (std::fabs(Jv) < kAdmissibleFloor)
                throw InvariantError("INVARIANT_J_ZERO", "|J| below the admissible floor");
            if (th < 0.0 || th > std::numbers::pi)
                throw InvariantError("INVARIANT_THETA", "theta outside [0, pi]");
            kb.at(i, j) = Hv + Jv * std::cos(th);
            kbarb.at(i, j) = Hv - Jv * std::cos(th);
            tb.at(i, j) = Jv * std::sin(th);
        }
    const int m = H.s_power;
    return {SeparableComponent(std::move(kb), m), SeparableComponent(std::move(kbarb), m),
            SeparableComponent(std::move(tb), m)};
}

/// Inverse of frame_scalars: H = (k+kbar)/2, |J| = hypot((k-kbar)/2, t) with
/// the sign of J carried by t (theta is folded into (0, pi), so sin(theta)
/// and t share J's sign), theta = atan2(t/J, (k-kbar)/(2J)).
inline PrincipalData principal_from_frame(const FrameScalars& fs) {
    detail::require_same_grid(fs.k.grid(), fs.kbar.grid(), "principal_from_frame");
    detail::require_same_grid(fs.k.grid(), fs.t.grid(), "principal_from_frame");
    if (fs.k.s_power != fs.kbar.s_power || fs.k.s_power != fs.t.s_power)
        throw ShapeError("frame scalars must carry one common s-power");
    const Grid2& g = fs.k.grid();
    ScalarField2 Hb(g), Jb(g), th(g), k1b(g), k2b(g);
    for (int i = 0; i < g.n1; ++i)
        for (int j = 0; j < g.n2; ++j) {
            const double k = fs.k.base(i, j);
            const double kbar = fs.kbar.base(i, j);
            const double t = fs.t.base(i, j);
            const double half = 0.5 * (k - kbar);
            const double mag = std::hypot(half, t);
            if (mag < kAdmissibleFloor)
                throw UmbilicError("J below " + std::to_string(kAdmissibleFloor) + " at node (" +
                                   std::to_string(i) + "," + std::to_string(j) + ")");
            const double sign = (t != 0.0) ? (t > 0.0 ? 1.0 : -1.0) : (half >= 0.0 ? 1.0 : -1.0);
            const double J = sign * mag;
            Hb.at(i, j) = 0.5 * (k + kbar);
            Jb.at(i, j) = J;
            th.at(i, j) = std::atan2(t / J, half / J);
            k1b.at(i, j) = Hb(i, j) + J;
            k2b.at(i, j) = Hb(i, j) - J;
        }
    const int m = fs.k.s_power;
    return {SeparableComponent(std::move(Hb), m), SeparableComponent(std::move(Jb), m),
            SeparableComponent(std::move(k1b), m), SeparableComponent(std::move(k2b), m),
            std::move(th)};
}

/// Shape operators of M and its associate M' in the bisecting frame: the 2x2
/// leading block rotates the principal pair by theta, everything else is
/// zero. L' differs from L only by the sign of the off-diagonal entry.
inline std::pair<DenseMatrix, DenseMatrix> bisector_shape_operators(double k1, double k2,
                                                                    double theta, int n) {
    if (n < 3) throw DomainError("shape operators need n >= 3");
    if (k1 == k2) throw UmbilicError("k1 == k2: the bisecting frame is undefined");
    DenseMatrix L(n), Lp(n);
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const double diag1 = 0.5 * (k1 * (1.0 + c) + k2 * (1.0 - c));
    const double diag2 = 0.5 * (k1 * (1.0 - c) + k2 * (1.0 + c));
    const double off = 0.5 * (k1 - k2) * s;
    L.at(0, 0) = diag1;
    L.at(1, 1) = diag2;
    L.at(0, 1) = L.at(1, 0) = off;
    Lp = L;
    Lp.at(0, 1) = Lp.at(1, 0) = -off;
    return {std::move(L), std::move(Lp)};
}

/// h and hbar by finite differences of ln sqrt(g11) weighted by the frame
/// factor 1/sqrt(g22); T_p analytic from the linear factor. Requires the
/// normalized chart g11 = g22 (the base carries the whole x1/x2 dependence).
inline ConnectionScalars connection_scalars(const SeparableComponent& g11,
                                            const std::optional<LinearFactor>& linfac) {
    const Grid2& g = g11.grid();
    for (int i = 0; i < g.n1; ++i)
        for (int j = 0; j < g.n2; ++j)
            if (!(g11.base(i, j) > 0.0)) throw MetricError("g11 must be positive");
    const int expected_power = linfac ? 2 : 0;
    if (g11.s_power != expected_power)
        throw ShapeError("normalized g11 must have s_power " + std::to_string(expected_power));

    ScalarField2 ln_sqrt = g11.base.map([](double, double, double v) { return 0.5 * std::log(v); });
    ScalarField2 d1 = partial(ln_sqrt, 1);
    ScalarField2 d2 = partial(ln_sqrt, 2);
    ScalarField2 hb(g), hbarb(g);
    for (int i = 0; i < g.n1; ++i)
        for (int j = 0; j < g.n2; ++j) {
            const double w = 1.0 / std::sqrt(g11.base(i, j));
            hb.at(i, j) = d2(i, j) * w;
            hbarb.at(i, j) = d1(i, j) * w;
        }
    const int m = -g11.s_power / 2;
    return {SeparableComponent(std::move(hb), m), SeparableComponent(std::move(hbarb), m), linfac,
            g11};
}

namespace detail {

// (1/sqrt(g11)) d/dx_axis of the base; the frame weight sqrt(g) contributes
// the -mg/2 shift in s-power.
inline ResidualField frame_partial(const SeparableComponent& f, int axis,
                                   const SeparableComponent& g11) {
    ScalarField2 df = partial(f.base, axis);
    const Grid2& g = f.grid();
    ScalarField2 out(g);
    for (int i = 0; i < g.n1; ++i)
        for (int j = 0; j < g.n2; ++j) out.at(i, j) = df(i, j) / std::sqrt(g11.base(i, j));
    return {std::move(out), f.s_power - g11.s_power / 2};
}

// E_p(f) + f * T_p collapses to C^p (m+1) base s^(m-1); aggregate over p by
// the largest |C^p|. Identically zero in Case 2 and whenever m = -1.
inline ResidualField p_equation(const SeparableComponent& f,
                                const std::optional<LinearFactor>& linfac) {
    const Grid2& g = f.grid();
    if (!linfac) return {ScalarField2(g, 0.0), 0};
    const double cmax = linfac->max_abs_coefficient();
    const double factor = cmax * static_cast<double>(f.s_power + 1);
    ScalarField2 out = f.base.map([factor](double, double, double v) { return factor * v; });
    return {std::move(out), f.s_power - 1};
}

inline void check_frame_inputs(const FrameScalars& fs, const ConnectionScalars& cs) {
    require_same_grid(fs.k.grid(), cs.g11.grid(), "reduced residuals");
    require_same_grid(fs.k.grid(), fs.kbar.grid(), "reduced residuals");
    require_same_grid(fs.k.grid(), fs.t.grid(), "reduced residuals");
    if (fs.k.s_power != fs.kbar.s_power || fs.k.s_power != fs.t.s_power)
        throw ShapeError("frame scalars must carry one common s-power");
}

} // namespace detail

/// The seven reduced Codazzi equations of Lemma 1, each as a residual field.
inline ResidualReport codazzi_reduced_residuals(const FrameScalars& fs,
                                                const ConnectionScalars& cs,
                                                const PrincipalData& pd,
                                                const Grid3* grid3 = nullptr,
                                                double tol = 1e-10) {
    detail::check_frame_inputs(fs, cs);
    detail::require_same_grid(fs.k.grid(), pd.theta.grid(), "codazzi_reduced_residuals");
    const Grid2& g = fs.k.grid();
    ResidualReport rep;
    rep.name = "codazzi_reduced";

    rep.add(detail::make_entry("Ep(k)+k*Tp", detail::p_equation(fs.k, cs.linfac), grid3, tol));
    rep.add(detail::make_entry("Ep(kbar)+kbar*Tp", detail::p_equation(fs.kbar, cs.linfac), grid3,
                               tol));
    rep.add(detail::make_entry("Ep(t)+t*Tp", detail::p_equation(fs.t, cs.linfac), grid3, tol));

    const auto e2k = detail::frame_partial(fs.k, 2, cs.g11);
    const auto e1kbar = detail::frame_partial(fs.kbar, 1, cs.g11);
    const auto e1t = detail::frame_partial(fs.t, 1, cs.g11);
    const auto e2t = detail::frame_partial(fs.t, 2, cs.g11);

    ScalarField2 r4(g), r5(g), r6(g), r7(g);
    for (int i = 0; i < g.n1; ++i)
        for (int j = 0; j < g.n2; ++j) {
            const double k = fs.k.base(i, j);
            const double kbar = fs.kbar.base(i, j);
            const double t = fs.t.base(i, j);
            const double h = cs.h.base(i, j);
            const double hbar = cs.hbar.base(i, j);
            r4.at(i, j) = e2k.base(i, j) + (k - kbar) * h;
            r5.at(i, j) = e1kbar.base(i, j) + (kbar - k) * hbar;
            r6.at(i, j) = e1t.base(i, j) + 2.0 * t * hbar;
            r7.at(i, j) = e2t.base(i, j) + 2.0 * t * h;
        }
    const int pw = e2k.power;
    rep.add(detail::make_entry("E2(k)+(k-kbar)*h", {std::move(r4), pw}, grid3, tol));
    rep.add(detail::make_entry("E1(kbar)+(kbar-k)*hbar", {std::move(r5), pw}, grid3, tol));
    rep.add(detail::make_entry("E1(t)+2*t*hbar", {std::move(r6), pw}, grid3, tol));
    rep.add(detail::make_entry("E2(t)+2*t*h", {std::move(r7), pw}, grid3, tol));
    return rep;
}

/// The first three reduced Gauss equations of Lemma 2. The remaining four
/// involve only w_q^r scalars that vanish in the normalized chart; the
/// general-tensor oracle certifies those.
inline ResidualReport gauss_reduced_residuals(const FrameScalars& fs, const ConnectionScalars& cs,
                                              const PrincipalData& pd, double kappa,
                                              const Grid3* grid3 = nullptr, double tol = 1e-10) {
    detail::check_frame_inputs(fs, cs);
    detail::require_same_grid(fs.k.grid(), pd.theta.grid(), "gauss_reduced_residuals");
    if (!cs.linfac && kappa != 0.0)
        throw DomainError("kappa must be zero in Case 2 (no linear factor)");
    const Grid2& g = fs.k.grid();
    ResidualReport rep;
    rep.name = "gauss_reduced";

    const auto e1hbar = detail::frame_partial(cs.hbar, 1, cs.g11);
    const auto e2h = detail::frame_partial(cs.h, 2, cs.g11);
    ScalarField2 r1(g);
    for (int i = 0; i < g.n1; ++i)
        for (int j = 0; j < g.n2; ++j) {
            const double h = cs.h.base(i, j);
            const double hbar = cs.hbar.base(i, j);
            const double k = fs.k.base(i, j);
            const double kbar = fs.kbar.base(i, j);
            const double t = fs.t.base(i, j);
            r1.at(i, j) = e1hbar.base(i, j) + e2h.base(i, j) + kappa + h * h + hbar * hbar -
                          (t * t - k * kbar);
        }
    rep.add(detail::make_entry("E1(hbar)+E2(h)+sum_Tp2+h2+hbar2-(t2-k*kbar)",
                               {std::move(r1), e1hbar.power}, grid3, tol));
    rep.add(detail::make_entry("Ep(h)+Tp*h", detail::p_equation(cs.h, cs.linfac), grid3, tol));
    rep.add(detail::make_entry("Ep(hbar)+Tp*hbar", detail::p_equation(cs.hbar, cs.linfac), grid3,
                               tol));
    return rep;
}

/// The log-t relations (ln|t|)_1 = -2 hbar, (ln|t|)_2 = -2 h and their
/// compatibility consequence h_1 = hbar_2.
inline ResidualReport log_t_compatibility(const FrameScalars& fs, const ConnectionScalars& cs,
                                          const Grid3* grid3 = nullptr, double tol = 1e-10) {
    detail::check_frame_inputs(fs, cs);
    const Grid2& g = fs.t.grid();
    for (int i = 0; i < g.n1; ++i)
        for (int j = 0; j < g.n2; ++j)
            if (std::fabs(fs.t.base(i, j)) < 1e-12)
                throw VanishingT("|t| < 1e-12 at node (" + std::to_string(i) + "," +
                                 std::to_string(j) + ")");

    ScalarField2 ln_t =
        fs.t.base.map([](double, double, double v) { return std::log(std::fabs(v)); });
    const SeparableComponent lnt(std::move(ln_t), 0);
    const auto e1lnt = detail::frame_partial(lnt, 1, cs.g11);
    const auto e2lnt = detail::frame_partial(lnt, 2, cs.g11);
    const auto e1h = detail::frame_partial(cs.h, 1, cs.g11);
    const auto e2hbar = detail::frame_partial(cs.hbar, 2, cs.g11);

    ScalarField2 r1(g), r2(g), r3(g);
    for (int i = 0; i < g.n1; ++i)
        for (int j = 0; j < g.n2; ++j) {
            r1.at(i, j) = e1lnt.base(i, j) + 2.0 * cs.hbar.base(i, j);
            r2.at(i, j) = e2lnt.base(i, j) + 2.0 * cs.h.base(i, j);
            r3.at(i, j) = e1h.base(i, j) - e2hbar.base(i, j);
        }
    ResidualReport rep;
    rep.name = "log_t";
    rep.add(detail::make_entry("E1(ln|t|)+2*hbar", {std::move(r1), e1lnt.power}, grid3, tol));
    rep.add(detail::make_entry("E2(ln|t|)+2*h", {std::move(r2), e2lnt.power}, grid3, tol));
    rep.add(detail::make_entry("E1(h)-E2(hbar)", {std::move(r3), e1h.power}, grid3, tol));
    return rep;
}

} // namespace bonnetlab
