#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bonnetlab/errors.hpp"
#include "bonnetlab/fd.hpp"
#include "bonnetlab/field.hpp"
#include "bonnetlab/framegeom.hpp"
#include "bonnetlab/report.hpp"
#include "bonnetlab/separable.hpp"
#include "bonnetlab/tensorlab.hpp"

namespace bonnetlab {

/// How to fill b11 and b22 from the generating fields. The printed Case 1
/// display uses sin(theta) in the numerators; the derivation chain
/// b11 = g11 * k with k = H + J cos(theta) forces cos(theta). The general
/// Gauss oracle accepts the cos form and rejects the sin form, so
/// DerivationConsistent is the default and AsPrinted exists for that
/// adjudication.
enum class Variant { DerivationConsistent, AsPrinted };

/// The generating data of a Bonnet pair: numerators frakH of H and frakJ of
/// J, the angle field theta, and the case tag (a linear factor for Case 1,
/// none for Case 2). The orientation epsilon is always derived as sgn(frakJ).
struct BonnetFields {
    ScalarField2 frakH, frakJ, theta;
    std::optional<LinearFactor> linfac;
    int n = 3;
    double epsilon = 1.0;

    bool case_one() const { return linfac.has_value(); }
    double kappa() const { return linfac ? linfac->kappa() : 0.0; }

    static BonnetFields make(ScalarField2 frakH, ScalarField2 frakJ, ScalarField2 theta,
                             std::optional<LinearFactor> linfac = std::nullopt, int n = 3) {
        if (!(frakH.grid() == frakJ.grid()) || !(frakH.grid() == theta.grid()))
            throw ShapeError("BonnetFields require a common grid");
        if (n < 2 || n > kMaxAmbientN)
            throw InvariantError("INVARIANT_N", "hypersurface dimension out of range");
        if (linfac) {
            if (linfac->r() > n)
                throw InvariantError("LINFAC_RANGE", "linear factor index r exceeds n");
        }
        const Grid2& g = frakH.grid();
        double sign = 0.0;
        for (int i = 0; i < g.n1; ++i)
            for (int j = 0; j < g.n2; ++j) {
                if (std::fabs(frakH(i, j)) < kAdmissibleFloor)
                    throw InvariantError("INVARIANT_H_ZERO",
                                         "|frakH| < 1e-9 at node (" + std::to_string(i) + "," +
                                             std::to_string(j) + ")");
                const double Jv = frakJ(i, j);
                if (std::fabs(Jv) < kAdmissibleFloor)
                    throw InvariantError("INVARIANT_J_ZERO",
                                         "|frakJ| < 1e-9 at node (" + std::to_string(i) + "," +
                                             std::to_string(j) + ")");
                if (sign == 0.0)
                    sign = Jv > 0.0 ? 1.0 : -1.0;
                else if ((Jv > 0.0 ? 1.0 : -1.0) != sign)
                    throw InvariantError("INVARIANT_J_SIGN", "frakJ changes sign on the patch");
                const double th = theta(i, j);
                if (!(th > 0.0) || !(th < std::numbers::pi) || std::sin(th) < kAdmissibleFloor)
                    throw InvariantError("INVARIANT_THETA",
                                         "theta must lie in (0, pi) with sin(theta) >= 1e-9");
            }
        BonnetFields f;
        f.frakH = std::move(frakH);
        f.frakJ = std::move(frakJ);
        f.theta = std::move(theta);
        f.linfac = std::move(linfac);
        f.n = n;
        f.epsilon = sign;
        return f;
    }
};

/// M and its associate share every fundamental quantity except the sign of
/// b12; the provenance records the generating fields.
struct FundamentalPair {
    FundamentalData M;
    FundamentalData Mprime;
    BonnetFields provenance;
};

/// Residuals of the master constraints: the two first-order equations tying
/// frakH to theta through frakJ, and the Liouville-type equation on
/// ln(|frakJ| sin theta).
struct ConstraintResiduals {
    ResidualEntry c1, c2, c3;

    bool all_pass() const { return c1.pass && c2.pass && c3.pass; }

    ResidualReport report() const {
        ResidualReport rep;
        rep.name = "constraints";
        rep.entries = {c1, c2, c3};
        return rep;
    }
};

/// b12 -> -b12, epsilon -> -epsilon; everything else is copied bit-for-bit.
inline FundamentalData associate(const FundamentalData& fd) {
    FundamentalData out = fd;
    out.b12.base = fd.b12.base.map([](double, double, double v) { return -v; });
    out.epsilon = -fd.epsilon;
    return out;
}

/// Builds the fundamental tensors of the pair from the generating fields:
/// g11 = g22 = s^2 / (|frakJ| sin theta), g_pp = 1, b12 = epsilon * s, and
/// the b11/b22 numerators per the chosen variant (s^2, s -> 1 in Case 2).
inline FundamentalPair construct_pair(const BonnetFields& F,
                                      Variant variant = Variant::DerivationConsistent) {
    const Grid2& g = F.frakH.grid();
    const int mg = F.case_one() ? 2 : 0;
    const int mb = F.case_one() ? 1 : 0;
    ScalarField2 u(g), b11b(g), b22b(g);
    for (int i = 0; i < g.n1; ++i)
        for (int j = 0; j < g.n2; ++j) {
            const double Jv = F.frakJ(i, j);
            const double th = F.theta(i, j);
            const double denom = std::fabs(Jv) * std::sin(th);
            const double w =
                (variant == Variant::DerivationConsistent) ? std::cos(th) : std::sin(th);
            u.at(i, j) = 1.0 / denom;
            b11b.at(i, j) = (F.frakH(i, j) + Jv * w) / denom;
            b22b.at(i, j) = (F.frakH(i, j) - Jv * w) / denom;
        }
    FundamentalData M;
    M.n = F.n;
    M.linfac = F.linfac;
    M.g11 = SeparableComponent(std::move(u), mg);
    M.b11 = SeparableComponent(std::move(b11b), mb);
    M.b22 = SeparableComponent(std::move(b22b), mb);
    M.b12 = SeparableComponent::constant(g, F.epsilon, mb);
    M.epsilon = F.epsilon;
    return {M, associate(M), F};
}

/// Finite-difference residuals of the master constraints (4-point one-sided
/// stencils on the ring, centered in the interior).
inline ConstraintResiduals constraint_residuals(const BonnetFields& F, double tol = 1e-10) {
    const Grid2& g = F.frakH.grid();
    const double kappa = F.kappa();

    ScalarField2 W(g);
    for (int i = 0; i < g.n1; ++i)
        for (int j = 0; j < g.n2; ++j)
            W.at(i, j) = std::log(std::fabs(F.frakJ(i, j)) * std::sin(F.theta(i, j)));

    const ScalarField2 dH1 = partial(F.frakH, 1);
    const ScalarField2 dH2 = partial(F.frakH, 2);
    const ScalarField2 dTh1 = partial(F.theta, 1);
    const ScalarField2 dTh2 = partial(F.theta, 2);
    const ScalarField2 W11 = second_partial(W, 1);
    const ScalarField2 W22 = second_partial(W, 2);

    ScalarField2 r1(g), r2(g), r3(g);
    for (int i = 0; i < g.n1; ++i)
        for (int j = 0; j < g.n2; ++j) {
            const double Jv = F.frakJ(i, j);
            const double sth = std::sin(F.theta(i, j));
            r1.at(i, j) = dH2(i, j) / Jv - dTh2(i, j) / sth;
            r2.at(i, j) = dH1(i, j) / Jv + dTh1(i, j) / sth;
            const double Hv = F.frakH(i, j);
            r3.at(i, j) = std::fabs(Jv) * sth * (W11(i, j) + W22(i, j)) - 2.0 * kappa -
                          2.0 * (Hv * Hv - Jv * Jv);
        }

    auto entry = [tol](const char* key, ScalarField2 r) {
        const NormPair full = field_norms(r, false);
        const NormPair inter = field_norms(r, true);
        ScalarField2 heat = r.map([](double, double, double v) { return std::fabs(v); });
        return ResidualEntry::judge(key, full, inter, tol, std::move(heat));
    };
    return {entry("c1:frakH_x2/frakJ-theta_x2/sin", std::move(r1)),
            entry("c2:frakH_x1/frakJ+theta_x1/sin", std::move(r2)),
            entry("c3:liouville-2kappa-2(H2-J2)", std::move(r3))};
}

/// Frame scalars, principal data and connection scalars induced by the
/// generating fields; the bridge from the construction to the reduced
/// Codazzi/Gauss systems of Lemmas 1 and 2.
struct ReducedInputs {
    FrameScalars fs;
    ConnectionScalars cs;
    PrincipalData pd;
};

inline ReducedInputs reduced_inputs(const BonnetFields& F) {
    const Grid2& g = F.frakH.grid();
    const int m = F.case_one() ? -1 : 0;
    const SeparableComponent H(F.frakH, m);
    const SeparableComponent J(F.frakJ, m);
    const FrameScalars fs = frame_scalars(H, J, F.theta);
    ScalarField2 k1b(g), k2b(g);
    for (int i = 0; i < g.n1; ++i)
        for (int j = 0; j < g.n2; ++j) {
            k1b.at(i, j) = F.frakH(i, j) + F.frakJ(i, j);
            k2b.at(i, j) = F.frakH(i, j) - F.frakJ(i, j);
        }
    const PrincipalData pd{H, J, SeparableComponent(std::move(k1b), m),
                           SeparableComponent(std::move(k2b), m), F.theta};
    const FundamentalPair pair = construct_pair(F);
    const ConnectionScalars cs = connection_scalars(pair.M.g11, F.linfac);
    return {fs, cs, pd};
}

/// Contract checks between M and M': identical metric (bitwise), matching
/// mean curvature and eigenvalue multisets, exactly negated b12, genuinely
/// different second forms, and both sides passing the Gauss-Codazzi oracle.
inline ResidualReport verify_pair(const FundamentalPair& pair, double tol = 1e-10,
                                  const Grid3* grid3 = nullptr) {
    const FundamentalData& M = pair.M;
    const FundamentalData& Mp = pair.Mprime;
    const Grid2& g = M.g11.grid();
    ResidualReport rep;
    rep.name = "pair_contract";

    const bool g_same = (M.g11.s_power == Mp.g11.s_power) &&
                        (M.g11.base.values() == Mp.g11.base.values());
    const NormPair gdev{g_same ? 0.0 : 1.0, g_same ? 0.0 : 1.0};
    rep.add(ResidualEntry::judge("g_identical_bitwise", gdev, gdev, 0.5));

    std::vector<double> sigmas = {1.0};
    if (grid3 != nullptr && M.linfac) {
        sigmas.clear();
        for (int k = 0; k < grid3->n3; ++k) sigmas.push_back(grid3->sigma(k));
    }
    const TensorData tdM = M.to_tensor();
    const TensorData tdMp = Mp.to_tensor();
    double h_dev = 0.0, eig_dev = 0.0, b12_dev = 0.0;
    double min_db12 = std::numeric_limits<double>::infinity();
    double min_b12 = std::numeric_limits<double>::infinity();
    double max_db12 = 0.0;
    for (int i = 0; i < g.n1; ++i)
        for (int j = 0; j < g.n2; ++j)
            for (double s : sigmas) {
                const PrincipalCurvatures pm = principal_curvatures(tdM, i, j, s);
                const PrincipalCurvatures pp = principal_curvatures(tdMp, i, j, s);
                h_dev = std::max(h_dev, std::fabs(pm.H - pp.H));
                for (std::size_t k = 0; k < pm.sorted.size(); ++k)
                    eig_dev = std::max(eig_dev, std::fabs(pm.sorted[k] - pp.sorted[k]));
                const double bm = M.b12.eval(i, j, s);
                const double bp = Mp.b12.eval(i, j, s);
                b12_dev = std::max(b12_dev, std::fabs(bm + bp));
                min_db12 = std::min(min_db12, std::fabs(bm - bp));
                min_b12 = std::min(min_b12, std::fabs(bm));
                max_db12 = std::max(max_db12, std::fabs(bm - bp));
            }
    rep.add(ResidualEntry::judge("H_fields_match", {h_dev, h_dev}, {h_dev, h_dev}, 1e-12));
    rep.add(ResidualEntry::judge("eigenvalue_multisets_match", {eig_dev, eig_dev},
                                 {eig_dev, eig_dev}, 1e-12));
    rep.add(ResidualEntry::judge("b12_exactly_negated", {b12_dev, b12_dev},
                                 {b12_dev, b12_dev}, 0.0));
    const double nontrivial_dev =
        (max_db12 > 0.0) ? std::max(0.0, 2.0 * min_b12 - min_db12) : 1.0;
    rep.add(ResidualEntry::judge("second_forms_differ", {nontrivial_dev, nontrivial_dev},
                                 {nontrivial_dev, nontrivial_dev}, 0.0));

    ResidualReport gm = gauss_general_residual(tdM, grid3, tol);
    ResidualReport cm = codazzi_general_residual(tdM, grid3, tol);
    ResidualReport gp = gauss_general_residual(tdMp, grid3, tol);
    ResidualReport cp = codazzi_general_residual(tdMp, grid3, tol);
    rep.merge(gm, "M:");
    rep.merge(cm, "M:");
    rep.merge(gp, "Mprime:");
    rep.merge(cp, "Mprime:");
    return rep;
}

/// Numerical Theorem-1 round trip: the constraint residuals of F, the
/// oracle residuals of the constructed tensors, and the A-net verdicts of
/// both surfaces in one report.
inline ResidualReport theorem_roundtrip(const BonnetFields& F, double tol = 1e-10,
                                        const Grid3* grid3 = nullptr) {
    ResidualReport rep;
    rep.name = "theorem_roundtrip";
    const ConstraintResiduals cr = constraint_residuals(F, tol);
    rep.merge(cr.report());

    const FundamentalPair pair = construct_pair(F);
    const TensorData tdM = pair.M.to_tensor();
    const TensorData tdMp = pair.Mprime.to_tensor();
    rep.merge(gauss_general_residual(tdM, grid3, tol), "M:");
    rep.merge(codazzi_general_residual(tdM, grid3, tol), "M:");
    rep.merge(gauss_general_residual(tdMp, grid3, tol), "Mprime:");
    rep.merge(codazzi_general_residual(tdMp, grid3, tol), "Mprime:");

    for (const auto& [label, td] : {std::pair<const char*, const TensorData*>{"M:anet", &tdM},
                                    {"Mprime:anet", &tdMp}}) {
        const AnetVerdict v = detect_anet(*td, F.linfac, std::max(tol, 1e-9), grid3);
        double dev = 0.0;
        for (const auto& d : v.diagnostics)
            if (!d.pass) dev = std::max(dev, d.deviation);
        ResidualEntry e;
        e.key = label;
        e.full = {dev, dev};
        e.interior = {dev, dev};
        e.tolerance = std::max(tol, 1e-9);
        e.pass = v.is_anet;
        rep.add(std::move(e));
    }
    return rep;
}

} // namespace bonnetlab
