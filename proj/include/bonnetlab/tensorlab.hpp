#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bonnetlab/errors.hpp"
#include "bonnetlab/expr.hpp"
#include "bonnetlab/fd.hpp"
#include "bonnetlab/field.hpp"
#include "bonnetlab/framegeom.hpp"
#include "bonnetlab/parallel.hpp"
#include "bonnetlab/report.hpp"
#include "bonnetlab/separable.hpp"

namespace bonnetlab {

inline constexpr int kMaxAmbientN = 8;

// ---------------------------------------------------------------------------
// Raw symmetric tensor data
// ---------------------------------------------------------------------------

/// Symmetric (g, b) component tables over a Grid2, each component a
/// base(x1,x2) * s^m monomial. Absent components are zero. Indices are
/// 1-based to match the classical index ranges (i,j in {1,2}; p,q in 3..n).
class TensorData {
public:
    TensorData(int n, Grid2 grid, std::optional<LinearFactor> linfac = std::nullopt)
        : n_(n), grid_(std::move(grid)), linfac_(std::move(linfac)),
          g_(tri_size(n), std::nullopt), b_(tri_size(n), std::nullopt) {
        if (n_ < 2 || n_ > kMaxAmbientN)
            throw DomainError("hypersurface dimension n must be in [2, " +
                              std::to_string(kMaxAmbientN) + "]");
        if (linfac_ && linfac_->r() > n_)
            throw InvariantError("LINFAC_RANGE", "linear factor index r exceeds n");
    }

    int n() const { return n_; }
    const Grid2& grid() const { return grid_; }
    const std::optional<LinearFactor>& linfac() const { return linfac_; }

    void set_g(int A, int B, SeparableComponent sc) { set(g_, A, B, std::move(sc)); }
    void set_b(int A, int B, SeparableComponent sc) { set(b_, A, B, std::move(sc)); }
    const SeparableComponent* g(int A, int B) const { return get(g_, A, B); }
    const SeparableComponent* b(int A, int B) const { return get(b_, A, B); }

    /// Derivative coefficient of the axis-p direction: d/dx^p = C^p d/ds.
    double axis_coefficient(int p) const {
        if (!linfac_) return 0.0;
        return linfac_->coefficient(p);
    }

private:
    static std::size_t tri_size(int n) { return static_cast<std::size_t>(n) * (n + 1) / 2; }

    std::size_t tri_index(int A, int B) const {
        if (A < 1 || B < 1 || A > n_ || B > n_) throw DomainError("tensor index out of range");
        if (A > B) std::swap(A, B);
        // row A-1 of an upper-triangular walk
        const int r = A - 1, c = B - 1;
        return static_cast<std::size_t>(r) * n_ - static_cast<std::size_t>(r) * (r - 1) / 2 +
               static_cast<std::size_t>(c - r);
    }

    void set(std::vector<std::optional<SeparableComponent>>& table, int A, int B,
             SeparableComponent sc) {
        if (!(sc.grid() == grid_)) throw ShapeError("component grid differs from tensor grid");
        if (!linfac_ && sc.s_power != 0)
            throw InvariantError("S_POWER_NO_LINFAC",
                                 "nonzero s_power requires a linear factor (Case 1)");
        table[tri_index(A, B)] = std::move(sc);
    }

    const SeparableComponent* get(const std::vector<std::optional<SeparableComponent>>& table,
                                  int A, int B) const {
        const auto& slot = table[tri_index(A, B)];
        return slot ? &*slot : nullptr;
    }

    int n_;
    Grid2 grid_;
    std::optional<LinearFactor> linfac_;
    std::vector<std::optional<SeparableComponent>> g_, b_;
};

/// The Bonnet-sparsity specialization produced by the construction: one
/// shared g11 = g22 component, unit g_pp, and the 1-2 block of b.
struct FundamentalData {
    int n = 3;
    std::optional<LinearFactor> linfac;
    SeparableComponent g11; // also g22
    SeparableComponent b11, b22, b12;
    double epsilon = 1.0;

    TensorData to_tensor() const {
        TensorData td(n, g11.grid(), linfac);
        td.set_g(1, 1, g11);
        td.set_g(2, 2, g11);
        for (int p = 3; p <= n; ++p)
            td.set_g(p, p, SeparableComponent::constant(g11.grid(), 1.0, 0));
        td.set_b(1, 1, b11);
        td.set_b(2, 2, b22);
        td.set_b(1, 2, b12);
        return td;
    }
};

// ---------------------------------------------------------------------------
// Christoffel symbols
// ---------------------------------------------------------------------------

namespace detail {

// FD stencil weights for one axis position: centered in the interior,
// one-sided 2nd order on the boundary. Returns (offset, weight) pairs.
inline int stencil_1d(int i, int n, double h, std::array<std::pair<int, double>, 3>& out) {
    if (i == 0) {
        out = {{{0, -1.5 / h}, {1, 2.0 / h}, {2, -0.5 / h}}};
        return 3;
    }
    if (i == n - 1) {
        out = {{{0, 1.5 / h}, {-1, -2.0 / h}, {-2, 0.5 / h}}};
        return 3;
    }
    out = {{{-1, -0.5 / h}, {1, 0.5 / h}, {0, 0.0}}};
    return 2;
}

struct SigmaTable {
    std::vector<double> sigmas;
    std::vector<std::array<double, SPoly::kSlots>> powers;

    explicit SigmaTable(const Grid3* grid3) {
        if (grid3 == nullptr) {
            sigmas = {1.0};
        } else {
            for (int k = 0; k < grid3->n3; ++k) sigmas.push_back(grid3->sigma(k));
        }
        powers.resize(sigmas.size());
        for (std::size_t k = 0; k < sigmas.size(); ++k)
            for (int m = SPoly::kMinPow; m <= SPoly::kMaxPow; ++m)
                powers[k][static_cast<std::size_t>(m - SPoly::kMinPow)] = std::pow(sigmas[k], m);
    }

    double eval(const SPoly& p, std::size_t k) const {
        double v = 0.0;
        for (int m = p.lo; m <= p.hi; ++m) {
            const double cm = p.coeff(m);
            if (cm != 0.0) v += cm * powers[k][static_cast<std::size_t>(m - SPoly::kMinPow)];
        }
        return v;
    }
};

} // namespace detail

/// Levi-Civita symbols of a diagonal metric with monomial components, stored
/// as exact Laurent polynomials in s at every (x1, x2) node. x1/x2
/// derivatives are finite differences of the component bases; s-derivatives
/// are analytic.
class ChristoffelField {
public:
    ChristoffelField(const TensorData& td, const Grid3* grid3) : n_(td.n()), grid_(td.grid()) {
        for (int A = 1; A <= n_; ++A)
            for (int B = A + 1; B <= n_; ++B)
                if (const auto* sc = td.g(A, B)) {
                    NormPair np = field_norms(sc->base);
                    if (np.linf != 0.0)
                        throw MetricError("off-diagonal metric components are not supported");
                }
        (void)grid3;

        // Per-component value/derivative planes of the diagonal metric.
        struct Plane {
            double value, d1, d2;
            int power;
        };
        std::vector<ScalarField2> bases, dx1, dx2;
        std::vector<int> powers;
        for (int A = 1; A <= n_; ++A) {
            const auto* sc = td.g(A, A);
            if (sc == nullptr) throw MetricError("metric diagonal g" + std::to_string(A) +
                                                 std::to_string(A) + " is missing");
            for (int i = 0; i < grid_.n1; ++i)
                for (int j = 0; j < grid_.n2; ++j)
                    if (!(sc->base(i, j) > 0.0))
                        throw MetricError("metric component g" + std::to_string(A) +
                                          std::to_string(A) + " is not positive");
            bases.push_back(sc->base);
            dx1.push_back(partial(sc->base, 1));
            dx2.push_back(partial(sc->base, 2));
            powers.push_back(sc->s_power);
        }

        auto dg = [&](int axis, int A, int i, int j, const TensorData& t) -> SPoly {
            // d/dx^axis of g_AA as a monomial at node (i, j)
            const std::size_t a = static_cast<std::size_t>(A - 1);
            if (axis == 1) return SPoly::monomial(dx1[a](i, j), powers[a]);
            if (axis == 2) return SPoly::monomial(dx2[a](i, j), powers[a]);
            const double cp = t.axis_coefficient(axis);
            if (cp == 0.0) return SPoly::zero();
            return cp * SPoly::monomial(bases[a](i, j), powers[a]).dsigma();
        };

        const int m = n_ * (n_ + 1) / 2;
        data_.assign(grid_.size() * static_cast<std::size_t>(n_) * m, SPoly::zero());
        parallel_for(grid_.size(), [&](std::size_t node) {
            const int i = static_cast<int>(node) / grid_.n2;
            const int j = static_cast<int>(node) % grid_.n2;
            for (int A = 1; A <= n_; ++A) {
                const SPoly inv_gAA =
                    SPoly::monomial(bases[static_cast<std::size_t>(A - 1)](i, j),
                                    powers[static_cast<std::size_t>(A - 1)])
                        .inverse_monomial("g" + std::to_string(A) + std::to_string(A));
                for (int B = 1; B <= n_; ++B)
                    for (int C = B; C <= n_; ++C) {
                        // 2 Gamma^A_BC = g^AA (d_B g_AC + d_C g_AB - d_A g_BC),
                        // diagonal metric: terms survive only when indices meet.
                        SPoly sum = SPoly::zero();
                        if (A == C) sum += dg(B, A, i, j, td);
                        if (A == B) sum += dg(C, A, i, j, td);
                        if (B == C) sum -= dg(A, B, i, j, td);
                        if (!sum.is_zero())
                            data_[slot(node, A, B, C)] = 0.5 * (inv_gAA * sum);
                    }
            }
        });
    }

    int n() const { return n_; }
    const Grid2& grid() const { return grid_; }

    const SPoly& poly(int A, int B, int C, int i, int j) const {
        return data_[slot(grid_.index(i, j), A, B, C)];
    }

    double eval(int A, int B, int C, int i, int j, double sigma) const {
        return poly(A, B, C, i, j).eval(sigma);
    }

    /// d/dx^axis Gamma^A_BC at a node; FD along x1/x2, analytic along s.
    SPoly derivative(int axis, int A, int B, int C, int i, int j, double axis_coefficient) const {
        if (axis >= 3) {
            if (axis_coefficient == 0.0) return SPoly::zero();
            return axis_coefficient * poly(A, B, C, i, j).dsigma();
        }
        std::array<std::pair<int, double>, 3> w;
        const int n_axis = (axis == 1) ? grid_.n1 : grid_.n2;
        const double h = (axis == 1) ? grid_.h1() : grid_.h2();
        const int pos = (axis == 1) ? i : j;
        const int terms = detail::stencil_1d(pos, n_axis, h, w);
        SPoly out = SPoly::zero();
        for (int tix = 0; tix < terms; ++tix) {
            const auto [off, weight] = w[static_cast<std::size_t>(tix)];
            if (weight == 0.0) continue;
            const int ii = (axis == 1) ? i + off : i;
            const int jj = (axis == 2) ? j + off : j;
            out += weight * poly(A, B, C, ii, jj);
        }
        return out;
    }

private:
    std::size_t slot(std::size_t node, int A, int B, int C) const {
        if (B > C) std::swap(B, C);
        const int m = n_ * (n_ + 1) / 2;
        const int r = B - 1, c = C - 1;
        const int tri = r * n_ - r * (r - 1) / 2 + (c - r);
        return (node * static_cast<std::size_t>(n_) + static_cast<std::size_t>(A - 1)) * m + tri;
    }

    int n_;
    Grid2 grid_;
    std::vector<SPoly> data_;
};

inline ChristoffelField christoffel(const TensorData& td, const Grid3* grid3 = nullptr) {
    if (td.linfac() && grid3 == nullptr)
        throw DomainError("Case 1 tensors need a Grid3 for sigma sampling");
    return ChristoffelField(td, grid3);
}

inline ChristoffelField christoffel(const FundamentalData& fd, const Grid3* grid3 = nullptr) {
    const TensorData td = fd.to_tensor();
    return christoffel(td, grid3);
}

// ---------------------------------------------------------------------------
// Gauss and Codazzi residuals (the oracle)
// ---------------------------------------------------------------------------

namespace detail {

struct ComponentPlanes {
    // value/derivative bases and powers for every stored b component, dense
    // over the symmetric index pairs; absent components hold empty planes.
    std::vector<bool> present;
    std::vector<ScalarField2> base, dx1, dx2;
    std::vector<int> power;
    int n;

    explicit ComponentPlanes(const TensorData& td, bool metric) : n(td.n()) {
        const int m = n * (n + 1) / 2;
        present.assign(static_cast<std::size_t>(m), false);
        base.resize(static_cast<std::size_t>(m));
        dx1.resize(static_cast<std::size_t>(m));
        dx2.resize(static_cast<std::size_t>(m));
        power.assign(static_cast<std::size_t>(m), 0);
        for (int A = 1; A <= n; ++A)
            for (int B = A; B <= n; ++B) {
                const SeparableComponent* sc = metric ? td.g(A, B) : td.b(A, B);
                if (sc == nullptr) continue;
                const std::size_t t = tri(A, B);
                present[t] = true;
                base[t] = sc->base;
                dx1[t] = partial(sc->base, 1);
                dx2[t] = partial(sc->base, 2);
                power[t] = sc->s_power;
            }
    }

    std::size_t tri(int A, int B) const {
        if (A > B) std::swap(A, B);
        const int r = A - 1, c = B - 1;
        return static_cast<std::size_t>(r * n - r * (r - 1) / 2 + (c - r));
    }

    SPoly value(int A, int B, int i, int j) const {
        const std::size_t t = tri(A, B);
        if (!present[t]) return SPoly::zero();
        return SPoly::monomial(base[t](i, j), power[t]);
    }

    SPoly derivative(int axis, int A, int B, int i, int j, double axis_coefficient) const {
        const std::size_t t = tri(A, B);
        if (!present[t]) return SPoly::zero();
        if (axis == 1) return SPoly::monomial(dx1[t](i, j), power[t]);
        if (axis == 2) return SPoly::monomial(dx2[t](i, j), power[t]);
        if (axis_coefficient == 0.0) return SPoly::zero();
        return axis_coefficient * SPoly::monomial(base[t](i, j), power[t]).dsigma();
    }
};

struct OracleAccumulator {
    double linf_full = 0.0, sumsq_full = 0.0;
    double linf_int = 0.0, sumsq_int = 0.0;
    std::size_t count_full = 0, count_int = 0;
    ScalarField2 heat;

    explicit OracleAccumulator(const Grid2& g) : heat(g, 0.0) {}

    void note(int i, int j, bool interior, double v) {
        const double a = std::fabs(v);
        linf_full = std::max(linf_full, a);
        sumsq_full += v * v;
        ++count_full;
        if (interior) {
            linf_int = std::max(linf_int, a);
            sumsq_int += v * v;
            ++count_int;
        }
        if (a > heat(i, j)) heat.at(i, j) = a;
    }

    ResidualEntry entry(std::string key, double tol) {
        const NormPair full{linf_full,
                            count_full ? std::sqrt(sumsq_full / static_cast<double>(count_full))
                                       : 0.0};
        const NormPair inter{linf_int,
                             count_int ? std::sqrt(sumsq_int / static_cast<double>(count_int))
                                       : 0.0};
        return ResidualEntry::judge(std::move(key), full, inter, tol, std::move(heat));
    }
};

} // namespace detail

/// Tensor Gauss residual R_ABCD - (b_AC b_BD - b_AD b_BC) over every index
/// combination, every node, and every sampled sigma.
inline ResidualReport gauss_general_residual(const TensorData& td, const Grid3* grid3 = nullptr,
                                             double tol = 1e-10) {
    if (td.linfac() && grid3 == nullptr)
        throw DomainError("Case 1 tensors need a Grid3 for sigma sampling");
    const ChristoffelField gamma = christoffel(td, grid3);
    const detail::ComponentPlanes bp(td, false);
    const detail::ComponentPlanes gp(td, true);
    const detail::SigmaTable sig(td.linfac() ? grid3 : nullptr);
    const Grid2& g = td.grid();
    const int n = td.n();

    detail::OracleAccumulator acc(g);
    std::vector<SPoly> dgamma(static_cast<std::size_t>(n * n * n * n));
    auto dslot = [n](int axis, int A, int B, int C) {
        return static_cast<std::size_t>(((axis - 1) * n + (A - 1)) * n * n + (B - 1) * n +
                                        (C - 1));
    };

    for (int i = 0; i < g.n1; ++i)
        for (int j = 0; j < g.n2; ++j) {
            const bool interior = g.interior(i, j);
            // d_axis Gamma^A_BC for every axis at this node
            for (int axis = 1; axis <= n; ++axis)
                for (int A = 1; A <= n; ++A)
                    for (int B = 1; B <= n; ++B)
                        for (int C = B; C <= n; ++C) {
                            SPoly d = gamma.derivative(axis, A, B, C, i, j,
                                                       td.axis_coefficient(axis));
                            dgamma[dslot(axis, A, B, C)] = d;
                            if (B != C) dgamma[dslot(axis, A, C, B)] = std::move(d);
                        }
            for (int A = 1; A <= n; ++A) {
                const SPoly gAA = gp.value(A, A, i, j);
                for (int B = 1; B <= n; ++B)
                    for (int C = 1; C <= n; ++C)
                        for (int D = 1; D <= n; ++D) {
                            // R^A_BCD = d_C Gamma^A_DB - d_D Gamma^A_CB
                            //         + Gamma^A_CE Gamma^E_DB - Gamma^A_DE Gamma^E_CB
                            SPoly riem = dgamma[dslot(C, A, D, B)] - dgamma[dslot(D, A, C, B)];
                            for (int E = 1; E <= n; ++E) {
                                riem += gamma.poly(A, C, E, i, j) * gamma.poly(E, D, B, i, j);
                                riem -= gamma.poly(A, D, E, i, j) * gamma.poly(E, C, B, i, j);
                            }
                            SPoly res = gAA * riem;
                            res -= bp.value(A, C, i, j) * bp.value(B, D, i, j);
                            res += bp.value(A, D, i, j) * bp.value(B, C, i, j);
                            for (std::size_t k = 0; k < sig.sigmas.size(); ++k)
                                acc.note(i, j, interior, sig.eval(res, k));
                        }
            }
        }
    ResidualReport rep;
    rep.name = "gauss_general";
    rep.add(acc.entry("gauss_general", tol));
    return rep;
}

inline ResidualReport gauss_general_residual(const FundamentalData& fd,
                                             const Grid3* grid3 = nullptr, double tol = 1e-10) {
    return gauss_general_residual(fd.to_tensor(), grid3, tol);
}

/// Tensor Codazzi residual nabla_A b_BC - nabla_B b_AC over A < B, all C.
inline ResidualReport codazzi_general_residual(const TensorData& td, const Grid3* grid3 = nullptr,
                                               double tol = 1e-10) {
    if (td.linfac() && grid3 == nullptr)
        throw DomainError("Case 1 tensors need a Grid3 for sigma sampling");
    const ChristoffelField gamma = christoffel(td, grid3);
    const detail::ComponentPlanes bp(td, false);
    const detail::SigmaTable sig(td.linfac() ? grid3 : nullptr);
    const Grid2& g = td.grid();
    const int n = td.n();

    detail::OracleAccumulator acc(g);
    auto covariant = [&](int A, int B, int C, int i, int j) {
        SPoly v = bp.derivative(A, B, C, i, j, td.axis_coefficient(A));
        for (int D = 1; D <= n; ++D) {
            v -= gamma.poly(D, A, B, i, j) * bp.value(D, C, i, j);
            v -= gamma.poly(D, A, C, i, j) * bp.value(B, D, i, j);
        }
        return v;
    };

    for (int i = 0; i < g.n1; ++i)
        for (int j = 0; j < g.n2; ++j) {
            const bool interior = g.interior(i, j);
            for (int A = 1; A <= n; ++A)
                for (int B = A + 1; B <= n; ++B)
                    for (int C = 1; C <= n; ++C) {
                        const SPoly res = covariant(A, B, C, i, j) - covariant(B, A, C, i, j);
                        for (std::size_t k = 0; k < sig.sigmas.size(); ++k)
                            acc.note(i, j, interior, sig.eval(res, k));
                    }
        }
    ResidualReport rep;
    rep.name = "codazzi_general";
    rep.add(acc.entry("codazzi_general", tol));
    return rep;
}

inline ResidualReport codazzi_general_residual(const FundamentalData& fd,
                                               const Grid3* grid3 = nullptr, double tol = 1e-10) {
    return codazzi_general_residual(fd.to_tensor(), grid3, tol);
}

// ---------------------------------------------------------------------------
// Shape-operator spectrum
// ---------------------------------------------------------------------------

struct PrincipalCurvatures {
    std::vector<double> sorted; // ascending, all n eigenvalues of g^-1 b
    double k1 = 0.0, k2 = 0.0;  // 1-2 block pair, k1 >= k2 up to J's sign
    double H = 0.0, J = 0.0;    // H = (k1+k2)/2, J = (k1-k2)/2, J signed by b12
    bool transverse_rank_zero = true; // exactly n-2 eigenvalues vanish
    bool umbilic = false;

    static constexpr double kZeroTolRel = 1e-8;
};

/// Eigenvalues of g^-1 b at one node of a Grid3 (sigma = 1 recovers Case 2 /
/// plain tensors). Requires diagonal g; b may fill the diagonal plus b12.
inline PrincipalCurvatures principal_curvatures(const TensorData& td, int i, int j,
                                                double sigma = 1.0) {
    const int n = td.n();
    for (int A = 1; A <= n; ++A)
        for (int B = A + 1; B <= n; ++B) {
            if (const auto* sc = td.g(A, B))
                if (sc->eval(i, j, sigma) != 0.0)
                    throw MetricError("principal curvatures need a diagonal metric");
            if (A == 1 && B == 2) continue;
            if (const auto* sc = td.b(A, B))
                if (sc->eval(i, j, sigma) != 0.0)
                    throw DomainError("unsupported b sparsity: only the 1-2 block may couple");
        }
    auto gv = [&](int A) {
        const auto* sc = td.g(A, A);
        if (sc == nullptr) throw DegenerateMetric("missing g" + std::to_string(A));
        const double v = sc->eval(i, j, sigma);
        if (!(v > 0.0)) throw DegenerateMetric("metric not positive at node");
        return v;
    };
    auto bv = [&](int A, int B) {
        const auto* sc = td.b(A, B);
        return sc ? sc->eval(i, j, sigma) : 0.0;
    };

    const double g11 = gv(1), g22 = gv(2);
    const double s11 = bv(1, 1) / g11, s22 = bv(2, 2) / g22;
    const double b12 = bv(1, 2);
    const double cross = b12 * b12 / (g11 * g22);
    const double mean = 0.5 * (s11 + s22);
    const double mag = std::sqrt(0.25 * (s11 - s22) * (s11 - s22) + cross);
    const double sign = (b12 != 0.0) ? (b12 > 0.0 ? 1.0 : -1.0) : (s11 >= s22 ? 1.0 : -1.0);

    PrincipalCurvatures out;
    out.H = mean;
    out.J = sign * mag;
    out.k1 = out.H + out.J;
    out.k2 = out.H - out.J;
    out.sorted = {out.k1, out.k2};
    for (int p = 3; p <= n; ++p) out.sorted.push_back(bv(p, p) / gv(p));
    std::sort(out.sorted.begin(), out.sorted.end());

    double kmax = 0.0;
    for (double v : out.sorted) kmax = std::max(kmax, std::fabs(v));
    const double ztol = PrincipalCurvatures::kZeroTolRel * kmax;
    for (int p = 3; p <= n; ++p)
        if (std::fabs(bv(p, p) / gv(p)) > ztol) out.transverse_rank_zero = false;
    out.umbilic = (mag <= ztol);
    return out;
}

inline PrincipalCurvatures principal_curvatures(const FundamentalData& fd, int i, int j,
                                                double sigma = 1.0) {
    return principal_curvatures(fd.to_tensor(), i, j, sigma);
}

// ---------------------------------------------------------------------------
// A-net detection
// ---------------------------------------------------------------------------

struct AnetDiagnostic {
    std::string name;
    double deviation = 0.0;
    bool pass = true;
};

struct AnetVerdict {
    bool is_anet = true;
    std::vector<AnetDiagnostic> diagnostics;

    const AnetDiagnostic* find(const std::string& name) const {
        for (const auto& d : diagnostics)
            if (d.name == name) return &d;
        return nullptr;
    }
};

/// Checks the A-net chart conditions on raw tensors: g11 = g22, g_pp = 1,
/// off-diagonal g zero, b12 affine in the linear factor (Case 1: zero
/// intercept, nonzero slope; Case 2: constant +-1), b_iq = b_pq = 0.
/// The hypothesis is the case tag plus, for Case 1, the C^p constants that
/// generate the sampled s values.
inline AnetVerdict detect_anet(const TensorData& td, const std::optional<LinearFactor>& hypothesis,
                               double tol, const Grid3* grid3 = nullptr) {
    if (hypothesis && grid3 == nullptr)
        throw DomainError("Case 1 A-net hypothesis needs a Grid3 for sigma sampling");
    const Grid2& g = td.grid();
    const detail::SigmaTable sig(hypothesis ? grid3 : nullptr);
    const int n = td.n();
    AnetVerdict verdict;
    auto push = [&](std::string name, double dev) {
        AnetDiagnostic d;
        d.name = std::move(name);
        d.deviation = dev;
        d.pass = dev <= tol;
        if (!d.pass) verdict.is_anet = false;
        verdict.diagnostics.push_back(std::move(d));
    };
    auto max_abs = [&](const SeparableComponent* sc, auto&& transform) {
        double dev = 0.0;
        if (sc == nullptr) return dev;
        for (int i = 0; i < g.n1; ++i)
            for (int j = 0; j < g.n2; ++j)
                for (std::size_t k = 0; k < sig.sigmas.size(); ++k)
                    dev = std::max(dev, std::fabs(transform(sc->eval(i, j, sig.sigmas[k]))));
        return dev;
    };

    // g11 - g22
    {
        double dev = 0.0;
        const auto* a = td.g(1, 1);
        const auto* b = td.g(2, 2);
        for (int i = 0; i < g.n1; ++i)
            for (int j = 0; j < g.n2; ++j)
                for (std::size_t k = 0; k < sig.sigmas.size(); ++k) {
                    const double va = a ? a->eval(i, j, sig.sigmas[k]) : 0.0;
                    const double vb = b ? b->eval(i, j, sig.sigmas[k]) : 0.0;
                    dev = std::max(dev, std::fabs(va - vb));
                }
        push("g11-g22", dev);
    }
    // g_pp - 1
    {
        double dev = 0.0;
        for (int p = 3; p <= n; ++p) {
            const auto* sc = td.g(p, p);
            if (sc == nullptr) {
                dev = std::max(dev, 1.0);
                continue;
            }
            dev = std::max(dev, max_abs(sc, [](double v) { return v - 1.0; }));
        }
        push("gpp-1", dev);
    }
    // off-diagonal g
    {
        double dev = 0.0;
        for (int A = 1; A <= n; ++A)
            for (int B = A + 1; B <= n; ++B)
                dev = std::max(dev, max_abs(td.g(A, B), [](double v) { return v; }));
        push("g_offdiag", dev);
    }
    // b12 shape: affine least-squares fit in sigma
    {
        const auto* sc = td.b(1, 2);
        double sum1 = 0.0, sums = 0.0, sumss = 0.0, sumv = 0.0, sumsv = 0.0;
        double count = 0.0;
        for (int i = 0; i < g.n1; ++i)
            for (int j = 0; j < g.n2; ++j)
                for (std::size_t k = 0; k < sig.sigmas.size(); ++k) {
                    const double s = sig.sigmas[k];
                    const double v = sc ? sc->eval(i, j, s) : 0.0;
                    sum1 += 1.0;
                    sums += s;
                    sumss += s * s;
                    sumv += v;
                    sumsv += s * v;
                    count += 1.0;
                }
        double alpha0 = 0.0, alpha1 = 0.0;
        if (hypothesis) {
            const double det = sum1 * sumss - sums * sums;
            alpha0 = (sumss * sumv - sums * sumsv) / det;
            alpha1 = (sum1 * sumsv - sums * sumv) / det;
        } else {
            alpha0 = sumv / sum1;
        }
        double fit_dev = 0.0;
        for (int i = 0; i < g.n1; ++i)
            for (int j = 0; j < g.n2; ++j)
                for (std::size_t k = 0; k < sig.sigmas.size(); ++k) {
                    const double s = sig.sigmas[k];
                    const double v = sc ? sc->eval(i, j, s) : 0.0;
                    fit_dev = std::max(fit_dev, std::fabs(v - alpha0 - alpha1 * s));
                }
        push("b12_fit_residual", fit_dev);
        if (hypothesis) {
            push("b12_intercept", std::fabs(alpha0));
            // the fitted per-axis coefficients alpha1 * C^p must all be nonzero;
            // deviation measures how far the slope is from clearing the bar
            push("b12_slope_nonzero", std::max(0.0, 2.0 * tol - std::fabs(alpha1)));
        } else {
            push("b12_unit_magnitude", std::fabs(std::fabs(alpha0) - 1.0));
        }
    }
    // b_iq (i in {1,2}, q >= 3)
    {
        double dev = 0.0;
        for (int i_idx = 1; i_idx <= 2; ++i_idx)
            for (int q = 3; q <= n; ++q)
                dev = std::max(dev, max_abs(td.b(i_idx, q), [](double v) { return v; }));
        push("b_iq", dev);
    }
    // b_pq (p, q >= 3, including the diagonal)
    {
        double dev = 0.0;
        for (int p = 3; p <= n; ++p)
            for (int q = p; q <= n; ++q)
                dev = std::max(dev, max_abs(td.b(p, q), [](double v) { return v; }));
        push("b_pq", dev);
    }
    return verdict;
}

// ---------------------------------------------------------------------------
// Coordinate rescaling (the section-4 normalization)
// ---------------------------------------------------------------------------

struct RescaleAxis {
    expr::Ast factor; // c^p as a function of the axis variable (use x1)
    double lo = 0.0, hi = 1.0;
    int nodes = 5;
};

struct RescaleResult {
    Grid2 new_grid;
    ScalarField2 g11_new; // equals g22 after normalization
    std::vector<double> xbar1, xbar2;          // cumulative maps per axis node
    std::vector<std::vector<double>> xbar_p;   // one map per transverse axis
};

namespace detail {

inline std::vector<double> cumulative_sqrt(const expr::Ast& fn, double lo, double hi, int nodes,
                                           const char* what) {
    std::vector<double> vals(static_cast<std::size_t>(nodes)), out(static_cast<std::size_t>(nodes));
    const double h = (hi - lo) / (nodes - 1);
    for (int k = 0; k < nodes; ++k) {
        const double v = expr::evaluate(fn, lo + k * h, 0.0);
        if (!(v > 0.0)) throw PositivityError(std::string(what) + " must be positive");
        vals[static_cast<std::size_t>(k)] = std::sqrt(v);
    }
    out[0] = 0.0;
    for (int k = 1; k < nodes; ++k)
        out[static_cast<std::size_t>(k)] =
            out[static_cast<std::size_t>(k - 1)] +
            0.5 * h * (vals[static_cast<std::size_t>(k - 1)] + vals[static_cast<std::size_t>(k)]);
    return out;
}

// Inverse of a strictly increasing tabulated map by binary search + linear
// interpolation; returns the source-axis position for a target value.
inline double invert_monotone(const std::vector<double>& table, double lo, double h,
                              double target) {
    const std::size_t n = table.size();
    if (target <= table.front()) return lo;
    if (target >= table.back()) return lo + h * static_cast<double>(n - 1);
    std::size_t a = 0, b = n - 1;
    while (b - a > 1) {
        const std::size_t mid = (a + b) / 2;
        if (table[mid] <= target)
            a = mid;
        else
            b = mid;
    }
    const double frac = (target - table[a]) / (table[b] - table[a]);
    return lo + h * (static_cast<double>(a) + frac);
}

} // namespace detail

/// Applies the scaling transformation xbar = integral sqrt(a) dx per axis so
/// that the metric lands in the normalized form g11 = g22, g_pp = 1. The
/// invariant field g11/a = g22/b is resampled bilinearly onto a uniform grid
/// in the new coordinates.
inline RescaleResult rescale_coordinates(const ScalarField2& g11, const ScalarField2& g22,
                                         const expr::Ast& a, const expr::Ast& b,
                                         const std::vector<RescaleAxis>& c_axes,
                                         double tol = 1e-8) {
    if (!(g11.grid() == g22.grid())) throw ShapeError("g11 and g22 grids differ");
    const Grid2& g = g11.grid();

    // ratio precondition and the invariant field phi = g11/a = g22/b
    ScalarField2 phi(g);
    for (int i = 0; i < g.n1; ++i)
        for (int j = 0; j < g.n2; ++j) {
            const double av = expr::evaluate(a, g.x1(i), 0.0);
            const double bv = expr::evaluate(b, g.x2(j), 0.0);
            if (!(av > 0.0) || !(bv > 0.0))
                throw PositivityError("a(x1) and b(x2) must be positive");
            const double pa = g11(i, j) / av;
            const double pb = g22(i, j) / bv;
            const double scale = std::max({std::fabs(pa), std::fabs(pb), 1.0});
            if (std::fabs(pa - pb) > tol * scale)
                throw RatioError("g11/a != g22/b at node (" + std::to_string(i) + "," +
                                 std::to_string(j) + ")");
            phi.at(i, j) = 0.5 * (pa + pb);
        }

    std::vector<double> xbar1 =
        detail::cumulative_sqrt(a, g.x1_min, g.x1_max, g.n1, "a(x1)");
    std::vector<double> xbar2 =
        detail::cumulative_sqrt(b, g.x2_min, g.x2_max, g.n2, "b(x2)");
    for (auto& v : xbar1) v += g.x1_min; // anchor the new axes at the old origin
    for (auto& v : xbar2) v += g.x2_min;

    Grid2 new_grid(xbar1.front(), xbar1.back(), g.n1, xbar2.front(), xbar2.back(), g.n2);

    // resample phi at the preimages of the uniform new-grid nodes
    ScalarField2 g11_new(new_grid);
    for (int i = 0; i < new_grid.n1; ++i)
        for (int j = 0; j < new_grid.n2; ++j) {
            const double x = detail::invert_monotone(xbar1, g.x1_min, g.h1(), new_grid.x1(i));
            const double y = detail::invert_monotone(xbar2, g.x2_min, g.h2(), new_grid.x2(j));
            const double fi = std::clamp((x - g.x1_min) / g.h1(), 0.0,
                                         static_cast<double>(g.n1 - 1));
            const double fj = std::clamp((y - g.x2_min) / g.h2(), 0.0,
                                         static_cast<double>(g.n2 - 1));
            const int i0 = std::min(static_cast<int>(fi), g.n1 - 2);
            const int j0 = std::min(static_cast<int>(fj), g.n2 - 2);
            const double wi = fi - i0, wj = fj - j0;
            const double v = (1 - wi) * (1 - wj) * phi(i0, j0) + wi * (1 - wj) * phi(i0 + 1, j0) +
                             (1 - wi) * wj * phi(i0, j0 + 1) + wi * wj * phi(i0 + 1, j0 + 1);
            g11_new.at(i, j) = v;
        }

    RescaleResult out{std::move(new_grid), std::move(g11_new), std::move(xbar1), std::move(xbar2),
                      {}};
    for (const auto& ax : c_axes) {
        auto map = detail::cumulative_sqrt(ax.factor, ax.lo, ax.hi, ax.nodes, "c^p");
        for (auto& v : map) v += ax.lo;
        out.xbar_p.push_back(std::move(map));
    }
    return out;
}

} // namespace bonnetlab
