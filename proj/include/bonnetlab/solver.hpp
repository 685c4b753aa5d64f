#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "bonnetlab/bonnet.hpp"
#include "bonnetlab/errors.hpp"
#include "bonnetlab/expr.hpp"
#include "bonnetlab/fd.hpp"
#include "bonnetlab/field.hpp"

namespace bonnetlab {

enum class FieldId : int { FrakH = 0, FrakJ = 1, Theta = 2 };

inline const char* field_name(FieldId f) {
    switch (f) {
        case FieldId::FrakH: return "frakH";
        case FieldId::FrakJ: return "frakJ";
        case FieldId::Theta: return "theta";
    }
    return "?";
}

struct Anchor {
    int i = 0, j = 0;
    FieldId field = FieldId::FrakH;
    double value = 0.0;
};

struct SolveConfig {
    std::vector<FieldId> unknowns;
    std::vector<Anchor> anchors;
    double tol = 1e-8;
    int max_iter = 50;
    double damping = 1e-3;
    Grid2 grid;
    std::optional<LinearFactor> linfac;
    int n = 3;

    void validate() const {
        if (!(tol > 0.0)) throw ConfigError("CONFIG_TOL", "tol must be positive");
        if (max_iter < 1) throw ConfigError("CONFIG_MAX_ITER", "max_iter must be >= 1");
        if (!(damping > 0.0)) throw ConfigError("CONFIG_DAMPING", "damping must be positive");
        for (const auto& a : anchors) {
            if (a.i < 0 || a.i >= grid.n1 || a.j < 0 || a.j >= grid.n2)
                throw ConfigError("CONFIG_ANCHOR_NODE", "anchor node outside the grid");
            bool unknown = false;
            for (FieldId u : unknowns) unknown = unknown || (u == a.field);
            if (!unknown)
                throw ConfigError("CONFIG_ANCHOR_FROZEN",
                                  std::string("anchor on frozen field ") + field_name(a.field));
        }
        for (FieldId u : unknowns) {
            bool anchored = false;
            for (const auto& a : anchors) anchored = anchored || (a.field == u);
            if (!anchored)
                throw ConfigError("CONFIG_NO_ANCHOR",
                                  std::string("unknown field ") + field_name(u) +
                                      " has no anchor (gauge unfixed)");
        }
    }
};

struct SolveResult {
    BonnetFields fields;
    std::vector<double> history_linf;
    std::vector<double> history_l2;
    bool converged = false;
    int iterations = 0;
};

/// Thrown when damping is exhausted with the residual stalled above tol.
/// Carries the stall point so callers can still report it.
struct SolverStalled : NoProgress {
    SolverStalled(const std::string& m, double linf, std::vector<double> history)
        : NoProgress(m), final_linf(linf), history(std::move(history)) {}
    double final_linf;
    std::vector<double> history;
};

// ---------------------------------------------------------------------------
// Gradient integration
// ---------------------------------------------------------------------------

struct MeanFieldResult {
    ScalarField2 frakH;
    NormPair compat_residual; // mixed-partial mismatch of the prescribed gradient
};

/// Recovers frakH from its gradient prescribed by the first-order master
/// constraints: frakH_x1 = -frakJ theta_x1 / sin(theta),
/// frakH_x2 = +frakJ theta_x2 / sin(theta). Trapezoidal path integration
/// from the anchor node, along the anchor row first, then up/down columns.
inline MeanFieldResult integrate_mean_field(const ScalarField2& theta, const ScalarField2& frakJ,
                                            int anchor_i, int anchor_j, double anchor_value,
                                            std::optional<double> compat_threshold = std::nullopt) {
    if (!(theta.grid() == frakJ.grid())) throw ShapeError("theta and frakJ grids differ");
    const Grid2& g = theta.grid();
    if (anchor_i < 0 || anchor_i >= g.n1 || anchor_j < 0 || anchor_j >= g.n2)
        throw DomainError("anchor node outside the grid");

    const ScalarField2 dTh1 = partial(theta, 1);
    const ScalarField2 dTh2 = partial(theta, 2);
    ScalarField2 G1(g), G2(g);
    for (int i = 0; i < g.n1; ++i)
        for (int j = 0; j < g.n2; ++j) {
            const double sth = std::sin(theta(i, j));
            if (sth < kAdmissibleFloor)
                throw InvariantError("INVARIANT_THETA", "sin(theta) below 1e-9");
            G1.at(i, j) = -frakJ(i, j) * dTh1(i, j) / sth;
            G2.at(i, j) = frakJ(i, j) * dTh2(i, j) / sth;
        }

    const ScalarField2 mixed = partial(G1, 2) - partial(G2, 1);
    const NormPair compat = field_norms(mixed, false);
    if (compat_threshold && compat.linf > *compat_threshold)
        throw IncompatibleGradient("mixed-partial mismatch " + format_double(compat.linf) +
                                   " exceeds threshold " + format_double(*compat_threshold));

    ScalarField2 H(g);
    H.at(anchor_i, anchor_j) = anchor_value;
    const double h1 = g.h1(), h2 = g.h2();
    for (int i = anchor_i + 1; i < g.n1; ++i)
        H.at(i, anchor_j) =
            H(i - 1, anchor_j) + 0.5 * h1 * (G1(i - 1, anchor_j) + G1(i, anchor_j));
    for (int i = anchor_i - 1; i >= 0; --i)
        H.at(i, anchor_j) =
            H(i + 1, anchor_j) - 0.5 * h1 * (G1(i + 1, anchor_j) + G1(i, anchor_j));
    for (int i = 0; i < g.n1; ++i) {
        for (int j = anchor_j + 1; j < g.n2; ++j)
            H.at(i, j) = H(i, j - 1) + 0.5 * h2 * (G2(i, j - 1) + G2(i, j));
        for (int j = anchor_j - 1; j >= 0; --j)
            H.at(i, j) = H(i, j + 1) - 0.5 * h2 * (G2(i, j + 1) + G2(i, j));
    }
    return {std::move(H), compat};
}

// ---------------------------------------------------------------------------
// Damped Gauss-Newton on the discretized master constraints
// ---------------------------------------------------------------------------

namespace detail {

struct LsqProblem {
    Grid2 grid;
    double kappa = 0.0;
    std::vector<FieldId> unknowns;
    std::vector<Anchor> anchors;
    std::array<std::vector<double>, 3> frozen; // full node values of every field
    double j_sign = 1.0;                       // required sign of frakJ
    int nodes = 0;

    int n_int1() const { return grid.n1 - 2; }
    int n_int2() const { return grid.n2 - 2; }
    int interior() const { return n_int1() * n_int2(); }
    int rows() const { return 3 * interior() + static_cast<int>(anchors.size()); }
    int cols() const { return static_cast<int>(unknowns.size()) * nodes; }

    bool is_unknown(FieldId f) const {
        for (FieldId u : unknowns)
            if (u == f) return true;
        return false;
    }

    int column(FieldId f, int i, int j) const {
        for (std::size_t k = 0; k < unknowns.size(); ++k)
            if (unknowns[k] == f)
                return static_cast<int>(k) * nodes + static_cast<int>(grid.index(i, j));
        return -1;
    }

    std::array<std::vector<double>, 3> materialize(const Eigen::VectorXd& u) const {
        std::array<std::vector<double>, 3> f = frozen;
        for (std::size_t k = 0; k < unknowns.size(); ++k) {
            const int off = static_cast<int>(k) * nodes;
            auto& dst = f[static_cast<std::size_t>(unknowns[k])];
            for (int m = 0; m < nodes; ++m) dst[static_cast<std::size_t>(m)] = u[off + m];
        }
        return f;
    }

    // Pointwise residual assembly with centered interior stencils. Returns
    // false when any entry fails to be finite (the caller treats that state
    // as unusable rather than propagating NaN).
    bool residual(const std::array<std::vector<double>, 3>& f, Eigen::VectorXd& out) const {
        const auto& H = f[0];
        const auto& J = f[1];
        const auto& Th = f[2];
        const int n1 = grid.n1, n2 = grid.n2;
        const double h1 = grid.h1(), h2 = grid.h2();
        auto id = [&](int i, int j) { return static_cast<std::size_t>(i) * n2 + j; };

        std::vector<double> W(static_cast<std::size_t>(n1) * n2);
        for (std::size_t m = 0; m < W.size(); ++m) {
            W[m] = std::log(std::fabs(J[m]) * std::sin(Th[m]));
            if (!std::isfinite(W[m])) return false;
        }

        out.resize(rows());
        const int ni = interior();
        int q = 0;
        for (int i = 1; i < n1 - 1; ++i)
            for (int j = 1; j < n2 - 1; ++j, ++q) {
                const double dH1 = (H[id(i + 1, j)] - H[id(i - 1, j)]) / (2 * h1);
                const double dH2 = (H[id(i, j + 1)] - H[id(i, j - 1)]) / (2 * h2);
                const double dT1 = (Th[id(i + 1, j)] - Th[id(i - 1, j)]) / (2 * h1);
                const double dT2 = (Th[id(i, j + 1)] - Th[id(i, j - 1)]) / (2 * h2);
                const double lap = (W[id(i + 1, j)] - 2 * W[id(i, j)] + W[id(i - 1, j)]) /
                                       (h1 * h1) +
                                   (W[id(i, j + 1)] - 2 * W[id(i, j)] + W[id(i, j - 1)]) /
                                       (h2 * h2);
                const double Jv = J[id(i, j)];
                const double sth = std::sin(Th[id(i, j)]);
                const double Hv = H[id(i, j)];
                out[q] = dH2 / Jv - dT2 / sth;
                out[ni + q] = dH1 / Jv + dT1 / sth;
                out[2 * ni + q] =
                    std::fabs(Jv) * sth * lap - 2.0 * kappa - 2.0 * (Hv * Hv - Jv * Jv);
            }
        for (std::size_t a = 0; a < anchors.size(); ++a) {
            const Anchor& an = anchors[a];
            out[3 * ni + static_cast<int>(a)] =
                f[static_cast<std::size_t>(an.field)][id(an.i, an.j)] - an.value;
        }
        for (int m = 0; m < out.size(); ++m)
            if (!std::isfinite(out[m])) return false;
        return true;
    }

    // Sign invariants the line search must preserve.
    bool gates_ok(const std::array<std::vector<double>, 3>& f) const {
        for (int m = 0; m < nodes; ++m) {
            const std::size_t mu = static_cast<std::size_t>(m);
            if (std::fabs(f[0][mu]) < kAdmissibleFloor) return false;
            if (std::fabs(f[1][mu]) < kAdmissibleFloor) return false;
            if (f[1][mu] * j_sign < 0.0) return false;
            const double th = f[2][mu];
            if (!(th > 0.0) || !(th < std::numbers::pi)) return false;
            if (std::sin(th) < kAdmissibleFloor) return false;
        }
        return true;
    }

    // Structural dependencies of each residual row on unknown columns.
    std::vector<std::vector<int>> column_rows() const {
        std::vector<std::vector<int>> rows_of(static_cast<std::size_t>(cols()));
        const int ni = interior();
        auto link = [&](int row, FieldId f, int i, int j) {
            const int c = column(f, i, j);
            if (c >= 0) rows_of[static_cast<std::size_t>(c)].push_back(row);
        };
        int q = 0;
        for (int i = 1; i < grid.n1 - 1; ++i)
            for (int j = 1; j < grid.n2 - 1; ++j, ++q) {
                link(q, FieldId::FrakH, i, j + 1);
                link(q, FieldId::FrakH, i, j - 1);
                link(q, FieldId::FrakJ, i, j);
                link(q, FieldId::Theta, i, j);
                link(q, FieldId::Theta, i, j + 1);
                link(q, FieldId::Theta, i, j - 1);

                link(ni + q, FieldId::FrakH, i + 1, j);
                link(ni + q, FieldId::FrakH, i - 1, j);
                link(ni + q, FieldId::FrakJ, i, j);
                link(ni + q, FieldId::Theta, i, j);
                link(ni + q, FieldId::Theta, i + 1, j);
                link(ni + q, FieldId::Theta, i - 1, j);

                link(2 * ni + q, FieldId::FrakH, i, j);
                for (FieldId f : {FieldId::FrakJ, FieldId::Theta}) {
                    link(2 * ni + q, f, i, j);
                    link(2 * ni + q, f, i + 1, j);
                    link(2 * ni + q, f, i - 1, j);
                    link(2 * ni + q, f, i, j + 1);
                    link(2 * ni + q, f, i, j - 1);
                }
            }
        for (std::size_t a = 0; a < anchors.size(); ++a)
            link(3 * ni + static_cast<int>(a), anchors[a].field, anchors[a].i, anchors[a].j);
        return rows_of;
    }
};

inline double vec_linf(const Eigen::VectorXd& v) {
    double m = 0.0;
    for (int i = 0; i < v.size(); ++i) m = std::max(m, std::fabs(v[i]));
    return m;
}

inline double vec_rms(const Eigen::VectorXd& v) {
    if (v.size() == 0) return 0.0;
    return std::sqrt(v.squaredNorm() / static_cast<double>(v.size()));
}

} // namespace detail

/// Damped Gauss-Newton least squares over the node values of the unknown
/// fields. The Jacobian is forward finite differences with stencil-disjoint
/// column coloring (a 3x3 block pattern per field); steps solve the
/// Levenberg-regularized normal equations and are accepted only when they
/// keep the sign invariants and do not increase the residual linf.
inline SolveResult least_squares_solve(const SolveConfig& config, const BonnetFields& initial) {
    config.validate();
    if (!(initial.frakH.grid() == config.grid))
        throw ShapeError("initial fields are not on the config grid");

    detail::LsqProblem prob;
    prob.grid = config.grid;
    prob.kappa = config.linfac ? config.linfac->kappa() : 0.0;
    prob.unknowns = config.unknowns;
    prob.anchors = config.anchors;
    prob.nodes = static_cast<int>(config.grid.size());
    prob.frozen = {initial.frakH.values(), initial.frakJ.values(), initial.theta.values()};
    prob.j_sign = initial.epsilon;

    const int cols = prob.cols();
    Eigen::VectorXd u(cols);
    for (std::size_t k = 0; k < prob.unknowns.size(); ++k) {
        const auto& src = prob.frozen[static_cast<std::size_t>(prob.unknowns[k])];
        for (int m = 0; m < prob.nodes; ++m)
            u[static_cast<int>(k) * prob.nodes + m] = src[static_cast<std::size_t>(m)];
    }

    Eigen::VectorXd r;
    if (!prob.residual(prob.materialize(u), r))
        throw InvariantError("INVARIANT_INITIAL", "initial fields give a non-finite residual");

    std::vector<double> hist_linf{detail::vec_linf(r)};
    std::vector<double> hist_l2{detail::vec_rms(r)};

    auto finish = [&](bool converged, int iters) {
        const auto f = prob.materialize(u);
        BonnetFields fields = BonnetFields::make(
            ScalarField2(config.grid, f[0]), ScalarField2(config.grid, f[1]),
            ScalarField2(config.grid, f[2]), config.linfac, config.n);
        return SolveResult{std::move(fields), hist_linf, hist_l2, converged, iters};
    };

    if (hist_linf.back() <= config.tol) return finish(true, 0);
    if (cols == 0)
        throw SolverStalled("all fields frozen and residual linf " +
                                format_double(hist_linf.back()) + " exceeds tol",
                            hist_linf.back(), hist_linf);

    const auto rows_of = prob.column_rows();
    double lambda = config.damping;

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    bool analyzed = false;

    for (int iter = 1; iter <= config.max_iter; ++iter) {
        // Jacobian by forward differences, 9 colors per unknown field.
        std::vector<Eigen::Triplet<double>> trips;
        Eigen::VectorXd rp;
        for (std::size_t k = 0; k < prob.unknowns.size(); ++k)
            for (int color = 0; color < 9; ++color) {
                std::vector<std::pair<int, double>> touched; // column, delta
                Eigen::VectorXd up = u;
                for (int i = color / 3; i < config.grid.n1; i += 3)
                    for (int j = color % 3; j < config.grid.n2; j += 3) {
                        const int c = static_cast<int>(k) * prob.nodes +
                                      static_cast<int>(config.grid.index(i, j));
                        if (rows_of[static_cast<std::size_t>(c)].empty()) continue;
                        const double delta = 1e-7 * std::max(1.0, std::fabs(u[c]));
                        up[c] += delta;
                        touched.push_back({c, delta});
                    }
                if (touched.empty()) continue;
                if (!prob.residual(prob.materialize(up), rp)) {
                    // fall back to a backward difference for this color
                    up = u;
                    for (auto& [c, delta] : touched) {
                        up[c] -= delta;
                        delta = -delta;
                    }
                    if (!prob.residual(prob.materialize(up), rp)) continue;
                }
                for (const auto& [c, delta] : touched)
                    for (int row : rows_of[static_cast<std::size_t>(c)])
                        trips.emplace_back(row, c, (rp[row] - r[row]) / delta);
            }
        Eigen::SparseMatrix<double> J(prob.rows(), cols);
        J.setFromTriplets(trips.begin(), trips.end());
        const Eigen::SparseMatrix<double> JtJ = Eigen::SparseMatrix<double>(J.transpose()) * J;
        const Eigen::VectorXd g = J.transpose() * r;

        Eigen::SparseMatrix<double> eye(cols, cols);
        eye.setIdentity();

        bool accepted = false;
        bool gate_only = true;
        for (int attempt = 0; attempt < 16; ++attempt) {
            Eigen::SparseMatrix<double> A = JtJ + lambda * eye;
            if (!analyzed) {
                ldlt.analyzePattern(A);
                analyzed = true;
            }
            ldlt.factorize(A);
            if (ldlt.info() != Eigen::Success) {
                lambda *= 10.0;
                gate_only = false;
                continue;
            }
            const Eigen::VectorXd step = ldlt.solve(-g);
            if (!step.allFinite()) {
                lambda *= 10.0;
                gate_only = false;
                continue;
            }
            Eigen::VectorXd candidate = u + step;
            const auto f = prob.materialize(candidate);
            if (!prob.gates_ok(f)) {
                lambda *= 10.0;
                continue;
            }
            Eigen::VectorXd rc;
            if (!prob.residual(f, rc)) {
                lambda *= 10.0;
                continue;
            }
            gate_only = false;
            const double linf_new = detail::vec_linf(rc);
            if (linf_new <= hist_linf.back()) {
                u = std::move(candidate);
                r = std::move(rc);
                hist_linf.push_back(linf_new);
                hist_l2.push_back(detail::vec_rms(r));
                lambda = std::max(lambda / 3.0, 1e-14);
                accepted = true;
                break;
            }
            lambda *= 10.0;
        }
        if (!accepted) {
            if (gate_only)
                throw InvariantBreach(
                    "no step maintains the sign invariants (|frakH|, |frakJ|, sin(theta))");
            throw SolverStalled("damping exhausted with residual linf " +
                                    format_double(hist_linf.back()) + " above tol " +
                                    format_double(config.tol),
                                hist_linf.back(), hist_linf);
        }
        if (hist_linf.back() <= config.tol) return finish(true, iter);
    }
    throw SolverStalled("iteration cap " + std::to_string(config.max_iter) +
                            " reached with residual linf " + format_double(hist_linf.back()),
                        hist_linf.back(), hist_linf);
}

// ---------------------------------------------------------------------------
// One-dimensional reduction
// ---------------------------------------------------------------------------

namespace detail {

inline void require_x1_only(const expr::Node& n, const char* what) {
    if (n.kind == expr::Node::Kind::Var2)
        throw DomainError(std::string(what) + " must depend on x1 only");
    if (n.lhs) require_x1_only(*n.lhs, what);
    if (n.rhs) require_x1_only(*n.rhs, what);
}

} // namespace detail

/// Restriction of the master constraints to x1-dependent profiles:
/// frakH' = -frakJ theta' / sin(theta) integrated by 1D quadrature from the
/// anchor at x1_min, fields broadcast along x2, full constraint residuals
/// returned so the caller sees how close the profiles are to a solution.
inline std::pair<BonnetFields, ConstraintResiduals> reduce_1d_solve(
    const expr::Ast& theta_profile, const expr::Ast& frakJ_profile, double anchor_value,
    const std::optional<LinearFactor>& linfac, const Grid2& grid, int n = 3) {
    detail::require_x1_only(theta_profile.root(), "theta profile");
    detail::require_x1_only(frakJ_profile.root(), "frakJ profile");

    const int n1 = grid.n1;
    const double h = grid.h1();
    std::vector<double> th(static_cast<std::size_t>(n1)), Jv(static_cast<std::size_t>(n1));
    for (int i = 0; i < n1; ++i) {
        th[static_cast<std::size_t>(i)] = expr::evaluate(theta_profile, grid.x1(i), 0.0);
        Jv[static_cast<std::size_t>(i)] = expr::evaluate(frakJ_profile, grid.x1(i), 0.0);
        if (std::sin(th[static_cast<std::size_t>(i)]) < kAdmissibleFloor)
            throw InvariantError("INVARIANT_THETA", "sin(theta) below 1e-9 on the profile");
    }

    // theta' by the same 2nd-order stencils as the field operator
    std::vector<double> dth(static_cast<std::size_t>(n1));
    dth[0] = (-3.0 * th[0] + 4.0 * th[1] - th[2]) / (2 * h);
    dth[static_cast<std::size_t>(n1 - 1)] =
        (3.0 * th[static_cast<std::size_t>(n1 - 1)] - 4.0 * th[static_cast<std::size_t>(n1 - 2)] +
         th[static_cast<std::size_t>(n1 - 3)]) /
        (2 * h);
    for (int i = 1; i < n1 - 1; ++i)
        dth[static_cast<std::size_t>(i)] =
            (th[static_cast<std::size_t>(i + 1)] - th[static_cast<std::size_t>(i - 1)]) / (2 * h);

    std::vector<double> grad(static_cast<std::size_t>(n1)), Hv(static_cast<std::size_t>(n1));
    for (int i = 0; i < n1; ++i)
        grad[static_cast<std::size_t>(i)] = -Jv[static_cast<std::size_t>(i)] *
                                            dth[static_cast<std::size_t>(i)] /
                                            std::sin(th[static_cast<std::size_t>(i)]);
    Hv[0] = anchor_value;
    for (int i = 1; i < n1; ++i)
        Hv[static_cast<std::size_t>(i)] =
            Hv[static_cast<std::size_t>(i - 1)] +
            0.5 * h * (grad[static_cast<std::size_t>(i - 1)] + grad[static_cast<std::size_t>(i)]);

    ScalarField2 frakH(grid), frakJ(grid), theta(grid);
    for (int i = 0; i < grid.n1; ++i)
        for (int j = 0; j < grid.n2; ++j) {
            frakH.at(i, j) = Hv[static_cast<std::size_t>(i)];
            frakJ.at(i, j) = Jv[static_cast<std::size_t>(i)];
            theta.at(i, j) = th[static_cast<std::size_t>(i)];
        }
    BonnetFields fields = BonnetFields::make(std::move(frakH), std::move(frakJ), std::move(theta),
                                             linfac, n);
    ConstraintResiduals res = constraint_residuals(fields);
    return {std::move(fields), std::move(res)};
}

} // namespace bonnetlab
