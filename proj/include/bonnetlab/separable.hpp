#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "bonnetlab/errors.hpp"
#include "bonnetlab/field.hpp"
#include "bonnetlab/grid.hpp"

namespace bonnetlab {

/// The nonzero constants C^3..C^r of the linear factor s = sum C^p x^p,
/// together with kappa = sum (C^p)^2.
struct LinearFactor {
    std::vector<double> coefficients; // index 0 holds C^3

    LinearFactor() = default;
    explicit LinearFactor(std::vector<double> cs) : coefficients(std::move(cs)) {
        if (coefficients.empty())
            throw InvariantError("LINFAC_EMPTY", "linear factor needs at least C^3");
        for (double c : coefficients)
            if (!(std::isfinite(c)) || c == 0.0)
                throw InvariantError("LINFAC_ZERO_C",
                                     "every C^p must be a nonzero finite constant");
    }

    int r() const { return 2 + static_cast<int>(coefficients.size()); }

    /// C^p for p in [3, n]; zero beyond r (those axes do not enter s).
    double coefficient(int p) const {
        const int idx = p - 3;
        if (idx < 0) throw DomainError("p index below 3");
        if (idx >= static_cast<int>(coefficients.size())) return 0.0;
        return coefficients[static_cast<std::size_t>(idx)];
    }

    double kappa() const {
        double k = 0.0;
        for (double c : coefficients) k += c * c;
        return k;
    }

    double max_abs_coefficient() const {
        double m = 0.0;
        for (double c : coefficients) m = std::max(m, std::fabs(c));
        return m;
    }
};

/// A field of the form base(x1, x2) * s^s_power. Every tensor component and
/// frame scalar in the normalized coordinates of this problem has this shape,
/// so s-derivatives are always taken analytically via the power rule.
struct SeparableComponent {
    ScalarField2 base;
    int s_power = 0;

    SeparableComponent() = default;
    SeparableComponent(ScalarField2 b, int power) : base(std::move(b)), s_power(power) {
        if (s_power < -2 || s_power > 2)
            throw InvariantError("S_POWER_RANGE",
                                 "s_power " + std::to_string(s_power) + " outside [-2, 2]");
    }

    static SeparableComponent constant(const Grid2& grid, double value, int power) {
        return SeparableComponent(ScalarField2(grid, value), power);
    }

    double eval(int i, int j, double sigma) const {
        return base(i, j) * std::pow(sigma, s_power);
    }

    const Grid2& grid() const { return base.grid(); }
};

/// Full and interior-ring norms of |base| * sigma^s_power sampled over a
/// Grid3. Base and sigma factors separate, so the 3D norms reduce exactly to
/// weighted 2D norms. "Interior" excludes the one-node x1/x2 boundary ring
/// only; the sigma axis carries no finite differences.
struct SeparableNorms {
    NormPair full;
    NormPair interior;
};

inline SeparableNorms separable_norms(const ScalarField2& base, int s_power, const Grid3* grid3) {
    double max_pow = 1.0, mean_sq_pow = 1.0;
    if (grid3 != nullptr && s_power != 0) {
        max_pow = 0.0;
        mean_sq_pow = 0.0;
        for (int k = 0; k < grid3->n3; ++k) {
            const double w = std::pow(grid3->sigma(k), s_power);
            max_pow = std::max(max_pow, w);
            mean_sq_pow += w * w;
        }
        mean_sq_pow /= grid3->n3;
    }
    const NormPair nf = field_norms(base, false);
    const NormPair ni = field_norms(base, true);
    const double rmsw = std::sqrt(mean_sq_pow);
    return {{nf.linf * max_pow, nf.l2 * rmsw}, {ni.linf * max_pow, ni.l2 * rmsw}};
}

// ---------------------------------------------------------------------------
// Laurent polynomials in sigma
// ---------------------------------------------------------------------------

/// Value type for the general-tensor oracle: a Laurent polynomial
/// sum c_m sigma^m with m in [-12, 12]. Products, sums and sigma-derivatives
/// of monomial tensor components stay in this space, so the oracle's sigma
/// direction is exact; only x1/x2 derivatives are finite differences.
struct SPoly {
    static constexpr int kMinPow = -12;
    static constexpr int kMaxPow = 12;
    static constexpr int kSlots = kMaxPow - kMinPow + 1;

    int lo = 1, hi = 0; // active power range; lo > hi means the zero polynomial
    std::array<double, kSlots> c{};

    static SPoly zero() { return SPoly{}; }

    static SPoly monomial(double coeff, int power) {
        SPoly p;
        if (coeff == 0.0) return p;
        if (power < kMinPow || power > kMaxPow)
            throw Error("SPOLY_OVERFLOW", "sigma power " + std::to_string(power) + " out of range");
        p.lo = p.hi = power;
        p.c[static_cast<std::size_t>(power - kMinPow)] = coeff;
        return p;
    }

    bool is_zero() const { return lo > hi; }

    double coeff(int power) const {
        if (power < lo || power > hi) return 0.0;
        return c[static_cast<std::size_t>(power - kMinPow)];
    }

    void accumulate(double coeff_value, int power) {
        if (coeff_value == 0.0) return;
        if (power < kMinPow || power > kMaxPow)
            throw Error("SPOLY_OVERFLOW", "sigma power " + std::to_string(power) + " out of range");
        if (is_zero()) {
            lo = hi = power;
        } else {
            lo = std::min(lo, power);
            hi = std::max(hi, power);
        }
        c[static_cast<std::size_t>(power - kMinPow)] += coeff_value;
    }

    SPoly& operator+=(const SPoly& other) {
        for (int m = other.lo; m <= other.hi; ++m) accumulate(other.coeff(m), m);
        return *this;
    }
    SPoly& operator-=(const SPoly& other) {
        for (int m = other.lo; m <= other.hi; ++m) accumulate(-other.coeff(m), m);
        return *this;
    }

    friend SPoly operator+(SPoly a, const SPoly& b) { return a += b; }
    friend SPoly operator-(SPoly a, const SPoly& b) { return a -= b; }

    friend SPoly operator*(const SPoly& a, const SPoly& b) {
        SPoly out;
        if (a.is_zero() || b.is_zero()) return out;
        for (int ma = a.lo; ma <= a.hi; ++ma) {
            const double ca = a.coeff(ma);
            if (ca == 0.0) continue;
            for (int mb = b.lo; mb <= b.hi; ++mb) {
                const double cb = b.coeff(mb);
                if (cb == 0.0) continue;
                out.accumulate(ca * cb, ma + mb);
            }
        }
        return out;
    }

    friend SPoly operator*(double a, const SPoly& p) {
        SPoly out;
        for (int m = p.lo; m <= p.hi; ++m) out.accumulate(a * p.coeff(m), m);
        return out;
    }

    /// Exact derivative with respect to sigma.
    SPoly dsigma() const {
        SPoly out;
        for (int m = lo; m <= hi; ++m) {
            const double cm = coeff(m);
            if (cm != 0.0 && m != 0) out.accumulate(cm * m, m - 1);
        }
        return out;
    }

    /// True when at most one power carries a nonzero coefficient.
    bool monomial_power(int& power, double& coeff_value) const {
        int found = 0;
        for (int m = lo; m <= hi; ++m) {
            if (coeff(m) != 0.0) {
                power = m;
                coeff_value = coeff(m);
                ++found;
            }
        }
        return found == 1;
    }

    /// 1 / monomial. Throws MetricError for the zero or multi-power case.
    SPoly inverse_monomial(const std::string& what) const {
        int power = 0;
        double value = 0.0;
        if (!monomial_power(power, value))
            throw MetricError(what + " is not a nonzero monomial in s; cannot invert");
        return monomial(1.0 / value, -power);
    }

    double eval(double sigma) const {
        double v = 0.0;
        for (int m = lo; m <= hi; ++m) {
            const double cm = coeff(m);
            if (cm != 0.0) v += cm * std::pow(sigma, m);
        }
        return v;
    }
};

} // namespace bonnetlab
