#include <catch_amalgamated.hpp>

#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <string>

#include "bonnetlab/expr.hpp"
#include "bonnetlab/grid.hpp"

using namespace bonnetlab;
using Catch::Approx;

namespace {

// ---------------------------------------------------------------------------
// Reference interpreter: a direct recursive-descent evaluator over the
// source string, sharing nothing with expr::parse/evaluate beyond the
// grammar. Used as the oracle for the differential test.
// ---------------------------------------------------------------------------

struct RefEval {
    std::string_view s;
    std::size_t p = 0;
    double x1, x2;

    struct Fail {};

    static double run(std::string_view text, double x1, double x2) {
        RefEval r{text, 0, x1, x2};
        const double v = r.expr();
        r.ws();
        if (r.p != text.size()) throw Fail{};
        return v;
    }

    void ws() {
        while (p < s.size() && std::isspace(static_cast<unsigned char>(s[p]))) ++p;
    }
    bool eat(char c) {
        ws();
        if (p < s.size() && s[p] == c) {
            ++p;
            return true;
        }
        return false;
    }
    [[noreturn]] static void fail() { throw Fail{}; }
    static double finite(double v) {
        if (!std::isfinite(v)) fail();
        return v;
    }

    double expr() {
        double v = term();
        for (;;) {
            if (eat('+'))
                v = finite(v + term());
            else if (eat('-'))
                v = finite(v - term());
            else
                return v;
        }
    }
    double term() {
        double v = unary();
        for (;;) {
            if (eat('*'))
                v = finite(v * unary());
            else if (eat('/')) {
                const double d = unary();
                if (d == 0.0) fail();
                v = finite(v / d);
            } else
                return v;
        }
    }
    double unary() {
        if (eat('-')) return -unary();
        return power();
    }
    double power() {
        const double base = atom();
        ws();
        if (eat('^')) return pow_apply(base, pow_rhs());
        return base;
    }
    double pow_rhs() {
        ws();
        double v;
        if (eat('(')) {
            v = expr();
            if (!eat(')')) fail();
        } else {
            v = number();
        }
        ws();
        if (eat('^')) return pow_apply(v, pow_rhs());
        return v;
    }
    static double pow_apply(double a, double b) {
        if (a < 0.0 && b != std::nearbyint(b)) fail();
        if (a == 0.0 && b < 0.0) fail();
        return finite(std::pow(a, b));
    }
    double number() {
        ws();
        if (p >= s.size() || !(std::isdigit(static_cast<unsigned char>(s[p])) || s[p] == '.'))
            fail();
        double v = 0.0;
        const char* begin = s.data() + p;
        auto res = std::from_chars(begin, s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr == begin) fail();
        p += static_cast<std::size_t>(res.ptr - begin);
        return v;
    }
    double atom() {
        ws();
        if (p >= s.size()) fail();
        if (eat('(')) {
            const double v = expr();
            if (!eat(')')) fail();
            return v;
        }
        const char c = s[p];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (!std::isalpha(static_cast<unsigned char>(c))) fail();
        std::size_t start = p;
        while (p < s.size() &&
               (std::isalnum(static_cast<unsigned char>(s[p])) || s[p] == '_'))
            ++p;
        const std::string name(s.substr(start, p - start));
        if (name == "x1") return x1;
        if (name == "x2") return x2;
        if (name == "pi") return std::numbers::pi;
        if (name == "e") return std::numbers::e;
        if (!eat('(')) fail();
        const double a = expr();
        if (!eat(')')) fail();
        if (name == "sin") return std::sin(a);
        if (name == "cos") return std::cos(a);
        if (name == "tan") return finite(std::tan(a));
        if (name == "exp") return finite(std::exp(a));
        if (name == "ln") {
            if (a <= 0.0) fail();
            return std::log(a);
        }
        if (name == "sqrt") {
            if (a < 0.0) fail();
            return std::sqrt(a);
        }
        if (name == "abs") return std::fabs(a);
        if (name == "sgn") return a > 0.0 ? 1.0 : (a < 0.0 ? -1.0 : 0.0);
        fail();
    }
};

// Random expression generator over the full grammar.
struct ExprGen {
    std::mt19937 rng;
    explicit ExprGen(unsigned seed) : rng(seed) {}

    int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); }

    std::string number() {
        const int kind = pick(3);
        if (kind == 0) return std::to_string(1 + pick(9));
        if (kind == 1) return std::to_string(pick(100)) + "." + std::to_string(pick(10));
        return "0.5";
    }

    std::string gen(int depth) {
        if (depth <= 0) {
            switch (pick(5)) {
                case 0: return "x1";
                case 1: return "x2";
                case 2: return "pi";
                case 3: return "e";
                default: return number();
            }
        }
        switch (pick(8)) {
            case 0: return gen(depth - 1) + "+" + gen(depth - 1);
            case 1: return gen(depth - 1) + "-" + gen(depth - 1);
            case 2: return gen(depth - 1) + "*" + gen(depth - 1);
            case 3: return gen(depth - 1) + "/" + gen(depth - 1);
            case 4: return "-" + gen(depth - 1);
            case 5: {
                static const char* funs[] = {"sin", "cos", "tan", "exp",
                                             "ln",  "sqrt", "abs", "sgn"};
                return std::string(funs[pick(8)]) + "(" + gen(depth - 1) + ")";
            }
            case 6: {
                if (pick(2) == 0)
                    return "(" + gen(depth - 1) + ")^" + std::to_string(pick(4));
                return "(" + gen(depth - 1) + ")^(" + gen(depth - 1) + ")";
            }
            default: return "(" + gen(depth - 1) + ")";
        }
    }
};

std::optional<double> eval_impl(const std::string& text, double x1, double x2) {
    try {
        return expr::evaluate(expr::parse(text), x1, x2);
    } catch (const EvalDomainError&) {
        return std::nullopt;
    }
}

std::optional<double> eval_ref(const std::string& text, double x1, double x2) {
    try {
        return RefEval::run(text, x1, x2);
    } catch (const RefEval::Fail&) {
        return std::nullopt;
    }
}

} // namespace

TEST_CASE("parse/evaluate basics") {
    CHECK(expr::evaluate(expr::parse("1+2*3"), 0, 0) == Approx(7.0));
    CHECK(expr::evaluate(expr::parse("sin(pi/2)"), 0, 0) == Approx(1.0));
    CHECK(expr::evaluate(expr::parse("x1^2 - ln(x2)"), 2, 1) == Approx(4.0));
    CHECK(expr::evaluate(expr::parse("x1*x2"), 3, 4) == Approx(12.0));
    CHECK(expr::evaluate(expr::parse("sgn(-2.5)"), 0, 0) == -1.0);
    CHECK(expr::evaluate(expr::parse("abs(-3)"), 0, 0) == 3.0);
    CHECK(expr::evaluate(expr::parse("e"), 0, 0) == Approx(std::numbers::e));
}

TEST_CASE("precedence: ^ over unary minus over * and /") {
    CHECK(expr::evaluate(expr::parse("-x1^2"), 2, 0) == Approx(-4.0));
    CHECK(expr::evaluate(expr::parse("2*3^2"), 0, 0) == Approx(18.0));
    CHECK(expr::evaluate(expr::parse("2^2^3"), 0, 0) == Approx(256.0)); // right-assoc
    CHECK(expr::evaluate(expr::parse("6/2*3"), 0, 0) == Approx(9.0));
    CHECK(expr::evaluate(expr::parse("1-2-3"), 0, 0) == Approx(-4.0));
    CHECK(expr::evaluate(expr::parse("2*-3"), 0, 0) == Approx(-6.0));
}

TEST_CASE("the ^ right operand must be a literal or parenthesized") {
    CHECK_THROWS_AS(expr::parse("x1^x2"), SyntaxError);
    CHECK_THROWS_AS(expr::parse("2^-3"), SyntaxError);
    CHECK(expr::evaluate(expr::parse("2^(-3)"), 0, 0) == Approx(0.125));
    CHECK(expr::evaluate(expr::parse("x1^(x2)"), 2, 3) == Approx(8.0));
}

TEST_CASE("syntax errors carry byte offsets") {
    try {
        expr::parse("1+*2");
        FAIL("expected SyntaxError");
    } catch (const SyntaxError& e) {
        CHECK(e.byte_offset == 2);
    }
    try {
        expr::parse("sin(x1");
        FAIL("expected SyntaxError");
    } catch (const SyntaxError& e) {
        CHECK(e.byte_offset == 6);
    }
    try {
        expr::parse("1+foo(2)");
        FAIL("expected UnknownIdentifier");
    } catch (const UnknownIdentifier& e) {
        CHECK(e.identifier == "foo");
        CHECK(e.byte_offset == 2);
    }
}

TEST_CASE("evaluate raises EvalDomainError instead of returning NaN/inf") {
    CHECK_THROWS_AS(expr::evaluate(expr::parse("ln(x1)"), -1, 0), EvalDomainError);
    CHECK_THROWS_AS(expr::evaluate(expr::parse("ln(0)"), 0, 0), EvalDomainError);
    CHECK_THROWS_AS(expr::evaluate(expr::parse("sqrt(-1)"), 0, 0), EvalDomainError);
    CHECK_THROWS_AS(expr::evaluate(expr::parse("1/x1"), 0, 0), EvalDomainError);
    CHECK_THROWS_AS(expr::evaluate(expr::parse("exp(10000)"), 0, 0), EvalDomainError);
    CHECK_THROWS_AS(expr::evaluate(expr::parse("(-2)^0.5"), 0, 0), EvalDomainError);
}

TEST_CASE("parse-serialize-parse is the identity on ASTs (property)") {
    ExprGen gen(2024);
    int checked = 0;
    for (int round = 0; round < 500; ++round) {
        const std::string text = gen.gen(1 + gen.pick(4));
        expr::Ast a;
        try {
            a = expr::parse(text);
        } catch (const Error&) {
            continue; // generator can produce 0^ negative-literal style corners
        }
        const std::string canon = expr::serialize(a);
        const expr::Ast b = expr::parse(canon);
        CHECK(a.equals(b));
        CHECK(expr::serialize(b) == canon);
        ++checked;
    }
    CHECK(checked > 400);
}

TEST_CASE("differential test against the reference interpreter") {
    ExprGen gen(99);
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> coord(0.1, 3.0);
    int mismatches = 0;
    int evaluated = 0;
    for (int round = 0; round < 1000; ++round) {
        const std::string text = gen.gen(1 + gen.pick(4));
        const double x1 = coord(rng), x2 = coord(rng);
        std::optional<double> mine, ref;
        bool parse_ok = true;
        try {
            mine = eval_impl(text, x1, x2);
        } catch (const Error&) {
            parse_ok = false;
        }
        if (!parse_ok) continue; // both sides reject; nothing to compare
        ref = eval_ref(text, x1, x2);
        ++evaluated;
        if (mine.has_value() != ref.has_value()) {
            ++mismatches;
            continue;
        }
        if (mine && std::fabs(*mine - *ref) >
                        1e-12 * std::max({1.0, std::fabs(*mine), std::fabs(*ref)}))
            ++mismatches;
    }
    CHECK(mismatches == 0);
    CHECK(evaluated > 800);
}

TEST_CASE("sample fills grids pointwise") {
    const Grid2 g(0, 1, 5, 0, 1, 5);
    const ScalarField2 zero = expr::sample(expr::parse("0"), g);
    CHECK(field_norms(zero).linf == 0.0);

    const ScalarField2 x1 = expr::sample(expr::parse("x1"), g);
    for (int j = 0; j < 5; ++j) {
        CHECK(x1(0, j) == 0.0);
        CHECK(x1(2, j) == Approx(0.5));
        CHECK(x1(4, j) == 1.0);
    }
}

TEST_CASE("sample aborts with the offending node attached") {
    const Grid2 g(0, 1, 5, 0, 1, 5);
    try {
        expr::sample(expr::parse("1/x1"), g);
        FAIL("expected EvalDomainError");
    } catch (const EvalDomainError& e) {
        CHECK(std::string(e.what()).find("node (0,0)") != std::string::npos);
    }
}
