#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "bonnetlab/csv.hpp"
#include "bonnetlab/errors.hpp"
#include "bonnetlab/field.hpp"

// Tiny arithmetic expression language used by scenario files to define the
// generating fields in closed form. Two variables (x1, x2), constants pi and
// e, functions sin cos tan exp ln sqrt abs sgn, operators + - * / ^ with ^
// restricted to a numeric-literal or parenthesized right operand.
namespace bonnetlab::expr {

enum class Fun { Sin, Cos, Tan, Exp, Ln, Sqrt, Abs, Sgn };

inline const char* fun_name(Fun f) {
    switch (f) {
        case Fun::Sin: return "sin";
        case Fun::Cos: return "cos";
        case Fun::Tan: return "tan";
        case Fun::Exp: return "exp";
        case Fun::Ln: return "ln";
        case Fun::Sqrt: return "sqrt";
        case Fun::Abs: return "abs";
        case Fun::Sgn: return "sgn";
    }
    return "?";
}

struct Node;
using NodePtr = std::unique_ptr<Node>;

struct Node {
    enum class Kind { Number, Var1, Var2, Pi, E, Neg, Add, Sub, Mul, Div, Pow, Call };
    Kind kind;
    double number = 0.0;   // Kind::Number
    Fun fun = Fun::Sin;    // Kind::Call
    NodePtr lhs, rhs;      // unary ops use lhs only
    std::size_t offset = 0; // byte offset in the source text, for diagnostics

    Node(Kind k, std::size_t off) : kind(k), offset(off) {}
};

class Ast {
public:
    Ast() = default;
    explicit Ast(NodePtr root) : root_(std::move(root)) {}
    const Node& root() const { return *root_; }
    bool empty() const { return root_ == nullptr; }

    bool equals(const Ast& other) const { return node_equals(root_.get(), other.root_.get()); }

private:
    static bool node_equals(const Node* a, const Node* b) {
        if (a == nullptr || b == nullptr) return a == b;
        if (a->kind != b->kind) return false;
        if (a->kind == Node::Kind::Number && a->number != b->number) return false;
        if (a->kind == Node::Kind::Call && a->fun != b->fun) return false;
        return node_equals(a->lhs.get(), b->lhs.get()) && node_equals(a->rhs.get(), b->rhs.get());
    }

    NodePtr root_;
};

// ---------------------------------------------------------------------------
// Parser (recursive descent, byte offsets on every token)
// ---------------------------------------------------------------------------

namespace detail {

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    NodePtr parse() {
        auto node = parse_expr();
        skip_ws();
        if (pos_ != text_.size()) throw SyntaxError("unexpected trailing input", pos_);
        return node;
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    bool peek(char c) {
        skip_ws();
        return pos_ < text_.size() && text_[pos_] == c;
    }
    bool accept(char c) {
        if (peek(c)) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(char c, const char* what) {
        if (!accept(c)) throw SyntaxError(std::string("expected '") + c + "' " + what, pos_);
    }

    NodePtr parse_expr() {
        auto lhs = parse_term();
        for (;;) {
            skip_ws();
            if (accept('+'))
                lhs = binary(Node::Kind::Add, std::move(lhs), parse_term());
            else if (accept('-'))
                lhs = binary(Node::Kind::Sub, std::move(lhs), parse_term());
            else
                return lhs;
        }
    }

    NodePtr parse_term() {
        auto lhs = parse_unary();
        for (;;) {
            skip_ws();
            if (accept('*'))
                lhs = binary(Node::Kind::Mul, std::move(lhs), parse_unary());
            else if (accept('/'))
                lhs = binary(Node::Kind::Div, std::move(lhs), parse_unary());
            else
                return lhs;
        }
    }

    NodePtr parse_unary() {
        skip_ws();
        if (accept('-')) {
            auto node = std::make_unique<Node>(Node::Kind::Neg, pos_ - 1);
            node->lhs = parse_unary();
            return node;
        }
        return parse_power();
    }

    NodePtr parse_power() {
        auto base = parse_atom();
        skip_ws();
        if (accept('^')) {
            const std::size_t caret = pos_ - 1;
            auto node = std::make_unique<Node>(Node::Kind::Pow, caret);
            node->lhs = std::move(base);
            node->rhs = parse_pow_rhs();
            return node;
        }
        return base;
    }

    // The ^ right operand must be a numeric literal or a parenthesized
    // expression; chained ^ associates to the right.
    NodePtr parse_pow_rhs() {
        skip_ws();
        NodePtr rhs;
        if (peek('(')) {
            ++pos_;
            rhs = parse_expr();
            expect(')', "to close exponent");
        } else {
            rhs = parse_number_or_fail("exponent must be a numeric literal or parenthesized");
        }
        skip_ws();
        if (accept('^')) {
            auto node = std::make_unique<Node>(Node::Kind::Pow, pos_ - 1);
            node->lhs = std::move(rhs);
            node->rhs = parse_pow_rhs();
            return node;
        }
        return rhs;
    }

    NodePtr parse_atom() {
        skip_ws();
        if (pos_ >= text_.size()) throw SyntaxError("unexpected end of expression", pos_);
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            auto inner = parse_expr();
            expect(')', "to close group");
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
            return parse_number_or_fail("malformed number");
        if (std::isalpha(static_cast<unsigned char>(c))) return parse_identifier();
        throw SyntaxError(std::string("unexpected character '") + c + "'", pos_);
    }

    NodePtr parse_number_or_fail(const char* what) {
        skip_ws();
        if (pos_ >= text_.size() ||
            !(std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
            throw SyntaxError(what, pos_);
        double value = 0.0;
        const char* begin = text_.data() + pos_;
        const char* end = text_.data() + text_.size();
        auto res = std::from_chars(begin, end, value);
        if (res.ec != std::errc() || res.ptr == begin) throw SyntaxError(what, pos_);
        auto node = std::make_unique<Node>(Node::Kind::Number, pos_);
        node->number = value;
        pos_ += static_cast<std::size_t>(res.ptr - begin);
        return node;
    }

    NodePtr parse_identifier() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                                       text_[pos_] == '_'))
            ++pos_;
        const std::string name(text_.substr(start, pos_ - start));
        if (name == "x1") return std::make_unique<Node>(Node::Kind::Var1, start);
        if (name == "x2") return std::make_unique<Node>(Node::Kind::Var2, start);
        if (name == "pi") return std::make_unique<Node>(Node::Kind::Pi, start);
        if (name == "e") return std::make_unique<Node>(Node::Kind::E, start);

        static const std::pair<const char*, Fun> funs[] = {
            {"sin", Fun::Sin}, {"cos", Fun::Cos}, {"tan", Fun::Tan},   {"exp", Fun::Exp},
            {"ln", Fun::Ln},   {"sqrt", Fun::Sqrt}, {"abs", Fun::Abs}, {"sgn", Fun::Sgn}};
        for (const auto& [fname, fid] : funs) {
            if (name == fname) {
                expect('(', "after function name");
                auto node = std::make_unique<Node>(Node::Kind::Call, start);
                node->fun = fid;
                node->lhs = parse_expr();
                expect(')', "to close call");
                return node;
            }
        }
        throw UnknownIdentifier(name, start);
    }

    static NodePtr binary(Node::Kind k, NodePtr lhs, NodePtr rhs) {
        auto node = std::make_unique<Node>(k, lhs->offset);
        node->lhs = std::move(lhs);
        node->rhs = std::move(rhs);
        return node;
    }
};

} // namespace detail

inline Ast parse(std::string_view text) { return Ast(detail::Parser(text).parse()); }

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace detail {

inline double eval_node(const Node& n, double x1, double x2) {
    auto check = [&](double v, const char* what) {
        if (!std::isfinite(v)) throw EvalDomainError(what, n.offset);
        return v;
    };
    switch (n.kind) {
        case Node::Kind::Number: return n.number;
        case Node::Kind::Var1: return x1;
        case Node::Kind::Var2: return x2;
        case Node::Kind::Pi: return std::numbers::pi;
        case Node::Kind::E: return std::numbers::e;
        case Node::Kind::Neg: return -eval_node(*n.lhs, x1, x2);
        case Node::Kind::Add:
            return check(eval_node(*n.lhs, x1, x2) + eval_node(*n.rhs, x1, x2), "overflow in +");
        case Node::Kind::Sub:
            return check(eval_node(*n.lhs, x1, x2) - eval_node(*n.rhs, x1, x2), "overflow in -");
        case Node::Kind::Mul:
            return check(eval_node(*n.lhs, x1, x2) * eval_node(*n.rhs, x1, x2), "overflow in *");
        case Node::Kind::Div: {
            const double a = eval_node(*n.lhs, x1, x2);
            const double b = eval_node(*n.rhs, x1, x2);
            if (b == 0.0) throw EvalDomainError("division by zero", n.offset);
            return check(a / b, "overflow in /");
        }
        case Node::Kind::Pow: {
            const double a = eval_node(*n.lhs, x1, x2);
            const double b = eval_node(*n.rhs, x1, x2);
            if (a < 0.0 && b != std::nearbyint(b))
                throw EvalDomainError("negative base with non-integer exponent", n.offset);
            if (a == 0.0 && b < 0.0) throw EvalDomainError("zero base, negative exponent", n.offset);
            return check(std::pow(a, b), "overflow in ^");
        }
        case Node::Kind::Call: {
            const double a = eval_node(*n.lhs, x1, x2);
            switch (n.fun) {
                case Fun::Sin: return std::sin(a);
                case Fun::Cos: return std::cos(a);
                case Fun::Tan: return check(std::tan(a), "tan overflow");
                case Fun::Exp: return check(std::exp(a), "exp overflow");
                case Fun::Ln:
                    if (a <= 0.0) throw EvalDomainError("ln of non-positive value", n.offset);
                    return std::log(a);
                case Fun::Sqrt:
                    if (a < 0.0) throw EvalDomainError("sqrt of negative value", n.offset);
                    return std::sqrt(a);
                case Fun::Abs: return std::fabs(a);
                case Fun::Sgn: return (a > 0.0) ? 1.0 : (a < 0.0 ? -1.0 : 0.0);
            }
            throw EvalDomainError("unreachable function id", n.offset);
        }
    }
    throw EvalDomainError("unreachable node kind", n.offset);
}

inline void serialize_node(const Node& n, std::string& out) {
    switch (n.kind) {
        case Node::Kind::Number:
            if (n.number < 0.0) {
                out += "(" + format_double(n.number) + ")";
            } else {
                out += format_double(n.number);
            }
            return;
        case Node::Kind::Var1: out += "x1"; return;
        case Node::Kind::Var2: out += "x2"; return;
        case Node::Kind::Pi: out += "pi"; return;
        case Node::Kind::E: out += "e"; return;
        case Node::Kind::Neg:
            out += "(-";
            serialize_node(*n.lhs, out);
            out += ")";
            return;
        case Node::Kind::Add:
        case Node::Kind::Sub:
        case Node::Kind::Mul:
        case Node::Kind::Div: {
            const char op = n.kind == Node::Kind::Add   ? '+'
                            : n.kind == Node::Kind::Sub ? '-'
                            : n.kind == Node::Kind::Mul ? '*'
                                                        : '/';
            out += "(";
            serialize_node(*n.lhs, out);
            out += op;
            serialize_node(*n.rhs, out);
            out += ")";
            return;
        }
        case Node::Kind::Pow:
            out += "(";
            serialize_node(*n.lhs, out);
            out += "^";
            if (n.rhs->kind == Node::Kind::Number && n.rhs->number >= 0.0) {
                out += format_double(n.rhs->number);
            } else {
                out += "(";
                serialize_node(*n.rhs, out);
                out += ")";
            }
            out += ")";
            return;
        case Node::Kind::Call:
            out += fun_name(n.fun);
            out += "(";
            serialize_node(*n.lhs, out);
            out += ")";
            return;
    }
}

} // namespace detail

inline double evaluate(const Ast& ast, double x1, double x2) {
    if (ast.empty()) throw EvalDomainError("empty expression", 0);
    return detail::eval_node(ast.root(), x1, x2);
}

/// Canonical fully-parenthesized text; parse(serialize(a)) reproduces a.
inline std::string serialize(const Ast& ast) {
    std::string out;
    detail::serialize_node(ast.root(), out);
    return out;
}

/// Pointwise evaluation over a grid. A domain violation aborts the whole
/// sample with the offending node index attached.
inline ScalarField2 sample(const Ast& ast, const Grid2& grid) {
    ScalarField2 out(grid);
    for (int i = 0; i < grid.n1; ++i)
        for (int j = 0; j < grid.n2; ++j) {
            try {
                out.set(i, j, evaluate(ast, grid.x1(i), grid.x2(j)));
            } catch (const EvalDomainError& e) {
                throw EvalDomainError(std::string(e.what()) + " at node (" + std::to_string(i) +
                                          "," + std::to_string(j) + ")",
                                      e.byte_offset);
            }
        }
    return out;
}

} // namespace bonnetlab::expr
