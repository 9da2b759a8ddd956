#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <vector>

#include "oscmap/errors.hpp"
#include "oscmap/jet.hpp"

namespace oscmap {

/// Functions the phase DSL supports.
enum class FuncId : std::uint8_t { Sin, Cos, Tan, Atan, Exp, Tanh, Sqrt, Log };

inline const char* func_name(FuncId f) {
    switch (f) {
        case FuncId::Sin: return "sin";
        case FuncId::Cos: return "cos";
        case FuncId::Tan: return "tan";
        case FuncId::Atan: return "atan";
        case FuncId::Exp: return "exp";
        case FuncId::Tanh: return "tanh";
        case FuncId::Sqrt: return "sqrt";
        case FuncId::Log: return "log";
    }
    return "?";
}

/// Parsed expression tree for a phase function theta(.). Nodes live in a flat
/// arena so evaluation is a tight index-chasing recursion; trees built
/// programmatically may share subtrees (a DAG). Immutable after construction.
///
/// Grammar (whitespace insignificant):
///     expr    := term (('+'|'-') term)*
///     term    := unary (('*'|'/') unary)*
///     unary   := '-' unary | power
///     power   := primary ('^' unary)?          // right-associative
///     primary := NUMBER | IDENT | IDENT '(' expr ')' | '(' expr ')'
/// with IDENT one of the variable name, the constants pi and e, or a
/// function name from FuncId.
class PhaseExpr {
public:
    enum class Kind : std::uint8_t { Constant, Variable, Neg, Add, Sub, Mul, Div, Pow, Call };

    struct Node {
        Kind kind;
        FuncId func = FuncId::Sin;  // Call only
        std::int32_t a = -1, b = -1;
        double value = 0.0;         // Constant only
        std::int32_t src = -1;      // byte offset in source text, -1 if synthetic
    };

    PhaseExpr() = default;

    /// Parse `text` with `variable` as the sole free variable.
    static PhaseExpr parse(std::string_view text, std::string_view variable);

    double operator()(double t) const { return eval_node<double>(root_, t); }

    /// Value plus first three derivatives at t.
    Jet3 jet(double t) const { return eval_node<Jet3>(root_, Jet3::variable(t)); }

    const std::string& source() const { return source_; }
    const std::string& variable() const { return variable_; }
    bool empty() const { return nodes_.empty(); }

    /// Re-parseable text form; equals the original text for parsed
    /// expressions and a minimally parenthesized rendering otherwise.
    std::string to_string() const;

private:
    friend class ExprBuilder;

    std::vector<Node> nodes_;
    std::int32_t root_ = -1;
    std::string source_;
    std::string variable_ = "t";

    template <class S>
    S eval_node(std::int32_t idx, const S& x) const;

    [[noreturn]] void domain_error(const Node& n, const std::string& what) const {
        std::string where = n.src >= 0 ? " (source byte " + std::to_string(n.src) + ")" : "";
        throw EvalDomainError(what + where);
    }

    void print_node(std::int32_t idx, int parent_prec, bool right_side, std::string& out) const;
};

namespace detail {

template <class S>
inline S make_scalar(double v) {
    if constexpr (std::is_same_v<S, Jet3>)
        return Jet3::constant(v);
    else
        return v;
}

inline double value_of(double x) { return x; }
inline double value_of(const Jet3& x) { return x.v0; }

inline double apply_func(FuncId f, double u) {
    switch (f) {
        case FuncId::Sin: return std::sin(u);
        case FuncId::Cos: return std::cos(u);
        case FuncId::Tan: return std::tan(u);
        case FuncId::Atan: return std::atan(u);
        case FuncId::Exp: return std::exp(u);
        case FuncId::Tanh: return std::tanh(u);
        case FuncId::Sqrt: return std::sqrt(u);
        case FuncId::Log: return std::log(u);
    }
    return 0.0;
}

inline Jet3 apply_func(FuncId f, const Jet3& u) {
    switch (f) {
        case FuncId::Sin: return sin(u);
        case FuncId::Cos: return cos(u);
        case FuncId::Tan: return tan(u);
        case FuncId::Atan: return atan(u);
        case FuncId::Exp: return exp(u);
        case FuncId::Tanh: return tanh(u);
        case FuncId::Sqrt: return sqrt(u);
        case FuncId::Log: return log(u);
    }
    return {};
}

inline double pow_int(double base, long long n) {
    if (n < 0) return 1.0 / pow_int(base, -n);
    double r = 1.0, b = base;
    while (n > 0) {
        if (n & 1) r *= b;
        b *= b;
        n >>= 1;
    }
    return r;
}

inline bool integral_exponent(double v, long long& n) {
    if (std::abs(v) > 1e15) return false;
    const double r = std::nearbyint(v);
    if (r != v) return false;
    n = static_cast<long long>(r);
    return true;
}

}  // namespace detail

template <class S>
S PhaseExpr::eval_node(std::int32_t idx, const S& x) const {
    const Node& n = nodes_[static_cast<std::size_t>(idx)];
    switch (n.kind) {
        case Kind::Constant: return detail::make_scalar<S>(n.value);
        case Kind::Variable: return x;
        case Kind::Neg: return -eval_node<S>(n.a, x);
        case Kind::Add: return eval_node<S>(n.a, x) + eval_node<S>(n.b, x);
        case Kind::Sub: return eval_node<S>(n.a, x) - eval_node<S>(n.b, x);
        case Kind::Mul: return eval_node<S>(n.a, x) * eval_node<S>(n.b, x);
        case Kind::Div: {
            S num = eval_node<S>(n.a, x);
            S den = eval_node<S>(n.b, x);
            if (detail::value_of(den) == 0.0) domain_error(n, "division by zero");
            return num / den;
        }
        case Kind::Pow: {
            S base = eval_node<S>(n.a, x);
            // A structurally constant integer exponent is applied by repeated
            // multiplication so that negative bases stay in-domain.
            const Node& eb = nodes_[static_cast<std::size_t>(n.b)];
            long long k = 0;
            if (eb.kind == Kind::Constant && detail::integral_exponent(eb.value, k)) {
                if (detail::value_of(base) == 0.0 && k < 0)
                    domain_error(n, "zero base with negative exponent");
                if constexpr (std::is_same_v<S, Jet3>)
                    return pow_int(base, k);
                else
                    return detail::pow_int(base, k);
            }
            S expo = eval_node<S>(n.b, x);
            if (detail::value_of(base) <= 0.0)
                domain_error(n, "pow with non-integer exponent requires a positive base");
            if constexpr (std::is_same_v<S, Jet3>)
                return pow(base, expo);
            else
                return std::pow(base, expo);
        }
        case Kind::Call: {
            S u = eval_node<S>(n.a, x);
            const double uv = detail::value_of(u);
            if (n.func == FuncId::Log && uv <= 0.0)
                domain_error(n, "log of a non-positive value");
            if (n.func == FuncId::Sqrt) {
                if (uv < 0.0) domain_error(n, "sqrt of a negative value");
                // Jets additionally need a strictly positive argument.
                if constexpr (std::is_same_v<S, Jet3>) {
                    if (uv == 0.0) domain_error(n, "sqrt derivative is unbounded at zero");
                }
            }
            return detail::apply_func(n.func, u);
        }
    }
    throw Error("corrupt expression node");
}

/// Programmatic construction of PhaseExpr trees (used where a phase is
/// assembled from design parameters instead of parsed from text). Methods
/// return node handles; `finish` fixes the root and renders the source form.
class ExprBuilder {
public:
    explicit ExprBuilder(std::string variable) { expr_.variable_ = std::move(variable); }

    std::int32_t constant(double v) { return push({PhaseExpr::Kind::Constant, FuncId::Sin, -1, -1, v}); }
    std::int32_t var() { return push({PhaseExpr::Kind::Variable, FuncId::Sin, -1, -1, 0.0}); }
    std::int32_t neg(std::int32_t a) { return push({PhaseExpr::Kind::Neg, FuncId::Sin, a, -1, 0.0}); }
    std::int32_t add(std::int32_t a, std::int32_t b) { return binary(PhaseExpr::Kind::Add, a, b); }
    std::int32_t sub(std::int32_t a, std::int32_t b) { return binary(PhaseExpr::Kind::Sub, a, b); }
    std::int32_t mul(std::int32_t a, std::int32_t b) { return binary(PhaseExpr::Kind::Mul, a, b); }
    std::int32_t div(std::int32_t a, std::int32_t b) { return binary(PhaseExpr::Kind::Div, a, b); }
    std::int32_t pow(std::int32_t a, std::int32_t b) { return binary(PhaseExpr::Kind::Pow, a, b); }
    std::int32_t call(FuncId f, std::int32_t a) {
        return push({PhaseExpr::Kind::Call, f, a, -1, 0.0});
    }

    /// Splice a whole expression in as a subtree; returns its new root.
    std::int32_t subexpr(const PhaseExpr& e);

    PhaseExpr finish(std::int32_t root) {
        expr_.root_ = root;
        expr_.source_ = expr_.to_string();
        return std::move(expr_);
    }

private:
    PhaseExpr expr_;

    std::int32_t push(PhaseExpr::Node n) {
        expr_.nodes_.push_back(n);
        return static_cast<std::int32_t>(expr_.nodes_.size() - 1);
    }
    std::int32_t binary(PhaseExpr::Kind k, std::int32_t a, std::int32_t b) {
        return push({k, FuncId::Sin, a, b, 0.0});
    }
};

inline std::int32_t ExprBuilder::subexpr(const PhaseExpr& e) {
    const auto offset = static_cast<std::int32_t>(expr_.nodes_.size());
    for (PhaseExpr::Node n : e.nodes_) {
        if (n.a >= 0) n.a += offset;
        if (n.b >= 0) n.b += offset;
        n.src = -1;
        expr_.nodes_.push_back(n);
    }
    return e.root_ + offset;
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace detail {

class Parser {
public:
    Parser(std::string_view text, std::string_view variable, PhaseExpr& out)
        : text_(text), var_(variable), out_(out) {}

    std::int32_t run() {
        std::int32_t root = parse_expr();
        skip_ws();
        if (pos_ != text_.size()) fail("unexpected trailing input");
        return root;
    }

private:
    std::string_view text_;
    std::string_view var_;
    PhaseExpr& out_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool eat(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    std::int32_t push(PhaseExpr::Node n) {
        out_.nodes_.push_back(n);
        return static_cast<std::int32_t>(out_.nodes_.size() - 1);
    }

    std::int32_t parse_expr() {
        std::int32_t lhs = parse_term();
        for (;;) {
            const auto src = static_cast<std::int32_t>(pos_);
            if (eat('+'))
                lhs = push({PhaseExpr::Kind::Add, FuncId::Sin, lhs, parse_term(), 0.0, src});
            else if (eat('-'))
                lhs = push({PhaseExpr::Kind::Sub, FuncId::Sin, lhs, parse_term(), 0.0, src});
            else
                return lhs;
        }
    }

    std::int32_t parse_term() {
        std::int32_t lhs = parse_unary();
        for (;;) {
            const auto src = static_cast<std::int32_t>(pos_);
            if (eat('*'))
                lhs = push({PhaseExpr::Kind::Mul, FuncId::Sin, lhs, parse_unary(), 0.0, src});
            else if (eat('/'))
                lhs = push({PhaseExpr::Kind::Div, FuncId::Sin, lhs, parse_unary(), 0.0, src});
            else
                return lhs;
        }
    }

    std::int32_t parse_unary() {
        const auto src = static_cast<std::int32_t>(pos_);
        if (eat('-'))
            return push({PhaseExpr::Kind::Neg, FuncId::Sin, parse_unary(), -1, 0.0, src});
        return parse_power();
    }

    std::int32_t parse_power() {
        std::int32_t base = parse_primary();
        const auto src = static_cast<std::int32_t>(pos_);
        if (eat('^'))
            return push({PhaseExpr::Kind::Pow, FuncId::Sin, base, parse_unary(), 0.0, src});
        return base;
    }

    std::int32_t parse_primary() {
        skip_ws();
        if (pos_ >= text_.size()) fail("unexpected end of expression");
        const char c = text_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
        if (eat('(')) {
            std::int32_t inner = parse_expr();
            if (!eat(')')) fail("expected ')'");
            return inner;
        }
        fail(std::string("unexpected character '") + c + "'");
    }

    std::int32_t parse_number() {
        const auto src = static_cast<std::int32_t>(pos_);
        double v = 0.0;
        const char* begin = text_.data() + pos_;
        const char* end = text_.data() + text_.size();
        auto res = std::from_chars(begin, end, v);
        if (res.ec != std::errc{}) fail("malformed number");
        pos_ += static_cast<std::size_t>(res.ptr - begin);
        return push({PhaseExpr::Kind::Constant, FuncId::Sin, -1, -1, v, src});
    }

    std::int32_t parse_ident() {
        const auto src = static_cast<std::int32_t>(pos_);
        std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        std::string_view name = text_.substr(start, pos_ - start);

        if (peek() == '(') {
            FuncId f;
            if (name == "sin") f = FuncId::Sin;
            else if (name == "cos") f = FuncId::Cos;
            else if (name == "tan") f = FuncId::Tan;
            else if (name == "atan") f = FuncId::Atan;
            else if (name == "exp") f = FuncId::Exp;
            else if (name == "tanh") f = FuncId::Tanh;
            else if (name == "sqrt") f = FuncId::Sqrt;
            else if (name == "log") f = FuncId::Log;
            else {
                pos_ = start;
                fail("unknown function '" + std::string(name) + "'");
            }
            eat('(');
            std::int32_t arg = parse_expr();
            skip_ws();
            if (peek() == ',') fail("'" + std::string(name) + "' takes exactly one argument");
            if (!eat(')')) fail("expected ')'");
            return push({PhaseExpr::Kind::Call, f, arg, -1, 0.0, src});
        }

        if (name == var_) return push({PhaseExpr::Kind::Variable, FuncId::Sin, -1, -1, 0.0, src});
        if (name == "pi")
            return push({PhaseExpr::Kind::Constant, FuncId::Sin, -1, -1, std::numbers::pi, src});
        if (name == "e")
            return push({PhaseExpr::Kind::Constant, FuncId::Sin, -1, -1, std::numbers::e, src});
        pos_ = start;
        fail("unknown identifier '" + std::string(name) + "'");
    }
};

inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace detail

inline PhaseExpr PhaseExpr::parse(std::string_view text, std::string_view variable) {
    if (text.empty()) throw ParseError("empty expression", 0);
    PhaseExpr e;
    e.variable_ = std::string(variable);
    e.source_ = std::string(text);
    detail::Parser p(text, variable, e);
    e.root_ = p.run();
    return e;
}

inline void PhaseExpr::print_node(std::int32_t idx, int parent_prec, bool right_side,
                                  std::string& out) const {
    // Precedence: +- (1), */ (2), unary - (3), ^ (4), atoms (5).
    const Node& n = nodes_[static_cast<std::size_t>(idx)];
    int prec = 5;
    switch (n.kind) {
        case Kind::Add:
        case Kind::Sub: prec = 1; break;
        case Kind::Mul:
        case Kind::Div: prec = 2; break;
        case Kind::Neg: prec = 3; break;
        case Kind::Pow: prec = 4; break;
        default: break;
    }
    const bool need_parens =
        prec < parent_prec ||
        (prec == parent_prec && right_side && prec != 4) ||   // -, / are left-assoc
        (prec == parent_prec && !right_side && prec == 4);    // ^ is right-assoc
    if (need_parens) out += '(';
    switch (n.kind) {
        case Kind::Constant:
            if (n.value < 0.0) {
                // render as unary minus so the text re-parses
                out += '-';
                out += detail::format_double(-n.value);
            } else {
                out += detail::format_double(n.value);
            }
            break;
        case Kind::Variable: out += variable_; break;
        case Kind::Neg:
            out += '-';
            print_node(n.a, 3, true, out);
            break;
        case Kind::Add:
        case Kind::Sub:
        case Kind::Mul:
        case Kind::Div:
        case Kind::Pow: {
            const char op = n.kind == Kind::Add   ? '+'
                            : n.kind == Kind::Sub ? '-'
                            : n.kind == Kind::Mul ? '*'
                            : n.kind == Kind::Div ? '/'
                                                  : '^';
            print_node(n.a, prec, false, out);
            out += op;
            print_node(n.b, prec, true, out);
            break;
        }
        case Kind::Call:
            out += func_name(n.func);
            out += '(';
            print_node(n.a, 0, false, out);
            out += ')';
            break;
    }
    if (need_parens) out += ')';
}

inline std::string PhaseExpr::to_string() const {
    if (root_ < 0) return {};
    std::string out;
    print_node(root_, 0, false, out);
    return out;
}

// ---------------------------------------------------------------------------
// Spec-shaped free functions
// ---------------------------------------------------------------------------

inline PhaseExpr parse_expr(std::string_view text, std::string_view variable) {
    return PhaseExpr::parse(text, variable);
}

inline Jet3 eval_jet(const PhaseExpr& e, double t) { return e.jet(t); }

/// Schwarzian derivative {theta; t} = theta'''/theta' - (3/2)(theta''/theta')^2.
inline double schwarzian(const PhaseExpr& e, double t, double first_derivative_floor = 1e-12) {
    return schwarzian(e.jet(t), first_derivative_floor);
}

}  // namespace oscmap
