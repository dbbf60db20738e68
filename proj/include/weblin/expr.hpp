#ifndef WEBLIN_EXPR_HPP
#define WEBLIN_EXPR_HPP

#include "big.hpp"

#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace weblin {

enum class Op { X, Y, Rational, Decimal, Neg, Sqrt, Exp, Log, Sin, Cos, Add, Sub, Mul, Div, Pow };

struct Node;
using Expr = std::shared_ptr<const Node>;

struct Node {
    Op op;
    mpq_class value;   // constant value, or the exponent of Pow
    std::string text;  // source spelling of a decimal literal
    std::vector<Expr> kids;
};

inline bool is_unary(Op op) { return op >= Op::Neg && op <= Op::Cos; }
inline bool is_binary(Op op) { return op >= Op::Add && op <= Op::Div; }
inline bool is_const(const Expr &e) { return e->op == Op::Rational || e->op == Op::Decimal; }

namespace mk {

inline Expr node(Op op, std::vector<Expr> kids = {}, mpq_class v = 0, std::string text = {})
{
    return std::make_shared<const Node>(Node{op, std::move(v), std::move(text), std::move(kids)});
}
inline Expr x() { return node(Op::X); }
inline Expr y() { return node(Op::Y); }
inline Expr num(const mpq_class &v) { return node(Op::Rational, {}, v); }
inline Expr decimal(const std::string &text) { return node(Op::Decimal, {}, parse_rational(text), text); }
inline Expr unary(Op op, Expr a) { return node(op, {std::move(a)}); }
inline Expr binary(Op op, Expr a, Expr b) { return node(op, {std::move(a), std::move(b)}); }
inline Expr pow(Expr a, mpq_class e)
{
    e.canonicalize();
    return node(Op::Pow, {std::move(a)}, e);
}

} // namespace mk

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string &msg, size_t offset, std::set<std::string> expected = {})
        : std::runtime_error(msg), offset(offset), expected(std::move(expected)) {}
    size_t offset;
    std::set<std::string> expected;
};

class LexError : public ParseError {
public:
    using ParseError::ParseError;
};

class ArityError : public ParseError {
public:
    using ParseError::ParseError;
};

class DomainError : public std::domain_error {
public:
    DomainError(const std::string &msg, std::string sub) : std::domain_error(msg + ": " + sub), subexpr(std::move(sub)) {}
    std::string subexpr;
};

namespace detail {

struct Token {
    enum Kind { Num, Ident, Sym, End } kind;
    std::string text;
    size_t pos;
};

inline std::vector<Token> lex(const std::string &s)
{
    std::vector<Token> out;
    size_t i = 0;
    while (i < s.size()) {
        unsigned char c = static_cast<unsigned char>(s[i]);
        if (isspace(c)) {
            ++i;
        } else if (isdigit(c) || (c == '.' && i + 1 < s.size() && isdigit(static_cast<unsigned char>(s[i + 1])))) {
            size_t j = i;
            bool dot = false;
            while (j < s.size() && (isdigit(static_cast<unsigned char>(s[j])) || (s[j] == '.' && !dot))) {
                if (s[j] == '.')
                    dot = true;
                ++j;
            }
            out.push_back({Token::Num, s.substr(i, j - i), i});
            i = j;
        } else if (isalpha(c)) {
            size_t j = i;
            while (j < s.size() && isalnum(static_cast<unsigned char>(s[j])))
                ++j;
            out.push_back({Token::Ident, s.substr(i, j - i), i});
            i = j;
        } else if (std::string("+-*/^(),").find(static_cast<char>(c)) != std::string::npos) {
            out.push_back({Token::Sym, std::string(1, static_cast<char>(c)), i});
            ++i;
        } else {
            throw LexError("unexpected character '" + std::string(1, static_cast<char>(c)) + "'", i);
        }
    }
    out.push_back({Token::End, "", s.size()});
    return out;
}

class Parser {
public:
    explicit Parser(const std::string &src) : toks_(lex(src)) {}

    Expr parse_all()
    {
        Expr e = expr();
        if (peek().kind != Token::End)
            fail({"+", "-", "*", "/", "^", "end of input"});
        return e;
    }

private:
    const Token &peek() const { return toks_[i_]; }
    bool sym(const char *s) const { return peek().kind == Token::Sym && peek().text == s; }

    [[noreturn]] void fail(std::set<std::string> expected) const
    {
        const Token &t = peek();
        std::string got = t.kind == Token::End ? "end of input" : "'" + t.text + "'";
        std::string msg = "parse error at offset " + std::to_string(t.pos) + ": unexpected " + got;
        throw ParseError(msg, t.pos, std::move(expected));
    }

    void expect(const char *s)
    {
        if (!sym(s))
            fail({s});
        ++i_;
    }

    Expr expr()
    {
        Expr e = term();
        while (sym("+") || sym("-")) {
            Op op = peek().text == "+" ? Op::Add : Op::Sub;
            ++i_;
            e = mk::binary(op, e, term());
        }
        return e;
    }

    Expr term()
    {
        Expr e = factor();
        while (sym("*") || sym("/")) {
            Op op = peek().text == "*" ? Op::Mul : Op::Div;
            ++i_;
            e = mk::binary(op, e, factor());
        }
        return e;
    }

    // unary minus binds looser than ^, so -x^2 is -(x^2)
    Expr factor()
    {
        if (sym("-")) {
            ++i_;
            return mk::unary(Op::Neg, factor());
        }
        Expr b = base();
        if (sym("^")) {
            ++i_;
            return mk::pow(b, exponent());
        }
        return b;
    }

    mpq_class exponent()
    {
        bool paren = sym("(");
        if (paren)
            ++i_;
        bool neg = false;
        if (sym("-") || sym("+")) {
            neg = peek().text == "-";
            ++i_;
        }
        if (peek().kind != Token::Num)
            fail({"rational exponent"});
        mpq_class v = parse_rational(peek().text);
        ++i_;
        // a fraction needs parentheses: x^2/3 is (x^2)/3
        if (paren && sym("/")) {
            ++i_;
            if (peek().kind != Token::Num)
                fail({"number"});
            mpq_class d = parse_rational(peek().text);
            if (d == 0)
                throw ParseError("zero denominator in exponent", peek().pos, {"nonzero number"});
            v /= d;
            ++i_;
        }
        if (paren)
            expect(")");
        v.canonicalize();
        return neg ? mpq_class(-v) : v;
    }

    Expr base()
    {
        const Token &t = peek();
        if (t.kind == Token::Num) {
            ++i_;
            if (t.text.find('.') != std::string::npos)
                return mk::decimal(t.text);
            return mk::num(parse_rational(t.text));
        }
        if (t.kind == Token::Ident) {
            if (t.text == "x") {
                ++i_;
                return mk::x();
            }
            if (t.text == "y") {
                ++i_;
                return mk::y();
            }
            static const std::pair<const char *, Op> funcs[] = {
                {"sqrt", Op::Sqrt}, {"exp", Op::Exp}, {"log", Op::Log}, {"sin", Op::Sin}, {"cos", Op::Cos}};
            for (auto &[name, op] : funcs) {
                if (t.text != name)
                    continue;
                ++i_;
                expect("(");
                Expr a = expr();
                if (sym(","))
                    throw ArityError(std::string(name) + " takes one argument", peek().pos, {")"});
                expect(")");
                return mk::unary(op, a);
            }
            fail({"x", "y", "sqrt", "exp", "log", "sin", "cos"});
        }
        if (sym("(")) {
            ++i_;
            Expr e = expr();
            expect(")");
            return e;
        }
        fail({"number", "x", "y", "function", "(", "-"});
    }

    std::vector<Token> toks_;
    size_t i_ = 0;
};

inline int prec(const Expr &e)
{
    switch (e->op) {
    case Op::Add: case Op::Sub: return 1;
    case Op::Mul: case Op::Div: return 2;
    case Op::Neg: return 3;
    case Op::Pow: return 4;
    case Op::Rational:
        return (e->value < 0 || e->value.get_den() != 1) ? 2 : 5;
    default: return 5;
    }
}

} // namespace detail

inline Expr parse(const std::string &source) { return detail::Parser(source).parse_all(); }

inline std::string to_string(const Expr &e)
{
    auto wrap = [](const Expr &k, bool paren) { return paren ? "(" + to_string(k) + ")" : to_string(k); };
    switch (e->op) {
    case Op::X: return "x";
    case Op::Y: return "y";
    case Op::Rational: return e->value.get_str();
    case Op::Decimal: return e->text;
    case Op::Neg: return "-" + wrap(e->kids[0], detail::prec(e->kids[0]) < 3);
    case Op::Sqrt: return "sqrt(" + to_string(e->kids[0]) + ")";
    case Op::Exp: return "exp(" + to_string(e->kids[0]) + ")";
    case Op::Log: return "log(" + to_string(e->kids[0]) + ")";
    case Op::Sin: return "sin(" + to_string(e->kids[0]) + ")";
    case Op::Cos: return "cos(" + to_string(e->kids[0]) + ")";
    case Op::Add: case Op::Sub: case Op::Mul: case Op::Div: {
        int p = detail::prec(e);
        const char *s = e->op == Op::Add ? " + " : e->op == Op::Sub ? " - " : e->op == Op::Mul ? "*" : "/";
        // left association: only the right operand needs parentheses at equal precedence
        return wrap(e->kids[0], detail::prec(e->kids[0]) < p) + s + wrap(e->kids[1], detail::prec(e->kids[1]) <= p);
    }
    case Op::Pow: {
        std::string ex = e->value.get_str();
        if (e->value < 0 || e->value.get_den() != 1)
            ex = "(" + ex + ")";
        return wrap(e->kids[0], detail::prec(e->kids[0]) < 5) + "^" + ex;
    }
    }
    return "?";
}

inline bool same_tree(const Expr &a, const Expr &b)
{
    if (a->op != b->op || a->value != b->value || a->kids.size() != b->kids.size())
        return false;
    for (size_t k = 0; k < a->kids.size(); ++k)
        if (!same_tree(a->kids[k], b->kids[k]))
            return false;
    return true;
}

// constructors that fold constants, used by diff
namespace fold {

inline bool is_val(const Expr &e, long v) { return is_const(e) && e->value == v; }

inline Expr neg(const Expr &a)
{
    if (is_const(a))
        return mk::num(-a->value);
    if (a->op == Op::Neg)
        return a->kids[0];
    return mk::unary(Op::Neg, a);
}
inline Expr add(const Expr &a, const Expr &b)
{
    if (is_val(a, 0)) return b;
    if (is_val(b, 0)) return a;
    if (is_const(a) && is_const(b)) return mk::num(a->value + b->value);
    return mk::binary(Op::Add, a, b);
}
inline Expr sub(const Expr &a, const Expr &b)
{
    if (is_val(b, 0)) return a;
    if (is_val(a, 0)) return neg(b);
    if (is_const(a) && is_const(b)) return mk::num(a->value - b->value);
    return mk::binary(Op::Sub, a, b);
}
inline Expr mul(const Expr &a, const Expr &b)
{
    if (is_val(a, 0) || is_val(b, 0)) return mk::num(0);
    if (is_val(a, 1)) return b;
    if (is_val(b, 1)) return a;
    if (is_val(a, -1)) return neg(b);
    if (is_val(b, -1)) return neg(a);
    if (is_const(a) && is_const(b)) return mk::num(a->value * b->value);
    return mk::binary(Op::Mul, a, b);
}
inline Expr div(const Expr &a, const Expr &b)
{
    if (is_val(a, 0)) return mk::num(0);
    if (is_val(b, 1)) return a;
    if (is_const(a) && is_const(b) && b->value != 0) return mk::num(a->value / b->value);
    return mk::binary(Op::Div, a, b);
}
inline Expr pow(const Expr &a, const mpq_class &e)
{
    if (e == 0) return mk::num(1);
    if (e == 1) return a;
    return mk::pow(a, e);
}

} // namespace fold

enum class Var { X, Y };

inline Expr diff(const Expr &e, Var v)
{
    using namespace fold;
    const auto &k = e->kids;
    switch (e->op) {
    case Op::X: return mk::num(v == Var::X ? 1 : 0);
    case Op::Y: return mk::num(v == Var::Y ? 1 : 0);
    case Op::Rational: case Op::Decimal: return mk::num(0);
    case Op::Neg: return neg(diff(k[0], v));
    case Op::Sqrt: return mul(mul(mk::num(mpq_class(1, 2)), pow(k[0], mpq_class(-1, 2))), diff(k[0], v));
    case Op::Exp: return mul(e, diff(k[0], v));
    case Op::Log: return div(diff(k[0], v), k[0]);
    case Op::Sin: return mul(mk::unary(Op::Cos, k[0]), diff(k[0], v));
    case Op::Cos: return neg(mul(mk::unary(Op::Sin, k[0]), diff(k[0], v)));
    case Op::Add: return add(diff(k[0], v), diff(k[1], v));
    case Op::Sub: return sub(diff(k[0], v), diff(k[1], v));
    case Op::Mul: return add(mul(diff(k[0], v), k[1]), mul(k[0], diff(k[1], v)));
    case Op::Div:
        return div(sub(mul(diff(k[0], v), k[1]), mul(k[0], diff(k[1], v))), pow(k[1], 2));
    case Op::Pow:
        return mul(mul(mk::num(e->value), pow(k[0], e->value - 1)), diff(k[0], v));
    }
    return mk::num(0);
}

inline Big eval(const Expr &e, const Big &x, const Big &y)
{
    const auto &k = e->kids;
    switch (e->op) {
    case Op::X: return x;
    case Op::Y: return y;
    case Op::Rational: case Op::Decimal: return Big(e->value);
    case Op::Neg: return -eval(k[0], x, y);
    case Op::Sqrt: {
        Big a = eval(k[0], x, y);
        if (a.sign() < 0)
            throw DomainError("square root of a negative number", to_string(e));
        return sqrt(a);
    }
    case Op::Exp: return exp(eval(k[0], x, y));
    case Op::Log: {
        Big a = eval(k[0], x, y);
        if (a.sign() <= 0)
            throw DomainError("logarithm of a non-positive number", to_string(e));
        return log(a);
    }
    case Op::Sin: return sin(eval(k[0], x, y));
    case Op::Cos: return cos(eval(k[0], x, y));
    case Op::Add: return eval(k[0], x, y) + eval(k[1], x, y);
    case Op::Sub: return eval(k[0], x, y) - eval(k[1], x, y);
    case Op::Mul: return eval(k[0], x, y) * eval(k[1], x, y);
    case Op::Div: {
        Big b = eval(k[1], x, y);
        if (b.is_zero())
            throw DomainError("division by zero", to_string(e));
        return eval(k[0], x, y) / b;
    }
    case Op::Pow: {
        Big a = eval(k[0], x, y);
        if (a.is_zero() && e->value < 0)
            throw DomainError("division by zero", to_string(e));
        if (a.sign() < 0 && e->value.get_den() % 2 == 0)
            throw DomainError("even root of a negative number", to_string(e));
        return pow_rational(a, e->value);
    }
    }
    return Big();
}

// substitute an expression for x, used to read w0 and F written in either variable
inline Expr substitute(const Expr &e, const Expr &for_x, const Expr &for_y)
{
    if (e->op == Op::X)
        return for_x;
    if (e->op == Op::Y)
        return for_y;
    if (e->kids.empty())
        return e;
    std::vector<Expr> kids;
    for (auto &k : e->kids)
        kids.push_back(substitute(k, for_x, for_y));
    return mk::node(e->op, std::move(kids), e->value, e->text);
}

inline bool mentions(const Expr &e, Op var)
{
    if (e->op == var)
        return true;
    for (auto &k : e->kids)
        if (mentions(k, var))
            return true;
    return false;
}

} // namespace weblin

#endif
