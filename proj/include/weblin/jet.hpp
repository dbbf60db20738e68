#ifndef WEBLIN_JET_HPP
#define WEBLIN_JET_HPP

#include "big.hpp"
#include "expr.hpp"

#include <memory>
#include <stdexcept>
#include <vector>

namespace weblin {

struct Point {
    Big x, y;
};
using PointRef = std::shared_ptr<const Point>;

inline PointRef make_point(const Big &x, const Big &y) { return std::make_shared<const Point>(Point{x, y}); }

// truncated Taylor expansion: c(i,j) = d^{i+j} g / dx^i dy^j / (i! j!)
class Jet2 {
public:
    Jet2() = default;
    Jet2(PointRef base, int order) : base_(std::move(base)), order_(order), c_(size_for(order)) {}

    static Jet2 constant(PointRef base, int order, const Big &v)
    {
        Jet2 r(std::move(base), order);
        r.c_[0] = v;
        return r;
    }
    static Jet2 var_x(PointRef base, int order)
    {
        Jet2 r(base, order);
        r.c_[0] = base->x;
        if (order >= 1)
            r.at(1, 0) = Big(1);
        return r;
    }
    static Jet2 var_y(PointRef base, int order)
    {
        Jet2 r(base, order);
        r.c_[0] = base->y;
        if (order >= 1)
            r.at(0, 1) = Big(1);
        return r;
    }

    static size_t size_for(int n) { return static_cast<size_t>((n + 1) * (n + 2) / 2); }
    static size_t index(int i, int j) { int t = i + j; return static_cast<size_t>(t * (t + 1) / 2 + j); }

    int order() const { return order_; }
    const PointRef &base() const { return base_; }
    const Big &value() const { return c_[0]; }
    Big &at(int i, int j) { return c_[index(i, j)]; }
    const Big &at(int i, int j) const { return c_[index(i, j)]; }
    const std::vector<Big> &coefficients() const { return c_; }
    bool valid() const { return base_ != nullptr; }

    // mixed partial value d^{i+j}/dx^i dy^j at the base point
    Big derivative(int i, int j) const
    {
        Big f(1);
        for (int k = 2; k <= i; ++k)
            f *= Big(k);
        for (int k = 2; k <= j; ++k)
            f *= Big(k);
        return at(i, j) * f;
    }

    Jet2 truncated(int n) const
    {
        if (n > order_)
            throw std::invalid_argument("cannot raise jet order");
        Jet2 r(base_, n);
        for (size_t k = 0; k < r.c_.size(); ++k)
            r.c_[k] = c_[k];
        return r;
    }

    Jet2 &operator+=(const Jet2 &o) { combine(o, +1); return *this; }
    Jet2 &operator-=(const Jet2 &o) { combine(o, -1); return *this; }
    Jet2 &operator*=(const Big &s)
    {
        for (auto &x : c_)
            x *= s;
        return *this;
    }

    friend Jet2 operator+(Jet2 a, const Jet2 &b) { return a += b; }
    friend Jet2 operator-(Jet2 a, const Jet2 &b) { return a -= b; }
    friend Jet2 operator-(Jet2 a)
    {
        for (auto &x : a.c_)
            x = -x;
        return a;
    }
    friend Jet2 operator*(Jet2 a, const Big &s) { return a *= s; }
    friend Jet2 operator*(const Big &s, Jet2 a) { return a *= s; }

    friend Jet2 operator*(const Jet2 &a, const Jet2 &b)
    {
        check_base(a, b);
        int n = std::min(a.order_, b.order_);
        Jet2 r(a.base_, n);
        Big t;
        for (int ta = 0; ta <= n; ++ta)
            for (int ja = 0; ja <= ta; ++ja) {
                const Big &av = a.c_[index(ta - ja, ja)];
                if (av.is_zero())
                    continue;
                for (int tb = 0; tb + ta <= n; ++tb) {
                    size_t row = index(ta + tb, 0) + ja, brow = index(tb, 0);
                    for (int jb = 0; jb <= tb; ++jb) {
                        const Big &bv = b.c_[brow + jb];
                        if (bv.is_zero())
                            continue;
                        mpfr_mul(t.raw(), av.raw(), bv.raw(), MPFR_RNDN);
                        Big &dst = r.c_[row + jb];
                        mpfr_add(dst.raw(), dst.raw(), t.raw(), MPFR_RNDN);
                    }
                }
            }
        return r;
    }

    friend Jet2 reciprocal(const Jet2 &a)
    {
        if (a.c_[0].is_zero())
            throw std::domain_error("jet division by a value that vanishes at the base point");
        int n = a.order_;
        Jet2 g(a.base_, n);
        Big inv = Big(1) / a.c_[0];
        g.c_[0] = inv;
        // a*g = 1, solved degree by degree
        for (int t = 1; t <= n; ++t)
            for (int j = 0; j <= t; ++j) {
                int i = t - j;
                Big s;
                for (int k = 0; k <= i; ++k)
                    for (int l = 0; l <= j; ++l) {
                        if (k == 0 && l == 0)
                            continue;
                        const Big &av = a.at(k, l);
                        if (av.is_zero())
                            continue;
                        s += av * g.at(i - k, j - l);
                    }
                g.at(i, j) = -s * inv;
            }
        return g;
    }

    friend Jet2 operator/(const Jet2 &a, const Jet2 &b) { return a * reciprocal(b); }

    Jet2 partial_x() const
    {
        if (order_ < 1)
            throw std::domain_error("jet order exhausted");
        Jet2 r(base_, order_ - 1);
        for (int t = 0; t < order_; ++t)
            for (int j = 0; j <= t; ++j) {
                int i = t - j;
                r.at(i, j) = at(i + 1, j) * Big(i + 1);
            }
        return r;
    }
    Jet2 partial_y() const
    {
        if (order_ < 1)
            throw std::domain_error("jet order exhausted");
        Jet2 r(base_, order_ - 1);
        for (int t = 0; t < order_; ++t)
            for (int j = 0; j <= t; ++j) {
                int i = t - j;
                r.at(i, j) = at(i, j + 1) * Big(j + 1);
            }
        return r;
    }

    // sum_n d[n] (g - g(p))^n
    Jet2 compose(const std::vector<Big> &d) const
    {
        Jet2 h = *this;
        h.c_[0] = Big();
        Jet2 r = constant(base_, order_, d.back());
        for (int k = static_cast<int>(d.size()) - 2; k >= 0; --k) {
            r = r * h;
            r.c_[0] += d[k];
        }
        return r;
    }

private:
    static void check_base(const Jet2 &a, const Jet2 &b)
    {
        if (!a.base_ || !b.base_)
            throw std::invalid_argument("uninitialized jet");
        if (a.base_ != b.base_ && (a.base_->x != b.base_->x || a.base_->y != b.base_->y))
            throw std::invalid_argument("jets at different base points");
    }

    void combine(const Jet2 &o, int sign)
    {
        check_base(*this, o);
        if (o.order_ < order_) {
            order_ = o.order_;
            c_.resize(size_for(order_));
        }
        for (size_t k = 0; k < c_.size(); ++k) {
            if (sign > 0)
                c_[k] += o.c_[k];
            else
                c_[k] -= o.c_[k];
        }
    }

    PointRef base_;
    int order_ = 0;
    std::vector<Big> c_;
};

inline Jet2 jet_exp(const Jet2 &a)
{
    std::vector<Big> d(a.order() + 1);
    Big e = exp(a.value());
    for (int n = 0; n <= a.order(); ++n) {
        d[n] = e;
        e /= Big(n + 1);
    }
    return a.compose(d);
}

inline Jet2 jet_log(const Jet2 &a)
{
    if (a.value().sign() <= 0)
        throw std::domain_error("jet log of a non-positive value");
    std::vector<Big> d(a.order() + 1);
    d[0] = log(a.value());
    Big inv = Big(1) / a.value(), p = inv;
    for (int n = 1; n <= a.order(); ++n) {
        d[n] = (n % 2 ? p : -p) / Big(n);
        p *= inv;
    }
    return a.compose(d);
}

inline Jet2 jet_sin_cos(const Jet2 &a, bool cosine)
{
    std::vector<Big> d(a.order() + 1);
    Big s = sin(a.value()), c = cos(a.value());
    // derivatives cycle sin, cos, -sin, -cos
    const Big cyc[4] = {s, c, -s, -c};
    Big fact(1);
    for (int n = 0; n <= a.order(); ++n) {
        if (n > 0)
            fact *= Big(n);
        d[n] = cyc[(n + (cosine ? 1 : 0)) % 4] / fact;
    }
    return a.compose(d);
}

inline Jet2 jet_pow(const Jet2 &a, const mpq_class &r)
{
    if (r.get_den() == 1 && r >= 0) {
        unsigned long n = r.get_num().get_ui();
        Jet2 res = Jet2::constant(a.base(), a.order(), Big(1)), b = a;
        while (n) {
            if (n & 1)
                res = res * b;
            n >>= 1;
            if (n)
                b = b * b;
        }
        return res;
    }
    if (r.get_den() == 1)
        return jet_pow(reciprocal(a), -r);
    const Big &a0 = a.value();
    if (a0.is_zero() || (a0.sign() < 0 && r.get_den() % 2 == 0))
        throw std::domain_error("jet power outside its smooth domain");
    std::vector<Big> d(a.order() + 1);
    mpq_class binom = 1;
    for (int n = 0; n <= a.order(); ++n) {
        d[n] = Big(binom) * pow_rational(a0, r - n);
        binom *= (r - n);
        binom /= (n + 1);
    }
    return a.compose(d);
}

inline Jet2 jet_sqrt(const Jet2 &a)
{
    if (a.value().sign() <= 0)
        throw std::domain_error("jet sqrt of a non-positive value");
    return jet_pow(a, mpq_class(1, 2));
}

// evaluate an expression on jet arguments
inline Jet2 lift_at(const Expr &e, const Jet2 &X, const Jet2 &Y)
{
    const auto &k = e->kids;
    auto wrap = [&](auto &&fn) {
        try {
            return fn();
        } catch (const DomainError &) {
            throw;
        } catch (const std::domain_error &err) {
            throw DomainError(err.what(), to_string(e));
        }
    };
    switch (e->op) {
    case Op::X: return X;
    case Op::Y: return Y;
    case Op::Rational: case Op::Decimal: return Jet2::constant(X.base(), std::min(X.order(), Y.order()), Big(e->value));
    case Op::Neg: return -lift_at(k[0], X, Y);
    case Op::Sqrt: return wrap([&] { return jet_sqrt(lift_at(k[0], X, Y)); });
    case Op::Exp: return jet_exp(lift_at(k[0], X, Y));
    case Op::Log: return wrap([&] { return jet_log(lift_at(k[0], X, Y)); });
    case Op::Sin: return jet_sin_cos(lift_at(k[0], X, Y), false);
    case Op::Cos: return jet_sin_cos(lift_at(k[0], X, Y), true);
    case Op::Add: return lift_at(k[0], X, Y) + lift_at(k[1], X, Y);
    case Op::Sub: return lift_at(k[0], X, Y) - lift_at(k[1], X, Y);
    case Op::Mul: return lift_at(k[0], X, Y) * lift_at(k[1], X, Y);
    case Op::Div: return wrap([&] { return lift_at(k[0], X, Y) / lift_at(k[1], X, Y); });
    case Op::Pow: return wrap([&] { return jet_pow(lift_at(k[0], X, Y), e->value); });
    }
    throw std::logic_error("bad node");
}

inline Jet2 jet_lift(const Expr &e, const PointRef &p, int order)
{
    return lift_at(e, Jet2::var_x(p, order), Jet2::var_y(p, order));
}

} // namespace weblin

#endif
