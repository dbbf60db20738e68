#ifndef WEBLIN_BIG_HPP
#define WEBLIN_BIG_HPP

#include <mpfr.h>
#include <gmpxx.h>

#include <cctype>
#include <cstdlib>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>

namespace weblin {

// working precision is per thread, set through PrecisionScope
inline mpfr_prec_t &thread_precision()
{
    thread_local mpfr_prec_t p = 256;
    return p;
}

inline void widen_exponent_range()
{
    thread_local bool done = false;
    if (!done) {
        mpfr_set_emin(mpfr_get_emin_min());
        mpfr_set_emax(mpfr_get_emax_max());
        done = true;
    }
}

class PrecisionScope {
public:
    explicit PrecisionScope(long bits) : saved_(thread_precision())
    {
        if (bits < MPFR_PREC_MIN || bits > 1 << 20)
            throw std::invalid_argument("precision out of range");
        thread_precision() = bits;
    }
    ~PrecisionScope() { thread_precision() = saved_; }
    PrecisionScope(const PrecisionScope &) = delete;
    PrecisionScope &operator=(const PrecisionScope &) = delete;

private:
    mpfr_prec_t saved_;
};

class Big {
public:
    Big() { init(); mpfr_set_zero(v_, 1); }
    Big(int x) { init(); mpfr_set_si(v_, x, MPFR_RNDN); }
    Big(long x) { init(); mpfr_set_si(v_, x, MPFR_RNDN); }
    Big(double x) { init(); mpfr_set_d(v_, x, MPFR_RNDN); }
    explicit Big(const mpq_class &q) { init(); mpfr_set_q(v_, q.get_mpq_t(), MPFR_RNDN); }
    explicit Big(const mpz_class &z) { init(); mpfr_set_z(v_, z.get_mpz_t(), MPFR_RNDN); }
    explicit Big(const std::string &s)
    {
        init();
        if (mpfr_set_str(v_, s.c_str(), 10, MPFR_RNDN) != 0)
            throw std::invalid_argument("bad number: " + s);
    }

    Big(const Big &o) { init(); mpfr_set(v_, o.v_, MPFR_RNDN); }
    Big(Big &&o) noexcept
    {
        mpfr_init2(v_, mpfr_get_prec(o.v_));
        mpfr_swap(v_, o.v_);
    }
    Big &operator=(const Big &o)
    {
        if (this != &o) {
            mpfr_set_prec(v_, thread_precision());
            mpfr_set(v_, o.v_, MPFR_RNDN);
        }
        return *this;
    }
    Big &operator=(Big &&o) noexcept
    {
        mpfr_swap(v_, o.v_);
        return *this;
    }
    ~Big() { mpfr_clear(v_); }

    mpfr_ptr raw() { return v_; }
    mpfr_srcptr raw() const { return v_; }
    mpfr_prec_t precision() const { return mpfr_get_prec(v_); }

    Big &operator+=(const Big &o) { mpfr_add(v_, v_, o.v_, MPFR_RNDN); return *this; }
    Big &operator-=(const Big &o) { mpfr_sub(v_, v_, o.v_, MPFR_RNDN); return *this; }
    Big &operator*=(const Big &o) { mpfr_mul(v_, v_, o.v_, MPFR_RNDN); return *this; }
    Big &operator/=(const Big &o) { mpfr_div(v_, v_, o.v_, MPFR_RNDN); return *this; }

    friend Big operator+(Big a, const Big &b) { return a += b; }
    friend Big operator-(Big a, const Big &b) { return a -= b; }
    friend Big operator*(Big a, const Big &b) { return a *= b; }
    friend Big operator/(Big a, const Big &b) { return a /= b; }
    friend Big operator-(Big a) { mpfr_neg(a.v_, a.v_, MPFR_RNDN); return a; }

    friend bool operator<(const Big &a, const Big &b) { return mpfr_less_p(a.v_, b.v_); }
    friend bool operator>(const Big &a, const Big &b) { return mpfr_greater_p(a.v_, b.v_); }
    friend bool operator<=(const Big &a, const Big &b) { return mpfr_lessequal_p(a.v_, b.v_); }
    friend bool operator>=(const Big &a, const Big &b) { return mpfr_greaterequal_p(a.v_, b.v_); }
    friend bool operator==(const Big &a, const Big &b) { return mpfr_equal_p(a.v_, b.v_); }
    friend bool operator!=(const Big &a, const Big &b) { return !mpfr_equal_p(a.v_, b.v_); }

    bool is_zero() const { return mpfr_zero_p(v_); }
    bool is_finite() const { return mpfr_number_p(v_); }
    int sign() const { return mpfr_sgn(v_); }
    double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }
    long exponent2() const { return is_zero() ? 0 : mpfr_get_exp(v_); }

    // value = mantissa * 10^exp10 with mantissa in [1,10)
    std::pair<std::string, long> decimal(int digits) const
    {
        if (is_zero())
            return {"0", 0};
        if (!is_finite())
            return {mpfr_nan_p(v_) ? "nan" : (sign() > 0 ? "inf" : "-inf"), 0};
        mpfr_exp_t e = 0;
        char *s = mpfr_get_str(nullptr, &e, 10, digits, v_, MPFR_RNDN);
        std::string d(s);
        mpfr_free_str(s);
        std::string sgn;
        if (d[0] == '-') {
            sgn = "-";
            d.erase(0, 1);
        }
        while (d.size() > 1 && d.back() == '0')
            d.pop_back();
        std::string m = sgn + d.substr(0, 1);
        if (d.size() > 1)
            m += "." + d.substr(1);
        return {m, static_cast<long>(e) - 1};
    }

    std::string str(int digits = 20) const
    {
        auto [m, e] = decimal(digits);
        if (e == 0 || m == "0")
            return m;
        return m + "e" + std::to_string(e);
    }

    static Big pi() { Big r; mpfr_const_pi(r.v_, MPFR_RNDN); return r; }
    static Big epsilon() { Big r(1); mpfr_mul_2si(r.v_, r.v_, 1 - static_cast<long>(thread_precision()), MPFR_RNDN); return r; }
    // 2^e
    static Big pow2(long e) { Big r(1); mpfr_mul_2si(r.v_, r.v_, e, MPFR_RNDN); return r; }

private:
    void init()
    {
        widen_exponent_range();
        mpfr_init2(v_, thread_precision());
    }

    mpfr_t v_;
};

inline std::ostream &operator<<(std::ostream &os, const Big &b) { return os << b.str(); }

#define WEBLIN_UNARY(name, fn) \
    inline Big name(const Big &a) { Big r; fn(r.raw(), a.raw(), MPFR_RNDN); return r; }
WEBLIN_UNARY(abs, mpfr_abs)
WEBLIN_UNARY(sqrt, mpfr_sqrt)
WEBLIN_UNARY(exp, mpfr_exp)
WEBLIN_UNARY(log, mpfr_log)
WEBLIN_UNARY(sin, mpfr_sin)
WEBLIN_UNARY(cos, mpfr_cos)
#undef WEBLIN_UNARY

inline Big pow(const Big &a, const Big &b) { Big r; mpfr_pow(r.raw(), a.raw(), b.raw(), MPFR_RNDN); return r; }
inline Big pow(const Big &a, long n) { Big r; mpfr_pow_si(r.raw(), a.raw(), n, MPFR_RNDN); return r; }
inline Big ldexp(const Big &a, long e) { Big r; mpfr_mul_2si(r.raw(), a.raw(), e, MPFR_RNDN); return r; }

// a^(p/q) on the reals; negative base allowed for odd q
inline Big pow_rational(const Big &a, const mpq_class &e)
{
    mpz_class p = e.get_num(), q = e.get_den();
    if (!q.fits_ulong_p() || !p.fits_slong_p())
        throw std::domain_error("exponent too large");
    Big r;
    mpfr_pow_si(r.raw(), a.raw(), p.get_si(), MPFR_RNDN);
    if (q != 1)
        mpfr_rootn_ui(r.raw(), r.raw(), q.get_ui(), MPFR_RNDN);
    return r;
}

inline Big max(const Big &a, const Big &b) { return a < b ? b : a; }
inline Big min(const Big &a, const Big &b) { return a < b ? a : b; }

// |a-b| / max(|a|,|b|)
inline Big rel_diff(const Big &a, const Big &b)
{
    Big s = max(abs(a), abs(b));
    Big d = abs(a - b);
    return s.is_zero() ? Big() : d / s;
}

inline mpq_class parse_rational(const std::string &text)
{
    std::string s = text;
    while (!s.empty() && isspace(static_cast<unsigned char>(s.back())))
        s.pop_back();
    while (!s.empty() && isspace(static_cast<unsigned char>(s.front())))
        s.erase(0, 1);
    if (s.empty())
        throw std::invalid_argument("empty number");
    auto slash = s.find('/');
    if (slash != std::string::npos) {
        mpq_class n = parse_rational(s.substr(0, slash));
        mpq_class d = parse_rational(s.substr(slash + 1));
        if (d == 0)
            throw std::invalid_argument("zero denominator: " + text);
        return n / d;
    }
    bool neg = false;
    size_t i = 0;
    if (s[i] == '+' || s[i] == '-') {
        neg = s[i] == '-';
        ++i;
    }
    std::string digits;
    long scale = 0;
    bool dot = false, any = false;
    for (; i < s.size(); ++i) {
        char c = s[i];
        if (isdigit(static_cast<unsigned char>(c))) {
            digits += c;
            any = true;
            if (dot)
                --scale;
        } else if (c == '.' && !dot) {
            dot = true;
        } else if (c == 'e' || c == 'E') {
            scale += std::stol(s.substr(i + 1));
            break;
        } else {
            throw std::invalid_argument("bad number: " + text);
        }
    }
    if (!any)
        throw std::invalid_argument("bad number: " + text);
    mpq_class r(mpz_class(digits, 10));
    mpz_class ten = 1;
    mpz_ui_pow_ui(ten.get_mpz_t(), 10, static_cast<unsigned long>(scale < 0 ? -scale : scale));
    if (scale < 0)
        r /= ten;
    else
        r *= ten;
    r.canonicalize();
    return neg ? mpq_class(-r) : r;
}

struct Cplx {
    Big re, im;

    Cplx() = default;
    Cplx(Big r, Big i = Big()) : re(std::move(r)), im(std::move(i)) {}

    friend Cplx operator+(const Cplx &a, const Cplx &b) { return {a.re + b.re, a.im + b.im}; }
    friend Cplx operator-(const Cplx &a, const Cplx &b) { return {a.re - b.re, a.im - b.im}; }
    friend Cplx operator-(const Cplx &a) { return {-a.re, -a.im}; }
    friend Cplx operator*(const Cplx &a, const Cplx &b)
    {
        return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
    }
    friend Cplx operator*(const Cplx &a, const Big &b) { return {a.re * b, a.im * b}; }
    friend Cplx operator/(const Cplx &a, const Cplx &b)
    {
        Big d = b.re * b.re + b.im * b.im;
        return {(a.re * b.re + a.im * b.im) / d, (a.im * b.re - a.re * b.im) / d};
    }
    Big norm() const { return re * re + im * im; }
    Big abs() const { return weblin::sqrt(norm()); }
};

} // namespace weblin

#endif
