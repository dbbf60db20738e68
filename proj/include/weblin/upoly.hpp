#ifndef WEBLIN_UPOLY_HPP
#define WEBLIN_UPOLY_HPP

#include "big.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

namespace weblin {

// univariate polynomial, c[k] multiplies u^k
struct UPoly {
    std::vector<Big> c;

    UPoly() = default;
    explicit UPoly(std::vector<Big> v) : c(std::move(v)) {}
    UPoly(std::initializer_list<Big> v) : c(v) {}

    int degree() const
    {
        for (int k = static_cast<int>(c.size()) - 1; k >= 0; --k)
            if (!c[k].is_zero())
                return k;
        return -1;
    }
    bool is_zero() const { return degree() < 0; }
    Big lead() const { int d = degree(); return d < 0 ? Big() : c[d]; }
    Big coef(int k) const { return k >= 0 && k < static_cast<int>(c.size()) ? c[k] : Big(); }

    Big operator()(const Big &u) const
    {
        Big r;
        for (int k = degree(); k >= 0; --k)
            r = r * u + c[k];
        return r;
    }
    Cplx operator()(const Cplx &z) const
    {
        Cplx r;
        for (int k = degree(); k >= 0; --k)
            r = r * z + Cplx(c[k]);
        return r;
    }
};

inline Big default_trim_eps() { return Big::pow2(-static_cast<long>(thread_precision()) / 2); }

inline Big norm_inf(const UPoly &p)
{
    Big m;
    for (auto &x : p.c)
        if (abs(x) > m)
            m = abs(x);
    return m;
}

// drop leading coefficients that are negligible against the largest one
inline UPoly trimmed(UPoly p, const Big &eps)
{
    Big lim = norm_inf(p) * eps;
    while (!p.c.empty() && abs(p.c.back()) <= lim)
        p.c.pop_back();
    return p;
}
inline UPoly trimmed(const UPoly &p) { return trimmed(p, default_trim_eps()); }

inline UPoly normalized(const UPoly &p)
{
    Big m = norm_inf(p);
    UPoly r = p;
    if (!m.is_zero())
        for (auto &x : r.c)
            x /= m;
    return r;
}

inline UPoly monic(const UPoly &p)
{
    int d = p.degree();
    if (d < 0)
        return p;
    UPoly r;
    Big l = p.c[d];
    for (int k = 0; k <= d; ++k)
        r.c.push_back(p.c[k] / l);
    return r;
}

inline UPoly operator+(const UPoly &a, const UPoly &b)
{
    UPoly r;
    r.c.resize(std::max(a.c.size(), b.c.size()));
    for (size_t k = 0; k < r.c.size(); ++k)
        r.c[k] = a.coef(static_cast<int>(k)) + b.coef(static_cast<int>(k));
    return r;
}
inline UPoly operator-(const UPoly &a, const UPoly &b)
{
    UPoly r;
    r.c.resize(std::max(a.c.size(), b.c.size()));
    for (size_t k = 0; k < r.c.size(); ++k)
        r.c[k] = a.coef(static_cast<int>(k)) - b.coef(static_cast<int>(k));
    return r;
}
inline UPoly operator*(const UPoly &a, const UPoly &b)
{
    if (a.c.empty() || b.c.empty())
        return {};
    UPoly r;
    r.c.resize(a.c.size() + b.c.size() - 1);
    for (size_t i = 0; i < a.c.size(); ++i)
        for (size_t j = 0; j < b.c.size(); ++j)
            r.c[i + j] += a.c[i] * b.c[j];
    return r;
}
inline UPoly operator*(const Big &s, const UPoly &a)
{
    UPoly r = a;
    for (auto &x : r.c)
        x *= s;
    return r;
}

inline UPoly derivative(const UPoly &p)
{
    UPoly r;
    for (size_t k = 1; k < p.c.size(); ++k)
        r.c.push_back(p.c[k] * Big(static_cast<long>(k)));
    return r;
}

// a = q*b + r with deg r < deg b
inline std::pair<UPoly, UPoly> divmod(const UPoly &a, const UPoly &b)
{
    int db = b.degree();
    if (db < 0)
        throw std::domain_error("division by zero polynomial");
    UPoly r = a;
    int da = r.degree();
    UPoly q;
    if (da < db)
        return {q, r};
    q.c.assign(da - db + 1, Big());
    Big lb = b.c[db];
    for (int k = da; k >= db; --k) {
        Big t = r.c[k] / lb;
        q.c[k - db] = t;
        for (int j = 0; j <= db; ++j)
            r.c[k - db + j] -= t * b.c[j];
        r.c[k] = Big();
    }
    r.c.resize(db);
    return {q, r};
}

inline UPoly from_roots(const std::vector<Big> &roots, const Big &lead = Big(1))
{
    UPoly p{lead};
    for (auto &r : roots)
        p = p * UPoly{-r, Big(1)};
    return p;
}

// Sylvester determinant by partially pivoted elimination
inline Big resultant(const UPoly &f0, const UPoly &g0)
{
    UPoly f = trimmed(f0), g = trimmed(g0);
    int m = f.degree(), n = g.degree();
    if (m < 0 || n < 0)
        throw std::domain_error("resultant of zero polynomial");
    int N = m + n;
    if (N == 0)
        return Big(1);
    std::vector<std::vector<Big>> a(N, std::vector<Big>(N));
    for (int i = 0; i < n; ++i)
        for (int k = 0; k <= m; ++k)
            a[i][i + k] = f.c[m - k];
    for (int i = 0; i < m; ++i)
        for (int k = 0; k <= n; ++k)
            a[n + i][i + k] = g.c[n - k];
    Big det(1);
    for (int col = 0; col < N; ++col) {
        int piv = col;
        for (int r = col + 1; r < N; ++r)
            if (abs(a[r][col]) > abs(a[piv][col]))
                piv = r;
        if (a[piv][col].is_zero())
            return Big();
        if (piv != col) {
            std::swap(a[piv], a[col]);
            det = -det;
        }
        det *= a[col][col];
        for (int r = col + 1; r < N; ++r) {
            if (a[r][col].is_zero())
                continue;
            Big t = a[r][col] / a[col][col];
            for (int k = col; k < N; ++k)
                a[r][k] -= t * a[col][k];
        }
    }
    return det;
}

class RootError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Aberth iteration started from Newton-polygon radii
inline std::vector<Cplx> complex_roots(const UPoly &p0, int max_iter = 4000)
{
    UPoly p = trimmed(p0);
    int d = p.degree();
    if (d < 1)
        throw std::domain_error("complex_roots needs degree >= 1");
    std::vector<Cplx> roots;
    int z0 = 0;
    while (p.c[z0].is_zero())
        ++z0;
    for (int k = 0; k < z0; ++k)
        roots.emplace_back(Big());
    if (z0 > 0)
        p.c.erase(p.c.begin(), p.c.begin() + z0);
    d = p.degree();
    if (d == 0)
        return roots;

    std::vector<double> lg(d + 1);
    std::vector<int> pts;
    for (int k = 0; k <= d; ++k) {
        if (p.c[k].is_zero())
            continue;
        long e = 0;
        double m = mpfr_get_d_2exp(&e, p.c[k].raw(), MPFR_RNDN);
        lg[k] = std::log2(std::fabs(m)) + static_cast<double>(e);
        pts.push_back(k);
    }
    std::vector<int> hull;
    for (int k : pts) {
        while (hull.size() >= 2) {
            int a = hull[hull.size() - 2], b = hull.back();
            double cross = (b - a) * (lg[k] - lg[a]) - (k - a) * (lg[b] - lg[a]);
            if (cross >= 0)
                hull.pop_back();
            else
                break;
        }
        hull.push_back(k);
    }
    std::vector<Cplx> z;
    const double two_pi = 6.283185307179586;
    for (size_t h = 0; h + 1 < hull.size(); ++h) {
        int a = hull[h], b = hull[h + 1];
        double lr = (lg[a] - lg[b]) / (b - a);
        Big r = ldexp(Big(1), static_cast<long>(std::floor(lr))) * Big(std::exp2(lr - std::floor(lr)));
        for (int k = 0; k < b - a; ++k) {
            double th = two_pi * k / (b - a) + two_pi * a / d + 0.7;
            z.emplace_back(r * Big(std::cos(th)), r * Big(std::sin(th)));
        }
    }

    std::vector<Big> absc(d + 1);
    for (int k = 0; k <= d; ++k)
        absc[k] = abs(p.c[k]);
    UPoly dp = derivative(p);
    Big eps = Big::epsilon() * Big(4L * d);
    std::vector<bool> done(d, false);
    int remaining = d;
    for (int it = 0; it < max_iter && remaining > 0; ++it) {
        for (int i = 0; i < d; ++i) {
            if (done[i])
                continue;
            Cplx pv = p(z[i]);
            Big az = z[i].abs(), bound;
            for (int k = d; k >= 0; --k)
                bound = bound * az + absc[k];
            if (pv.abs() <= eps * bound) {
                done[i] = true;
                --remaining;
                continue;
            }
            Cplx dv = dp(z[i]);
            if (dv.norm().is_zero()) {
                z[i] = z[i] * Big(1.0 + 1e-8) + Cplx(Big(1e-30));
                continue;
            }
            Cplx nw = pv / dv;
            Cplx s;
            for (int j = 0; j < d; ++j)
                if (j != i)
                    s = s + Cplx(Big(1)) / (z[i] - z[j]);
            Cplx w = nw / (Cplx(Big(1)) - nw * s);
            z[i] = z[i] - w;
        }
    }
    if (remaining > 0)
        throw RootError("root iteration did not converge");
    roots.insert(roots.end(), z.begin(), z.end());
    return roots;
}

struct RealRoot {
    Big value;
    int multiplicity = 1;
};

struct RealRootResult {
    std::vector<RealRoot> roots;
    bool ill_conditioned = false;
};

namespace detail {

inline int sign_changes(const std::vector<UPoly> &seq, const Big &x)
{
    int n = 0, last = 0;
    for (auto &s : seq) {
        int sg = s(x).sign();
        if (sg == 0)
            continue;
        if (last != 0 && sg != last)
            ++n;
        last = sg;
    }
    return n;
}

} // namespace detail

// Sturm isolation and bisection, multiplicities from root clusters
inline RealRootResult real_roots(const UPoly &p0)
{
    RealRootResult out;
    UPoly f = normalized(trimmed(p0));
    int d = f.degree();
    if (d < 1)
        return out;
    Big tol = default_trim_eps();
    Big amb = tol * Big(1e6);

    std::vector<UPoly> seq{f, normalized(derivative(f))};
    while (seq.back().degree() > 0) {
        auto [q, r] = divmod(seq[seq.size() - 2], seq.back());
        Big scale = max(norm_inf(seq[seq.size() - 2]), norm_inf(q) * norm_inf(seq.back()));
        Big ratio = norm_inf(r) / scale;
        if (ratio <= tol)
            break;
        if (ratio <= amb)
            out.ill_conditioned = true;
        seq.push_back(normalized(trimmed(Big(-1) * r)));
    }

    Big bound(0);
    for (int k = 0; k < d; ++k)
        bound = max(bound, abs(f.c[k] / f.c[d]));
    bound += Big(1);

    std::vector<std::pair<Big, Big>> work{{-bound, bound}};
    std::vector<Big> found;
    Big width_stop = tol * bound;
    while (!work.empty()) {
        auto [a, b] = work.back();
        work.pop_back();
        int n = detail::sign_changes(seq, a) - detail::sign_changes(seq, b);
        if (n <= 0)
            continue;
        if (n == 1 || b - a <= width_stop) {
            // shrink to a narrow bracket, then polish with Newton inside it
            Big lo = a, hi = b;
            for (int it = 0; it < 4 * thread_precision() && hi - lo > width_stop; ++it) {
                Big mid = ldexp(lo + hi, -1);
                if (detail::sign_changes(seq, lo) - detail::sign_changes(seq, mid) > 0)
                    hi = mid;
                else
                    lo = mid;
            }
            Big x = ldexp(lo + hi, -1);
            UPoly df = derivative(f);
            for (int it = 0; it < 60; ++it) {
                Big dv = df(x);
                if (dv.is_zero())
                    break;
                Big nx = x - f(x) / dv;
                if (abs(nx - ldexp(lo + hi, -1)) > Big(2) * (hi - lo) || nx == x)
                    break;
                x = nx;
            }
            found.push_back(x);
            if (n > 1)
                out.ill_conditioned = true;
            continue;
        }
        Big mid = ldexp(a + b, -1);
        work.push_back({mid, b});
        work.push_back({a, mid});
    }
    std::sort(found.begin(), found.end());

    std::vector<Cplx> cr;
    try {
        cr = complex_roots(f);
    } catch (const RootError &) {
        out.ill_conditioned = true;
    }
    Big rad = Big::pow2(-static_cast<long>(thread_precision()) / 4);
    int near_real = 0;
    for (auto &z : cr)
        if (abs(z.im) <= rad * max(Big(1), abs(z.re)))
            ++near_real;
    int counted = 0;
    for (auto &x : found) {
        RealRoot rr{x, 0};
        for (auto &z : cr)
            if ((z - Cplx(x)).abs() <= rad * max(Big(1), abs(x)))
                ++rr.multiplicity;
        if (rr.multiplicity == 0)
            rr.multiplicity = 1;
        counted += rr.multiplicity;
        out.roots.push_back(rr);
    }
    if (!cr.empty() && counted != near_real)
        out.ill_conditioned = true;
    return out;
}

struct GcdResult {
    UPoly g;            // monic
    bool ambiguous = false;
    Big worst_ratio;    // largest residual ratio accepted as zero
};

namespace detail {

inline Big remainder_ratio(const UPoly &a, const UPoly &b, UPoly *rem = nullptr)
{
    auto [q, r] = divmod(a, b);
    Big scale = max(norm_inf(a), norm_inf(q) * norm_inf(b));
    if (rem)
        *rem = r;
    return scale.is_zero() ? Big() : norm_inf(r) / scale;
}

} // namespace detail

// pairwise Euclid with relative truncation, then a division check on every input
inline GcdResult approx_gcd(const std::vector<UPoly> &polys, const Big &eps)
{
    if (polys.empty())
        throw std::invalid_argument("approx_gcd of empty list");
    GcdResult out;
    Big amb = eps * Big(1e6);
    UPoly g = normalized(trimmed(polys[0]));
    if (g.degree() < 0)
        throw std::invalid_argument("approx_gcd of zero polynomial");
    for (size_t k = 1; k < polys.size() && g.degree() > 0; ++k) {
        UPoly a = g, b = normalized(trimmed(polys[k]));
        if (b.degree() < 0)
            throw std::invalid_argument("approx_gcd of zero polynomial");
        if (a.degree() < b.degree())
            std::swap(a, b);
        while (true) {
            if (b.degree() <= 0) {
                g = UPoly{Big(1)};
                break;
            }
            UPoly r;
            Big ratio = detail::remainder_ratio(a, b, &r);
            if (ratio <= eps) {
                out.worst_ratio = max(out.worst_ratio, ratio);
                g = normalized(b);
                break;
            }
            if (ratio <= amb)
                out.ambiguous = true;
            a = b;
            b = normalized(trimmed(r));
        }
    }
    g = monic(g);
    if (g.degree() > 0) {
        for (auto &p : polys) {
            Big ratio = detail::remainder_ratio(normalized(trimmed(p)), g);
            if (ratio > eps) {
                out.ambiguous = true;
                if (ratio > amb)
                    g = UPoly{Big(1)};
            } else {
                out.worst_ratio = max(out.worst_ratio, ratio);
            }
            if (g.degree() == 0)
                break;
        }
    }
    out.g = g;
    return out;
}

// coefficients of R(T, sum x_j S_j) in the x_j, via the root product.
// scales, when given, receives the same expansion with every S_j(lambda) replaced by
// sum_k |s_jk| |lambda|^k, a magnitude against which a computed R_sigma can be judged zero
inline std::map<std::vector<int>, Big> generalized_resultants(const UPoly &T0, const std::vector<UPoly> &S,
                                                              std::map<std::vector<int>, Big> *scales = nullptr)
{
    UPoly T = trimmed(T0);
    int t = T.degree();
    if (t < 1)
        throw std::domain_error("generalized_resultants needs deg T >= 1");
    size_t n = S.size();
    int m = 0;
    for (auto &s : S)
        m = std::max(m, trimmed(s).degree());
    std::vector<Cplx> roots = complex_roots(T);
    std::map<std::vector<int>, Cplx> acc;
    std::map<std::vector<int>, Big> mag;
    acc[std::vector<int>(n, 0)] = Cplx(Big(1));
    mag[std::vector<int>(n, 0)] = Big(1);
    for (auto &lam : roots) {
        std::vector<Cplx> vals;
        std::vector<Big> bounds;
        Big r = lam.abs();
        for (auto &s : S) {
            vals.push_back(s(lam));
            Big b;
            for (int k = static_cast<int>(s.c.size()) - 1; k >= 0; --k)
                b = b * r + abs(s.c[k]);
            bounds.push_back(b);
        }
        std::map<std::vector<int>, Cplx> next;
        std::map<std::vector<int>, Big> next_mag;
        for (auto &[idx, v] : acc)
            for (size_t j = 0; j < n; ++j) {
                auto k = idx;
                ++k[j];
                auto it = next.find(k);
                if (it == next.end())
                    next.emplace(k, v * vals[j]);
                else
                    it->second = it->second + v * vals[j];
                if (scales)
                    next_mag[k] += mag[idx] * bounds[j];
            }
        acc = std::move(next);
        mag = std::move(next_mag);
    }
    Big lc = pow(T.lead(), static_cast<long>(m));
    std::map<std::vector<int>, Big> out;
    for (auto &[idx, v] : acc)
        out.emplace(idx, v.re * lc);
    if (scales) {
        scales->clear();
        for (auto &[idx, v] : mag)
            scales->emplace(idx, v * abs(lc));
    }
    return out;
}

} // namespace weblin

#endif
