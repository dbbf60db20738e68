#ifndef WEBLIN_WEBCALC_HPP
#define WEBLIN_WEBCALC_HPP

#include "big.hpp"
#include "expr.hpp"
#include "jet.hpp"
#include "upoly.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace weblin {

class DegenerateWeb : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NonpositiveCurvature : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline Big zero_eps() { return default_trim_eps(); }

// jet carrying a web weight: sums need equal weights, products add them
struct WeightedJet {
    Jet2 jet;
    int weight = 0;

    const Big &value() const { return jet.value(); }
    int order() const { return jet.order(); }

    friend WeightedJet operator+(const WeightedJet &a, const WeightedJet &b)
    {
        if (a.weight != b.weight)
            throw std::logic_error("adding jets of different weight");
        return {a.jet + b.jet, a.weight};
    }
    friend WeightedJet operator-(const WeightedJet &a, const WeightedJet &b)
    {
        if (a.weight != b.weight)
            throw std::logic_error("subtracting jets of different weight");
        return {a.jet - b.jet, a.weight};
    }
    friend WeightedJet operator-(const WeightedJet &a) { return {-a.jet, a.weight}; }
    friend WeightedJet operator*(const WeightedJet &a, const WeightedJet &b) { return {a.jet * b.jet, a.weight + b.weight}; }
    friend WeightedJet operator*(const Big &s, const WeightedJet &a) { return {s * a.jet, a.weight}; }
};

struct WebFrame {
    PointRef point;
    int order = 0;
    Jet2 f, fx, fy, inv_fx, inv_fy;
    WeightedJet H, K;
    bool fx_nonzero = false, fy_nonzero = false, K_nonzero = false, K_positive = false;
    Big K_scale;                 // magnitude of the terms that make up K
    Big curvature_consistency;   // explicit formula vs d1 H - d2 H

    // frame vector fields d1 = -(1/f_x) d/dx, d2 = -(1/f_y) d/dy
    Jet2 d1(const Jet2 &g) const { return -(inv_fx * g.partial_x()); }
    Jet2 d2(const Jet2 &g) const { return -(inv_fy * g.partial_y()); }
    Jet2 d(int i, const Jet2 &g) const { return i == 1 ? d1(g) : d2(g); }
};

inline Big max_abs_coefficient(const Jet2 &j, int upto)
{
    Big m;
    for (int t = 0; t <= std::min(upto, j.order()); ++t)
        for (int k = 0; k <= t; ++k)
            m = max(m, abs(j.at(t - k, k)));
    return m;
}

inline WebFrame web_frame(const Jet2 &f)
{
    if (f.order() < 3)
        throw std::invalid_argument("web frame needs a jet of order >= 3");
    WebFrame w;
    w.point = f.base();
    w.order = f.order();
    w.f = f;
    w.fx = f.partial_x();
    w.fy = f.partial_y();
    Big scale = max(Big(1), max_abs_coefficient(f, 2));
    w.fx_nonzero = abs(w.fx.value()) > zero_eps() * scale;
    w.fy_nonzero = abs(w.fy.value()) > zero_eps() * scale;
    if (!w.fx_nonzero || !w.fy_nonzero)
        throw DegenerateWeb(std::string("web function has vanishing ") + (!w.fx_nonzero ? "f_x" : "f_y") + " at the point");
    w.inv_fx = reciprocal(w.fx);
    w.inv_fy = reciprocal(w.fy);
    Jet2 fxy = w.fx.partial_y();
    w.H = {fxy * w.inv_fx * w.inv_fy, 0};
    w.K = {w.d1(w.H.jet) - w.d2(w.H.jet), 2};

    // K = f_xyy/(f_x f_y^2) - f_xxy/(f_x^2 f_y) + f_xx f_xy/(f_x^3 f_y) - f_xy f_yy/(f_x f_y^3)
    Jet2 fxx = w.fx.partial_x(), fyy = w.fy.partial_y();
    Jet2 fxxy = fxx.partial_y(), fxyy = fxy.partial_y();
    Jet2 ix = w.inv_fx, iy = w.inv_fy;
    Jet2 t1 = fxyy * ix * iy * iy, t2 = fxxy * ix * ix * iy;
    Jet2 t3 = fxx * fxy * ix * ix * ix * iy, t4 = fxy * fyy * ix * iy * iy * iy;
    Jet2 kexp = t1 - t2 + t3 - t4;
    w.K_scale = abs(t1.value()) + abs(t2.value()) + abs(t3.value()) + abs(t4.value());
    Big ref = max(w.K_scale, max_abs_coefficient(kexp, kexp.order()));
    Big worst;
    for (size_t k = 0; k < kexp.coefficients().size(); ++k)
        worst = max(worst, abs(kexp.coefficients()[k] - w.K.jet.coefficients()[k]));
    w.curvature_consistency = ref.is_zero() ? Big() : worst / ref;
    w.K_nonzero = abs(w.K.value()) > zero_eps() * w.K_scale && !w.K_scale.is_zero();
    w.K_positive = w.K_nonzero && w.K.value().sign() > 0;
    return w;
}

inline WebFrame web_frame(const Expr &f, const PointRef &p, int order)
{
    return web_frame(jet_lift(f, p, order));
}

// weighted covariant derivative: delta_i g = d_i g - w H g
inline WeightedJet cov_d(const WebFrame &fr, const WeightedJet &g, int i)
{
    if (g.order() < 1)
        throw std::domain_error("jet order exhausted by covariant differentiation");
    Jet2 r = fr.d(i, g.jet);
    if (g.weight != 0)
        r -= Big(static_cast<long>(g.weight)) * (fr.H.jet * g.jet);
    return {r, g.weight + 1};
}

// symmetrized covariant derivatives of the curvature, keyed by sorted index words ("", "1", "12", ...)
struct KDerivs {
    std::map<std::string, WeightedJet> entries;
    int max_length = 0;

    const WeightedJet &at(const std::string &word) const
    {
        auto it = entries.find(word);
        if (it == entries.end())
            throw std::out_of_range("K derivative not available: K" + word);
        return it->second;
    }
    bool has(const std::string &word) const { return entries.count(word) > 0; }
};

inline std::string k_word(int ones, int twos) { return std::string(ones, '1') + std::string(twos, '2'); }

namespace detail {

// K_{1 sigma} = delta_1(K_sigma) + correction; one line per mixed word, factors are K-words
inline const char *symmetrization_table()
{
    return R"(
12      1      - -
112     5/3    - 1
122     10/3   - 2
1112    11/6   - 11
1112    5/6    1 1
1122    11/3   - 12
1122    5/3    1 2
1222    11/2   - 22
1222    5/2    2 2
11112   21/10  - 111
11112   21/10  1 11
11122   21/5   - 112
11122   14/5   1 12
11122   7/5    11 2
11222   63/10  - 122
11222   21/10  1 22
11222   21/5   12 2
12222   42/5   - 222
12222   42/5   2 22
111112  12/5   - 1111
111112  14/5   1 111
111112  7/5    11 11
111122  24/5   - 1112
111122  21/5   1 112
111122  14/5   11 12
111122  7/5    111 2
111222  36/5   - 1122
111222  21/5   1 122
111222  7/5    11 22
111222  21/5   112 2
111222  14/5   12 12
112222  48/5   - 1222
112222  14/5   1 222
112222  28/5   12 22
112222  42/5   122 2
122222  12     - 2222
122222  14     2 222
122222  7      22 22
)";
}

struct CorrectionTerm {
    mpq_class coef;
    std::string a, b;
};

inline const std::map<std::string, std::vector<CorrectionTerm>> &symmetrization()
{
    static const std::map<std::string, std::vector<CorrectionTerm>> table = [] {
        std::map<std::string, std::vector<CorrectionTerm>> t;
        std::istringstream in(symmetrization_table());
        std::string word, coef, a, b;
        while (in >> word >> coef >> a >> b)
            t[word].push_back({parse_rational(coef), a == "-" ? "" : a, b == "-" ? "" : b});
        return t;
    }();
    return table;
}

} // namespace detail

inline WeightedJet correction_sum(const KDerivs &kd, const std::vector<detail::CorrectionTerm> &terms)
{
    WeightedJet acc;
    bool first = true;
    for (auto &t : terms) {
        WeightedJet term = Big(t.coef) * (kd.at(t.a) * kd.at(t.b));
        if (first)
            acc = term;
        else
            acc = acc + term;
        first = false;
    }
    return acc;
}

// builds every entry whose jet order stays >= min_order
inline KDerivs k_table(const WebFrame &fr, int max_length = 6, int min_order = 0)
{
    KDerivs kd;
    kd.entries[""] = fr.K;
    const auto &corr = detail::symmetrization();
    for (int len = 1; len <= max_length; ++len) {
        if (fr.K.order() - len < min_order)
            break;
        for (int a = len; a >= 0; --a) {
            int b = len - a;
            std::string w = k_word(a, b);
            WeightedJet v;
            if (b == 0)
                v = cov_d(fr, kd.at(k_word(a - 1, 0)), 1);
            else if (a == 0)
                v = cov_d(fr, kd.at(k_word(0, b - 1)), 2);
            else
                v = cov_d(fr, kd.at(k_word(a - 1, b)), 1) + correction_sum(kd, corr.at(w));
            kd.entries[w] = v;
        }
        kd.max_length = len;
    }
    return kd;
}

// a_i = -delta_i K / (2 K^(3/2)) as weight-zero jets
struct AInvariants {
    Jet2 a1, a2, k;  // k = sqrt(K)
};

inline AInvariants a_invariants(const WebFrame &fr)
{
    if (!fr.K_positive)
        throw NonpositiveCurvature("absolute invariants need K > 0 at the point");
    Jet2 k = jet_sqrt(fr.K.jet);
    Jet2 den = Big(2) * jet_pow(fr.K.jet, mpq_class(3, 2));
    Jet2 a1 = -(cov_d(fr, fr.K, 1).jet / den);
    Jet2 a2 = -(cov_d(fr, fr.K, 2).jet / den);
    return {a1, a2, k};
}

// nabla_i = (1/k) d_i on absolute invariants
inline Jet2 nabla(const WebFrame &fr, const AInvariants &ai, const Jet2 &h, int i)
{
    return fr.d(i, h) / ai.k;
}

enum class RigidityClass { InfinitesimallyRigid, AdmitsAutomorphismCandidate, Undetermined };

inline const char *to_string(RigidityClass c)
{
    switch (c) {
    case RigidityClass::InfinitesimallyRigid: return "InfinitesimallyRigid";
    case RigidityClass::AdmitsAutomorphismCandidate: return "AdmitsAutomorphismCandidate";
    default: return "Undetermined";
    }
}

struct RigidityReport {
    Big a1, a2;
    Big normalization_residual;     // nabla_1 a2 - nabla_2 a1 - 1
    Big jacobian[2][2];             // d(a1,a2)/d(x,y)
    Big jacobian_det;
    Big J;                          // det of the nabla matrix
    Big J_scale;
    bool functionally_dependent = false;
    Big relation_residuals[3];      // relative to the size of the terms
    RigidityClass classification = RigidityClass::Undetermined;
    Big nabla_a[2][2];              // nabla_i a_j
};

namespace detail {

struct RigidityAtPoint {
    AInvariants ai;
    Jet2 n1a1, n2a1, n1a2, n2a2;
    Big jac_det, jac_scale;
};

inline RigidityAtPoint rigidity_core(const WebFrame &fr)
{
    RigidityAtPoint r{a_invariants(fr), {}, {}, {}, {}, {}, {}};
    r.n1a1 = nabla(fr, r.ai, r.ai.a1, 1);
    r.n2a1 = nabla(fr, r.ai, r.ai.a1, 2);
    r.n1a2 = nabla(fr, r.ai, r.ai.a2, 1);
    r.n2a2 = nabla(fr, r.ai, r.ai.a2, 2);
    Big p = r.ai.a1.at(1, 0) * r.ai.a2.at(0, 1), q = r.ai.a1.at(0, 1) * r.ai.a2.at(1, 0);
    r.jac_det = p - q;
    r.jac_scale = abs(p) + abs(q);
    return r;
}

inline Big relative_sum(const std::vector<Big> &terms)
{
    Big s, m;
    for (auto &t : terms) {
        s += t;
        m += abs(t);
    }
    return m.is_zero() ? Big() : abs(s) / m;
}

} // namespace detail

// the frame factory lets the dependence check rebuild frames at nearby points
template <class FrameAt>
RigidityReport rigidity_report_with(FrameAt frame_at, const PointRef &p, int order)
{
    WebFrame fr = frame_at(p, order);
    if (fr.K.order() < 4)
        throw std::invalid_argument("rigidity needs K to order 4");
    auto core = detail::rigidity_core(fr);
    const auto &ai = core.ai;
    RigidityReport rep;
    rep.a1 = ai.a1.value();
    rep.a2 = ai.a2.value();
    rep.normalization_residual = core.n1a2.value() - core.n2a1.value() - Big(1);
    rep.jacobian[0][0] = ai.a1.at(1, 0);
    rep.jacobian[0][1] = ai.a1.at(0, 1);
    rep.jacobian[1][0] = ai.a2.at(1, 0);
    rep.jacobian[1][1] = ai.a2.at(0, 1);
    rep.jacobian_det = core.jac_det;
    rep.nabla_a[0][0] = core.n1a1.value();
    rep.nabla_a[0][1] = core.n1a2.value();
    rep.nabla_a[1][0] = core.n2a1.value();
    rep.nabla_a[1][1] = core.n2a2.value();
    Big jp = core.n1a1.value() * core.n2a2.value(), jq = core.n1a2.value() * core.n2a1.value();
    rep.J = jp - jq;
    rep.J_scale = abs(jp) + abs(jq);
    Big tol = zero_eps();
    bool j_small = abs(rep.J) <= tol * rep.J_scale;

    // dependence must persist at four nearby points, not only at an isolated zero of J
    bool dep = abs(core.jac_det) <= tol * core.jac_scale;
    Big h = Big(mpq_class(1, 1000));
    const Big offs[4][2] = {{h, Big()}, {-h, Big()}, {Big(), h}, {Big(), -h}};
    for (int k = 0; k < 4 && dep; ++k) {
        try {
            WebFrame near = frame_at(make_point(p->x + offs[k][0], p->y + offs[k][1]), std::min(order, 6));
            auto c = detail::rigidity_core(near);
            dep = abs(c.jac_det) <= tol * c.jac_scale;
        } catch (const std::exception &) {
            dep = false;
        }
    }
    rep.functionally_dependent = dep;

    // third-order chains of nabla applied to a2
    const Jet2 &a1 = ai.a1, &a2 = ai.a2;
    const Jet2 &n1 = core.n1a2, &n2 = core.n2a2;
    Jet2 n1n2 = nabla(fr, ai, n2, 1), n2n1 = nabla(fr, ai, n1, 2);
    Jet2 n11 = nabla(fr, ai, n1, 1), n22 = nabla(fr, ai, n2, 2);
    Jet2 n2n1n2 = nabla(fr, ai, n1n2, 2), n1n22 = nabla(fr, ai, n22, 1);
    auto v = [](const Jet2 &j) { return j.value(); };
    rep.relation_residuals[0] = detail::relative_sum({v(a2) * v(n1) * v(n1), v(n1n2) * v(n1),
                                                      -(v(a1) * v(n1) * v(n2)), -(v(n11) * v(n2))});
    rep.relation_residuals[1] = detail::relative_sum({v(a2) * v(n2) * v(n1), v(n22) * v(n1),
                                                      -(v(a1) * v(n2) * v(n2)), -(v(n2n1) * v(n2))});
    // compatibility of the two first-order equations for the automorphism scale, reduced with the second relation
    rep.relation_residuals[2] = detail::relative_sum({v(n2n1n2), -v(n1n22), -(v(a2) * v(n1n2)), v(a1) * v(n22)});
    bool rel_ok = true;
    for (auto &r : rep.relation_residuals)
        rel_ok = rel_ok && r <= tol;
    if (!j_small)
        rep.classification = RigidityClass::InfinitesimallyRigid;
    else if (rel_ok)
        rep.classification = RigidityClass::AdmitsAutomorphismCandidate;
    else
        rep.classification = RigidityClass::Undetermined;
    return rep;
}

inline RigidityReport rigidity_report(const Expr &f, const PointRef &p, int order = 8)
{
    return rigidity_report_with([&](const PointRef &q, int n) { return web_frame(f, q, n); }, p, order);
}

struct LinearityResidual {
    Big value;   // f_y^2 f_xx - 2 f_x f_y f_xy + f_x^2 f_yy
    Big scale;   // sum of the magnitudes of its three terms
    Big determinant;
};

inline LinearityResidual linearity_residual(const Jet2 &f)
{
    Big fx = f.derivative(1, 0), fy = f.derivative(0, 1);
    Big fxx = f.derivative(2, 0), fxy = f.derivative(1, 1), fyy = f.derivative(0, 2);
    Big t1 = fy * fy * fxx, t2 = Big(2) * fx * fy * fxy, t3 = fx * fx * fyy;
    LinearityResidual r;
    r.value = t1 - t2 + t3;
    r.scale = abs(t1) + abs(t2) + abs(t3);
    // bordered Hessian det [[fxx, fxy, fx], [fxy, fyy, fy], [fx, fy, 0]] expanded along the first row
    r.determinant = -(fxx * fy * fy) + fxy * fy * fx + fx * (fxy * fy - fyy * fx);
    return r;
}

inline LinearityResidual linearity_residual(const Expr &f, const PointRef &p)
{
    return linearity_residual(jet_lift(f, p, 2));
}

// Euler web: solve y + w0(lambda) x - lambda = 0, then w = w0(lambda) and f = F(w)
class NoRoot : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct EulerCandidate {
    Big lambda, w, f;
};

class CausticAmbiguity : public std::runtime_error {
public:
    CausticAmbiguity(const std::string &msg, std::vector<EulerCandidate> c)
        : std::runtime_error(msg), candidates(std::move(c)) {}
    std::vector<EulerCandidate> candidates;
};

struct EulerWebConfig {
    Big window = Big(1000);   // search lambda in [-window, window]
    int samples = 20000;
    int branch = -1;          // index into the sorted roots; -1 demands uniqueness
};

// rewrite a one-variable expression (in x or y) as a function of x
inline Expr as_function_of_x(const Expr &e)
{
    if (mentions(e, Op::X) && mentions(e, Op::Y))
        throw std::invalid_argument("expected a function of one variable: " + to_string(e));
    return substitute(e, mk::x(), mk::x());
}

namespace detail {

inline bool eval_1d(const Expr &g, const Big &t, Big &out)
{
    try {
        out = eval(g, t, Big());
        return out.is_finite();
    } catch (const DomainError &) {
        return false;
    }
}

} // namespace detail

struct EulerWebResult {
    std::vector<EulerCandidate> roots;   // sorted by lambda
    EulerCandidate chosen;
};

inline EulerWebResult euler_web_eval(const Expr &w0_src, const Expr *F_src, const Big &x, const Big &y,
                                     const EulerWebConfig &cfg = {})
{
    Expr w0 = as_function_of_x(w0_src);
    Expr F = F_src ? as_function_of_x(*F_src) : mk::x();
    Expr dw0 = diff(w0, Var::X);
    auto g = [&](const Big &lam, Big &out) {
        Big w;
        if (!detail::eval_1d(w0, lam, w))
            return false;
        out = y + w * x - lam;
        return true;
    };
    // sinh spacing resolves small and large roots alike
    Big tmax = log(cfg.window + sqrt(cfg.window * cfg.window + Big(1)));
    std::vector<Big> found;
    Big prev_t, prev_v;
    bool have_prev = false;
    for (int k = 0; k <= cfg.samples; ++k) {
        Big t = -tmax + Big(2) * tmax * Big(static_cast<long>(k)) / Big(static_cast<long>(cfg.samples));
        Big lam = (exp(t) - exp(-t)) / Big(2), v;
        if (!g(lam, v)) {
            have_prev = false;
            continue;
        }
        if (v.is_zero()) {
            found.push_back(lam);
            have_prev = false;
            continue;
        }
        if (have_prev && v.sign() != prev_v.sign()) {
            Big lo = (exp(prev_t) - exp(-prev_t)) / Big(2), hi = lam, glo = prev_v;
            for (int it = 0; it < 80; ++it) {
                Big mid = ldexp(lo + hi, -1), gm;
                if (!g(mid, gm))
                    break;
                if (gm.sign() == glo.sign()) {
                    lo = mid;
                    glo = gm;
                } else {
                    hi = mid;
                }
            }
            Big r = ldexp(lo + hi, -1);
            for (int it = 0; it < 40; ++it) {
                Big gv, dv;
                if (!g(r, gv) || !detail::eval_1d(dw0, r, dv))
                    break;
                Big slope = dv * x - Big(1);
                if (slope.is_zero())
                    break;
                Big nr = r - gv / slope;
                if (nr == r)
                    break;
                r = nr;
            }
            found.push_back(r);
        }
        prev_t = t;
        prev_v = v;
        have_prev = true;
    }
    if (found.empty())
        throw NoRoot("no root of y + w0(lambda) x - lambda in the search window");
    std::sort(found.begin(), found.end());
    EulerWebResult res;
    for (auto &lam : found) {
        EulerCandidate c{lam, eval(w0, lam, Big()), Big()};
        try {
            c.f = eval(F, c.w, Big());
        } catch (const DomainError &) {
            continue;
        }
        res.roots.push_back(c);
    }
    if (res.roots.empty())
        throw NoRoot("F is undefined at every root");
    if (cfg.branch >= 0) {
        if (cfg.branch >= static_cast<int>(res.roots.size()))
            throw NoRoot("requested branch does not exist");
        res.chosen = res.roots[cfg.branch];
    } else if (res.roots.size() > 1) {
        throw CausticAmbiguity(std::to_string(res.roots.size()) + " roots in the search window", res.roots);
    } else {
        res.chosen = res.roots[0];
    }
    return res;
}

// jet of the Euler web function around a chosen root, by Newton iteration on jets
inline Jet2 euler_web_jet(const Expr &w0_src, const Expr *F_src, const PointRef &p, int order,
                          const EulerWebConfig &cfg = {})
{
    Expr w0 = as_function_of_x(w0_src);
    Expr F = F_src ? as_function_of_x(*F_src) : mk::x();
    Expr dw0 = diff(w0, Var::X);
    EulerWebResult r = euler_web_eval(w0_src, F_src, p->x, p->y, cfg);
    Jet2 X = Jet2::var_x(p, order), Y = Jet2::var_y(p, order);
    Jet2 lam = Jet2::constant(p, order, r.chosen.lambda);
    // each step doubles the number of correct Taylor orders
    for (int got = 1; got <= 2 * (order + 1); got *= 2) {
        Jet2 w = lift_at(w0, lam, lam);
        Jet2 gv = Y + w * X - lam;
        Jet2 slope = lift_at(dw0, lam, lam) * X - Jet2::constant(p, order, Big(1));
        lam = lam - gv / slope;
    }
    Jet2 w = lift_at(w0, lam, lam);
    return lift_at(F, w, w);
}

} // namespace weblin

#endif
