#ifndef WEBLIN_OBSTRUCTION_HPP
#define WEBLIN_OBSTRUCTION_HPP

#include "big.hpp"
#include "expr.hpp"
#include "jet.hpp"
#include "upoly.hpp"
#include "webcalc.hpp"

#include <weblin/tables_data.hpp>

#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace weblin {

// ---------------------------------------------------------------- tables

struct TableRecord {
    std::string target;
    mpq_class coef;
    int upow = 0;
    std::vector<std::pair<std::string, int>> symbols;
};

struct CoefficientTable {
    std::vector<TableRecord> records;
    std::map<std::string, std::vector<size_t>> by_target;
    std::string hash;   // FNV-1a 64 of the source text, hex

    bool has(const std::string &t) const { return by_target.count(t) > 0; }
    std::vector<const TableRecord *> of(const std::string &t) const
    {
        auto it = by_target.find(t);
        if (it == by_target.end())
            throw std::out_of_range("table has no records for " + t);
        std::vector<const TableRecord *> r;
        for (size_t i : it->second)
            r.push_back(&records[i]);
        return r;
    }
};

class TableError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline std::string fnv1a_hex(const std::string &text)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream o;
    o << std::hex;
    o.width(16);
    o.fill('0');
    o << h;
    return o.str();
}

inline CoefficientTable parse_table(const std::string &text)
{
    CoefficientTable t;
    t.hash = fnv1a_hex(text);
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        std::istringstream ls(line);
        TableRecord r;
        std::string coef;
        if (!(ls >> r.target))
            continue;
        if (!(ls >> coef >> r.upow))
            throw TableError("table line " + std::to_string(lineno) + ": expected coefficient and u-power");
        try {
            r.coef = parse_rational(coef);
        } catch (const std::exception &) {
            throw TableError("table line " + std::to_string(lineno) + ": bad coefficient " + coef);
        }
        std::string sym;
        while (ls >> sym) {
            auto caret = sym.find('^');
            if (caret == std::string::npos || caret == 0)
                throw TableError("table line " + std::to_string(lineno) + ": bad factor " + sym);
            r.symbols.emplace_back(sym.substr(0, caret), std::stoi(sym.substr(caret + 1)));
        }
        t.by_target[r.target].push_back(t.records.size());
        t.records.push_back(std::move(r));
    }
    return t;
}

inline std::string read_text_file(const std::string &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw TableError("cannot open " + path);
    std::ostringstream o;
    o << in.rdbuf();
    return o.str();
}

inline const CoefficientTable &builtin_coefficients()
{
    static const CoefficientTable t = parse_table(embedded::coefficients);
    return t;
}

inline const CoefficientTable &builtin_delta_fields()
{
    static const CoefficientTable t = parse_table(embedded::delta_fields);
    return t;
}

inline bool is_k_symbol(const std::string &s)
{
    if (s.empty() || s[0] != 'K')
        return false;
    for (size_t i = 1; i < s.size(); ++i)
        if (s[i] != '1' && s[i] != '2')
            return false;
    return true;
}

inline std::string k_symbol_word(const std::string &s) { return s.substr(1); }

// ---------------------------------------------------------------- weighted polynomials in u

// sum_k c_k u^k with weight(c_k) = W - k
struct WPoly {
    std::vector<WeightedJet> c;
    int W = 0;
    PointRef base;
    int order = 0;

    WPoly() = default;
    WPoly(PointRef b, int ord, int weight) : W(weight), base(std::move(b)), order(ord) {}

    WeightedJet zero_coef(int k) const { return {Jet2(base, order), W - k}; }
    int size() const { return static_cast<int>(c.size()); }
    void ensure(int n)
    {
        while (size() < n)
            c.push_back(zero_coef(size()));
    }
    WeightedJet coef(int k) const { return k < size() ? c[k] : zero_coef(k); }

    UPoly values() const
    {
        UPoly p;
        for (auto &x : c)
            p.c.push_back(x.value());
        return p;
    }
    // u-coefficients of the (i,j) Taylor component of each coefficient
    UPoly component(int i, int j) const
    {
        UPoly p;
        for (auto &x : c)
            p.c.push_back(x.jet.at(i, j));
        return p;
    }
    bool homogeneous() const
    {
        for (int k = 0; k < size(); ++k)
            if (c[k].weight != W - k)
                return false;
        return true;
    }
};

inline WPoly operator+(const WPoly &a, const WPoly &b)
{
    if (a.W != b.W)
        throw std::logic_error("adding polynomials of different weight");
    WPoly r(a.base, std::min(a.order, b.order), a.W);
    int n = std::max(a.size(), b.size());
    for (int k = 0; k < n; ++k)
        r.c.push_back(a.coef(k) + b.coef(k));
    return r;
}

inline WPoly operator-(const WPoly &a)
{
    WPoly r = a;
    for (auto &x : r.c)
        x = -x;
    return r;
}

inline WPoly operator-(const WPoly &a, const WPoly &b) { return a + (-b); }

inline WPoly operator*(const WPoly &a, const WPoly &b)
{
    WPoly r(a.base, std::min(a.order, b.order), a.W + b.W);
    if (a.c.empty() || b.c.empty())
        return r;
    r.ensure(a.size() + b.size() - 1);
    for (int i = 0; i < a.size(); ++i)
        for (int j = 0; j < b.size(); ++j)
            r.c[i + j] = r.c[i + j] + a.c[i] * b.c[j];
    return r;
}

inline WPoly operator*(const WeightedJet &s, const WPoly &a)
{
    WPoly r(a.base, std::min(a.order, s.order()), a.W + s.weight);
    for (auto &x : a.c)
        r.c.push_back(s * x);
    return r;
}

inline WPoly operator*(const Big &s, const WPoly &a)
{
    WPoly r = a;
    for (auto &x : r.c)
        x = s * x;
    return r;
}

inline WPoly d_du(const WPoly &a)
{
    WPoly r(a.base, a.order, a.W - 1);
    for (int k = 1; k < a.size(); ++k)
        r.c.push_back(Big(static_cast<long>(k)) * a.c[k]);
    return r;
}

// u -> -u
inline WPoly flip_u(const WPoly &a)
{
    WPoly r = a;
    for (int k = 1; k < r.size(); k += 2)
        r.c[k] = -r.c[k];
    return r;
}

// coefficient-wise weighted covariant derivative, u held fixed
inline WPoly cov_d_coefficients(const WebFrame &fr, const WPoly &a, int i)
{
    WPoly r(a.base, a.order - 1, a.W + 1);
    for (auto &x : a.c)
        r.c.push_back(cov_d(fr, x, i));
    return r;
}

inline int trimmed_degree(const WPoly &p, const Big &eps) { return trimmed(p.values(), eps).degree(); }

// ---------------------------------------------------------------- K tables at working order

inline KDerivs truncate(const KDerivs &kd, int order)
{
    KDerivs r;
    r.max_length = kd.max_length;
    for (auto &[w, v] : kd.entries)
        if (v.order() >= order)
            r.entries[w] = {v.jet.truncated(order), v.weight};
    return r;
}

inline std::string swap_word(const std::string &w)
{
    int ones = 0, twos = 0;
    for (char ch : w)
        (ch == '1' ? twos : ones)++;
    return k_word(ones, twos);
}

// K_sigma -> -K_{sigma with 1 and 2 exchanged}; u -> -u is applied separately by flip_u
inline KDerivs tau(const KDerivs &kd)
{
    KDerivs r;
    r.max_length = kd.max_length;
    for (auto &[w, v] : kd.entries)
        r.entries[swap_word(w)] = -v;
    return r;
}

// ---------------------------------------------------------------- table evaluation

// evaluates table targets on a K table; targets may reference other targets
class TableEvaluator {
public:
    TableEvaluator(const CoefficientTable &table, KDerivs kd) : table_(table), kd_(std::move(kd))
    {
        const auto &k = kd_.at("");
        base_ = k.jet.base();
        order_ = k.order();
        for (auto &[w, v] : kd_.entries)
            order_ = std::min(order_, v.order());
    }

    const WPoly &get(const std::string &target)
    {
        auto it = cache_.find(target);
        if (it != cache_.end())
            return it->second;
        if (in_progress_.count(target))
            throw TableError("cyclic table reference at " + target);
        in_progress_.insert(target);
        WPoly v = build(target);
        in_progress_.erase(target);
        return cache_.emplace(target, std::move(v)).first->second;
    }

    int weight_of(const std::string &sym)
    {
        if (is_k_symbol(sym))
            return 2 + static_cast<int>(sym.size()) - 1;
        return get(sym).W;
    }

    const KDerivs &k_table() const { return kd_; }

private:
    WeightedJet k_power(const std::string &sym, int pw)
    {
        auto key = std::make_pair(sym, pw);
        auto it = kpow_.find(key);
        if (it != kpow_.end())
            return it->second;
        WeightedJet v = kd_.at(k_symbol_word(sym));
        v.jet = v.jet.truncated(order_);
        WeightedJet r;
        if (pw == 0) {
            r = {Jet2::constant(base_, order_, Big(1)), 0};
        } else {
            WeightedJet b = pw > 0 ? v : WeightedJet{reciprocal(v.jet), -v.weight};
            r = b;
            for (int i = 1; i < std::abs(pw); ++i)
                r = r * b;
        }
        kpow_.emplace(key, r);
        return r;
    }

    WPoly build(const std::string &target)
    {
        // group records by their product of polynomial-valued symbols
        std::map<std::vector<std::pair<std::string, int>>, WPoly> groups;
        std::optional<int> W;
        for (const TableRecord *r : table_.of(target)) {
            std::vector<std::pair<std::string, int>> poly_syms;
            WeightedJet scalar{Jet2::constant(base_, order_, Big(r->coef)), 0};
            int w = r->upow;
            for (auto &[sym, pw] : r->symbols) {
                if (is_k_symbol(sym)) {
                    scalar = scalar * k_power(sym, pw);
                    w += pw * weight_of(sym);
                } else {
                    if (pw < 1)
                        throw TableError("negative power of polynomial symbol " + sym);
                    poly_syms.emplace_back(sym, pw);
                    w += pw * weight_of(sym);
                }
            }
            if (!W)
                W = w;
            else if (*W != w)
                throw TableError("weight-inhomogeneous record in " + target);
            int sw = r->upow + scalar.weight;
            auto it = groups.find(poly_syms);
            if (it == groups.end())
                it = groups.emplace(poly_syms, WPoly(base_, order_, sw)).first;
            it->second.ensure(r->upow + 1);
            it->second.c[r->upow] = it->second.c[r->upow] + scalar;
        }
        WPoly total(base_, order_, *W);
        for (auto &[syms, scal] : groups) {
            WPoly term = scal;
            for (auto &[sym, pw] : syms)
                for (int i = 0; i < pw; ++i)
                    term = term * get(sym);
            total = total + term;
        }
        return total;
    }

    const CoefficientTable &table_;
    KDerivs kd_;
    PointRef base_;
    int order_ = 0;
    std::map<std::string, WPoly> cache_;
    std::set<std::string> in_progress_;
    std::map<std::pair<std::string, int>, WeightedJet> kpow_;
};

// ---------------------------------------------------------------- compatibility system for a candidate mu

struct MuJets {
    WeightedJet u, p1, p2, p11, p12, p22;
};

inline MuJets mu_derivatives(const WebFrame &fr, const Jet2 &mu)
{
    MuJets m;
    m.u = {mu, 1};
    m.p1 = cov_d(fr, m.u, 1);
    m.p2 = cov_d(fr, m.u, 2);
    m.p11 = cov_d(fr, m.p1, 1);
    m.p22 = cov_d(fr, m.p2, 2);
    m.p12 = Big(mpq_class(1, 2)) * (cov_d(fr, m.p2, 1) + cov_d(fr, m.p1, 2));
    return m;
}

struct Residual {
    Big value, scale;
    Big relative() const { return scale.is_zero() ? abs(value) : abs(value) / scale; }
};

namespace detail {

struct TermSum {
    Big value, scale;
    void add(const Big &t)
    {
        value += t;
        scale += abs(t);
    }
    Residual done() const { return {value, scale}; }
};

inline Big kv(const KDerivs &kd, const char *w) { return kd.at(w).value(); }

} // namespace detail

struct CompatResiduals {
    Residual I1, I2, I12;
};

// I1, I2 and the reduced bracket I12 at the point
inline CompatResiduals compat_functions(const KDerivs &kd, const Big &u, const Big &p1, const Big &p2, const Big &p11,
                                        const Big &p12, const Big &p22)
{
    using detail::kv;
    Big K = kv(kd, ""), K1 = kv(kd, "1"), K2 = kv(kd, "2");
    CompatResiduals r;
    detail::TermSum a, b, c;
    for (const Big &t : {p11, Big(-2) * p12, -(u * p1), Big(2) * u * p2, K1})
        a.add(t);
    for (const Big &t : {p22, Big(-2) * p12, Big(-2) * u * p1, u * p2, K2})
        b.add(t);
    for (const Big &t : {Big(24) * K * p12, Big(6) * (Big(2) * K1 - K2) * p1, Big(6) * (Big(2) * K2 - K1) * p2,
                         Big(24) * K * u * (p1 - p2), Big(3) * u * (kv(kd, "11") - kv(kd, "12") + kv(kd, "22")),
                         Big(-8) * K * (K1 + K2), Big(3) * (kv(kd, "112") - kv(kd, "122")), Big(-3) * K * u * u * u})
        c.add(t);
    r.I1 = a.done();
    r.I2 = b.done();
    r.I12 = c.done();
    return r;
}

inline CompatResiduals compat_functions(const WebFrame &fr, const KDerivs &kd, const Jet2 &mu)
{
    auto m = mu_derivatives(fr, mu);
    return compat_functions(kd, m.u.value(), m.p1.value(), m.p2.value(), m.p11.value(), m.p12.value(), m.p22.value());
}

struct SecondDerivatives {
    Big p11, p12, p22;
};

// second derivatives solved from I1 = I2 = I12 = 0
inline SecondDerivatives pij_system(const KDerivs &kd, const Big &u, const Big &p1, const Big &p2)
{
    using detail::kv;
    Big K = kv(kd, ""), K1 = kv(kd, "1"), K2 = kv(kd, "2");
    if (abs(K) <= zero_eps() * (abs(K1) + abs(K2) + Big(1)))
        throw std::domain_error("curvature below the zero threshold");
    Big common = Big(3) * K * u * u * u + Big(6) * (K2 - Big(2) * K1) * p1 + Big(6) * (K1 - Big(2) * K2) * p2 -
                 Big(3) * u * (kv(kd, "11") - kv(kd, "12") + kv(kd, "22")) + Big(3) * (kv(kd, "122") - kv(kd, "112"));
    SecondDerivatives s;
    s.p12 = (common + Big(24) * K * u * (p2 - p1) + Big(8) * K * (K1 + K2)) / (Big(24) * K);
    s.p11 = (common - Big(12) * K * u * p1 + Big(4) * K * (Big(2) * K2 - K1)) / (Big(12) * K);
    s.p22 = (common + Big(12) * K * u * p2 + Big(4) * K * (Big(2) * K1 - K2)) / (Big(12) * K);
    return s;
}

struct GResiduals {
    Residual G1, G2, G11, G12s, G12a, G22;
};

// the first- and second-order compatibility polynomials at (u, p1, p2), with G1, G2 terms dropped
inline GResiduals g_residuals(TableEvaluator &ev, const Big &u, const Big &p1, const Big &p2)
{
    const KDerivs &kd = ev.k_table();
    using detail::kv;
    Big K = kv(kd, ""), K1 = kv(kd, "1"), K2 = kv(kd, "2");
    auto at = [&](const char *t) { return ev.get(t).values()(u); };
    auto quad = [&](const Big &a, const Big &b, const Big &c, const char *l1, const char *l2, const char *l0) {
        detail::TermSum s;
        for (const Big &t : {a * p1 * p1, b * p1 * p2, c * p2 * p2, at(l1) * p1, at(l2) * p2, at(l0)})
            s.add(t);
        return s.done();
    };
    GResiduals g;
    g.G1 = quad(Big(1), Big(-2), Big(0), "A11", "A12", "A10");
    g.G2 = quad(Big(0), Big(-2), Big(1), "A21", "A22", "A20");
    Big k4 = Big(4) * K, k8 = Big(8) * K;
    g.G11 = quad(-(K1 + K2) / k4, (Big(7) * K1 - Big(8) * K2) / k4, (Big(2) * K2 - K1) / K, "A111", "A112", "A110");
    g.G12s = quad((Big(8) * K1 - Big(7) * K2) / k8, (K1 + K2) / (Big(2) * K), -(Big(7) * K1 - Big(8) * K2) / k8,
                  "A121", "A122", "A120");
    g.G12a = quad(Big(0), Big(mpq_class(39, 4)) * u, Big(0), "B121", "B122", "B120");
    g.G22 = quad((Big(2) * K1 - K2) / K, (Big(7) * K2 - Big(8) * K1) / k4, -(K1 + K2) / k4, "A221", "A222", "A220");
    return g;
}

struct AGResiduals {
    Residual r[4];
};

// deformation-tensor equations with g1 = g2 = H
inline AGResiduals ag_residuals(const WebFrame &fr, const Jet2 &l1, const Jet2 &l2, const Jet2 &mu)
{
    auto v = [](const Jet2 &j) { return j.value(); };
    Big H = fr.H.value(), K = fr.K.value();
    Big L1 = v(l1), L2 = v(l2), M = v(mu);
    Big d1l1 = v(fr.d1(l1)), d2l1 = v(fr.d2(l1)), d1l2 = v(fr.d1(l2)), d2l2 = v(fr.d2(l2));
    Big d1m = v(fr.d1(mu)), d2m = v(fr.d2(mu));
    AGResiduals a;
    detail::TermSum s[4];
    for (const Big &t : {Big(2) * d2l1, -d1l2, d2m, -K, -(L1 * L2), -(H * (Big(2) * L1 + M)), H * L2})
        s[0].add(t);
    for (const Big &t : {d2l2, -(L2 * H), -(L2 * L2), L2 * M})
        s[1].add(t);
    for (const Big &t : {d1l1, -(L1 * H), -(L1 * L1), -(L1 * M)})
        s[2].add(t);
    for (const Big &t : {d2l1, Big(-2) * d1l2, d1m, -K, L1 * L2, -(L1 * H), H * (Big(2) * L2 - M)})
        s[3].add(t);
    for (int i = 0; i < 4; ++i)
        a.r[i] = s[i].done();
    return a;
}

inline AGResiduals ag_residuals(const Expr &f, const Expr &l1, const Expr &l2, const Expr &mu, const PointRef &p)
{
    WebFrame fr = web_frame(f, p, 4);
    return ag_residuals(fr, jet_lift(l1, p, 2), jet_lift(l2, p, 2), jet_lift(mu, p, 2));
}

// ---------------------------------------------------------------- V and Q polynomials

struct QSet {
    WPoly V0, V1, V2, V11, V12, V22;
    WPoly Qa, Qs, Q12, Q1, Q2, L, S;
    bool has_first_derivatives = false;   // Q1, Q2 need coefficient jets of order >= 1
};

// Q1, Q2 are formed only when a frame is given and the coefficient jets have order >= 1
inline QSet q_polys(TableEvaluator &ev, const WebFrame *fr = nullptr)
{
    QSet q;
    q.V0 = ev.get("V0");
    q.V1 = ev.get("V1");
    q.V2 = ev.get("V2");
    q.V11 = ev.get("V11");
    q.V12 = ev.get("V12");
    q.V22 = ev.get("V22");
    Big half(mpq_class(1, 2));
    q.Qa = half * (q.V0 * (q.V11 - q.V22) - q.V1 * q.V1 + q.V2 * q.V2);
    q.Qs = half * (q.V0 * (q.V11 + q.V22) - q.V1 * q.V1 - q.V2 * q.V2);
    q.Q12 = q.V0 * q.V12 - q.V1 * q.V2;
    const KDerivs &kd = ev.k_table();
    if (fr && q.Qa.order >= 1) {
        WPoly dQa = d_du(q.Qa);
        q.Q1 = dQa * q.V1 + q.V0 * cov_d_coefficients(*fr, q.Qa, 1);
        q.Q2 = dQa * q.V2 + q.V0 * cov_d_coefficients(*fr, q.Qa, 2);
        q.has_first_derivatives = true;
    }
    q.L = q.Qs - Big(2) * q.Q12;
    WeightedJet k1 = kd.at("1"), k2 = kd.at("2");
    q.S = (k1 + k2) * q.L - Big(3) * ((k2 - k1) * q.Qa);
    return q;
}

// delta-hat of the Q_a coefficients by the chain rule on K symbols, through dual numbers seeded
// with the covariant-derivative fields; returns the u-coefficients of delta-hat_1 and delta-hat_2
struct OracleDerivatives {
    UPoly d1Qa, d2Qa, Q1, Q2;
};

inline OracleDerivatives delta_hat_K_oracle(const KDerivs &kd, const CoefficientTable &coeffs,
                                            const CoefficientTable &fields, int max_length = 5)
{
    auto dual_base = make_point(Big(), Big());
    auto field_value = [&](const std::string &name) {
        Big s;
        for (const TableRecord *r : fields.of(name)) {
            Big t(r->coef);
            for (auto &[sym, pw] : r->symbols) {
                Big v = kd.at(k_symbol_word(sym)).value();
                t *= pw >= 0 ? pow(v, static_cast<long>(pw)) : Big(1) / pow(v, static_cast<long>(-pw));
            }
            s += t;
        }
        return s;
    };
    KDerivs dual;
    dual.max_length = max_length;
    for (auto &[w, v] : kd.entries) {
        if (static_cast<int>(w.size()) > max_length)
            continue;
        Jet2 j(dual_base, 1);
        j.at(0, 0) = v.value();
        j.at(1, 0) = field_value("d1:K" + w);
        j.at(0, 1) = field_value("d2:K" + w);
        dual.entries[w] = {j, v.weight};
    }
    TableEvaluator ev(coeffs, dual);
    WPoly V0 = ev.get("V0"), V1 = ev.get("V1"), V2 = ev.get("V2");
    WPoly V11 = ev.get("V11"), V22 = ev.get("V22");
    WPoly Qa = Big(mpq_class(1, 2)) * (V0 * (V11 - V22) - V1 * V1 + V2 * V2);
    OracleDerivatives o;
    o.d1Qa = Qa.component(1, 0);
    o.d2Qa = Qa.component(0, 1);
    UPoly dQa = derivative(Qa.values()), v0 = V0.values();
    o.Q1 = dQa * V1.values() + v0 * o.d1Qa;
    o.Q2 = dQa * V2.values() + v0 * o.d2Qa;
    return o;
}

// ---------------------------------------------------------------- verdict

enum class Verdict { NotLinearizable, Linearizable, Parallelizable, DegenerateWeb, Indeterminate };

inline const char *to_string(Verdict v)
{
    switch (v) {
    case Verdict::NotLinearizable: return "NotLinearizable";
    case Verdict::Linearizable: return "Linearizable";
    case Verdict::Parallelizable: return "Parallelizable";
    case Verdict::DegenerateWeb: return "DegenerateWeb";
    default: return "Indeterminate";
    }
}

enum class InvariantMode { None, Order8, Full };

struct VerdictConfig {
    int precision = 256;
    int jet_order = 12;
    std::optional<Big> tol;            // relative zero threshold; default 2^(-p/2)
    InvariantMode invariants = InvariantMode::Order8;
    std::vector<int> escalation{512, 1024};
    const CoefficientTable *table = nullptr;
};

struct NamedPoly {
    std::string name;
    UPoly poly;
    int degree = -1;
    int weight = 0;
};

struct LinearizabilityReport {
    Big x, y;
    Verdict verdict = Verdict::Indeterminate;
    std::string reason;
    int precision = 0;                 // precision of the reported pass
    std::vector<int> precision_trail;
    Big tol;
    Big u_scale;                       // GCD and roots are found in v = u / u_scale
    std::string table_hash;

    Big K, K1, K2;
    std::vector<NamedPoly> polys;      // V's, Q's, L, S
    std::vector<std::pair<std::string, Big>> resultants;
    std::map<std::vector<int>, Big> invariants;
    std::map<std::vector<int>, Big> invariant_scales;
    std::string invariant_mode;

    UPoly gcd;
    int gcd_degree = -1;
    Big gcd_worst_ratio;
    std::vector<Big> roots;            // real candidate values of u, zero excluded
    std::vector<Big> excluded_zero_roots;
    int root_count = 0;
    int bound = 0;
    std::vector<std::string> diagnostics;

    const NamedPoly *find(const std::string &n) const
    {
        for (auto &p : polys)
            if (p.name == n)
                return &p;
        return nullptr;
    }
};

// p(s v) as a polynomial in v
inline UPoly rescaled(const UPoly &p, const Big &s)
{
    UPoly r = p;
    Big f(1);
    for (auto &c : r.c) {
        c *= f;
        f *= s;
    }
    return r;
}

// resultant in u computed through v = u / s: R_u = R_v s^(-mn)
inline Big resultant_scaled(const UPoly &f, const UPoly &g, const Big &s)
{
    long mn = static_cast<long>(f.degree()) * g.degree();
    return resultant(rescaled(f, s), rescaled(g, s)) * pow(s, -mn);
}

// real roots of the common divisor, with roots at u = 0 split off
struct CandidateRoots {
    std::vector<Big> roots, zeros;
    bool ill_conditioned = false;
};

inline CandidateRoots candidate_roots(const UPoly &g, const Big &tol)
{
    CandidateRoots c;
    if (g.degree() < 1)
        return c;
    auto rr = real_roots(g);
    c.ill_conditioned = rr.ill_conditioned;
    Big scale(1);
    for (auto &r : rr.roots)
        scale = max(scale, abs(r.value));
    for (auto &r : rr.roots) {
        if (abs(r.value) <= tol * scale)
            c.zeros.push_back(r.value);
        else
            c.roots.push_back(r.value);
    }
    return c;
}

namespace detail {

struct PassOutcome {
    LinearizabilityReport rep;
    bool ambiguous = false;
    std::string ambiguity;
};

inline void expect_degree(LinearizabilityReport &rep, const std::string &name, int got, int want, bool at_most)
{
    bool ok = at_most ? got <= want : got == want;
    if (!ok)
        rep.diagnostics.push_back("deg " + name + " = " + std::to_string(got) + (at_most ? ", expected <= " : ", expected ") +
                                  std::to_string(want));
}

inline PassOutcome verdict_pass(const std::function<Jet2(const PointRef &, int)> &lift, const Big &x, const Big &y,
                                const VerdictConfig &cfg, int bits)
{
    PrecisionScope ps(bits);
    PassOutcome out;
    auto &rep = out.rep;
    rep.precision = bits;
    rep.tol = cfg.tol ? Big(*cfg.tol) : default_trim_eps();
    const CoefficientTable &table = cfg.table ? *cfg.table : builtin_coefficients();
    rep.table_hash = table.hash;
    PointRef p = make_point(Big(x), Big(y));
    rep.x = p->x;
    rep.y = p->y;

    WebFrame fr;
    try {
        fr = web_frame(lift(p, cfg.jet_order));
    } catch (const weblin::DegenerateWeb &e) {
        rep.verdict = Verdict::DegenerateWeb;
        rep.reason = e.what();
        return out;
    }
    rep.K = fr.K.value();
    if (!fr.K_nonzero) {
        rep.verdict = Verdict::Parallelizable;
        rep.reason = "curvature vanishes at the point";
        return out;
    }
    KDerivs full = k_table(fr, 6, 0);
    rep.K1 = full.at("1").value();
    rep.K2 = full.at("2").value();
    if (full.max_length < 5)
        throw std::invalid_argument("jet order too low for the obstruction polynomials");
    int work = std::min(1, full.at("11112").order());
    KDerivs kd = truncate(full, work);
    TableEvaluator ev(table, kd);
    QSet q = q_polys(ev, &fr);

    const Big &tol = rep.tol;
    // roots far from 1 spoil trimming and the tolerance tests, so those run in v = u / u_scale with
    // u_scale the geometric mean root modulus of Qs (its leading coefficient is a multiple of K^4)
    rep.u_scale = sqrt(abs(rep.K));
    {
        UPoly qs_raw = q.Qs.values();
        int d = static_cast<int>(qs_raw.c.size()) - 1;
        if (d >= 1 && !qs_raw.c[0].is_zero() && !qs_raw.c[d].is_zero())
            rep.u_scale = pow(abs(qs_raw.c[0] / qs_raw.c[d]), Big(1) / Big(d));
    }
    auto add = [&](const std::string &n, const WPoly &w) {
        UPoly t = rescaled(trimmed(rescaled(w.values(), rep.u_scale), tol), Big(1) / rep.u_scale);
        rep.polys.push_back({n, t, t.degree(), w.W});
        return t;
    };
    add("V0", q.V0);
    add("V1", q.V1);
    add("V2", q.V2);
    add("V11", q.V11);
    add("V12", q.V12);
    add("V22", q.V22);
    UPoly Qa = add("Qa", q.Qa), Qs = add("Qs", q.Qs), Q12 = add("Q12", q.Q12);
    std::vector<std::pair<std::string, UPoly>> qs{{"Qa", Qa}, {"Qs", Qs}, {"Q12", Q12}};
    if (q.has_first_derivatives) {
        qs.emplace_back("Q1", add("Q1", q.Q1));
        qs.emplace_back("Q2", add("Q2", q.Q2));
    }
    UPoly L = add("L", q.L), S = add("S", q.S);
    for (auto &np : rep.polys) {
        static const std::map<std::string, std::pair<int, bool>> want{
            {"V0", {7, false}},  {"V1", {8, false}},  {"V2", {8, false}}, {"V11", {11, false}},
            {"V12", {11, false}}, {"V22", {11, false}}, {"Qa", {17, true}}, {"Qs", {18, false}},
            {"Q12", {18, false}}, {"Q1", {24, false}}, {"Q2", {24, false}}, {"L", {17, true}}, {"S", {16, true}}};
        auto it = want.find(np.name);
        if (it != want.end())
            expect_degree(rep, np.name, np.degree, it->second.first, it->second.second);
    }
    Big k_scale = pow(abs(rep.K), Big(mpq_class(3, 2)));
    if (abs(rep.K1) <= tol * k_scale && abs(rep.K2) <= tol * k_scale) {
        rep.verdict = Verdict::Indeterminate;
        rep.reason = "K1 and K2 both vanish";
        return out;
    }
    if (rep.find("V0")->degree < 0) {
        rep.verdict = Verdict::Indeterminate;
        rep.reason = "V0 vanishes identically";
        return out;
    }
    if (Qa.degree() < 1) {
        rep.verdict = Verdict::Indeterminate;
        rep.reason = "Qa has no positive-degree part";
        return out;
    }
    for (size_t i = 0; i < qs.size(); ++i)
        for (size_t j = i + 1; j < qs.size(); ++j)
            if (qs[i].second.degree() >= 1 && qs[j].second.degree() >= 1)
                rep.resultants.emplace_back("R(" + qs[i].first + "," + qs[j].first + ")",
                                            resultant_scaled(qs[i].second, qs[j].second, rep.u_scale));

    if (cfg.invariants != InvariantMode::None) {
        bool full_mode = cfg.invariants == InvariantMode::Full && q.has_first_derivatives;
        std::vector<UPoly> pencil{Qs, Q12};
        if (full_mode) {
            pencil.push_back(qs[3].second);
            pencil.push_back(qs[4].second);
        }
        rep.invariant_mode = full_mode ? "full" : "order8";
        try {
            rep.invariants = generalized_resultants(Qa, pencil, &rep.invariant_scales);
        } catch (const RootError &) {
            rep.diagnostics.push_back("complex roots of Qa did not converge; invariants omitted");
        }
    }

    std::vector<UPoly> all;
    for (auto &[n, pq] : qs)
        all.push_back(rescaled(pq, rep.u_scale));
    GcdResult g = approx_gcd(all, tol);
    rep.gcd = monic(rescaled(g.g, Big(1) / rep.u_scale));
    rep.gcd_degree = g.g.degree();
    rep.gcd_worst_ratio = g.worst_ratio;
    if (g.ambiguous) {
        out.ambiguous = true;
        out.ambiguity = "common divisor of the Q polynomials";
    }
    CandidateRoots cr = candidate_roots(g.g, tol);
    if (cr.ill_conditioned) {
        out.ambiguous = true;
        out.ambiguity = "real roots of the common divisor";
    }
    for (auto &r : cr.roots)
        rep.roots.push_back(r * rep.u_scale);
    for (auto &r : cr.zeros)
        rep.excluded_zero_roots.push_back(r * rep.u_scale);
    rep.root_count = static_cast<int>(cr.roots.size());
    rep.bound = std::min(rep.root_count, 15);
    if (rep.root_count == 0) {
        rep.verdict = Verdict::NotLinearizable;
        rep.reason = rep.gcd_degree <= 0 ? "the Q polynomials have no common divisor" : "the common divisor has no nonzero real root";
    } else if (!q.has_first_derivatives) {
        rep.verdict = Verdict::Indeterminate;
        rep.reason = "jet order too low to form Q1, Q2; Qa, Qs, Q12 share a real root";
    } else {
        rep.verdict = Verdict::Linearizable;
        rep.reason = "common real root of the Q polynomials";
    }
    return out;
}

} // namespace detail

inline LinearizabilityReport linearizability_verdict(const std::function<Jet2(const PointRef &, int)> &lift, const Big &x,
                                                     const Big &y, const VerdictConfig &cfg = {})
{
    std::vector<int> levels{cfg.precision};
    for (int b : cfg.escalation)
        if (b > levels.back())
            levels.push_back(b);
    std::vector<int> trail;
    detail::PassOutcome last;
    for (size_t i = 0; i < levels.size(); ++i) {
        trail.push_back(levels[i]);
        last = detail::verdict_pass(lift, x, y, cfg, levels[i]);
        if (!last.ambiguous)
            break;
        if (i + 1 == levels.size()) {
            last.rep.verdict = Verdict::Indeterminate;
            last.rep.reason = "tolerance-ambiguous after escalation: " + last.ambiguity;
        }
    }
    last.rep.precision_trail = trail;
    return last.rep;
}

inline LinearizabilityReport linearizability_verdict(const Expr &f, const Big &x, const Big &y, const VerdictConfig &cfg = {})
{
    return linearizability_verdict([&](const PointRef &p, int n) { return jet_lift(f, p, n); }, x, y, cfg);
}

} // namespace weblin

#endif
