// prints one PASS/FAIL line per acceptance criterion; exit status 1 if any fails

#include <weblin/obstruction.hpp>

#include "corpus.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <sys/wait.h>

using namespace weblin;

namespace {

Big q(const char *s) { return Big(parse_rational(s)); }
PointRef pt(const char *x, const char *y) { return make_point(q(x), q(y)); }

Big rel(const Big &a, const Big &b)
{
    Big m = max(abs(a), abs(b));
    return m.is_zero() ? Big() : abs(a - b) / m;
}

Big poly_rel(const UPoly &a, const UPoly &b)
{
    Big m = max(norm_inf(a), norm_inf(b));
    return m.is_zero() ? Big() : norm_inf(a - b) / m;
}

std::string sci(const Big &v) { return v.str(6); }

// collects the parts of one criterion
struct Criterion {
    int id;
    std::string title;
    std::vector<std::string> failed;
    std::vector<std::string> notes;

    void check(bool ok, const std::string &what)
    {
        if (!ok)
            failed.push_back(what);
    }
    void note(const std::string &s) { notes.push_back(s); }
};

int cli_exit(const std::string &args, std::string *out = nullptr)
{
    std::string cmd = std::string(WEBLIN_CLI_PATH) + " " + args + " 2>/dev/null";
    FILE *p = popen(cmd.c_str(), "r");
    if (!p)
        return -1;
    char buf[4096];
    size_t n;
    std::string s;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0)
        s.append(buf, n);
    int st = pclose(p);
    if (out)
        *out = s;
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

const char *ex4 = "x+sqrt(x^2-y)";
const char *ex5 = "(x+y)*exp(-x)";
const char *ex6 = "x^2+x*y+y^2";

const Big *resultant(const LinearizabilityReport &r, const std::string &name)
{
    for (auto &[n, v] : r.resultants)
        if (n == name)
            return &v;
    return nullptr;
}

// the printed example checks: leading values, verdict, R(Qa,Q12) sign and size
void example_reproduction(Criterion &c, const char *f, const char *x, const char *y,
                          const std::vector<const char *> &leading, const char *printed_R, int sign)
{
    auto t0 = std::chrono::steady_clock::now();
    auto rep = linearizability_verdict(parse(f), q(x), q(y));
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const char *names[] = {"Qa", "Qs", "Q12", "Q1", "Q2"};
    for (int i = 0; i < 5; ++i) {
        const auto *p = rep.find(names[i]);
        if (!p) {
            c.check(false, std::string(names[i]) + " missing");
            continue;
        }
        Big lc = p->poly.c.empty() ? Big() : p->poly.c.back();
        Big r = rel(lc, q(leading[i]));
        c.check(r <= Big(1e-3), std::string("leading ") + names[i] + " = " + sci(lc) + " vs " + leading[i]);
    }
    c.check(rep.verdict == Verdict::NotLinearizable,
            std::string("verdict ") + to_string(rep.verdict) + " (expected NotLinearizable; shared root u = " +
                (rep.roots.empty() ? std::string("none") : sci(rep.roots[0])) + ")");
    const Big *R = resultant(rep, "R(Qa,Q12)");
    if (!R) {
        c.check(false, "R(Qa,Q12) missing");
    } else {
        Big want = q(printed_R);
        Big ratio = abs(*R) / want;
        c.check(R->sign() == sign && ratio >= Big(0.1) && ratio <= Big(10),
                "R(Qa,Q12) = " + sci(*R) + " vs " + (sign < 0 ? "-" : "") + printed_R);
        c.note("R/printed = " + sci(ratio));
    }
    c.check(secs < 10, "runtime " + std::to_string(secs) + " s");
    std::ostringstream o;
    o.precision(3);
    o << std::fixed << secs << " s";
    c.note(o.str());
}

void criterion1(Criterion &c)
{
    example_reproduction(c, ex6, "1/10", "1", {"0.204819", "-0.0274492", "-0.0137246", "-3.94038", "-0.678834"},
                         "1.046e185", -1);
}

void criterion2(Criterion &c)
{
    example_reproduction(c, ex5, "0", "1/10", {"-33.2808", "-5.12013", "-2.56006", "-7085.94", "-2194.28"},
                         "1.23007e272", 1);
}

void criterion3(Criterion &c)
{
    auto rep = linearizability_verdict(parse(ex4), Big(1), q("1/2"));
    Big inv = Big(1) / (Big(1) + sqrt(q("1/2")));
    for (const char *n : {"Qa", "Qs", "Q12", "Q1", "Q2"}) {
        const auto *p = rep.find(n);
        if (!p) {
            c.check(false, std::string(n) + " missing");
            continue;
        }
        Big v = abs(p->poly(inv)), s = norm_inf(p->poly);
        c.check(v <= Big(1e-40) * s, std::string("|") + n + "(1/f)|/|" + n + "| = " + sci(v / s));
    }
    c.check(rep.gcd_degree >= 1, "gcd degree " + std::to_string(rep.gcd_degree));
    c.check(rep.verdict == Verdict::Linearizable, std::string("verdict ") + to_string(rep.verdict));
    Big best(1);
    for (auto &r : rep.roots)
        best = min(best, abs(r - inv));
    c.check(!rep.roots.empty() && best <= Big(1e-30), "root distance " + sci(best));
    c.check(rep.invariants.size() == 18, std::to_string(rep.invariants.size()) + " invariants");
    Big worst;
    for (auto &[idx, v] : rep.invariants)
        worst = max(worst, abs(v) / rep.invariant_scales.at(idx));
    c.check(worst <= Big(1e-40), "invariant relative " + sci(worst));
    c.note("root " + sci(rep.roots.empty() ? Big() : rep.roots[0]) + ", " + std::to_string(rep.invariants.size()) +
           " invariants max relative " + sci(worst));
}

void criterion4(Criterion &c)
{
    struct Case { const char *f; const char *x; const char *y; };
    const Case cases[] = {{ex4, "1", "1/2"},   {ex4, "6/5", "1/2"}, {ex4, "1", "3/10"},
                          {ex5, "0", "1/10"},  {ex5, "1/5", "3/10"}, {ex5, "-1/2", "1/4"},
                          {ex6, "1/10", "1"},  {ex6, "1/5", "1"},   {ex6, "1/10", "4/5"}};
    Big worst;
    for (auto &cs : cases) {
        try {
            auto fr = web_frame(parse(cs.f), pt(cs.x, cs.y), 6);
            auto ai = a_invariants(fr);
            Big r = abs(nabla(fr, ai, ai.a2, 1).value() - nabla(fr, ai, ai.a1, 2).value() - Big(1));
            worst = max(worst, r);
            c.check(r <= Big(1e-40), std::string("normalization ") + cs.f + " at (" + cs.x + "," + cs.y + ") " + sci(r));
        } catch (const std::exception &e) {
            c.check(false, std::string("normalization ") + cs.f + ": " + e.what());
        }
    }
    c.note("normalization worst " + sci(worst));

    Big cworst;
    for (const char *f : {ex5, ex6, "exp(x)*y+sin(x*y)"}) {
        auto fr = web_frame(parse(f), pt("1/10", "3/10"), 10);
        Jet2 k = jet_sqrt(Big(fr.K.value().sign()) * fr.K.jet);
        for (auto g : {WeightedJet{k, 1}, fr.K, WeightedJet{fr.K.jet * k, 3}}) {
            auto d = cov_d(fr, cov_d(fr, g, 1), 2) - cov_d(fr, cov_d(fr, g, 2), 1);
            Jet2 want = Big(static_cast<long>(g.weight)) * (fr.K.jet * g.jet);
            Big r = rel(d.value(), want.value());
            cworst = max(cworst, r);
            c.check(r <= Big(1e-40), std::string("commutator s=") + std::to_string(g.weight) + " on " + f);
        }
    }
    c.note("commutator worst " + sci(cworst));

    auto fr = web_frame(parse("exp(x)*y+sin(x*y)"), pt("3/10", "7/10"), 10);
    auto kd = k_table(fr);
    auto alt = cov_d(fr, kd.at("112"), 2) - q("11/3") * (kd.at("") * kd.at("12")) - q("5/3") * (kd.at("1") * kd.at("2"));
    Big r = rel(alt.value(), kd.at("1122").value());
    c.check(r <= Big(1e-40), "K1122 two routes " + sci(r));
    c.note("K1122 routes " + sci(r));
}

void criterion5(Criterion &c)
{
    auto e5 = rigidity_report(parse(ex5), pt("0", "1/10"));
    c.check(abs(e5.a1 * e5.a2 - q("3/4")) <= Big(1e-40), "a1a2 = " + sci(e5.a1 * e5.a2));
    c.check(abs(e5.J) <= zero_eps() * max(Big(1), e5.J_scale), "J = " + sci(e5.J));
    for (int i = 0; i < 3; ++i)
        c.check(e5.relation_residuals[i] <= zero_eps(),
                "exponential web relation " + std::to_string(i + 1) + " residual " + sci(e5.relation_residuals[i]));

    // the functional relation for the square-root web, exactly as printed
    auto e4 = rigidity_report(parse(ex4), pt("1", "1/2"));
    Big a1 = e4.a1, a2 = e4.a2;
    Big dep = Big(8) * a1 * a1 - Big(5) * a2 * a2 + Big(4) * a1 * (a2 * a2 - Big(1)) * sqrt(a1 * a1 + Big(6)) +
              a2 * (Big(4) * a1 * a1 - Big(1)) * sqrt(a2 * a2 + Big(3)) + Big(3);
    c.check(abs(dep) <= Big(1e-30), "square-root web printed relation residual " + sci(dep));
    bool violated = false;
    for (auto &r : e4.relation_residuals)
        violated = violated || r > zero_eps();
    c.check(violated, "square-root web: all three automorphism relations hold (max residual " +
                          sci(max(e4.relation_residuals[0], max(e4.relation_residuals[1], e4.relation_residuals[2]))) +
                          "; x d/dx + 2y d/dy is a symmetry)");
    c.note("a1a2 " + sci(e5.a1 * e5.a2) + ", J " + sci(e5.J));
}

void criterion6(Criterion &c)
{
    struct Case { const char *f; const char *x; const char *y; };
    for (auto cs : {Case{ex6, "1/10", "1"}, Case{ex5, "0", "1/10"}}) {
        auto rep = linearizability_verdict(parse(cs.f), q(cs.x), q(cs.y));
        const std::map<std::string, int> exact{{"V0", 7},   {"V1", 8},   {"V2", 8},   {"V11", 11}, {"V12", 11},
                                               {"V22", 11}, {"Qs", 18},  {"Q12", 18}, {"Q1", 24},  {"Q2", 24}};
        for (auto &[n, d] : exact) {
            const auto *p = rep.find(n);
            c.check(p && p->degree == d, std::string(cs.f) + " deg " + n);
        }
        const std::map<std::string, int> bounded{{"Qa", 17}, {"L", 17}, {"S", 16}};
        for (auto &[n, d] : bounded) {
            const auto *p = rep.find(n);
            c.check(p && p->degree <= d, std::string(cs.f) + " deg " + n);
        }

        auto fr = web_frame(parse(cs.f), pt(cs.x, cs.y), 12);
        KDerivs kd = truncate(k_table(fr, 6, 0), 0);
        TableEvaluator ev(builtin_coefficients(), kd), et(builtin_coefficients(), tau(kd));
        auto image = [&](const char *t) { return flip_u(et.get(t)).values(); };
        auto val = [&](const char *t) { return ev.get(t).values(); };
        auto neg = [](const UPoly &p) { return Big(-1) * p; };
        Big tol = pow(Big(2), -128L);
        const std::vector<std::tuple<const char *, UPoly, UPoly>> rels = {
            {"A21 = -tau(A12)", val("A21"), neg(image("A12"))},
            {"A222 = -tau(A111)", val("A222"), neg(image("A111"))},
            {"tau(V0) = -V0", image("V0"), neg(val("V0"))},
            {"tau(V1) = V2", image("V1"), val("V2")},
            {"tau(V11) = -V22", image("V11"), neg(val("V22"))},
            {"tau(V12) = -V12", image("V12"), neg(val("V12"))},
        };
        Big worst;
        for (auto &[n, a, b] : rels) {
            Big r = poly_rel(a, b);
            worst = max(worst, r);
            c.check(r <= tol, std::string(cs.f) + " " + n + " " + sci(r));
        }
        c.note(std::string(cs.f) + " tau worst " + sci(worst));
    }
}

void criterion7(Criterion &c)
{
    std::mt19937 rng(7);
    Big worst;
    c.check(corpus::expressions().size() >= 20, "corpus size");
    for (auto &src : corpus::expressions()) {
        auto [px, py] = corpus::random_point(rng);
        Big r = corpus::symbolic_vs_jet(parse(src), px, py, 3);
        worst = max(worst, r);
        c.check(r <= Big(1e-50), "symbolic vs jet on " + src + " " + sci(r));
    }
    c.note("corpus worst " + sci(worst));

    for (auto [f, x, y] : {std::tuple{ex6, "1/10", "1"}, {"exp(x)*y+sin(x*y)", "3/10", "1/5"}}) {
        auto fr = web_frame(parse(f), pt(x, y), 12);
        auto kd = k_table(fr, 6, 0);
        TableEvaluator ev(builtin_coefficients(), truncate(kd, 1));
        auto qs = q_polys(ev, &fr);
        auto o = delta_hat_K_oracle(kd, builtin_coefficients(), builtin_delta_fields());
        Big r = max(poly_rel(o.Q1, qs.Q1.values()), poly_rel(o.Q2, qs.Q2.values()));
        c.check(r <= Big(1e-30), std::string("covariant-field route vs jet route on ") + f + " " + sci(r));
        c.note(std::string("Q1/Q2 routes on ") + f + " " + sci(r));
    }

    auto fr = web_frame(parse(ex5), pt("0", "1/10"), 12);
    KDerivs base = truncate(k_table(fr, 6, 0), 0), scaled = base;
    for (auto &[w, v] : scaled.entries)
        v.jet *= pow(Big(2), static_cast<long>(v.weight));
    TableEvaluator e0(builtin_coefficients(), base), e1(builtin_coefficients(), scaled);
    auto q0 = q_polys(e0), q1 = q_polys(e1);
    for (auto [n, a, b] : {std::tuple{"Qa", &q0.Qa, &q1.Qa}, {"Qs", &q0.Qs, &q1.Qs}, {"Q12", &q0.Q12, &q1.Q12}}) {
        c.check(a->W == 26, std::string(n) + " weight " + std::to_string(a->W));
        Big r;
        for (int k = 0; k < a->size(); ++k) {
            Big want = a->c[k].value() * pow(Big(2), static_cast<long>(26 - k));
            r = max(r, abs(b->c[k].value() - want) / (abs(want) + norm_inf(b->values())));
        }
        c.check(r <= Big(1e-60), std::string("rescaling ") + n + " " + sci(r));
    }
}

void criterion8(Criterion &c)
{
    std::string out;
    int code = cli_exit("linearizability --f \"x+y\" --point 0,0", &out);
    c.check(code == 3, "x+y exit code " + std::to_string(code));
    c.check(out.find("Parallelizable") != std::string::npos, "x+y verdict text");
    c.check(linearizability_verdict(parse("x+y"), Big(0), Big(0)).verdict == Verdict::Parallelizable, "x+y verdict");
    c.check(linearizability_verdict(parse("x^2+y"), Big(0), Big(1)).verdict == Verdict::DegenerateWeb,
            "f_x = 0 verdict");
    int dcode = cli_exit("linearizability --f \"x^2+y\" --point 0,1");
    c.check(dcode == 3, "f_x = 0 exit code " + std::to_string(dcode));
    auto cr = candidate_roots(from_roots({Big(0), Big(2), Big(-3)}), default_trim_eps());
    c.check(cr.roots.size() == 2 && cr.zeros.size() == 1, "u = 0 excluded");
    for (auto &r : cr.roots)
        c.check(!r.is_zero(), "zero root kept");
}

} // namespace

int main()
{
    std::vector<std::pair<std::string, std::function<void(Criterion &)>>> all = {
        {"quadratic web reproduction", criterion1},
        {"exponential web reproduction", criterion2},
        {"linear web positive control", criterion3},
        {"invariant identities", criterion4},
        {"rigidity reproduction", criterion5},
        {"degrees and tau symmetries", criterion6},
        {"oracle equivalences", criterion7},
        {"negative and degenerate paths", criterion8},
    };
    int failures = 0;
    for (size_t i = 0; i < all.size(); ++i) {
        Criterion c{static_cast<int>(i + 1), all[i].first, {}, {}};
        try {
            all[i].second(c);
        } catch (const std::exception &e) {
            c.failed.push_back(std::string("exception: ") + e.what());
        }
        bool ok = c.failed.empty();
        failures += !ok;
        std::cout << (ok ? "PASS" : "FAIL") << " " << c.id << " " << c.title;
        std::string sep = ": ";
        for (auto &f : c.failed) {
            std::cout << sep << f;
            sep = "; ";
        }
        if (ok)
            for (auto &n : c.notes) {
                std::cout << sep << n;
                sep = "; ";
            }
        std::cout << "\n";
    }
    return failures ? 1 : 0;
}
