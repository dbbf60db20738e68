#include <weblin/obstruction.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

using namespace weblin;
using json = nlohmann::ordered_json;

namespace {

enum ExitCode { kOk = 0, kParse = 2, kDegenerate = 3, kNumeric = 4 };

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string f, point, grid, tol, invariants = "order8", format = "text", out, table;
    std::string w0, F;
    int precision = 256, jet_order = 12, branch = -1;
};

struct GridPoint {
    mpq_class x, y;
};

struct PointResult {
    json data;
    std::vector<std::string> text;
    int code = kOk;
    std::optional<Big> metric;   // per-point figure aggregated by the command
};

// doubles where they fit, otherwise mantissa and decimal exponent
json big_json(const Big &b)
{
    if (!mpfr_number_p(b.raw()))
        return b.str();
    if (b.is_zero())
        return 0.0;
    auto [m, e] = b.decimal(20);
    if (e > -300 && e < 300)
        return b.to_double();
    return json{{"mantissa", m}, {"exp10", e}};
}

json big_list(const std::vector<Big> &v)
{
    json a = json::array();
    for (auto &b : v)
        a.push_back(big_json(b));
    return a;
}

std::string fmt(const Big &b, int digits = 12) { return b.str(digits); }

std::vector<std::string> split(const std::string &s, char sep)
{
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep))
        parts.push_back(cur);
    if (!s.empty() && s.back() == sep)
        parts.emplace_back();
    return parts;
}

mpq_class number(const std::string &s)
{
    try {
        return parse_rational(s);
    } catch (const std::exception &) {
        throw UsageError("not a number: '" + s + "'");
    }
}

std::vector<GridPoint> points_from(const Options &o)
{
    if (o.point.empty() == o.grid.empty())
        throw UsageError("give exactly one of --point or --grid");
    if (!o.point.empty()) {
        auto p = split(o.point, ',');
        if (p.size() != 2)
            throw UsageError("--point expects X,Y");
        return {{number(p[0]), number(p[1])}};
    }
    auto axes = split(o.grid, ',');
    if (axes.size() != 2)
        throw UsageError("--grid expects x0:x1:n,y0:y1:m");
    std::vector<mpq_class> xs, ys;
    for (int a = 0; a < 2; ++a) {
        auto r = split(axes[a], ':');
        if (r.size() != 3)
            throw UsageError("--grid axis expects start:end:count");
        mpq_class lo = number(r[0]), hi = number(r[1]);
        int n = 0;
        try {
            n = std::stoi(r[2]);
        } catch (const std::exception &) {
            throw UsageError("bad grid count '" + r[2] + "'");
        }
        if (n < 1)
            throw UsageError("grid count must be at least 1");
        auto &dst = a == 0 ? xs : ys;
        for (int i = 0; i < n; ++i)
            dst.push_back(n == 1 ? lo : mpq_class(lo + (hi - lo) * i / (n - 1)));
    }
    std::vector<GridPoint> pts;
    for (auto &y : ys)
        for (auto &x : xs)
            pts.push_back({x, y});
    return pts;
}

Expr parse_expr(const std::string &flag, const std::string &src)
{
    if (src.empty())
        throw UsageError(flag + " is required");
    try {
        return parse(src);
    } catch (const ParseError &e) {
        throw UsageError(flag + ": " + e.what());
    }
}

InvariantMode invariant_mode(const std::string &s)
{
    if (s == "none")
        return InvariantMode::None;
    if (s == "full")
        return InvariantMode::Full;
    return InvariantMode::Order8;
}

int verdict_code(Verdict v)
{
    switch (v) {
    case Verdict::Parallelizable:
    case Verdict::DegenerateWeb: return kDegenerate;
    case Verdict::Indeterminate: return kNumeric;
    default: return kOk;
    }
}

std::string point_label(const GridPoint &p) { return "(" + p.x.get_str() + ", " + p.y.get_str() + ")"; }

json point_json(const GridPoint &p) { return json{{"x", p.x.get_str()}, {"y", p.y.get_str()}}; }

// runs fn on every point with a bounded pool; results keep grid order
std::vector<PointResult> run_points(const std::vector<GridPoint> &pts, int bits,
                                    const std::function<PointResult(const GridPoint &)> &fn)
{
    std::vector<PointResult> out(pts.size());
    std::atomic<size_t> next{0};
    auto worker = [&] {
        PrecisionScope ps(bits);
        for (size_t i = next++; i < pts.size(); i = next++) {
            try {
                out[i] = fn(pts[i]);
            } catch (const DegenerateWeb &e) {
                out[i].code = kDegenerate;
                out[i].data["error"] = e.what();
                out[i].text.push_back("degenerate web: " + std::string(e.what()));
            } catch (const std::exception &e) {
                out[i].code = kNumeric;
                out[i].data["error"] = e.what();
                out[i].text.push_back("numeric failure: " + std::string(e.what()));
            }
            out[i].data["point"] = point_json(pts[i]);
        }
    };
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    size_t n = std::min<size_t>({pts.size(), static_cast<size_t>(hw), 8});
    std::vector<std::thread> pool;
    for (size_t i = 1; i < n; ++i)
        pool.emplace_back(worker);
    worker();
    for (auto &t : pool)
        t.join();
    return out;
}

// ---------------------------------------------------------------- report pieces

json verdict_json(const LinearizabilityReport &r)
{
    json j;
    j["verdict"] = to_string(r.verdict);
    j["reason"] = r.reason;
    j["precision"] = r.precision;
    j["precision_trail"] = r.precision_trail;
    j["tolerance"] = big_json(r.tol);
    j["table_hash"] = r.table_hash;
    if (r.verdict == Verdict::DegenerateWeb)
        return j;
    j["K"] = big_json(r.K);
    if (r.verdict == Verdict::Parallelizable)
        return j;
    j["K1"] = big_json(r.K1);
    j["K2"] = big_json(r.K2);
    j["u_scale"] = big_json(r.u_scale);
    json polys = json::object();
    for (auto &p : r.polys)
        polys[p.name] = {{"degree", p.degree},
                         {"weight", p.weight},
                         {"leading", p.degree >= 0 ? big_json(p.poly.c[p.degree]) : json(nullptr)},
                         {"coefficients", big_list(p.poly.c)}};
    j["polynomials"] = polys;
    json res = json::object();
    for (auto &[n, v] : r.resultants)
        res[n] = big_json(v);
    j["resultants"] = res;
    if (!r.invariant_mode.empty()) {
        json inv = json::array();
        Big worst;
        for (auto &[idx, v] : r.invariants) {
            Big sc = r.invariant_scales.count(idx) ? r.invariant_scales.at(idx) : Big();
            if (!sc.is_zero())
                worst = max(worst, abs(v) / sc);
            inv.push_back({{"index", idx}, {"value", big_json(v)}, {"scale", big_json(sc)}});
        }
        j["invariants"] = {{"mode", r.invariant_mode}, {"count", r.invariants.size()},
                           {"max_relative", big_json(worst)}, {"values", inv}};
    }
    j["gcd"] = {{"degree", r.gcd_degree}, {"coefficients", big_list(r.gcd.c)}, {"worst_ratio", big_json(r.gcd_worst_ratio)}};
    json roots = json::array();
    for (auto &x : r.roots)
        roots.push_back({{"value", big_json(x)}, {"decimal", x.str(40)}});
    j["roots"] = roots;
    j["excluded_zero_roots"] = big_list(r.excluded_zero_roots);
    j["root_count"] = r.root_count;
    j["linearization_bound"] = r.bound;
    j["diagnostics"] = r.diagnostics;
    return j;
}

std::vector<std::string> verdict_text(const LinearizabilityReport &r)
{
    std::vector<std::string> t;
    t.push_back("verdict: " + std::string(to_string(r.verdict)) + " (" + r.reason + ")");
    if (r.verdict == Verdict::DegenerateWeb || r.verdict == Verdict::Parallelizable)
        return t;
    std::string lead = "leading:";
    for (const char *n : {"Qa", "Qs", "Q12", "Q1", "Q2"})
        if (auto *p = r.find(n); p && p->degree >= 0)
            lead += " " + std::string(n) + "=" + fmt(p->poly.c[p->degree], 6);
    t.push_back(lead);
    for (auto &[n, v] : r.resultants)
        if (n == "R(Qa,Q12)")
            t.push_back(n + " = " + fmt(v, 6));
    t.push_back("gcd degree: " + std::to_string(r.gcd_degree));
    if (!r.roots.empty()) {
        std::string s = "roots:";
        for (auto &x : r.roots)
            s += " " + fmt(x, 15);
        t.push_back(s);
        t.push_back("linearization bound: " + std::to_string(r.bound));
    }
    if (!r.invariant_mode.empty())
        t.push_back("invariants (" + r.invariant_mode + "): " + std::to_string(r.invariants.size()));
    std::string trail = "precision:";
    for (int b : r.precision_trail)
        trail += " " + std::to_string(b);
    t.push_back(trail);
    for (auto &d : r.diagnostics)
        t.push_back("diagnostic: " + d);
    return t;
}

json rigidity_json(const RigidityReport &r)
{
    auto mat = [](const Big (&m)[2][2]) {
        return json::array({json::array({big_json(m[0][0]), big_json(m[0][1])}), json::array({big_json(m[1][0]), big_json(m[1][1])})});
    };
    return json{{"a1", big_json(r.a1)},
                {"a2", big_json(r.a2)},
                {"a1a2", big_json(r.a1 * r.a2)},
                {"normalization_residual", big_json(r.normalization_residual)},
                {"nabla_a", mat(r.nabla_a)},
                {"jacobian", mat(r.jacobian)},
                {"jacobian_det", big_json(r.jacobian_det)},
                {"J", big_json(r.J)},
                {"J_scale", big_json(r.J_scale)},
                {"functionally_dependent", r.functionally_dependent},
                {"relation_residuals", json::array({big_json(r.relation_residuals[0]), big_json(r.relation_residuals[1]),
                                                    big_json(r.relation_residuals[2])})},
                {"classification", to_string(r.classification)}};
}

std::vector<std::string> rigidity_text(const RigidityReport &r)
{
    return {"a1 = " + fmt(r.a1) + ", a2 = " + fmt(r.a2) + ", a1a2 = " + fmt(r.a1 * r.a2),
            "J = " + fmt(r.J, 6) + " (scale " + fmt(r.J_scale, 6) + ")",
            "relations: " + fmt(r.relation_residuals[0], 4) + " " + fmt(r.relation_residuals[1], 4) + " " +
                fmt(r.relation_residuals[2], 4),
            "classification: " + std::string(to_string(r.classification))};
}

// ---------------------------------------------------------------- commands

struct Context {
    Options opt;
    std::string command;
    std::vector<GridPoint> pts;
    std::optional<CoefficientTable> table;
    json config;
};

VerdictConfig verdict_config(const Context &c)
{
    VerdictConfig v;
    v.precision = c.opt.precision;
    v.jet_order = c.opt.jet_order;
    v.invariants = invariant_mode(c.opt.invariants);
    if (!c.opt.tol.empty())
        v.tol = Big(number(c.opt.tol));
    if (c.table)
        v.table = &*c.table;
    return v;
}

PointResult linearizability_point(const Context &c, const Expr &f, const GridPoint &p)
{
    PointResult r;
    auto rep = linearizability_verdict(f, Big(p.x), Big(p.y), verdict_config(c));
    r.data["linearizability"] = verdict_json(rep);
    r.text = verdict_text(rep);
    r.code = verdict_code(rep.verdict);
    return r;
}

PointResult analyze_point(const Context &c, const Expr &f, const GridPoint &p)
{
    PointResult r;
    auto pr = make_point(Big(p.x), Big(p.y));
    WebFrame fr = web_frame(f, pr, c.opt.jet_order);
    r.data["frame"] = {{"f", big_json(fr.f.value())},
                       {"fx", big_json(fr.fx.value())},
                       {"fy", big_json(fr.fy.value())},
                       {"H", big_json(fr.H.value())},
                       {"K", big_json(fr.K.value())},
                       {"K_nonzero", fr.K_nonzero},
                       {"K_positive", fr.K_positive},
                       {"curvature_consistency", big_json(fr.curvature_consistency)}};
    r.text.push_back("H = " + fmt(fr.H.value()) + ", K = " + fmt(fr.K.value()));
    if (fr.K_nonzero) {
        KDerivs kd = k_table(fr, 6, 0);
        json kt = json::object();
        for (auto &[w, v] : kd.entries)
            kt["K" + w] = big_json(v.value());
        r.data["k_table"] = kt;
        r.text.push_back("K1 = " + fmt(kd.at("1").value()) + ", K2 = " + fmt(kd.at("2").value()));
    }
    if (fr.K_positive) {
        auto rig = rigidity_report(f, pr, c.opt.jet_order);
        r.data["rigidity"] = rigidity_json(rig);
        for (auto &s : rigidity_text(rig))
            r.text.push_back(s);
    } else {
        r.data["rigidity"] = {{"skipped", "curvature is not positive"}};
    }
    auto lin = linearizability_point(c, f, p);
    r.data["linearizability"] = lin.data["linearizability"];
    for (auto &s : lin.text)
        r.text.push_back(s);
    r.code = lin.code;
    return r;
}

PointResult rigidity_point(const Context &c, const Expr &f, const GridPoint &p)
{
    PointResult r;
    auto pr = make_point(Big(p.x), Big(p.y));
    WebFrame fr = web_frame(f, pr, c.opt.jet_order);
    if (!fr.K_nonzero) {
        r.code = kDegenerate;
        r.data["rigidity"] = {{"skipped", "curvature vanishes (parallelizable web)"}};
        r.text.push_back("parallelizable web: curvature vanishes");
        return r;
    }
    auto rig = rigidity_report(f, pr, c.opt.jet_order);
    r.data["rigidity"] = rigidity_json(rig);
    r.text = rigidity_text(rig);
    return r;
}

PointResult linear_check_point(const Context &, const Expr &f, const GridPoint &p)
{
    PointResult r;
    auto lr = linearity_residual(f, make_point(Big(p.x), Big(p.y)));
    Big norm = lr.scale.is_zero() ? abs(lr.value) : abs(lr.value) / lr.scale;
    r.data["linearity"] = {{"residual", big_json(lr.value)}, {"scale", big_json(lr.scale)}, {"normalized", big_json(norm)}};
    r.text.push_back("residual " + fmt(lr.value, 6) + ", normalized " + fmt(norm, 6));
    r.metric = norm;
    return r;
}

PointResult euler_point(const Context &c, const Expr &w0, const Expr *F, const GridPoint &p)
{
    PointResult r;
    EulerWebConfig cfg;
    cfg.branch = c.opt.branch;
    Big x(p.x), y(p.y);
    auto cand_json = [](const std::vector<EulerCandidate> &v) {
        json a = json::array();
        for (auto &e : v)
            a.push_back({{"lambda", big_json(e.lambda)}, {"w", big_json(e.w)}, {"f", big_json(e.f)}});
        return a;
    };
    try {
        auto res = euler_web_eval(w0, F, x, y, cfg);
        r.data["euler_web"] = {{"roots", cand_json(res.roots)},
                               {"f", big_json(res.chosen.f)},
                               {"f_decimal", res.chosen.f.str(40)},
                               {"lambda", big_json(res.chosen.lambda)}};
        r.text.push_back("f = " + fmt(res.chosen.f, 20) + " (lambda = " + fmt(res.chosen.lambda) + ")");
        // the level sets of f must be straight lines
        Jet2 jf = euler_web_jet(w0, F, make_point(x, y), 2, cfg);
        auto lr = linearity_residual(jf);
        Big norm = lr.scale.is_zero() ? abs(lr.value) : abs(lr.value) / lr.scale;
        r.data["euler_web"]["linearity_normalized"] = big_json(norm);
        r.text.push_back("linearity residual (normalized) " + fmt(norm, 4));
    } catch (const CausticAmbiguity &e) {
        r.code = kNumeric;
        r.data["euler_web"] = {{"error", e.what()}, {"candidates", cand_json(e.candidates)}};
        r.text.push_back(std::string(e.what()) + "; pass --branch to choose one of " + std::to_string(e.candidates.size()));
    }
    return r;
}

json base_report(const Context &c)
{
    json rep;
    rep["tool"] = "weblin";
    rep["command"] = c.command;
    json in;
    if (!c.opt.f.empty())
        in["f"] = c.opt.f;
    if (!c.opt.w0.empty())
        in["w0"] = c.opt.w0;
    if (!c.opt.F.empty())
        in["F"] = c.opt.F;
    if (!c.opt.point.empty())
        in["point"] = c.opt.point;
    if (!c.opt.grid.empty())
        in["grid"] = c.opt.grid;
    rep["input"] = in;
    rep["config"] = c.config;
    return rep;
}

int emit(const Context &c, std::vector<PointResult> &res, json extra = json::object())
{
    int code = kOk;
    for (auto &r : res)
        code = std::max(code, r.code);
    json rep = base_report(c);
    for (auto &[k, v] : extra.items())
        rep[k] = v;
    json arr = json::array();
    for (auto &r : res) {
        r.data["exit_code"] = r.code;
        arr.push_back(r.data);
    }
    rep["results"] = arr;
    rep["exit_code"] = code;
    std::string text = rep.dump(2) + "\n";
    if (!c.opt.out.empty()) {
        std::ofstream o(c.opt.out, std::ios::binary);
        if (!o)
            throw UsageError("cannot write " + c.opt.out);
        o << text;
    }
    if (c.opt.format == "json") {
        std::cout << text;
    } else {
        for (size_t i = 0; i < res.size(); ++i) {
            std::cout << "point " << point_label(c.pts[i]) << "\n";
            for (auto &s : res[i].text)
                std::cout << "  " << s << "\n";
        }
        if (extra.contains("summary"))
            std::cout << extra["summary"].get<std::string>() << "\n";
    }
    return code;
}

int run(Context &c)
{
    const Options &o = c.opt;
    c.pts = points_from(o);
    c.config = {{"precision", o.precision}, {"jet_order", o.jet_order}, {"invariants", o.invariants}};
    c.config["tol"] = o.tol.empty() ? json(nullptr) : json(o.tol);
    if (c.command == "linearizability" || c.command == "analyze") {
        if (!o.table.empty()) {
            try {
                c.table = parse_table(read_text_file(o.table));
            } catch (const TableError &e) {
                throw UsageError(std::string("--table: ") + e.what());
            }
        }
        c.config["table"] = {{"source", o.table.empty() ? "builtin" : o.table},
                             {"hash", c.table ? c.table->hash : builtin_coefficients().hash}};
    }
    if (c.command == "euler-web") {
        Expr w0 = parse_expr("--w0", o.w0);
        std::optional<Expr> F;
        if (!o.F.empty())
            F = parse_expr("--F", o.F);
        c.config["branch"] = o.branch;
        auto res = run_points(c.pts, o.precision, [&](const GridPoint &p) { return euler_point(c, w0, F ? &*F : nullptr, p); });
        return emit(c, res);
    }
    Expr f = parse_expr("--f", o.f);
    std::function<PointResult(const GridPoint &)> fn;
    if (c.command == "linearizability")
        fn = [&](const GridPoint &p) { return linearizability_point(c, f, p); };
    else if (c.command == "analyze")
        fn = [&](const GridPoint &p) { return analyze_point(c, f, p); };
    else if (c.command == "rigidity")
        fn = [&](const GridPoint &p) { return rigidity_point(c, f, p); };
    else
        fn = [&](const GridPoint &p) { return linear_check_point(c, f, p); };
    auto res = run_points(c.pts, o.precision, fn);
    json extra = json::object();
    if (c.command == "linear-check") {
        PrecisionScope ps(o.precision);
        Big tol = o.tol.empty() ? default_trim_eps() : Big(number(o.tol)), worst;
        bool all = true;
        for (auto &r : res) {
            if (!r.metric) {
                all = false;
                continue;
            }
            worst = max(worst, *r.metric);
        }
        bool linear = all && worst <= tol;
        extra["max_normalized_residual"] = big_json(worst);
        extra["linear"] = linear;
        extra["summary"] = "max normalized residual " + fmt(worst, 6) + (linear ? ": linear" : ": not linear");
    }
    return emit(c, res, extra);
}

void add_common(CLI::App *s, Options &o, bool needs_f)
{
    if (needs_f)
        s->add_option("--f", o.f, "web function f(x, y)")->required();
    s->add_option("--point", o.point, "evaluation point X,Y (rationals or decimals)");
    s->add_option("--grid", o.grid, "grid x0:x1:n,y0:y1:m");
    s->add_option("--precision", o.precision, "working precision in bits")->check(CLI::Range(64, 4096));
    s->add_option("--jet-order", o.jet_order, "Taylor order of the lifted web function")->check(CLI::Range(8, 16));
    s->add_option("--tol", o.tol, "relative zero threshold (default 2^(-precision/2))");
    s->add_option("--format", o.format, "stdout format")->check(CLI::IsMember({"text", "json"}));
    s->add_option("--out", o.out, "write the JSON report to this path");
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"planar 3-web linearizability"};
    app.require_subcommand(1);
    Options o;
    auto *lin = app.add_subcommand("linearizability", "decide linearizability at a point");
    auto *ana = app.add_subcommand("analyze", "frame, curvature table, rigidity and linearizability");
    auto *rig = app.add_subcommand("rigidity", "absolute invariants and automorphism relations");
    auto *chk = app.add_subcommand("linear-check", "test whether the level sets of f are straight lines");
    auto *eul = app.add_subcommand("euler-web", "evaluate the linear web generated by w0");
    for (auto *s : {lin, ana, rig, chk})
        add_common(s, o, true);
    add_common(eul, o, false);
    for (auto *s : {lin, ana}) {
        s->add_option("--invariants", o.invariants, "generalized resultant set")->check(CLI::IsMember({"none", "order8", "full"}));
        s->add_option("--table", o.table, "coefficient table file (default: built in)");
    }
    eul->add_option("--w0", o.w0, "initial profile w0(y)")->required();
    eul->add_option("--F", o.F, "gauge F applied to w (default identity)");
    eul->add_option("--branch", o.branch, "root index when several exist (-1 demands uniqueness)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        int code = app.exit(e);
        return code == 0 ? kOk : kParse;
    }

    Context c;
    c.opt = o;
    c.command = app.get_subcommands().front()->get_name();
    try {
        PrecisionScope ps(o.precision);
        return run(c);
    } catch (const UsageError &e) {
        std::cerr << "weblin: " << e.what() << "\n";
        return kParse;
    } catch (const std::exception &e) {
        std::cerr << "weblin: " << e.what() << "\n";
        return kNumeric;
    }
}
