// Acceptance run: one PASS/FAIL line per criterion, each with its own time
// budget. Exit status is non-zero when any asserted criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>

#include "fake_endpoint.hpp"
#include "scripted_model.hpp"
#include "vista/cli.hpp"
#include "vista/evaluator.hpp"
#include "vista/executor.hpp"
#include "vista/func.hpp"
#include "vista/geom.hpp"
#include "vista/orchestrator.hpp"

namespace fs = std::filesystem;
using namespace vista;
using vista::testing::read_file;
using vista::testing::TempDir;
using vista::testing::write_file;

namespace {

const fs::path kData = VISTA_DATA_DIR;

struct Finding {
    bool pass = false;
    std::string detail;
};

int cli(std::vector<std::string> args, std::string* captured = nullptr) {
    args.insert(args.begin(), "vista");
    std::ostringstream out, err;
    const int rc = cli::run_cli(args, out, err);
    if (captured) *captured = out.str() + err.str();
    return rc;
}

// Every regular file under `root`, relative path -> bytes.
std::map<std::string, std::string> tree(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = read_file(e.path());
    return files;
}

// ---------------------------------------------------------------------------
// 1. dataset counts
// ---------------------------------------------------------------------------

Finding dataset_fidelity() {
    const auto geo = eval::count_subtypes(eval::load_dataset(kData / "geometry2d_subtypes.jsonl"));
    const auto fn = eval::count_subtypes(eval::load_dataset(kData / "function_subtypes.jsonl"));
    const eval::SubtypeCounts want_geo{{{Category::Geometry2D, Subtype::Angle}, 193},
                                       {{Category::Geometry2D, Subtype::Length}, 158},
                                       {{Category::Geometry2D, Subtype::Area}, 47},
                                       {{Category::Geometry2D, Subtype::Applied}, 69},
                                       {{Category::Geometry2D, Subtype::Analytic}, 41}};
    const eval::SubtypeCounts want_fn{{{Category::Function, Subtype::Property}, 71},
                                      {{Category::Function, Subtype::Expression}, 32},
                                      {{Category::Function, Subtype::Coordinate}, 16},
                                      {{Category::Function, Subtype::Applied}, 40}};
    std::size_t g = 0, f = 0;
    for (const auto& [k, n] : geo) g += n;
    for (const auto& [k, n] : fn) f += n;
    std::ostringstream os;
    os << "geometry " << g << ", function " << f;
    return {geo == want_geo && fn == want_fn && g == 508 && f == 159, os.str()};
}

// ---------------------------------------------------------------------------
// 2. geometry kernel
// ---------------------------------------------------------------------------

// Solves a.p + t*(a.q - a.p) = b.p + u*(b.q - b.p) in long double.
struct Param {
    bool parallel = false;
    long double t = 0, u = 0, x = 0, y = 0;
};

Param parametric(const geom::Segment& s1, const geom::Segment& s2) {
    const long double dx1 = (long double)s1.b.x - s1.a.x, dy1 = (long double)s1.b.y - s1.a.y;
    const long double dx2 = (long double)s2.b.x - s2.a.x, dy2 = (long double)s2.b.y - s2.a.y;
    const long double det = dx1 * -dy2 - (-dx2) * dy1;
    Param p;
    if (std::fabs((double)det) < 1e-9) {
        p.parallel = true;
        return p;
    }
    const long double rx = (long double)s2.a.x - s1.a.x, ry = (long double)s2.a.y - s1.a.y;
    p.t = (rx * -dy2 - (-dx2) * ry) / det;
    p.u = (dx1 * ry - dy1 * rx) / det;
    p.x = s1.a.x + p.t * dx1;
    p.y = s1.a.y + p.t * dy1;
    return p;
}

bool inside_convex(const std::vector<geom::Point>& poly, double x, double y) {
    bool pos = false, neg = false;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const auto& a = poly[i];
        const auto& b = poly[(i + 1) % poly.size()];
        const double c = (b.x - a.x) * (y - a.y) - (b.y - a.y) * (x - a.x);
        pos = pos || c > 0;
        neg = neg || c < 0;
    }
    return !(pos && neg);
}

Finding geometry_oracles() {
    std::mt19937_64 rng(20240601);
    std::uniform_real_distribution<double> coord(-10, 10), unit(0, 1), angle(0, 2 * std::numbers::pi);
    int seg_checked = 0, seg_bad = 0, area_bad = 0, iso_bad = 0;
    double worst_area = 0;

    for (int scene = 0; scene < 1000; ++scene) {
        // segment intersection against the parametric solution
        const geom::Segment s1{{coord(rng), coord(rng)}, {coord(rng), coord(rng)}};
        const geom::Segment s2{{coord(rng), coord(rng)}, {coord(rng), coord(rng)}};
        const auto oracle = parametric(s1, s2);
        if (!oracle.parallel) {
            const long double margin = 1e-9;
            const bool clearly_in = oracle.t > margin && oracle.t < 1 - margin && oracle.u > margin &&
                                    oracle.u < 1 - margin;
            const bool clearly_out = oracle.t < -margin || oracle.t > 1 + margin || oracle.u < -margin ||
                                     oracle.u > 1 + margin;
            const auto got = geom::segment_intersection(s1, s2);
            if (clearly_in) {
                ++seg_checked;
                if (!got || std::hypot(got->x - (double)oracle.x, got->y - (double)oracle.y) > 1e-6) ++seg_bad;
            } else if (clearly_out) {
                ++seg_checked;
                if (got) ++seg_bad;
            }
        }

        // convex polygon area against stratified Monte-Carlo
        const int k = 3 + static_cast<int>(unit(rng) * 6);
        std::vector<double> angles(static_cast<std::size_t>(k));
        for (auto& a : angles) a = angle(rng);
        std::sort(angles.begin(), angles.end());
        const double cx = coord(rng), cy = coord(rng), rx = 0.5 + 4 * unit(rng), ry = 0.5 + 4 * unit(rng),
                     rot = angle(rng);
        std::vector<geom::Point> poly;
        for (double a : angles) {
            const double ex = rx * std::cos(a), ey = ry * std::sin(a);
            poly.push_back({cx + ex * std::cos(rot) - ey * std::sin(rot), cy + ex * std::sin(rot) + ey * std::cos(rot)});
        }
        const double area = geom::polygon_area(poly);
        if (area < 1e-2) continue;
        double minx = poly[0].x, maxx = minx, miny = poly[0].y, maxy = miny;
        for (const auto& p : poly) {
            minx = std::min(minx, p.x);
            maxx = std::max(maxx, p.x);
            miny = std::min(miny, p.y);
            maxy = std::max(maxy, p.y);
        }
        // Jittered sampling only errs in cells the boundary crosses. The grid is
        // sized so that error's standard deviation is about 0.2% of the area.
        double perimeter = 0;
        for (std::size_t i = 0; i < poly.size(); ++i)
            perimeter += std::hypot(poly[(i + 1) % poly.size()].x - poly[i].x, poly[(i + 1) % poly.size()].y - poly[i].y);
        const double box = (maxx - minx) * (maxy - miny);
        const double need = box * std::sqrt(perimeter / std::sqrt(box)) / (2 * 0.002 * area);
        const int kStrata = std::clamp(static_cast<int>(std::ceil(std::pow(need, 2.0 / 3.0))), 250, 3000);
        const double w = (maxx - minx) / kStrata, h = (maxy - miny) / kStrata;
        long hits = 0;
        for (int i = 0; i < kStrata; ++i)
            for (int j = 0; j < kStrata; ++j)
                hits += inside_convex(poly, minx + (i + unit(rng)) * w, miny + (j + unit(rng)) * h);
        const double estimate = static_cast<double>(hits) / (double(kStrata) * kStrata) * (maxx - minx) * (maxy - miny);
        const double rel = std::abs(estimate - area) / area;
        worst_area = std::max(worst_area, rel);
        if (rel > 0.01) ++area_bad;

        // the same scene moved rigidly keeps every verdict
        geom::GeometricScene a, b;
        const double th = angle(rng), tx = coord(rng), ty = coord(rng);
        const bool mirror = unit(rng) < 0.5;
        auto move = [&](geom::Point p) {
            if (mirror) p.y = -p.y;
            return geom::Point{p.x * std::cos(th) - p.y * std::sin(th) + tx, p.x * std::sin(th) + p.y * std::cos(th) + ty};
        };
        std::vector<std::string> labels;
        for (int i = 0; i < k; ++i) {
            const std::string l = "P" + std::to_string(i);
            labels.push_back(l);
            a.points[l] = poly[static_cast<std::size_t>(i)];
            b.points[l] = move(poly[static_cast<std::size_t>(i)]);
        }
        a.points["O"] = {cx, cy};
        b.points["O"] = move({cx, cy});
        a.polygons = b.polygons = {labels};
        a.segments = b.segments = {{"P0", "O"}};
        a.circles = b.circles = {{"O", 0.25}};
        std::string ring = labels[0];
        for (int i = 1; i < k; ++i) ring += "-" + labels[static_cast<std::size_t>(i)];
        auto c = [](geom::ConstraintKind kind, std::vector<std::string> ops, std::optional<double> target) {
            geom::Constraint con;
            con.kind = kind;
            con.operands = std::move(ops);
            con.target = target;
            return con;
        };
        const double side = geom::distance(poly[0], poly[1]);
        const double ang = geom::angle_at(poly[1], poly[0], poly[2]);
        for (double skew : {1.0, 1.1}) {
            const std::vector<geom::Constraint> cs{
                c(geom::ConstraintKind::AreaEquals, {ring}, area * skew),
                c(geom::ConstraintKind::LengthEquals, {"P0-P1"}, side * skew),
                c(geom::ConstraintKind::AngleEquals, {"P1", "P0", "P2"}, ang * skew),
                c(geom::ConstraintKind::RatioEquals, {ring, "circle:O"}, area / (std::numbers::pi * 0.0625) * skew),
                c(geom::ConstraintKind::PointOnEntity, {"P1", ring}, std::nullopt),
                c(geom::ConstraintKind::Adjacent, {"P0-O", ring}, std::nullopt),
                c(geom::ConstraintKind::ShapeCount, {"circle"}, 1),
            };
            const auto ra = geom::validate_scene(a, cs);
            const auto rb = geom::validate_scene(b, cs);
            for (std::size_t i = 0; i < cs.size(); ++i) {
                const bool expect_pass = skew == 1.0 || i >= 4;
                if (ra.entries[i].verdict != rb.entries[i].verdict) ++iso_bad;
                if ((ra.entries[i].verdict == vista::Verdict::Pass) != expect_pass) ++iso_bad;
            }
        }
    }
    std::ostringstream os;
    os << seg_checked << " intersections (" << seg_bad << " off), area worst rel err " << std::setprecision(3)
       << worst_area * 100 << "% (" << area_bad << " over 1%), " << iso_bad << " isometry mismatches";
    return {seg_bad == 0 && area_bad == 0 && iso_bad == 0 && seg_checked > 900, os.str()};
}

// ---------------------------------------------------------------------------
// 3. function kernel
// ---------------------------------------------------------------------------

Finding function_oracles() {
    std::mt19937_64 rng(424242);
    std::uniform_real_distribution<double> coef(-10, 10);
    std::uniform_int_distribution<int> degree(1, 4);
    const func::Window w{-10, 10};
    constexpr int kGrid = 200000;
    int residual_bad = 0, count_bad = 0, vertex_bad = 0, quadratics = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> c(static_cast<std::size_t>(degree(rng)) + 1);
        for (auto& v : c) v = coef(rng);
        const func::Polynomial p(c);
        const auto roots = func::poly_roots(p, w);
        const double bound = 1e-6 * (1.0 + p.max_abs_coefficient());
        for (double r : roots)
            if (std::abs(func::poly_eval(p, r)) > bound) ++residual_bad;

        int changes = 0;
        double prev = func::poly_eval(p, w.lo);
        for (int i = 1; i <= kGrid; ++i) {
            const double x = w.lo + (w.hi - w.lo) * i / kGrid;
            const double cur = func::poly_eval(p, x);
            if (cur != 0 && prev != 0 && (cur < 0) != (prev < 0)) ++changes;
            if (cur != 0) prev = cur;
        }
        if (static_cast<int>(roots.size()) != changes) ++count_bad;

        if (p.degree() == 2) {
            ++quadratics;
            const auto v = func::quadratic_vertex(p);
            if (std::abs(func::poly_eval(p.derivative(), v.x)) > 1e-9 * std::max(1.0, p.max_abs_coefficient()))
                ++vertex_bad;
        }
    }
    // A dedicated batch of quadratics so stationarity is not left to chance.
    for (int trial = 0; trial < 1000; ++trial) {
        double a = coef(rng);
        if (std::abs(a) < 1e-3) a = 1.0;
        const func::Polynomial p{coef(rng), coef(rng), a};
        ++quadratics;
        const auto v = func::quadratic_vertex(p);
        if (std::abs(func::poly_eval(p.derivative(), v.x)) > 1e-9 * std::max(1.0, p.max_abs_coefficient()))
            ++vertex_bad;
    }
    std::ostringstream os;
    os << residual_bad << " residual failures, " << count_bad << " root-count mismatches, " << vertex_bad << "/"
       << quadratics << " non-stationary vertices";
    return {residual_bad == 0 && count_bad == 0 && vertex_bad == 0, os.str()};
}

// ---------------------------------------------------------------------------
// 4. protocol conformance on the committed cassettes
// ---------------------------------------------------------------------------

Finding protocol_conformance() {
    TempDir dir;
    std::map<std::string, orch::StoredRun> runs;
    std::string log;
    for (const char* name : {"clean", "fault", "exhaust"}) {
        const auto problem = kData / "protocol" / (std::string(name) + ".json");
        const auto out = dir.path() / name;
        std::string captured;
        cli({"run", "--problem", problem.string(), "--out", out.string(), "--cassette",
             (kData / "cassettes" / (std::string(name) + ".jsonl")).string(), "--cassette-mode", "replay"},
            &captured);
        const auto run_dir = out / "vista" / (std::string("proto-") + name);
        if (!fs::exists(run_dir / "result.json")) return {false, std::string(name) + ": no run directory; " + captured};
        runs[name] = orch::load_run(run_dir);
    }
    using A = AgentName;
    const std::vector<A> order{A::NumericCalculator,     A::GeometryValidator, A::Visualizer,
                               A::CodeExecutor,          A::MathQuestionGenerator, A::Summarizer};
    const auto& clean = runs["clean"];
    const bool clean_ok = clean.senders == order && clean.status == PipelineStatus::Completed;

    const auto& fault = runs["fault"];
    const std::vector<A> fault_order{A::NumericCalculator, A::GeometryValidator, A::Visualizer, A::CodeExecutor,
                                     A::Visualizer,        A::CodeExecutor,      A::MathQuestionGenerator,
                                     A::Summarizer};
    const bool fault_ok =
        fault.senders == fault_order && fault.retries_used == 1 && fault.status == PipelineStatus::Completed;

    const auto& exhaust = runs["exhaust"];
    const bool exhaust_ok = exhaust.status == PipelineStatus::FailedExecution && exhaust.retries_used == 3;

    std::ostringstream os;
    os << "clean " << (clean_ok ? "ok" : "WRONG") << ", fault retries " << fault.retries_used << ", exhaust "
       << to_string(exhaust.status) << " with retries " << exhaust.retries_used << "/3";
    return {clean_ok && fault_ok && exhaust_ok, os.str()};
}

// ---------------------------------------------------------------------------
// 5. executor contract
// ---------------------------------------------------------------------------

Finding executor_contract() {
    TempDir root;
    const auto decoy = root.path() / "decoy";
    fs::create_directories(decoy);
    testing::write_png(decoy / "result.png", 8, 8);
    write_file(decoy / "notes.txt", "keep");
    const auto before = tree(decoy);
    std::vector<std::string> problems;
    auto fresh = [&](const std::string& name) {
        const auto d = root.path() / name;
        fs::create_directories(d);
        return d;
    };

    // confirmation and file
    {
        const auto out = exec::execute("open('result.jpg','wb').write(b'\\xff\\xd8\\xff\\xe0' + bytes(200))\n"
                                       "print('figure saved to result.jpg')\n",
                                       fresh("confirm"), {});
        const auto fig = exec::detect_figure(out);
        bool listed = false;
        for (const auto& f : out.produced_files) listed = listed || f.path.filename() == "result.jpg";
        if (out.exit_status != 0 || !listed || !fig || fig->filename() != "result.jpg")
            problems.push_back("confirm+file");
    }
    // last confirmation line wins; a missing file yields nothing
    {
        const auto out = exec::execute("open('a.png','wb').write(b'\\x89PNG\\r\\n\\x1a\\n' + bytes(64))\n"
                                       "print('figure saved to a.png')\nprint('figure saved to b.png')\n",
                                       fresh("last-line"), {});
        if (exec::detect_figure(out)) problems.push_back("last-line rule");
    }
    // exception
    {
        const auto out = exec::execute("raise RuntimeError('boom')\n", fresh("exception"), {});
        if (out.exit_status == 0 || out.stderr_text.empty() || exec::detect_figure(out))
            problems.push_back("exception");
    }
    // timeout
    {
        exec::ExecLimits limits;
        limits.timeout_s = 2.0;
        try {
            exec::execute("print('spinning', flush=True)\nwhile True:\n    pass\n", fresh("timeout"), limits);
            problems.push_back("timeout not raised");
        } catch (const exec::TimeoutExceeded& e) {
            const double d = e.partial().duration;
            if (d < 1.9 || d > 3.0 || e.partial().stdout_text.find("spinning") == std::string::npos)
                problems.push_back("timeout duration " + std::to_string(d));
        }
    }
    // confinement: a script that reaches into the decoy is not credited, and
    // scripts that stay put leave the decoy untouched
    {
        const auto out = exec::execute("print('figure saved to ../decoy/result.png')\n", fresh("escape"), {});
        if (exec::detect_figure(out)) problems.push_back("figure outside workdir accepted");
    }
    if (tree(decoy) != before) problems.push_back("decoy directory changed");

    std::string detail = problems.empty() ? "confirm+file, last-line, exception, timeout, confinement" : "";
    for (const auto& p : problems) detail += (detail.empty() ? "" : "; ") + p;
    return {problems.empty(), detail};
}

// ---------------------------------------------------------------------------
// 6. replay determinism
// ---------------------------------------------------------------------------

Finding replay_determinism() {
    TempDir dir;
    const auto cassette = (kData / "cassettes" / "mini_benchmark.jsonl").string();
    const auto dataset = (kData / "mini_benchmark.jsonl").string();
    std::vector<std::map<std::string, std::string>> trees;
    std::string log;
    for (int pass = 0; pass < 2; ++pass) {
        const auto out = (dir.path() / ("pass" + std::to_string(pass))).string();
        for (const char* cmd : {"run", "baseline"})
            cli({cmd, "--dataset", dataset, "--out", out, "--cassette", cassette, "--cassette-mode", "replay"}, &log);
        const int rc = cli({"eval", "--out", out, "--cassette", cassette, "--cassette-mode", "replay"}, &log);
        if (rc != 0) return {false, "eval exited " + std::to_string(rc) + ": " + log};
        trees.push_back(tree(out));
    }
    std::size_t runs = 0;
    for (const auto& [name, bytes] : trees[0]) runs += name.ends_with("result.json");
    const bool csv = trees[0].contains("eval/report.csv") && trees[0]["eval/report.csv"] == trees[1]["eval/report.csv"];
    std::ostringstream os;
    os << trees[0].size() << " files across " << runs << " run directories, "
       << (trees[0] == trees[1] ? "identical" : "DIFFERENT") << ", report.csv " << (csv ? "identical" : "DIFFERENT");
    return {trees[0] == trees[1] && csv && runs == 12, os.str()};
}

// ---------------------------------------------------------------------------
// 7. aggregation oracle
// ---------------------------------------------------------------------------

Finding aggregation_oracle() {
    std::mt19937_64 rng(777);
    std::uniform_real_distribution<double> score(eval::kMinScore, eval::kMaxScore);
    std::vector<std::pair<Category, Subtype>> pairs;
    for (auto c : all_categories())
        for (auto s : subtypes_of(c)) pairs.emplace_back(c, s);
    std::uniform_int_distribution<std::size_t> pick_pair(0, pairs.size() - 1), pick_metric(0, eval::kMetricCount - 1);
    std::bernoulli_distribution vista(0.5);

    std::vector<eval::ScoreRecord> records(10000);
    for (std::size_t i = 0; i < records.size(); ++i) {
        auto& r = records[i];
        r.problem_id = "r" + std::to_string(i);
        std::tie(r.category, r.subtype) = pairs[pick_pair(rng)];
        r.metric = eval::kAllMetrics[pick_metric(rng)];
        r.system = vista(rng) ? eval::System::Vista : eval::System::Baseline;
        r.score = score(rng);
    }

    // Naive two-pass oracle over the records in input order.
    using Key = std::tuple<eval::System, Category, Subtype, eval::Metric>;
    std::map<Key, std::vector<double>> groups;
    for (const auto& r : records) groups[{r.system, r.category, r.subtype, r.metric}].push_back(r.score);

    const auto stats = eval::aggregate(records);
    double worst = 0;
    bool shape_ok = stats.size() == groups.size();
    for (const auto& s : stats) {
        const auto it = groups.find({s.system, s.category, s.subtype, s.metric});
        if (it == groups.end() || it->second.size() != s.n) {
            shape_ok = false;
            continue;
        }
        double sum = 0;
        for (double v : it->second) sum += v;
        const double mean = sum / static_cast<double>(it->second.size());
        double ss = 0;
        for (double v : it->second) ss += (v - mean) * (v - mean);
        const double sd = std::sqrt(ss / static_cast<double>(it->second.size()));
        worst = std::max({worst, std::abs(mean - s.mean), std::abs(sd - s.std)});
    }
    bool permutation_ok = true;
    for (int t = 0; t < 5; ++t) {
        std::shuffle(records.begin(), records.end(), rng);
        permutation_ok = permutation_ok && eval::aggregate(records) == stats;
    }
    std::ostringstream os;
    os << stats.size() << " groups, worst deviation " << std::scientific << std::setprecision(2) << worst
       << ", permutations " << (permutation_ok ? "invariant" : "CHANGED");
    return {shape_ok && worst <= 1e-12 && permutation_ok, os.str()};
}

// ---------------------------------------------------------------------------
// 8. token accounting (informational)
// ---------------------------------------------------------------------------

Finding token_accounting() {
    TempDir dir;
    std::unique_ptr<testing::FakeEndpoint> local;
    std::string endpoint;
    std::string source;
    if (const char* live = std::getenv("VISTA_LIVE_ENDPOINT"); live && *live) {
        endpoint = live;
        source = "live endpoint";
    } else {
        local = std::make_unique<testing::FakeEndpoint>();
        endpoint = local->base_url();
        source = "scripted endpoint (set VISTA_LIVE_ENDPOINT for a live run)";
    }
    std::string lines;
    std::size_t n = 0;
    std::istringstream all(read_file(kData / "mini_benchmark.jsonl"));
    for (std::string s; std::getline(all, s);) {
        if (s.empty() || n == 5) continue;
        lines += s + "\n";
        ++n;
    }
    write_file(dir.path() / "five.jsonl", lines);
    const auto out = dir.path() / "out";
    std::string captured;
    cli({"run", "--dataset", (dir.path() / "five.jsonl").string(), "--out", out.string(), "--endpoint", endpoint},
        &captured);
    TokenUsage total;
    std::size_t recorded = 0;
    for (const auto& e : fs::directory_iterator(out / "vista")) {
        const auto run = orch::load_run(e.path());
        if (run.usage.input_tokens > 0 && run.usage.output_tokens > 0) ++recorded;
        total += run.usage;
    }
    const bool reported = captured.find("usage: ") != std::string::npos;
    std::ostringstream os;
    os << source << ": " << recorded << "/5 runs carry usage, mean " << total.input_tokens / 5 << " in / "
       << total.output_tokens / 5 << " out per figure (reference about 3400 / 600, not asserted)";
    return {recorded == 5 && reported, os.str()};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double budget_s;
        std::function<Finding()> run;
    };
    const std::vector<Criterion> criteria{
        {1, "dataset fidelity", 1.0, dataset_fidelity},
        {2, "geometry kernel oracles", 30.0, geometry_oracles},
        {3, "function kernel oracles", 30.0, function_oracles},
        {4, "protocol conformance", 30.0, protocol_conformance},
        {5, "executor contract", 40.0, executor_contract},
        {6, "replay determinism", 10.0, replay_determinism},
        {7, "aggregation oracle", 5.0, aggregation_oracle},
        {8, "token accounting (informational)", 60.0, token_accounting},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto started = std::chrono::steady_clock::now();
        Finding v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        const bool in_time = secs <= c.budget_s;
        const bool pass = v.pass && in_time;
        failures += !pass;
        std::cout << (pass ? "PASS" : "FAIL") << "  [" << c.id << "] " << c.name << ": " << v.detail << " ("
                  << std::fixed << std::setprecision(2) << secs << " s / " << std::setprecision(0) << c.budget_s
                  << " s" << (in_time ? "" : ", over budget") << ")" << std::defaultfloat << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
