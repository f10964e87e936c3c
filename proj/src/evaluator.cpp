#include "vista/evaluator.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "vista/executor.hpp"
#include "vista/orchestrator.hpp"
#include "vista/text.hpp"

namespace vista::eval {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string_view to_string(Metric m) noexcept {
    switch (m) {
        case Metric::TxtCoherence: return "TxtCoherence";
        case Metric::TxtConsistency: return "TxtConsistency";
        case Metric::TxtRelevance: return "TxtRelevance";
        case Metric::TxtSimilarity: return "TxtSimilarity";
        case Metric::ImgSimilarity: return "ImgSimilarity";
    }
    return "?";
}

std::optional<Metric> parse_metric(std::string_view s) noexcept {
    for (auto m : kAllMetrics)
        if (to_string(m) == s) return m;
    return std::nullopt;
}

llm::TemplateId template_for(Metric m) noexcept {
    switch (m) {
        case Metric::TxtCoherence: return llm::TemplateId::EvalCoherence;
        case Metric::TxtConsistency: return llm::TemplateId::EvalConsistency;
        case Metric::TxtRelevance: return llm::TemplateId::EvalRelevance;
        case Metric::TxtSimilarity: return llm::TemplateId::EvalSimilarity;
        case Metric::ImgSimilarity: break;
    }
    return llm::TemplateId::EvalImageSimilarity;
}

std::string_view to_string(System s) noexcept { return s == System::Vista ? "Vista" : "Baseline"; }

std::optional<System> parse_system(std::string_view s) noexcept {
    if (s == "Vista") return System::Vista;
    if (s == "Baseline") return System::Baseline;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

std::vector<Problem> load_dataset(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read dataset " + path.string());
    std::vector<Problem> out;
    std::set<std::string> ids;
    const auto base = path.parent_path();
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        Problem p;
        try {
            p = parse_problem_record(line);
        } catch (const IllegalSubtype& e) {
            throw IllegalSubtype(e.category(), e.subtype(), lineno);
        } catch (const MalformedRecord& e) {
            throw MalformedRecord(e.what(), lineno);
        }
        if (!ids.insert(p.id).second) throw MalformedRecord("duplicate problem id '" + p.id + "'", lineno);
        if (p.original_figure && fs::path(*p.original_figure).is_relative())
            p.original_figure = (base / *p.original_figure).lexically_normal().string();
        out.push_back(std::move(p));
    }
    return out;
}

SubtypeCounts count_subtypes(const std::vector<Problem>& problems) {
    SubtypeCounts counts;
    for (const auto& p : problems) ++counts[{p.category, p.subtype}];
    return counts;
}

// ---------------------------------------------------------------------------
// Judge parsing
// ---------------------------------------------------------------------------

namespace {

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

std::size_t skip_spaces(std::string_view s, std::size_t i) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    return i;
}

// Reads an unsigned decimal at i; returns the end position or i when none.
std::size_t read_number(std::string_view s, std::size_t i, double& value) {
    std::size_t j = i;
    while (j < s.size() && is_digit(s[j])) ++j;
    if (j == i) return i;
    if (j + 1 < s.size() && s[j] == '.' && is_digit(s[j + 1])) {
        ++j;
        while (j < s.size() && is_digit(s[j])) ++j;
    }
    value = std::stod(std::string(s.substr(i, j - i)));
    return j;
}

bool starts_with_word(std::string_view s, std::size_t i, std::string_view word) {
    return s.substr(i, word.size()) == word && (i + word.size() >= s.size() || !is_alnum(s[i + word.size()]));
}

}  // namespace

double parse_judge_score(std::string_view response) {
    std::string lower(response);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    std::string_view s = lower;

    std::size_t i = 0;
    if (const auto label = s.rfind("score:"); label != std::string_view::npos) i = label + 6;

    while (i < s.size()) {
        const bool boundary = i == 0 || (!is_alnum(s[i - 1]) && s[i - 1] != '.' && s[i - 1] != '-');
        if (!is_digit(s[i]) || !boundary) {
            ++i;
            continue;
        }
        double value = 0;
        std::size_t end = read_number(s, i, value);
        if (end < s.size() && is_alnum(s[end])) {  // "3rd", "2x"
            while (end < s.size() && is_alnum(s[end])) ++end;
            i = end;
            continue;
        }
        // Ranges and ties name two candidates; neither is the score.
        std::size_t k = skip_spaces(s, end);
        std::size_t after = std::string_view::npos;
        if (k < s.size() && s[k] == '-') after = k + 1;
        else if (s.substr(k, 3) == "\xE2\x80\x93") after = k + 3;  // en dash
        else if (starts_with_word(s, k, "to")) after = k + 2;
        else if (starts_with_word(s, k, "or")) after = k + 2;
        if (after != std::string_view::npos) {
            const auto n = skip_spaces(s, after);
            if (n < s.size() && is_digit(s[n]))
                throw UnparseableJudgeResponse("range or tie instead of a single score", std::string(response));
        }
        // "4/5" and "4 out of 5": skip the denominator.
        if (k < s.size() && s[k] == '/') {
            double denom = 0;
            end = read_number(s, skip_spaces(s, k + 1), denom);
        } else if (s.substr(k, 6) == "out of") {
            double denom = 0;
            end = read_number(s, skip_spaces(s, k + 6), denom);
        }
        if (value >= kMinScore && value <= kMaxScore) return value;
        i = std::max(end, i + 1);
    }
    throw UnparseableJudgeResponse("no number between 1 and 5", std::string(response));
}

// ---------------------------------------------------------------------------
// Scoring
// ---------------------------------------------------------------------------

namespace {

ScoreRecord ask_judge(llm::TemplateId id, const llm::Bindings& bindings, std::vector<fs::path> attachments,
                      const Problem& problem, System system, Metric metric, const Judge& judge) {
    if (!judge.client || !judge.prompts) throw ConfigError("judge has no client or prompts");
    auto messages = judge.prompts->render(id, bindings);
    if (!attachments.empty()) messages.back().attachments = std::move(attachments);
    const auto c = llm::with_retry([&] { return judge.client->complete(messages, judge.params); }, judge.retry,
                                   judge.sleep);
    ScoreRecord r;
    r.problem_id = problem.id;
    r.category = problem.category;
    r.subtype = problem.subtype;
    r.system = system;
    r.metric = metric;
    r.judge_raw = c.text;
    r.usage = c.usage;
    r.score = parse_judge_score(c.text);
    return r;
}

}  // namespace

std::string generated_text(const std::vector<GeneratedQuestion>& questions, std::string_view summary) {
    auto rendered = orch::render_questions(questions);
    if (!rendered.empty()) return rendered;
    return std::string(text::trim(summary));
}

ScoreRecord score_text(Metric metric, const Problem& problem, const std::vector<GeneratedQuestion>& questions,
                       std::string_view summary, System system, const Judge& judge) {
    if (metric == Metric::ImgSimilarity) throw ConfigError("score_text needs a text metric");
    const auto generated = generated_text(questions, summary);
    if (generated.empty()) throw NothingToScore("run " + problem.id + " produced no question text");
    llm::Bindings b{{"problem_text", problem.text},
                    {"generated_questions", generated},
                    {"summary", summary.empty() ? std::string("(none)") : std::string(summary)}};
    return ask_judge(template_for(metric), b, {}, problem, system, metric, judge);
}

ScoreRecord score_text(Metric metric, const Problem& problem, const PipelineResult& result, System system,
                       const Judge& judge) {
    return score_text(metric, problem, result.questions, result.summary, system, judge);
}

ScoreRecord score_image_similarity(const Problem& problem, const std::optional<fs::path>& original,
                                   const std::optional<fs::path>& generated, System system, const Judge& judge) {
    if (!original || !fs::is_regular_file(*original) || !exec::sniff_image(*original))
        throw MissingOriginalImage("problem " + problem.id + " has no readable original figure");
    if (!generated || !fs::is_regular_file(*generated) || !exec::sniff_image(*generated))
        throw MissingGeneratedImage("run " + problem.id + " has no generated figure");
    llm::Bindings b{{"problem_text", problem.text}};
    return ask_judge(llm::TemplateId::EvalImageSimilarity, b, {*original, *generated}, problem, system,
                     Metric::ImgSimilarity, judge);
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

std::vector<SubtypeStats> aggregate(const std::vector<ScoreRecord>& records) {
    using Key = std::tuple<System, Category, Subtype, Metric>;
    std::map<Key, std::vector<double>> groups;
    for (const auto& r : records) groups[{r.system, r.category, r.subtype, r.metric}].push_back(r.score);

    std::vector<SubtypeStats> out;
    out.reserve(groups.size());
    for (auto& [key, values] : groups) {
        std::sort(values.begin(), values.end());
        const double n = static_cast<double>(values.size());
        double sum = 0;
        for (double v : values) sum += v;
        const double mean = sum / n;
        double ss = 0;
        for (double v : values) ss += (v - mean) * (v - mean);
        SubtypeStats s;
        std::tie(s.system, s.category, s.subtype, s.metric) = key;
        s.n = values.size();
        s.mean = mean;
        s.std = std::sqrt(ss / n);
        out.push_back(s);
    }
    return out;
}

std::vector<ComparisonRow> compare_systems(const std::vector<SubtypeStats>& stats) {
    using Key = std::tuple<Category, Subtype, Metric>;
    std::map<Key, ComparisonRow> rows;
    for (const auto& s : stats) {
        auto& row = rows[{s.category, s.subtype, s.metric}];
        row.category = s.category;
        row.subtype = s.subtype;
        row.metric = s.metric;
        (s.system == System::Vista ? row.vista_mean : row.baseline_mean) = s.mean;
    }
    std::vector<ComparisonRow> out;
    for (auto& [key, row] : rows) {
        if (row.vista_mean && row.baseline_mean)
            row.delta = *row.vista_mean - *row.baseline_mean;
        else
            row.flag = row.vista_mean ? "baseline-missing" : "vista-missing";
        out.push_back(std::move(row));
    }
    return out;
}

std::string report_csv(const std::vector<SubtypeStats>& stats) {
    std::string out = "system,category,subtype,metric,n,mean,std\n";
    for (const auto& s : stats) {
        out += std::string(to_string(s.system)) + ',' + std::string(to_string(s.category)) + ',' +
               std::string(to_string(s.subtype)) + ',' + std::string(to_string(s.metric)) + ',' +
               std::to_string(s.n) + ',' + text::format_fixed(s.mean, 6) + ',' + text::format_fixed(s.std, 6) + '\n';
    }
    return out;
}

namespace {

std::string pad(std::string_view s, std::size_t width) {
    std::string out(s);
    if (out.size() < width) out.append(width - out.size(), ' ');
    return out;
}

std::string opt_fixed(const std::optional<double>& v, bool sign = false) {
    if (!v) return "-";
    auto s = text::format_fixed(*v, 3);
    if (sign && *v >= 0) s.insert(s.begin(), '+');
    return s;
}

}  // namespace

std::string report_text(const std::vector<SubtypeStats>& stats, const std::vector<ComparisonRow>& comparison,
                        const std::vector<std::string>& gaps, const std::vector<std::string>& errors) {
    std::ostringstream os;
    std::size_t records = 0;
    for (const auto& s : stats) records += s.n;
    os << "Evaluation report\n";
    os << "scores: " << records << ", groups: " << stats.size() << "\n\n";

    os << "Per-subtype statistics (mean and population standard deviation)\n";
    os << pad("system", 10) << pad("category", 12) << pad("subtype", 12) << pad("metric", 16) << pad("n", 6)
       << pad("mean", 10) << "std\n";
    for (const auto& s : stats)
        os << pad(to_string(s.system), 10) << pad(to_string(s.category), 12) << pad(to_string(s.subtype), 12)
           << pad(to_string(s.metric), 16) << pad(std::to_string(s.n), 6) << pad(text::format_fixed(s.mean, 3), 10)
           << text::format_fixed(s.std, 3) << '\n';

    os << "\nVista minus Baseline\n";
    os << pad("category", 12) << pad("subtype", 12) << pad("metric", 16) << pad("vista", 8) << pad("baseline", 10)
       << pad("delta", 8) << "flag\n";
    for (const auto& r : comparison) {
        std::string line = pad(to_string(r.category), 12) + pad(to_string(r.subtype), 12) +
                           pad(to_string(r.metric), 16) + pad(opt_fixed(r.vista_mean), 8) +
                           pad(opt_fixed(r.baseline_mean), 10) + pad(opt_fixed(r.delta, true), 8) + r.flag;
        os << text::trim(line) << '\n';
    }

    if (!gaps.empty()) {
        os << "\nSkipped (" << gaps.size() << ")\n";
        for (const auto& g : gaps) os << "- " << g << '\n';
    }
    if (!errors.empty()) {
        os << "\nJudge errors (" << errors.size() << ")\n";
        for (const auto& e : errors) os << "- " << e << '\n';
    }
    return os.str();
}

std::string encode_score_record(const ScoreRecord& r) {
    ordered_json j{{"problem_id", r.problem_id},
                   {"system", to_string(r.system)},
                   {"category", to_string(r.category)},
                   {"subtype", to_string(r.subtype)},
                   {"metric", to_string(r.metric)},
                   {"score", r.score},
                   {"judge_raw", r.judge_raw},
                   {"usage",
                    {{"input_tokens", r.usage.input_tokens},
                     {"output_tokens", r.usage.output_tokens},
                     {"wall_time", r.usage.wall_time}}}};
    return j.dump();
}

ScoreRecord decode_score_record(std::string_view line) {
    const auto j = ordered_json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw MalformedRecord("score record is not a JSON object");
    try {
        ScoreRecord r;
        r.problem_id = j.at("problem_id").get<std::string>();
        const auto system = parse_system(j.at("system").get<std::string>());
        const auto category = parse_category(j.at("category").get<std::string>());
        const auto subtype = parse_subtype(j.at("subtype").get<std::string>());
        const auto metric = parse_metric(j.at("metric").get<std::string>());
        if (!system || !category || !subtype || !metric) throw MalformedRecord("score record has an unknown enum value");
        r.system = *system;
        r.category = *category;
        r.subtype = *subtype;
        r.metric = *metric;
        r.score = j.at("score").get<double>();
        r.judge_raw = j.at("judge_raw").get<std::string>();
        if (auto u = j.find("usage"); u != j.end()) {
            r.usage.input_tokens = u->value("input_tokens", std::int64_t{0});
            r.usage.output_tokens = u->value("output_tokens", std::int64_t{0});
            r.usage.wall_time = u->value("wall_time", 0.0);
        }
        if (r.score < kMinScore || r.score > kMaxScore) throw MalformedRecord("score outside [1, 5]");
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw MalformedRecord(std::string("score record: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Run directories
// ---------------------------------------------------------------------------

namespace {

struct RunRef {
    System system;
    std::string name;
    fs::path dir;
};

std::vector<RunRef> discover_runs(const fs::path& root) {
    std::vector<RunRef> runs;
    for (auto [system, sub] : {std::pair{System::Vista, "vista"}, std::pair{System::Baseline, "baseline"}}) {
        const auto dir = root / sub;
        std::error_code ec;
        if (!fs::is_directory(dir, ec)) continue;
        std::vector<RunRef> found;
        for (const auto& e : fs::directory_iterator(dir, ec))
            if (e.is_directory() && fs::exists(e.path() / "result.json"))
                found.push_back({system, e.path().filename().string(), e.path()});
        std::sort(found.begin(), found.end(), [](const RunRef& a, const RunRef& b) { return a.name < b.name; });
        runs.insert(runs.end(), found.begin(), found.end());
    }
    return runs;
}

struct Slot {
    std::optional<ScoreRecord> record;
    std::string gap;
    std::string error;
};

}  // namespace

EvalOutcome evaluate_runs(const fs::path& runs_root, const Judge& judge, int jobs, const std::atomic<bool>* stop) {
    if (jobs < 1) throw ConfigError("jobs must be >= 1");
    const auto runs = discover_runs(runs_root);
    EvalOutcome outcome;
    outcome.runs_seen = runs.size();

    std::vector<std::optional<orch::StoredRun>> stored(runs.size());
    std::vector<std::string> load_errors(runs.size());
    for (std::size_t i = 0; i < runs.size(); ++i) {
        try {
            stored[i] = orch::load_run(runs[i].dir);
        } catch (const Error& e) {
            load_errors[i] = std::string(to_string(runs[i].system)) + "/" + runs[i].name + ": " + e.what();
        }
    }

    std::vector<Slot> slots(runs.size() * kMetricCount);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            if (stop && stop->load()) return;
            const auto idx = next.fetch_add(1);
            if (idx >= slots.size()) return;
            const auto run_idx = idx / kMetricCount;
            const auto metric = kAllMetrics[idx % kMetricCount];
            if (!stored[run_idx]) continue;
            const auto& run = *stored[run_idx];
            const auto& ref = runs[run_idx];
            auto& slot = slots[idx];
            const auto tag = std::string(to_string(ref.system)) + "/" + ref.name + " " + std::string(to_string(metric));
            try {
                if (metric == Metric::ImgSimilarity) {
                    std::optional<fs::path> original;
                    if (run.problem.original_figure) original = fs::path(*run.problem.original_figure);
                    slot.record = score_image_similarity(run.problem, original, run.figure, ref.system, judge);
                } else {
                    slot.record = score_text(metric, run.problem, run.questions, run.summary, ref.system, judge);
                }
            } catch (const MissingOriginalImage& e) {
                slot.gap = tag + ": " + e.what();
            } catch (const MissingGeneratedImage& e) {
                slot.gap = tag + ": " + e.what();
            } catch (const NothingToScore& e) {
                slot.gap = tag + ": " + e.what();
            } catch (const Error& e) {
                slot.error = tag + ": " + e.what();
            }
        }
    };
    const int n_threads = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(jobs), slots.size()));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    for (std::size_t i = 0; i < runs.size(); ++i) {
        if (!load_errors[i].empty()) outcome.errors.push_back(load_errors[i]);
        for (std::size_t m = 0; m < kMetricCount; ++m) {
            auto& slot = slots[i * kMetricCount + m];
            if (slot.record) outcome.records.push_back(std::move(*slot.record));
            if (!slot.gap.empty()) outcome.gaps.push_back(std::move(slot.gap));
            if (!slot.error.empty()) outcome.errors.push_back(std::move(slot.error));
        }
    }
    return outcome;
}

void write_reports(const EvalOutcome& outcome, const fs::path& eval_dir) {
    fs::create_directories(eval_dir);
    const auto stats = aggregate(outcome.records);
    const auto comparison = compare_systems(stats);
    auto write = [&](const char* name, const std::string& data) {
        std::ofstream out(eval_dir / name, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + (eval_dir / name).string());
        out << data;
    };
    std::string scores;
    for (const auto& r : outcome.records) scores += encode_score_record(r) + '\n';
    write("scores.jsonl", scores);
    write("report.csv", report_csv(stats));
    write("report.txt", report_text(stats, comparison, outcome.gaps, outcome.errors));
}

}  // namespace vista::eval
