#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vista/core.hpp"
#include "vista/llm.hpp"
#include "vista/prompts.hpp"
#include "vista/retry.hpp"

namespace vista::eval {

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

// One JSON object per line; blank lines are skipped. Errors carry the
// 1-based line number. A relative `original_figure` is resolved against the
// directory holding the dataset file. Duplicate ids are rejected.
std::vector<Problem> load_dataset(const std::filesystem::path& path);

using SubtypeCounts = std::map<std::pair<Category, Subtype>, std::size_t>;
SubtypeCounts count_subtypes(const std::vector<Problem>& problems);

// ---------------------------------------------------------------------------
// Judge scores
// ---------------------------------------------------------------------------

enum class Metric { TxtCoherence, TxtConsistency, TxtRelevance, TxtSimilarity, ImgSimilarity };
inline constexpr std::size_t kMetricCount = 5;
inline constexpr Metric kAllMetrics[] = {Metric::TxtCoherence, Metric::TxtConsistency, Metric::TxtRelevance,
                                         Metric::TxtSimilarity, Metric::ImgSimilarity};
inline constexpr Metric kTextMetrics[] = {Metric::TxtCoherence, Metric::TxtConsistency, Metric::TxtRelevance,
                                          Metric::TxtSimilarity};
std::string_view to_string(Metric m) noexcept;
std::optional<Metric> parse_metric(std::string_view s) noexcept;
llm::TemplateId template_for(Metric m) noexcept;

enum class System { Vista, Baseline };
std::string_view to_string(System s) noexcept;
std::optional<System> parse_system(std::string_view s) noexcept;

inline constexpr double kMinScore = 1.0;
inline constexpr double kMaxScore = 5.0;

class UnparseableJudgeResponse : public Error {
public:
    UnparseableJudgeResponse(const std::string& why, std::string raw)
        : Error("unparseable judge response: " + why), raw_(std::move(raw)) {}
    const std::string& judge_raw() const noexcept { return raw_; }

private:
    std::string raw_;
};

class MissingOriginalImage : public Error {
public:
    using Error::Error;
};

class MissingGeneratedImage : public Error {
public:
    using Error::Error;
};

// Nothing generated to score (no questions and no summary).
class NothingToScore : public Error {
public:
    using Error::Error;
};

// The score is the first standalone number in [1, 5], looked for after a
// `score:` label when the response has one. `4/5` and `4 out of 5` read as 4.
// A range or tie (`3-4`, `3 to 4`, `3 or 4`) is rejected.
double parse_judge_score(std::string_view response);

struct ScoreRecord {
    std::string problem_id;
    Category category = Category::Geometry2D;
    Subtype subtype = Subtype::Angle;
    System system = System::Vista;
    Metric metric = Metric::TxtCoherence;
    double score = kMinScore;
    std::string judge_raw;
    TokenUsage usage;

    bool operator==(const ScoreRecord&) const = default;
};

struct Judge {
    llm::ChatClient* client = nullptr;
    const llm::PromptRegistry* prompts = nullptr;
    llm::CompletionParams params;
    llm::RetryPolicy retry;
    llm::Sleeper sleep = llm::real_sleep;
};

// Text a judge sees for a run: the rendered questions, or the summary when
// no structured questions were produced.
std::string generated_text(const std::vector<GeneratedQuestion>& questions, std::string_view summary);

// `metric` must be one of the four text metrics.
ScoreRecord score_text(Metric metric, const Problem& problem, const std::vector<GeneratedQuestion>& questions,
                       std::string_view summary, System system, const Judge& judge);
ScoreRecord score_text(Metric metric, const Problem& problem, const PipelineResult& result, System system,
                       const Judge& judge);

// Both images are attached to the judge prompt, original first.
ScoreRecord score_image_similarity(const Problem& problem, const std::optional<std::filesystem::path>& original,
                                   const std::optional<std::filesystem::path>& generated, System system,
                                   const Judge& judge);

// ---------------------------------------------------------------------------
// Aggregation and reports
// ---------------------------------------------------------------------------

struct SubtypeStats {
    System system = System::Vista;
    Category category = Category::Geometry2D;
    Subtype subtype = Subtype::Angle;
    Metric metric = Metric::TxtCoherence;
    std::size_t n = 0;
    double mean = 0.0;
    double std = 0.0;  // population

    bool operator==(const SubtypeStats&) const = default;
};

// Grouped by (system, category, subtype, metric) in enum order. Values are
// sorted inside each group before summing so the result does not depend on
// record order.
std::vector<SubtypeStats> aggregate(const std::vector<ScoreRecord>& records);

struct ComparisonRow {
    Category category = Category::Geometry2D;
    Subtype subtype = Subtype::Angle;
    Metric metric = Metric::TxtCoherence;
    std::optional<double> vista_mean;
    std::optional<double> baseline_mean;
    std::optional<double> delta;  // vista - baseline
    std::string flag;             // "", "baseline-missing" or "vista-missing"
};

std::vector<ComparisonRow> compare_systems(const std::vector<SubtypeStats>& stats);

std::string report_csv(const std::vector<SubtypeStats>& stats);
std::string report_text(const std::vector<SubtypeStats>& stats, const std::vector<ComparisonRow>& comparison,
                        const std::vector<std::string>& gaps, const std::vector<std::string>& errors = {});

std::string encode_score_record(const ScoreRecord& r);
ScoreRecord decode_score_record(std::string_view line);

// ---------------------------------------------------------------------------
// Scoring run directories
// ---------------------------------------------------------------------------

struct EvalOutcome {
    std::vector<ScoreRecord> records;  // sorted by system, problem id, metric
    std::vector<std::string> gaps;     // scores skipped for missing inputs
    std::vector<std::string> errors;   // judge calls that failed or could not be parsed
    std::size_t runs_seen = 0;
};

// Scores every run under `<runs_root>/vista/*` and `<runs_root>/baseline/*`
// with up to `jobs` concurrent judge calls. `stop` is polled between runs.
EvalOutcome evaluate_runs(const std::filesystem::path& runs_root, const Judge& judge, int jobs = 1,
                          const std::atomic<bool>* stop = nullptr);

// Writes scores.jsonl, report.csv and report.txt into `eval_dir`.
void write_reports(const EvalOutcome& outcome, const std::filesystem::path& eval_dir);

}  // namespace vista::eval
