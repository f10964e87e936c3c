#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vista/errors.hpp"

namespace vista {

// ---------------------------------------------------------------------------
// Problem taxonomy
// ---------------------------------------------------------------------------

enum class Category { Geometry2D, Function };

// `Applied` is shared by both categories; legality always depends on the
// category it is paired with.
enum class Subtype { Angle, Length, Area, Applied, Analytic, Property, Expression, Coordinate };

std::string_view to_string(Category c) noexcept;
std::string_view to_string(Subtype s) noexcept;
std::optional<Category> parse_category(std::string_view s) noexcept;
std::optional<Subtype> parse_subtype(std::string_view s) noexcept;

bool is_legal_subtype(Category c, Subtype s) noexcept;
std::span<const Subtype> subtypes_of(Category c) noexcept;
std::span<const Category> all_categories() noexcept;

class MalformedRecord : public Error {
public:
    explicit MalformedRecord(const std::string& what, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class IllegalSubtype : public Error {
public:
    IllegalSubtype(std::string category, std::string subtype, std::size_t line = 0)
        : Error((line ? "line " + std::to_string(line) + ": " : std::string{}) + "subtype '" +
                subtype + "' is not legal for category '" + category + "'"),
          category_(std::move(category)),
          subtype_(std::move(subtype)),
          line_(line) {}
    const std::string& category() const noexcept { return category_; }
    const std::string& subtype() const noexcept { return subtype_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string category_;
    std::string subtype_;
    std::size_t line_;
};

struct Problem {
    std::string id;
    std::string text;
    Category category = Category::Geometry2D;
    Subtype subtype = Subtype::Angle;
    std::optional<std::string> original_figure;
    std::optional<std::string> gold_answer;
    std::optional<std::vector<std::string>> choices;

    bool operator==(const Problem&) const = default;
};

// Parses one dataset line (a JSON object). Unknown fields are ignored.
Problem parse_problem_record(std::string_view raw);
std::string serialize_problem_record(const Problem& p);

// ---------------------------------------------------------------------------
// Usage accounting
// ---------------------------------------------------------------------------

struct TokenUsage {
    std::int64_t input_tokens = 0;
    std::int64_t output_tokens = 0;
    double wall_time = 0.0;  // seconds

    TokenUsage& operator+=(const TokenUsage& o) noexcept {
        input_tokens += o.input_tokens;
        output_tokens += o.output_tokens;
        wall_time += o.wall_time;
        return *this;
    }
    friend TokenUsage operator+(TokenUsage a, const TokenUsage& b) noexcept { return a += b; }
    bool operator==(const TokenUsage&) const = default;
};

// ---------------------------------------------------------------------------
// Validation verdicts (shared by the geometry and function kernels)
// ---------------------------------------------------------------------------

enum class Verdict { Pass, Fail };
std::string_view to_string(Verdict v) noexcept;

struct ValidationEntry {
    std::string check;
    Verdict verdict = Verdict::Fail;
    std::optional<double> measured;
    std::optional<double> expected;
    std::string note;
};

struct ValidationReport {
    std::vector<ValidationEntry> entries;

    Verdict overall() const noexcept {
        for (const auto& e : entries)
            if (e.verdict == Verdict::Fail) return Verdict::Fail;
        return Verdict::Pass;
    }
    std::string to_text() const;
};

// ---------------------------------------------------------------------------
// Agents and their messages
// ---------------------------------------------------------------------------

enum class AgentName {
    NumericCalculator,
    GeometryValidator,
    FunctionValidator,
    Visualizer,
    CodeExecutor,
    MathQuestionGenerator,
    Summarizer,
};
inline constexpr std::size_t kAgentCount = 7;

std::string_view to_string(AgentName a) noexcept;
std::optional<AgentName> parse_agent_name(std::string_view s) noexcept;
std::span<const AgentName> all_agents() noexcept;

enum class BlockKind { Scene, Function, Code };
std::string_view to_string(BlockKind k) noexcept;

struct Block {
    BlockKind kind = BlockKind::Code;
    std::string lang;  // fence tag; empty for untagged fences
    std::string body;
    bool operator==(const Block&) const = default;
};

// Outcome carried by validator and executor turns; None for every other agent.
enum class Outcome { None, Pass, Fail };

struct AgentMessage {
    AgentName sender = AgentName::NumericCalculator;
    std::string content;
    std::vector<Block> produced_blocks;
    TokenUsage usage;
    Outcome outcome = Outcome::None;
};

// ---------------------------------------------------------------------------
// Generated output
// ---------------------------------------------------------------------------

enum class QuestionKind { MultipleChoice, FreeForm };

struct GeneratedQuestion {
    QuestionKind kind = QuestionKind::FreeForm;
    std::string stem;
    std::vector<std::string> choices;
    std::string answer;

    // MultipleChoice: >= 2 choices and the answer matches exactly one of them.
    // FreeForm: no choices.
    bool well_formed() const;
    bool operator==(const GeneratedQuestion&) const = default;
};

enum class PipelineStatus { Completed, FailedValidation, FailedExecution, Aborted };
std::string_view to_string(PipelineStatus s) noexcept;
std::optional<PipelineStatus> parse_pipeline_status(std::string_view s) noexcept;

struct PipelineResult {
    std::string problem_id;
    std::vector<AgentMessage> transcript;
    std::optional<std::filesystem::path> figure;
    std::optional<std::string> figure_code;
    std::vector<GeneratedQuestion> questions;
    std::string summary;
    std::vector<ValidationReport> validation_reports;
    TokenUsage usage;
    PipelineStatus status = PipelineStatus::Aborted;
    int retries_used = 0;
    std::string failure_reason;
};

}  // namespace vista
