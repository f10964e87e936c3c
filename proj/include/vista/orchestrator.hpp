#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vista/core.hpp"
#include "vista/executor.hpp"
#include "vista/llm.hpp"
#include "vista/prompts.hpp"
#include "vista/retry.hpp"

// The seven-agent turn protocol: calculator -> validator -> visualizer ->
// executor -> question generator -> summarizer, with the two revision loops
// (failed validation back to the calculator, failed execution back to the
// visualizer).
namespace vista::orch {

// ---------------------------------------------------------------------------
// Fenced blocks
// ---------------------------------------------------------------------------

class UnterminatedFence : public Error {
public:
    explicit UnterminatedFence(std::size_t line)
        : Error("fence opened on line " + std::to_string(line) + " is never closed"), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// All fenced blocks in document order. `scene` and `function` tags map to
// their kinds; any other tag, or none, is Code.
std::vector<Block> extract_blocks(std::string_view text);

// Questions from the first ```json block: an array of
// {"kind": "multiple_choice"|"free_form", "stem", "choices", "answer"}.
// Malformed entries are dropped.
std::vector<GeneratedQuestion> parse_questions(std::string_view response);
std::string render_questions(const std::vector<GeneratedQuestion>& questions);

// ---------------------------------------------------------------------------
// State machine
// ---------------------------------------------------------------------------

enum class Stage { Init, Calculate, Validate, Visualize, Execute, GenerateQuestions, Summarize, Done, Failed };
std::string_view to_string(Stage s) noexcept;
// Position in the forward order; Done and Failed share the last index.
int stage_index(Stage s) noexcept;

struct PipelineState {
    Stage stage = Stage::Init;
    Category category = Category::Geometry2D;
    int max_retries = 3;
    int retries_used = 0;
    int validation_retries_used = 0;
    std::optional<PipelineStatus> failure;
    std::vector<AgentMessage> transcript;
    std::map<BlockKind, std::string> scratch;  // latest body per block kind
};

inline constexpr int kMaxValidationReinvocations = 1;

PipelineState initial_state(Category category, int max_retries = 3);

enum class ActionKind { Invoke, Finish };

struct NextAction {
    ActionKind kind = ActionKind::Finish;
    std::optional<AgentName> agent;
};

struct Transition {
    PipelineState state;
    NextAction next;
};

class IllegalTransition : public Error {
public:
    using Error::Error;
};

AgentName validator_for(Category c) noexcept;
// Agent whose message the current stage accepts; nullopt for Init/Done/Failed.
std::optional<AgentName> expected_sender(const PipelineState& s) noexcept;

// Init -> Calculate.
Transition begin(PipelineState state);

// Pure transition. Validator and executor messages must carry a Pass/Fail
// outcome. Throws IllegalTransition for a wrong sender, a missing outcome or
// an absorbing stage.
Transition step(PipelineState state, AgentMessage message);

// ---------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------

struct PipelineConfig {
    llm::ChatClient* client = nullptr;
    const llm::PromptRegistry* prompts = nullptr;
    llm::CompletionParams params;
    llm::RetryPolicy retry;
    llm::Sleeper sleep = llm::real_sleep;
    int max_retries = 3;
    exec::ExecLimits limits;
    exec::InterpreterConfig interpreter;
    // Private directory for execution attempts; created if absent.
    std::filesystem::path scratch_dir;
};

// Never throws for run-time failures: they end up in status and
// failure_reason with the transcript kept. Throws ConfigError when the
// config lacks a client or prompts.
PipelineResult run_pipeline(const Problem& problem, const PipelineConfig& config);

// Single generation call (no agents), executed once through the same executor.
PipelineResult run_baseline(const Problem& problem, const PipelineConfig& config);

// ---------------------------------------------------------------------------
// Run directories
// ---------------------------------------------------------------------------

// Layout: transcript (JSON lines: sender, content, blocks, usage), questions
// (JSON), summary (text), figure.<ext>, result.json (problem, status, usage,
// validation reports).
void persist_run(const PipelineResult& result, const Problem& problem, const std::filesystem::path& run_dir);

struct StoredRun {
    Problem problem;
    PipelineStatus status = PipelineStatus::Aborted;
    std::vector<GeneratedQuestion> questions;
    std::string summary;
    std::optional<std::filesystem::path> figure;
    TokenUsage usage;
    int retries_used = 0;
    std::vector<AgentName> senders;
};

StoredRun load_run(const std::filesystem::path& run_dir);

// File-system-safe directory name for a problem id.
std::string run_id_for(std::string_view problem_id);

}  // namespace vista::orch
