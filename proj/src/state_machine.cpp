#include "vista/orchestrator.hpp"

namespace vista::orch {

std::string_view to_string(Stage s) noexcept {
    switch (s) {
        case Stage::Init: return "Init";
        case Stage::Calculate: return "Calculate";
        case Stage::Validate: return "Validate";
        case Stage::Visualize: return "Visualize";
        case Stage::Execute: return "Execute";
        case Stage::GenerateQuestions: return "GenerateQuestions";
        case Stage::Summarize: return "Summarize";
        case Stage::Done: return "Done";
        case Stage::Failed: return "Failed";
    }
    return "?";
}

int stage_index(Stage s) noexcept {
    switch (s) {
        case Stage::Init: return 0;
        case Stage::Calculate: return 1;
        case Stage::Validate: return 2;
        case Stage::Visualize: return 3;
        case Stage::Execute: return 4;
        case Stage::GenerateQuestions: return 5;
        case Stage::Summarize: return 6;
        case Stage::Done:
        case Stage::Failed: return 7;
    }
    return -1;
}

PipelineState initial_state(Category category, int max_retries) {
    if (max_retries < 0) throw ConfigError("max_retries must be >= 0");
    PipelineState s;
    s.category = category;
    s.max_retries = max_retries;
    return s;
}

AgentName validator_for(Category c) noexcept {
    return c == Category::Geometry2D ? AgentName::GeometryValidator : AgentName::FunctionValidator;
}

std::optional<AgentName> expected_sender(const PipelineState& s) noexcept {
    switch (s.stage) {
        case Stage::Calculate: return AgentName::NumericCalculator;
        case Stage::Validate: return validator_for(s.category);
        case Stage::Visualize: return AgentName::Visualizer;
        case Stage::Execute: return AgentName::CodeExecutor;
        case Stage::GenerateQuestions: return AgentName::MathQuestionGenerator;
        case Stage::Summarize: return AgentName::Summarizer;
        default: return std::nullopt;
    }
}

namespace {

Transition go(PipelineState s, Stage next) {
    s.stage = next;
    NextAction a;
    if (auto who = expected_sender(s)) {
        a.kind = ActionKind::Invoke;
        a.agent = who;
    }
    return {std::move(s), a};
}

}  // namespace

Transition begin(PipelineState state) {
    if (state.stage != Stage::Init)
        throw IllegalTransition("pipeline already started (stage " + std::string(to_string(state.stage)) + ")");
    return go(std::move(state), Stage::Calculate);
}

Transition step(PipelineState state, AgentMessage message) {
    const auto expected = expected_sender(state);
    if (!expected)
        throw IllegalTransition("no message is accepted in stage " + std::string(to_string(state.stage)));
    if (message.sender != *expected)
        throw IllegalTransition("stage " + std::string(to_string(state.stage)) + " expects " +
                                std::string(to_string(*expected)) + ", got " +
                                std::string(to_string(message.sender)));
    const bool needs_outcome = state.stage == Stage::Validate || state.stage == Stage::Execute;
    if (needs_outcome && message.outcome == Outcome::None)
        throw IllegalTransition(std::string(to_string(message.sender)) + " message carries no outcome");

    for (const auto& b : message.produced_blocks) state.scratch[b.kind] = b.body;
    const Outcome outcome = message.outcome;
    const Stage stage = state.stage;
    state.transcript.push_back(std::move(message));

    switch (stage) {
        case Stage::Calculate: return go(std::move(state), Stage::Validate);
        case Stage::Validate:
            if (outcome == Outcome::Pass) return go(std::move(state), Stage::Visualize);
            if (state.validation_retries_used < kMaxValidationReinvocations) {
                ++state.validation_retries_used;
                return go(std::move(state), Stage::Calculate);
            }
            state.failure = PipelineStatus::FailedValidation;
            return go(std::move(state), Stage::Failed);
        case Stage::Visualize: return go(std::move(state), Stage::Execute);
        case Stage::Execute:
            if (outcome == Outcome::Pass) return go(std::move(state), Stage::GenerateQuestions);
            if (state.retries_used < state.max_retries) {
                ++state.retries_used;
                return go(std::move(state), Stage::Visualize);
            }
            state.failure = PipelineStatus::FailedExecution;
            return go(std::move(state), Stage::Failed);
        case Stage::GenerateQuestions: return go(std::move(state), Stage::Summarize);
        case Stage::Summarize: return go(std::move(state), Stage::Done);
        default: break;
    }
    throw IllegalTransition("unreachable stage");
}

}  // namespace vista::orch
