#include <algorithm>
#include <fstream>

#include "vista/func.hpp"
#include "vista/geom.hpp"
#include "vista/orchestrator.hpp"
#include "vista/text.hpp"

namespace vista::orch {

namespace fs = std::filesystem;
using llm::Bindings;
using llm::TemplateId;

namespace {

constexpr int kMaxReasks = 1;

std::string choices_text(const Problem& p) {
    if (!p.choices || p.choices->empty()) return "(none)";
    std::string out;
    char label = 'A';
    for (const auto& c : *p.choices) {
        out += label++;
        out += ") ";
        out += c;
        out += '\n';
    }
    return out;
}

std::string or_none(const std::string& s) { return text::trim(s).empty() ? "(none)" : s; }

bool llm_says_fail(std::string_view response) {
    std::string lower(response);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    return lower.find("verdict: fail") != std::string::npos;
}

// Interpreters print absolute script paths in tracebacks. The scratch
// directory is random, so it is cut from anything fed back to the model to
// keep requests reproducible.
std::string strip_workdir(std::string text, const fs::path& workdir) {
    std::error_code ec;
    auto canonical = fs::weakly_canonical(workdir, ec);
    for (const auto& dir : {canonical.string(), workdir.string()}) {
        if (dir.empty()) continue;
        const std::string prefix = dir + "/";
        for (auto pos = text.find(prefix); pos != std::string::npos; pos = text.find(prefix, pos))
            text.erase(pos, prefix.size());
    }
    return text;
}

struct Reply {
    std::string text;
    std::vector<Block> blocks;
    TokenUsage usage;
    std::string problem;  // grammar problem left after the last re-ask
};

class Runner {
public:
    Runner(const Problem& problem, const PipelineConfig& cfg) : problem_(problem), cfg_(cfg) {
        if (!cfg.client) throw ConfigError("pipeline config has no LLM client");
        if (!cfg.prompts) throw ConfigError("pipeline config has no prompt registry");
        result_.problem_id = problem.id;
    }

    PipelineResult run() {
        std::optional<Transition> t;
        try {
            t = begin(initial_state(problem_.category, cfg_.max_retries));
            while (t->next.kind == ActionKind::Invoke) {
                state_ = &t->state;
                AgentMessage msg = produce(t->state.stage);
                result_.usage += msg.usage;
                t = step(std::move(t->state), std::move(msg));
            }
            finish(t->state);
        } catch (const Error& e) {
            result_.status = PipelineStatus::Aborted;
            result_.failure_reason = e.what();
            if (t) result_.transcript = t->state.transcript;
        }
        return std::move(result_);
    }

    PipelineResult run_baseline() {
        try {
            Bindings b{{"problem_id", problem_.id},
                       {"problem_text", problem_.text},
                       {"category", std::string(to_string(problem_.category))},
                       {"subtype", std::string(to_string(problem_.subtype))},
                       {"choices", choices_text(problem_)}};
            auto reply = ask(TemplateId::Baseline, b, {}, nullptr);
            result_.usage += reply.usage;
            result_.transcript.push_back({AgentName::Visualizer, reply.text, reply.blocks, reply.usage, Outcome::None});
            code_ = first_code(reply.blocks);
            auto exec_msg = execute_attempt(1);
            result_.transcript.push_back(exec_msg);
            result_.questions = parse_questions(reply.text);
            result_.figure_code = code_;
            if (exec_msg.outcome == Outcome::Pass) {
                result_.figure = figure_;
                result_.summary = reply.text;
                result_.status = PipelineStatus::Completed;
            } else {
                result_.status = PipelineStatus::FailedExecution;
                result_.failure_reason = "baseline figure code did not produce a confirmed figure";
            }
        } catch (const Error& e) {
            result_.status = PipelineStatus::Aborted;
            result_.failure_reason = e.what();
        }
        return std::move(result_);
    }

private:
    llm::Completion call(const std::vector<llm::ChatMessage>& messages) {
        return llm::with_retry([&] { return cfg_.client->complete(messages, cfg_.params); }, cfg_.retry, cfg_.sleep);
    }

    // One agent turn. `check` inspects the extracted blocks and returns a
    // non-empty complaint when the reply must be re-asked.
    template <class Check>
    Reply ask(TemplateId id, const Bindings& bindings, const std::vector<fs::path>& attachments, Check&& check) {
        auto messages = cfg_.prompts->render(id, bindings);
        if (!attachments.empty()) messages.back().attachments = attachments;
        Reply r;
        for (int attempt = 0;; ++attempt) {
            auto c = call(messages);
            r.usage += c.usage;
            r.text = std::move(c.text);
            r.problem.clear();
            r.blocks.clear();
            try {
                r.blocks = extract_blocks(r.text);
                if constexpr (!std::is_same_v<std::decay_t<Check>, std::nullptr_t>) r.problem = check(r.blocks);
            } catch (const UnterminatedFence& e) {
                r.problem = e.what();
            }
            if (r.problem.empty() || attempt >= kMaxReasks) return r;
            messages.push_back({llm::Role::Assistant, r.text, {}});
            messages.push_back({llm::Role::User,
                                "Your previous reply could not be used: " + r.problem +
                                    "\nReply again in full with this corrected.",
                                {}});
        }
    }

    AgentMessage produce(Stage stage) {
        switch (stage) {
            case Stage::Calculate: return calculate();
            case Stage::Validate: return validate();
            case Stage::Visualize: return visualize();
            case Stage::Execute: return execute_attempt(state_->retries_used + 1);
            case Stage::GenerateQuestions: return generate_questions();
            case Stage::Summarize: return summarize();
            default: break;
        }
        throw IllegalTransition("no agent acts in stage " + std::string(to_string(stage)));
    }

    std::string block_kind_name() const {
        return problem_.category == Category::Geometry2D ? "scene" : "function";
    }

    AgentMessage calculate() {
        Bindings b{{"problem_id", problem_.id},
                   {"problem_text", problem_.text},
                   {"category", std::string(to_string(problem_.category))},
                   {"subtype", std::string(to_string(problem_.subtype))},
                   {"choices", choices_text(problem_)},
                   {"block_kind", block_kind_name()},
                   {"feedback", or_none(feedback_)}};
        scene_.reset();
        function_.reset();
        auto reply = ask(TemplateId::NumericCalculator, b, {}, [&](const std::vector<Block>& blocks) -> std::string {
            scene_.reset();
            function_.reset();
            for (const auto& blk : blocks) {
                try {
                    if (blk.kind == BlockKind::Scene && !scene_) scene_ = geom::parse_scene_block(blk.body);
                    if (blk.kind == BlockKind::Function && !function_) function_ = func::parse_function_block(blk.body);
                } catch (const Error& e) {
                    scene_.reset();
                    function_.reset();
                    return std::string(to_string(blk.kind)) + " block: " + e.what();
                }
            }
            return {};
        });
        block_problem_ = reply.problem;
        if (!block_problem_.empty()) {
            // Blocks that still fail their grammar after the re-ask are
            // dropped; the validation stage records the failure.
            std::erase_if(reply.blocks, [](const Block& b) { return b.kind != BlockKind::Code; });
        }
        calculation_ = reply.text;
        return {AgentName::NumericCalculator, reply.text, reply.blocks, reply.usage, Outcome::None};
    }

    ValidationReport deterministic_report() {
        ValidationReport report;
        if (!block_problem_.empty()) {
            report.entries.push_back({block_kind_name() + " block grammar", Verdict::Fail, {}, {}, block_problem_});
            return report;
        }
        if (problem_.category == Category::Geometry2D) {
            if (!scene_) return report;
            try {
                report = geom::validate_scene(scene_->scene, scene_->constraints);
            } catch (const geom::UnknownLabel& e) {
                report.entries.push_back({"scene references", Verdict::Fail, {}, {}, e.what()});
            }
            return report;
        }
        if (function_) return func::validate_function_block(*function_);
        const auto fallback = func::default_example(problem_.subtype);
        report.entries.push_back({"no function block; default example y = " + fallback.to_string(), Verdict::Pass,
                                  {}, {}, "default example"});
        calculation_ += "\n\nDefault example curve: y = " + fallback.to_string() + "\n";
        return report;
    }

    AgentMessage validate() {
        auto report = deterministic_report();
        const auto agent = validator_for(problem_.category);
        const auto id =
            agent == AgentName::GeometryValidator ? TemplateId::GeometryValidator : TemplateId::FunctionValidator;
        Bindings b{{"problem_id", problem_.id},
                   {"problem_text", problem_.text},
                   {"calculation", calculation_},
                   {"deterministic_report", report.entries.empty() ? "(no machine-checkable block)" : report.to_text()}};
        auto reply = ask(id, b, {}, nullptr);
        const bool llm_fail = llm_says_fail(reply.text);
        report.entries.push_back({"validator agent verdict", llm_fail ? Verdict::Fail : Verdict::Pass, {}, {}, ""});
        const bool pass = report.overall() == Verdict::Pass;
        validation_text_ = report.to_text();
        result_.validation_reports.push_back(report);
        if (!pass) feedback_ = "The previous solution failed validation:\n" + validation_text_;
        return {agent, reply.text, reply.blocks, reply.usage, pass ? Outcome::Pass : Outcome::Fail};
    }

    static std::string first_code(const std::vector<Block>& blocks) {
        const Block* pick = nullptr;
        for (const auto& b : blocks) {
            if (b.kind != BlockKind::Code || b.lang == "json") continue;
            if (!pick || (pick->lang != "python" && b.lang == "python")) pick = &b;
        }
        return pick ? pick->body : std::string{};
    }

    AgentMessage visualize() {
        const int attempt = state_->retries_used + 1;
        Bindings b{{"problem_id", problem_.id},
                   {"problem_text", problem_.text},
                   {"calculation", calculation_},
                   {"validation_report", or_none(validation_text_)},
                   {"attempt", std::to_string(attempt)},
                   {"previous_code", attempt > 1 ? or_none(code_) : "(none)"},
                   {"revision_feedback", attempt > 1 ? or_none(last_exec_report_) : "(none)"}};
        auto reply = ask(TemplateId::Visualizer, b, {}, nullptr);
        code_ = first_code(reply.blocks);
        return {AgentName::Visualizer, reply.text, reply.blocks, reply.usage, Outcome::None};
    }

    AgentMessage execute_attempt(int attempt) {
        figure_.reset();
        std::string exit_status;
        std::string out;
        std::string err;
        std::string figure = "(none)";
        if (text::trim(code_).empty()) {
            exit_status = "not run";
            err = "no code block found in the Visualizer reply";
        } else {
            const auto workdir = cfg_.scratch_dir / ("attempt-" + std::to_string(attempt));
            std::error_code ec;
            fs::remove_all(workdir, ec);
            fs::create_directories(workdir);
            try {
                auto outcome = exec::execute(code_, workdir, cfg_.limits, cfg_.interpreter);
                exit_status = std::to_string(outcome.exit_status);
                out = outcome.stdout_text;
                err = outcome.stderr_text;
                if (outcome.succeeded()) figure_ = exec::detect_figure(outcome);
                out = strip_workdir(out, workdir);
                err = strip_workdir(err, workdir);
                if (outcome.succeeded() && !figure_)
                    err += (err.empty() ? "" : "\n") +
                           std::string("no confirmed figure: the code must save an image and print "
                                       "'figure saved to <file name>' as its last confirmation line");
            } catch (const exec::TimeoutExceeded& e) {
                exit_status = "timeout";
                out = strip_workdir(e.partial().stdout_text, workdir);
                err = strip_workdir(e.partial().stderr_text, workdir) + "\nexecution exceeded " +
                      text::format_number(cfg_.limits.timeout_s) + " s and was killed";
            }
        }
        if (figure_) figure = figure_->filename().string();
        Bindings b{{"exit_status", exit_status}, {"stdout", or_none(out)}, {"stderr", or_none(err)}, {"figure", figure}};
        std::string content;
        for (const auto& m : cfg_.prompts->render(TemplateId::CodeExecutor, b)) content += m.content;
        last_exec_report_ = content;
        return {AgentName::CodeExecutor, content, {}, {}, figure_ ? Outcome::Pass : Outcome::Fail};
    }

    AgentMessage generate_questions() {
        Bindings b{{"problem_id", problem_.id},
                   {"problem_text", problem_.text},
                   {"calculation", calculation_},
                   {"figure_code", code_}};
        std::vector<fs::path> attach;
        if (figure_) attach.push_back(*figure_);
        auto reply = ask(TemplateId::MathQuestionGenerator, b, attach, nullptr);
        questions_ = parse_questions(reply.text);
        return {AgentName::MathQuestionGenerator, reply.text, reply.blocks, reply.usage, Outcome::None};
    }

    AgentMessage summarize() {
        Bindings b{{"problem_id", problem_.id},
                   {"problem_text", problem_.text},
                   {"calculation", calculation_},
                   {"validation_report", or_none(validation_text_)},
                   {"figure_code", code_},
                   {"execution", last_exec_report_},
                   {"questions", or_none(render_questions(questions_))}};
        auto reply = ask(TemplateId::Summarizer, b, {}, nullptr);
        return {AgentName::Summarizer, reply.text, reply.blocks, reply.usage, Outcome::None};
    }

    void finish(PipelineState& s) {
        result_.transcript = std::move(s.transcript);
        result_.retries_used = s.retries_used;
        result_.figure_code = code_.empty() ? std::nullopt : std::optional<std::string>(code_);
        result_.questions = questions_;
        if (s.stage == Stage::Done) {
            result_.summary = result_.transcript.back().content;
            result_.figure = figure_;
            if (!result_.figure || text::trim(result_.summary).empty()) {
                result_.status = PipelineStatus::Aborted;
                result_.failure_reason = result_.figure ? "summarizer returned an empty summary" : "no figure";
            } else {
                result_.status = PipelineStatus::Completed;
            }
        } else {
            result_.status = s.failure.value_or(PipelineStatus::Aborted);
            result_.failure_reason = result_.status == PipelineStatus::FailedValidation
                                         ? "validation failed after re-invoking the calculator"
                                         : "figure code failed after " + std::to_string(s.retries_used) + " revision(s)";
        }
    }

    const Problem& problem_;
    const PipelineConfig& cfg_;
    PipelineResult result_;
    const PipelineState* state_ = nullptr;

    std::string feedback_;
    std::string calculation_;
    std::optional<geom::SceneBlock> scene_;
    std::optional<func::FunctionBlock> function_;
    std::string block_problem_;
    std::string validation_text_;
    std::string code_;
    std::string last_exec_report_;
    std::optional<fs::path> figure_;
    std::vector<GeneratedQuestion> questions_;
};

}  // namespace

PipelineResult run_pipeline(const Problem& problem, const PipelineConfig& config) {
    std::error_code ec;
    fs::create_directories(config.scratch_dir, ec);
    return Runner(problem, config).run();
}

PipelineResult run_baseline(const Problem& problem, const PipelineConfig& config) {
    std::error_code ec;
    fs::create_directories(config.scratch_dir, ec);
    return Runner(problem, config).run_baseline();
}

}  // namespace vista::orch
