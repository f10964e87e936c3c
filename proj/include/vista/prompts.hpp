#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vista/llm.hpp"

namespace vista::llm {

enum class TemplateId {
    // agents
    NumericCalculator,
    GeometryValidator,
    FunctionValidator,
    Visualizer,
    CodeExecutor,
    MathQuestionGenerator,
    Summarizer,
    // judge
    EvalCoherence,
    EvalConsistency,
    EvalRelevance,
    EvalSimilarity,
    EvalImageSimilarity,
    // single-shot comparison system
    Baseline,
};

inline constexpr std::array kAllTemplates{
    TemplateId::NumericCalculator, TemplateId::GeometryValidator, TemplateId::FunctionValidator,
    TemplateId::Visualizer,        TemplateId::CodeExecutor,      TemplateId::MathQuestionGenerator,
    TemplateId::Summarizer,        TemplateId::EvalCoherence,     TemplateId::EvalConsistency,
    TemplateId::EvalRelevance,     TemplateId::EvalSimilarity,    TemplateId::EvalImageSimilarity,
    TemplateId::Baseline,
};

// File stem under the prompt directory, e.g. "numeric_calculator".
std::string_view template_file_stem(TemplateId id) noexcept;

class MissingBinding : public Error {
public:
    explicit MissingBinding(std::string name)
        : Error("prompt placeholder {" + name + "} has no binding"), name_(std::move(name)) {}
    const std::string& placeholder() const noexcept { return name_; }

private:
    std::string name_;
};

using Bindings = std::map<std::string, std::string, std::less<>>;

// A prompt file is plain text with {placeholder} slots ({{ and }} are
// literal braces). A line reading exactly `---user---` splits it into a
// system message and a user message; without it the whole file is one user
// message.
class PromptTemplate {
public:
    PromptTemplate() = default;
    explicit PromptTemplate(std::string source);

    std::vector<ChatMessage> render(const Bindings& bindings) const;
    std::vector<std::string> placeholders() const;
    const std::string& source() const noexcept { return source_; }

private:
    std::string source_;
};

// Substitutes every {name} in `text`; throws MissingBinding for the first
// unbound name. Bound values are inserted verbatim and never rescanned.
std::string substitute(std::string_view text, const Bindings& bindings);

class PromptRegistry {
public:
    // Loads `<dir>/<stem>.txt` for every TemplateId. Throws ConfigError when
    // one is missing.
    static PromptRegistry load(const std::filesystem::path& dir);
    static PromptRegistry from_sources(const std::map<TemplateId, std::string>& sources);

    const PromptTemplate& get(TemplateId id) const;
    std::vector<ChatMessage> render(TemplateId id, const Bindings& bindings) const {
        return get(id).render(bindings);
    }

private:
    std::map<TemplateId, PromptTemplate> templates_;
};

}  // namespace vista::llm
