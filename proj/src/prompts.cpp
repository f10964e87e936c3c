#include "vista/prompts.hpp"

#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace vista::llm {

namespace {

constexpr std::string_view kUserSplit = "\n---user---\n";

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

// Length of `{name}` starting at text[i] == '{', or 0 if it is not a placeholder.
std::size_t placeholder_len(std::string_view text, std::size_t i) {
    std::size_t j = i + 1;
    if (j >= text.size() || !ident_start(text[j])) return 0;
    while (j < text.size() && ident_char(text[j])) ++j;
    if (j >= text.size() || text[j] != '}') return 0;
    return j - i + 1;
}

template <class OnPlaceholder>
std::string scan(std::string_view text, OnPlaceholder&& on_placeholder) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size();) {
        const char c = text[i];
        if ((c == '{' || c == '}') && i + 1 < text.size() && text[i + 1] == c) {
            out += c;
            i += 2;
            continue;
        }
        if (c == '{') {
            if (const auto n = placeholder_len(text, i)) {
                out += on_placeholder(text.substr(i + 1, n - 2));
                i += n;
                continue;
            }
        }
        out += c;
        ++i;
    }
    return out;
}

std::string trim_newlines(std::string s) {
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
    std::size_t b = 0;
    while (b < s.size() && s[b] == '\n') ++b;
    return s.substr(b);
}

}  // namespace

std::string_view template_file_stem(TemplateId id) noexcept {
    switch (id) {
        case TemplateId::NumericCalculator: return "numeric_calculator";
        case TemplateId::GeometryValidator: return "geometry_validator";
        case TemplateId::FunctionValidator: return "function_validator";
        case TemplateId::Visualizer: return "visualizer";
        case TemplateId::CodeExecutor: return "code_executor";
        case TemplateId::MathQuestionGenerator: return "math_question_generator";
        case TemplateId::Summarizer: return "summarizer";
        case TemplateId::EvalCoherence: return "eval_coherence";
        case TemplateId::EvalConsistency: return "eval_consistency";
        case TemplateId::EvalRelevance: return "eval_relevance";
        case TemplateId::EvalSimilarity: return "eval_similarity";
        case TemplateId::EvalImageSimilarity: return "eval_image_similarity";
        case TemplateId::Baseline: return "baseline";
    }
    return "?";
}

std::string substitute(std::string_view text, const Bindings& bindings) {
    return scan(text, [&](std::string_view name) -> std::string {
        auto it = bindings.find(name);
        if (it == bindings.end()) throw MissingBinding(std::string(name));
        return it->second;
    });
}

PromptTemplate::PromptTemplate(std::string source) : source_(std::move(source)) {}

std::vector<ChatMessage> PromptTemplate::render(const Bindings& bindings) const {
    std::vector<ChatMessage> out;
    const std::string_view src = source_;
    if (const auto split = src.find(kUserSplit); split != std::string_view::npos) {
        out.push_back({Role::System, trim_newlines(substitute(src.substr(0, split), bindings)), {}});
        out.push_back({Role::User, trim_newlines(substitute(src.substr(split + kUserSplit.size()), bindings)), {}});
    } else {
        out.push_back({Role::User, trim_newlines(substitute(src, bindings)), {}});
    }
    return out;
}

std::vector<std::string> PromptTemplate::placeholders() const {
    std::set<std::string> names;
    scan(source_, [&](std::string_view name) {
        names.emplace(name);
        return std::string{};
    });
    return {names.begin(), names.end()};
}

PromptRegistry PromptRegistry::load(const std::filesystem::path& dir) {
    PromptRegistry reg;
    for (auto id : kAllTemplates) {
        const auto path = dir / (std::string(template_file_stem(id)) + ".txt");
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ConfigError("missing prompt template " + path.string());
        std::ostringstream ss;
        ss << in.rdbuf();
        reg.templates_[id] = PromptTemplate(ss.str());
    }
    return reg;
}

PromptRegistry PromptRegistry::from_sources(const std::map<TemplateId, std::string>& sources) {
    PromptRegistry reg;
    for (const auto& [id, src] : sources) reg.templates_[id] = PromptTemplate(src);
    return reg;
}

const PromptTemplate& PromptRegistry::get(TemplateId id) const {
    auto it = templates_.find(id);
    if (it == templates_.end())
        throw ConfigError("prompt template '" + std::string(template_file_stem(id)) + "' is not loaded");
    return it->second;
}

}  // namespace vista::llm
