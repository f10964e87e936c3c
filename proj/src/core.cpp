#include "vista/core.hpp"

#include <algorithm>
#include <array>
#include <sstream>

#include "json.hpp"
#include "vista/text.hpp"

namespace vista {

namespace {

constexpr std::array kGeometrySubtypes{Subtype::Angle, Subtype::Length, Subtype::Area,
                                       Subtype::Applied, Subtype::Analytic};
constexpr std::array kFunctionSubtypes{Subtype::Property, Subtype::Expression,
                                       Subtype::Coordinate, Subtype::Applied};
constexpr std::array kCategories{Category::Geometry2D, Category::Function};
constexpr std::array kAgents{AgentName::NumericCalculator, AgentName::GeometryValidator,
                             AgentName::FunctionValidator,  AgentName::Visualizer,
                             AgentName::CodeExecutor,       AgentName::MathQuestionGenerator,
                             AgentName::Summarizer};
static_assert(kAgents.size() == kAgentCount);

std::string require_string(const nlohmann::json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw MalformedRecord(std::string("missing field '") + key + "'");
    if (!it->is_string()) throw MalformedRecord(std::string("field '") + key + "' must be a string");
    return it->get<std::string>();
}

std::optional<std::string> optional_string(const nlohmann::json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw MalformedRecord(std::string("field '") + key + "' must be a string");
    return it->get<std::string>();
}

}  // namespace

std::string_view to_string(Category c) noexcept {
    switch (c) {
        case Category::Geometry2D: return "Geometry2D";
        case Category::Function: return "Function";
    }
    return "?";
}

std::string_view to_string(Subtype s) noexcept {
    switch (s) {
        case Subtype::Angle: return "Angle";
        case Subtype::Length: return "Length";
        case Subtype::Area: return "Area";
        case Subtype::Applied: return "Applied";
        case Subtype::Analytic: return "Analytic";
        case Subtype::Property: return "Property";
        case Subtype::Expression: return "Expression";
        case Subtype::Coordinate: return "Coordinate";
    }
    return "?";
}

std::optional<Category> parse_category(std::string_view s) noexcept {
    for (auto c : kCategories)
        if (to_string(c) == s) return c;
    return std::nullopt;
}

std::optional<Subtype> parse_subtype(std::string_view s) noexcept {
    for (auto t : {Subtype::Angle, Subtype::Length, Subtype::Area, Subtype::Applied,
                   Subtype::Analytic, Subtype::Property, Subtype::Expression,
                   Subtype::Coordinate})
        if (to_string(t) == s) return t;
    return std::nullopt;
}

std::span<const Subtype> subtypes_of(Category c) noexcept {
    if (c == Category::Geometry2D) return kGeometrySubtypes;
    return kFunctionSubtypes;
}

std::span<const Category> all_categories() noexcept { return kCategories; }

bool is_legal_subtype(Category c, Subtype s) noexcept {
    const auto legal = subtypes_of(c);
    return std::find(legal.begin(), legal.end(), s) != legal.end();
}

Problem parse_problem_record(std::string_view raw) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::parse_error& e) {
        throw MalformedRecord(std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw MalformedRecord("record must be a JSON object");

    Problem p;
    p.id = require_string(j, "id");
    if (p.id.empty()) throw MalformedRecord("field 'id' must be non-empty");
    const auto category = require_string(j, "category");
    const auto subtype = require_string(j, "subtype");
    p.text = require_string(j, "text");
    if (text::trim(p.text).empty()) throw MalformedRecord("field 'text' must be non-empty");

    const auto c = parse_category(category);
    if (!c) throw MalformedRecord("unknown category '" + category + "'");
    const auto s = parse_subtype(subtype);
    if (!s || !is_legal_subtype(*c, *s)) throw IllegalSubtype(category, subtype);
    p.category = *c;
    p.subtype = *s;

    p.original_figure = optional_string(j, "image");
    p.gold_answer = optional_string(j, "answer");
    if (auto it = j.find("choices"); it != j.end() && !it->is_null()) {
        if (!it->is_array()) throw MalformedRecord("field 'choices' must be an array of strings");
        std::vector<std::string> choices;
        for (const auto& v : *it) {
            if (!v.is_string()) throw MalformedRecord("field 'choices' must be an array of strings");
            choices.push_back(v.get<std::string>());
        }
        p.choices = std::move(choices);
    }
    return p;
}

std::string serialize_problem_record(const Problem& p) {
    nlohmann::ordered_json j;
    j["id"] = p.id;
    j["category"] = to_string(p.category);
    j["subtype"] = to_string(p.subtype);
    j["text"] = p.text;
    if (p.original_figure) j["image"] = *p.original_figure;
    if (p.gold_answer) j["answer"] = *p.gold_answer;
    if (p.choices) j["choices"] = *p.choices;
    return j.dump();
}

std::string_view to_string(Verdict v) noexcept { return v == Verdict::Pass ? "Pass" : "Fail"; }

std::string ValidationReport::to_text() const {
    std::ostringstream os;
    os << "overall: " << to_string(overall()) << '\n';
    for (const auto& e : entries) {
        os << "- " << to_string(e.verdict) << ": " << e.check;
        if (e.measured) os << " (measured " << text::format_number(*e.measured);
        if (e.expected) os << (e.measured ? ", " : " (") << "expected " << text::format_number(*e.expected);
        if (e.measured || e.expected) os << ')';
        if (!e.note.empty()) os << " [" << e.note << ']';
        os << '\n';
    }
    return os.str();
}

std::string_view to_string(AgentName a) noexcept {
    switch (a) {
        case AgentName::NumericCalculator: return "NumericCalculator";
        case AgentName::GeometryValidator: return "GeometryValidator";
        case AgentName::FunctionValidator: return "FunctionValidator";
        case AgentName::Visualizer: return "Visualizer";
        case AgentName::CodeExecutor: return "CodeExecutor";
        case AgentName::MathQuestionGenerator: return "MathQuestionGenerator";
        case AgentName::Summarizer: return "Summarizer";
    }
    return "?";
}

std::optional<AgentName> parse_agent_name(std::string_view s) noexcept {
    for (auto a : kAgents)
        if (to_string(a) == s) return a;
    return std::nullopt;
}

std::span<const AgentName> all_agents() noexcept { return kAgents; }

std::string_view to_string(BlockKind k) noexcept {
    switch (k) {
        case BlockKind::Scene: return "scene";
        case BlockKind::Function: return "function";
        case BlockKind::Code: return "code";
    }
    return "?";
}

bool GeneratedQuestion::well_formed() const {
    if (text::trim(stem).empty()) return false;
    if (kind == QuestionKind::FreeForm) return choices.empty();
    if (choices.size() < 2) return false;
    return std::count(choices.begin(), choices.end(), answer) == 1;
}

std::string_view to_string(PipelineStatus s) noexcept {
    switch (s) {
        case PipelineStatus::Completed: return "Completed";
        case PipelineStatus::FailedValidation: return "FailedValidation";
        case PipelineStatus::FailedExecution: return "FailedExecution";
        case PipelineStatus::Aborted: return "Aborted";
    }
    return "?";
}

std::optional<PipelineStatus> parse_pipeline_status(std::string_view s) noexcept {
    for (auto st : {PipelineStatus::Completed, PipelineStatus::FailedValidation,
                    PipelineStatus::FailedExecution, PipelineStatus::Aborted})
        if (to_string(st) == s) return st;
    return std::nullopt;
}

}  // namespace vista
