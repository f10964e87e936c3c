#include <fstream>
#include <sstream>

#include "json.hpp"
#include "vista/executor.hpp"
#include "vista/orchestrator.hpp"

namespace vista::orch {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string_view kind_name(QuestionKind k) { return k == QuestionKind::MultipleChoice ? "multiple_choice" : "free_form"; }

std::string_view outcome_name(Outcome o) {
    switch (o) {
        case Outcome::Pass: return "pass";
        case Outcome::Fail: return "fail";
        case Outcome::None: break;
    }
    return "none";
}

ordered_json usage_json(const TokenUsage& u) {
    return {{"input_tokens", u.input_tokens}, {"output_tokens", u.output_tokens}, {"wall_time", u.wall_time}};
}

TokenUsage usage_from(const ordered_json& j) {
    TokenUsage u;
    u.input_tokens = j.value("input_tokens", std::int64_t{0});
    u.output_tokens = j.value("output_tokens", std::int64_t{0});
    u.wall_time = j.value("wall_time", 0.0);
    return u;
}

ordered_json questions_json(const std::vector<GeneratedQuestion>& qs) {
    auto arr = ordered_json::array();
    for (const auto& q : qs)
        arr.push_back({{"kind", kind_name(q.kind)}, {"stem", q.stem}, {"choices", q.choices}, {"answer", q.answer}});
    return arr;
}

ordered_json report_json(const ValidationReport& r) {
    auto arr = ordered_json::array();
    for (const auto& e : r.entries) {
        ordered_json j{{"check", e.check}, {"verdict", to_string(e.verdict)}};
        j["measured"] = e.measured ? ordered_json(*e.measured) : ordered_json(nullptr);
        j["expected"] = e.expected ? ordered_json(*e.expected) : ordered_json(nullptr);
        j["note"] = e.note;
        arr.push_back(std::move(j));
    }
    return arr;
}

void write_file(const fs::path& p, std::string_view data) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + p.string());
    out << data;
    if (!out) throw Error("write failed for " + p.string());
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

std::string run_id_for(std::string_view problem_id) {
    std::string out;
    for (unsigned char c : problem_id) {
        const bool safe = std::isalnum(c) || c == '-' || c == '_' || c == '.';
        out += safe ? static_cast<char>(c) : '_';
    }
    if (out.empty() || out == "." || out == "..") out = "_" + out;
    return out;
}

void persist_run(const PipelineResult& result, const Problem& problem, const fs::path& run_dir) {
    std::error_code ec;
    fs::remove_all(run_dir, ec);
    fs::create_directories(run_dir);

    std::string transcript;
    for (const auto& m : result.transcript) {
        auto blocks = ordered_json::array();
        for (const auto& b : m.produced_blocks)
            blocks.push_back({{"kind", to_string(b.kind)}, {"lang", b.lang}, {"body", b.body}});
        ordered_json line{{"sender", to_string(m.sender)},
                          {"content", m.content},
                          {"blocks", std::move(blocks)},
                          {"usage", usage_json(m.usage)},
                          {"outcome", outcome_name(m.outcome)}};
        transcript += line.dump();
        transcript += '\n';
    }
    write_file(run_dir / "transcript", transcript);
    write_file(run_dir / "questions", questions_json(result.questions).dump(2) + "\n");
    write_file(run_dir / "summary", result.summary);

    std::optional<std::string> figure_name;
    if (result.figure) {
        std::string ext = result.figure->extension().string();
        if (auto fmt = exec::sniff_image(*result.figure)) ext = std::string(exec::extension_for(*fmt));
        figure_name = "figure" + ext;
        fs::copy_file(*result.figure, run_dir / *figure_name, fs::copy_options::overwrite_existing);
    }

    ordered_json j;
    j["problem"] = ordered_json::parse(serialize_problem_record(problem));
    j["status"] = to_string(result.status);
    j["failure_reason"] = result.failure_reason;
    j["retries_used"] = result.retries_used;
    j["figure"] = figure_name ? ordered_json(*figure_name) : ordered_json(nullptr);
    j["figure_code"] = result.figure_code ? ordered_json(*result.figure_code) : ordered_json(nullptr);
    j["usage"] = usage_json(result.usage);
    auto reports = ordered_json::array();
    for (const auto& r : result.validation_reports) reports.push_back(report_json(r));
    j["validation_reports"] = std::move(reports);
    write_file(run_dir / "result.json", j.dump(2) + "\n");
}

StoredRun load_run(const fs::path& run_dir) {
    const auto result_path = run_dir / "result.json";
    const auto j = ordered_json::parse(read_file(result_path), nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("problem"))
        throw MalformedRecord("unreadable run record " + result_path.string());

    StoredRun run;
    run.problem = parse_problem_record(j["problem"].dump());
    const auto status = parse_pipeline_status(j.value("status", std::string{}));
    if (!status) throw MalformedRecord("unknown status in " + result_path.string());
    run.status = *status;
    run.retries_used = j.value("retries_used", 0);
    if (j.contains("usage")) run.usage = usage_from(j["usage"]);
    if (auto f = j.find("figure"); f != j.end() && f->is_string()) {
        const auto p = run_dir / f->get<std::string>();
        if (fs::exists(p)) run.figure = p;
    }
    if (fs::exists(run_dir / "summary")) run.summary = read_file(run_dir / "summary");
    if (fs::exists(run_dir / "questions")) run.questions = parse_questions("```json\n" + read_file(run_dir / "questions") + "```\n");
    if (fs::exists(run_dir / "transcript")) {
        std::istringstream in(read_file(run_dir / "transcript"));
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto m = ordered_json::parse(line, nullptr, false);
            if (m.is_discarded()) throw MalformedRecord("unreadable transcript line in " + run_dir.string());
            const auto sender = parse_agent_name(m.value("sender", std::string{}));
            if (!sender) throw MalformedRecord("unknown sender in " + run_dir.string());
            run.senders.push_back(*sender);
        }
    }
    return run;
}

}  // namespace vista::orch
