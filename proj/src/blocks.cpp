#include <sstream>

#include "json.hpp"
#include "vista/orchestrator.hpp"
#include "vista/text.hpp"

namespace vista::orch {

namespace {

std::size_t backtick_run(std::string_view s) {
    std::size_t n = 0;
    while (n < s.size() && s[n] == '`') ++n;
    return n;
}

BlockKind kind_for_tag(std::string_view tag) {
    if (tag == "scene") return BlockKind::Scene;
    if (tag == "function") return BlockKind::Function;
    return BlockKind::Code;
}

}  // namespace

std::vector<Block> extract_blocks(std::string_view text) {
    std::vector<Block> out;
    const auto lines = text::split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto opener = text::trim(lines[i]);
        const auto ticks = backtick_run(opener);
        if (ticks < 3) continue;
        const auto info = text::split_ws(opener.substr(ticks));
        Block b;
        if (!info.empty()) b.lang = std::string(info.front());
        b.kind = kind_for_tag(b.lang);
        std::size_t j = i + 1;
        bool closed = false;
        std::string body;
        for (; j < lines.size(); ++j) {
            const auto t = text::trim(lines[j]);
            const auto close = backtick_run(t);
            if (close >= ticks && close == t.size()) {
                closed = true;
                break;
            }
            body.append(lines[j]);
            body.push_back('\n');
        }
        if (!closed) throw UnterminatedFence(i + 1);
        b.body = std::move(body);
        out.push_back(std::move(b));
        i = j;
    }
    return out;
}

std::vector<GeneratedQuestion> parse_questions(std::string_view response) {
    std::vector<GeneratedQuestion> out;
    std::vector<Block> blocks;
    try {
        blocks = extract_blocks(response);
    } catch (const UnterminatedFence&) {
        return out;
    }
    for (const auto& b : blocks) {
        if (b.kind != BlockKind::Code || b.lang != "json") continue;
        const auto j = nlohmann::json::parse(b.body, nullptr, false);
        if (j.is_discarded() || !j.is_array()) continue;
        for (const auto& item : j) {
            if (!item.is_object()) continue;
            GeneratedQuestion q;
            const auto kind = item.value("kind", std::string{});
            if (kind == "multiple_choice")
                q.kind = QuestionKind::MultipleChoice;
            else if (kind == "free_form")
                q.kind = QuestionKind::FreeForm;
            else
                continue;
            if (!item.contains("stem") || !item["stem"].is_string()) continue;
            q.stem = item["stem"].get<std::string>();
            if (auto a = item.find("answer"); a != item.end() && a->is_string()) q.answer = a->get<std::string>();
            if (auto c = item.find("choices"); c != item.end() && c->is_array()) {
                bool ok = true;
                for (const auto& ch : *c) {
                    if (!ch.is_string()) {
                        ok = false;
                        break;
                    }
                    q.choices.push_back(ch.get<std::string>());
                }
                if (!ok) continue;
            }
            if (q.well_formed()) out.push_back(std::move(q));
        }
        break;
    }
    return out;
}

std::string render_questions(const std::vector<GeneratedQuestion>& questions) {
    std::ostringstream os;
    int n = 0;
    for (const auto& q : questions) {
        os << ++n << ". " << q.stem << '\n';
        char label = 'A';
        for (const auto& c : q.choices) os << "   " << label++ << ") " << c << '\n';
        os << "   Answer: " << q.answer << '\n';
    }
    return os.str();
}

}  // namespace vista::orch
