#include "vista/cli.hpp"

#include <stdlib.h>

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "vista/evaluator.hpp"
#include "vista/orchestrator.hpp"
#include "vista/text.hpp"

#ifndef VISTA_PROMPT_DIR
#define VISTA_PROMPT_DIR "prompts"
#endif

namespace vista::cli {

namespace fs = std::filesystem;

namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_interrupt(int) { g_stop.store(true); }

class InterruptGuard {
public:
    InterruptGuard() {
        g_stop.store(false);
        previous_ = std::signal(SIGINT, on_interrupt);
    }
    ~InterruptGuard() { std::signal(SIGINT, previous_); }

private:
    void (*previous_)(int) = SIG_DFL;
};

// Raw values as typed by the user; empty optionals fall through to the next
// layer.
struct Layer {
    std::optional<std::string> dataset, problem, out, cassette, cassette_mode, judge_model, pipeline_model, prompts,
        endpoint, api_key_env, interpreter, script_ext;
    std::optional<int> max_retries, jobs;
    std::optional<double> timeout_s;
};

std::optional<std::string> env(const char* name) {
    if (const char* v = std::getenv(name); v && *v) return std::string(v);
    return std::nullopt;
}

template <class T>
std::optional<T> env_number(const char* name) {
    const auto v = env(name);
    if (!v) return std::nullopt;
    std::istringstream in(*v);
    T x{};
    if (!(in >> x) || !(in >> std::ws).eof()) throw ConfigError(std::string(name) + " is not a number: " + *v);
    return x;
}

Layer env_layer() {
    Layer l;
    l.dataset = env("VISTA_DATASET");
    l.problem = env("VISTA_PROBLEM");
    l.out = env("VISTA_OUT");
    l.cassette = env("VISTA_CASSETTE");
    l.cassette_mode = env("VISTA_CASSETTE_MODE");
    l.judge_model = env("VISTA_JUDGE_MODEL");
    l.pipeline_model = env("VISTA_PIPELINE_MODEL");
    l.prompts = env("VISTA_PROMPTS");
    l.endpoint = env("VISTA_ENDPOINT");
    l.api_key_env = env("VISTA_API_KEY_ENV");
    l.interpreter = env("VISTA_INTERPRETER");
    l.script_ext = env("VISTA_SCRIPT_EXT");
    l.max_retries = env_number<int>("VISTA_MAX_RETRIES");
    l.jobs = env_number<int>("VISTA_JOBS");
    l.timeout_s = env_number<double>("VISTA_EXEC_TIMEOUT_S");
    return l;
}

Layer file_layer(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    const auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ConfigError("config file is not a JSON object: " + path.string());
    Layer l;
    try {
        auto str = [&](const char* key, std::optional<std::string>& dst) {
            if (auto it = j.find(key); it != j.end()) dst = it->get<std::string>();
        };
        str("dataset", l.dataset);
        str("problem", l.problem);
        str("out", l.out);
        str("cassette", l.cassette);
        str("cassette_mode", l.cassette_mode);
        str("judge_model", l.judge_model);
        str("pipeline_model", l.pipeline_model);
        str("prompts", l.prompts);
        str("endpoint", l.endpoint);
        str("api_key_env", l.api_key_env);
        str("interpreter", l.interpreter);
        str("script_ext", l.script_ext);
        if (auto it = j.find("max_retries"); it != j.end()) l.max_retries = it->get<int>();
        if (auto it = j.find("jobs"); it != j.end()) l.jobs = it->get<int>();
        if (auto it = j.find("timeout_s"); it != j.end()) l.timeout_s = it->get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file " + path.string() + ": " + e.what());
    }
    return l;
}

template <class T>
std::optional<T> first_of(const std::optional<T>& a, const std::optional<T>& b, const std::optional<T>& c) {
    return a ? a : b ? b : c;
}

template <class T>
void pick(T& dst, const std::optional<T>& a, const std::optional<T>& b, const std::optional<T>& c) {
    if (a)
        dst = *a;
    else if (b)
        dst = *b;
    else if (c)
        dst = *c;
}

RunConfig resolve(const Layer& flags, const Layer& envl, const Layer& file, bool dry_run) {
    RunConfig cfg;
    cfg.prompts = VISTA_PROMPT_DIR;
    std::optional<std::string> s;
    auto path_field = [&](std::optional<fs::path>& dst, auto member) {
        s = first_of(flags.*member, envl.*member, file.*member);
        if (s) dst = fs::path(*s);
    };
    path_field(cfg.dataset, &Layer::dataset);
    path_field(cfg.problem, &Layer::problem);
    path_field(cfg.cassette, &Layer::cassette);
    std::optional<fs::path> tmp;
    path_field(tmp, &Layer::out);
    if (tmp) cfg.out = *tmp;
    tmp.reset();
    path_field(tmp, &Layer::prompts);
    if (tmp) cfg.prompts = *tmp;

    pick(cfg.judge_model, flags.judge_model, envl.judge_model, file.judge_model);
    pick(cfg.pipeline_model, flags.pipeline_model, envl.pipeline_model, file.pipeline_model);
    pick(cfg.endpoint.base_url, flags.endpoint, envl.endpoint, file.endpoint);
    pick(cfg.endpoint.api_key_env, flags.api_key_env, envl.api_key_env, file.api_key_env);
    pick(cfg.interpreter, flags.interpreter, envl.interpreter, file.interpreter);
    pick(cfg.script_ext, flags.script_ext, envl.script_ext, file.script_ext);
    pick(cfg.max_retries, flags.max_retries, envl.max_retries, file.max_retries);
    pick(cfg.jobs, flags.jobs, envl.jobs, file.jobs);
    pick(cfg.timeout_s, flags.timeout_s, envl.timeout_s, file.timeout_s);

    s = first_of(flags.cassette_mode, envl.cassette_mode, file.cassette_mode);
    if (s) {
        const auto mode = llm::parse_cassette_mode(*s);
        if (!mode) throw ConfigError("unknown cassette mode '" + *s + "' (record, replay or passthrough)");
        cfg.cassette_mode = *mode;
    } else {
        cfg.cassette_mode = cfg.cassette ? llm::CassetteMode::Replay : llm::CassetteMode::Passthrough;
    }
    cfg.dry_run = dry_run;
    return cfg;
}

std::vector<Problem> load_problems(const RunConfig& cfg) {
    if (cfg.dataset && cfg.problem) throw ConfigError("give either --dataset or --problem, not both");
    if (cfg.dataset) return eval::load_dataset(*cfg.dataset);
    if (cfg.problem) {
        std::ifstream in(*cfg.problem);
        if (!in) throw ConfigError("cannot read problem file " + cfg.problem->string());
        std::stringstream ss;
        ss << in.rdbuf();
        auto p = parse_problem_record(ss.str());
        if (p.original_figure && fs::path(*p.original_figure).is_relative())
            p.original_figure = (cfg.problem->parent_path() / *p.original_figure).lexically_normal().string();
        return {p};
    }
    throw ConfigError("no input: give --dataset or --problem");
}

// Owns the model clients for one command.
struct Clients {
    std::unique_ptr<llm::HttpChatClient> http;
    std::unique_ptr<llm::CassetteClient> cassette;
    llm::ChatClient* client = nullptr;
};

Clients make_clients(const RunConfig& cfg) {
    Clients c;
    if (cfg.cassette_mode != llm::CassetteMode::Replay) c.http = std::make_unique<llm::HttpChatClient>(cfg.endpoint);
    if (cfg.cassette_mode == llm::CassetteMode::Passthrough && !cfg.cassette) {
        c.client = c.http.get();
        return c;
    }
    llm::Cassette cassette;
    if (cfg.cassette && fs::exists(*cfg.cassette)) cassette = llm::Cassette::load(*cfg.cassette);
    std::optional<fs::path> file;
    if (cfg.cassette_mode == llm::CassetteMode::Record) file = cfg.cassette;
    c.cassette = std::make_unique<llm::CassetteClient>(cfg.cassette_mode, std::move(cassette), c.http.get(), file);
    c.client = c.cassette.get();
    return c;
}

fs::path make_scratch_dir() {
    auto templ = (fs::temp_directory_path() / "vista-run-XXXXXX").string();
    if (!::mkdtemp(templ.data())) throw Error("cannot create a scratch directory under " + templ);
    return templ;
}

struct RunRow {
    std::string id;
    PipelineStatus status = PipelineStatus::Aborted;
    std::string reason;
    TokenUsage usage;
    int retries = 0;
};

int cmd_generate(const RunConfig& cfg, bool baseline, std::ostream& out, std::ostream& err) {
    cfg.check();
    const auto problems = load_problems(cfg);
    const auto subdir = cfg.out / (baseline ? "baseline" : "vista");

    if (cfg.dry_run) {
        out << cfg.describe();
        out << "plan: " << (baseline ? "baseline" : "pipeline") << " generation for " << problems.size()
            << " problem(s)\n";
        for (const auto& p : problems) out << "  " << p.id << " -> " << (subdir / orch::run_id_for(p.id)).string() << '\n';
        return kExitOk;
    }

    const auto prompts = llm::PromptRegistry::load(cfg.prompts);
    auto clients = make_clients(cfg);
    if (problems.empty()) {
        out << "dataset is empty; nothing to run\n";
        return kExitOk;
    }

    orch::PipelineConfig base;
    base.client = clients.client;
    base.prompts = &prompts;
    base.params.model = baseline ? cfg.judge_model : cfg.pipeline_model;
    base.max_retries = cfg.max_retries;
    base.limits.timeout_s = cfg.timeout_s;
    base.interpreter = exec::InterpreterConfig::parse(cfg.interpreter, cfg.script_ext);
    base.params.check();

    InterruptGuard guard;
    std::vector<std::optional<RunRow>> rows(problems.size());
    std::atomic<std::size_t> next{0};
    std::mutex io;
    auto worker = [&] {
        for (;;) {
            if (g_stop.load()) return;
            const auto i = next.fetch_add(1);
            if (i >= problems.size()) return;
            const auto& problem = problems[i];
            RunRow row;
            row.id = problem.id;
            fs::path scratch;
            try {
                scratch = make_scratch_dir();
                auto pc = base;
                pc.scratch_dir = scratch;
                const auto result = baseline ? orch::run_baseline(problem, pc) : orch::run_pipeline(problem, pc);
                orch::persist_run(result, problem, subdir / orch::run_id_for(problem.id));
                row.status = result.status;
                row.reason = result.failure_reason;
                row.usage = result.usage;
                row.retries = result.retries_used;
            } catch (const std::exception& e) {
                row.status = PipelineStatus::Aborted;
                row.reason = e.what();
            }
            if (!scratch.empty()) {
                std::error_code ec;
                fs::remove_all(scratch, ec);
            }
            {
                std::lock_guard lock(io);
                out << problem.id << ": " << to_string(row.status) << '\n';
            }
            rows[i] = std::move(row);
        }
    };
    const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(cfg.jobs), problems.size());
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    std::size_t done = 0, completed = 0;
    TokenUsage total;
    std::vector<const RunRow*> failed;
    for (const auto& r : rows) {
        if (!r) continue;
        ++done;
        total += r->usage;
        if (r->status == PipelineStatus::Completed)
            ++completed;
        else
            failed.push_back(&*r);
    }
    out << completed << "/" << problems.size() << " run(s) completed\n";
    if (done > 0) {
        const double n = static_cast<double>(done);
        out << "usage: " << total.input_tokens << " input / " << total.output_tokens << " output tokens; per run "
            << text::format_fixed(static_cast<double>(total.input_tokens) / n, 0) << " / "
            << text::format_fixed(static_cast<double>(total.output_tokens) / n, 0)
            << " (a typical live figure costs about 3400 / 600)\n";
    }
    if (!failed.empty()) {
        out << "\nfailed runs\n";
        for (const auto* r : failed) out << "  " << r->id << "  " << to_string(r->status) << "  " << r->reason << '\n';
    }
    if (done < problems.size()) err << "interrupted: " << problems.size() - done << " problem(s) not started\n";
    return completed == problems.size() ? kExitOk : kExitPartial;
}

int cmd_eval(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    cfg.check();
    if (cfg.dry_run) {
        out << cfg.describe();
        out << "plan: score runs under " << (cfg.out / "vista").string() << " and " << (cfg.out / "baseline").string()
            << ", write reports to " << (cfg.out / "eval").string() << '\n';
        return kExitOk;
    }
    const auto prompts = llm::PromptRegistry::load(cfg.prompts);
    auto clients = make_clients(cfg);
    eval::Judge judge;
    judge.client = clients.client;
    judge.prompts = &prompts;
    judge.params.model = cfg.judge_model;
    InterruptGuard guard;
    const auto outcome = eval::evaluate_runs(cfg.out, judge, cfg.jobs, &g_stop);
    if (outcome.runs_seen == 0) {
        err << "nothing to evaluate under " << cfg.out.string() << '\n';
        return kExitPartial;
    }
    eval::write_reports(outcome, cfg.out / "eval");
    out << outcome.records.size() << " score(s) from " << outcome.runs_seen << " run(s); " << outcome.gaps.size()
        << " skipped, " << outcome.errors.size() << " error(s)\n";
    out << "reports written to " << (cfg.out / "eval").string() << '\n';
    for (const auto& e : outcome.errors) err << "error: " << e << '\n';
    return outcome.errors.empty() && !g_stop.load() ? kExitOk : kExitPartial;
}

int cmd_report(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto scores = cfg.out / "eval" / "scores.jsonl";
    if (cfg.dry_run) {
        out << cfg.describe() << "plan: rebuild reports from " << scores.string() << '\n';
        return kExitOk;
    }
    std::ifstream in(scores);
    if (!in) {
        err << "nothing to evaluate: no scores at " << scores.string() << '\n';
        return kExitPartial;
    }
    eval::EvalOutcome outcome;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        try {
            outcome.records.push_back(eval::decode_score_record(line));
        } catch (const MalformedRecord& e) {
            throw MalformedRecord(e.what(), lineno);
        }
    }
    const auto stats = eval::aggregate(outcome.records);
    out << eval::report_text(stats, eval::compare_systems(stats), {}, {});
    return kExitOk;
}

}  // namespace

void RunConfig::check() const {
    if (jobs < 1) throw ConfigError("--jobs must be at least 1");
    if (max_retries < 0) throw ConfigError("--max-retries must be >= 0");
    if (!(timeout_s > 0)) throw ConfigError("--timeout-s must be positive");
    if (cassette_mode == llm::CassetteMode::Replay) {
        if (!cassette) throw ConfigError("replay mode needs --cassette");
        if (!fs::is_regular_file(*cassette)) throw ConfigError("cassette not found: " + cassette->string());
    }
    if (cassette_mode == llm::CassetteMode::Record && !cassette) throw ConfigError("record mode needs --cassette");
}

std::string RunConfig::describe() const {
    std::ostringstream os;
    auto opt = [](const std::optional<fs::path>& p) { return p ? p->string() : std::string("(unset)"); };
    os << "dataset         " << opt(dataset) << '\n'
       << "problem         " << opt(problem) << '\n'
       << "out             " << out.string() << '\n'
       << "cassette        " << opt(cassette) << '\n'
       << "cassette-mode   " << llm::to_string(cassette_mode) << '\n'
       << "max-retries     " << max_retries << '\n'
       << "jobs            " << jobs << '\n'
       << "timeout-s       " << text::format_number(timeout_s) << '\n'
       << "pipeline-model  " << pipeline_model << '\n'
       << "judge-model     " << judge_model << '\n'
       << "prompts         " << prompts.string() << '\n'
       << "endpoint        " << endpoint.base_url << '\n'
       << "api-key-env     " << endpoint.api_key_env << '\n'
       << "interpreter     " << interpreter << " (*" << script_ext << ")\n";
    return os.str();
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Generate validated math figures and questions with an agent pipeline, and score them."};
    app.name(args.empty() ? "vista" : args.front());
    app.require_subcommand(1);

    std::string s_dataset, s_problem, s_out, s_cassette, s_mode, s_judge, s_pipeline, s_prompts, s_endpoint, s_key,
        s_interp, s_ext, s_config;
    int i_retries = 0, i_jobs = 0;
    double d_timeout = 0;
    bool dry_run = false;

    struct Opts {
        CLI::Option *dataset, *problem, *out, *cassette, *mode, *judge, *pipeline, *prompts, *endpoint, *key, *interp,
            *ext, *retries, *jobs, *timeout;
    };
    std::map<CLI::App*, Opts> opts;

    auto add_common = [&](CLI::App* sub) {
        Opts o{};
        o.dataset = sub->add_option("--dataset", s_dataset, "Problem dataset (JSON lines)");
        o.problem = sub->add_option("--problem", s_problem, "Single problem file (one JSON object)");
        o.out = sub->add_option("--out", s_out, "Output directory (default vista-out)");
        o.cassette = sub->add_option("--cassette", s_cassette, "Cassette file for recorded model responses");
        o.mode = sub->add_option("--cassette-mode", s_mode, "record | replay | passthrough")
                     ->check(CLI::IsMember({"record", "replay", "passthrough"}));
        o.retries = sub->add_option("--max-retries", i_retries, "Figure code revisions after a failed execution");
        o.jobs = sub->add_option("--jobs", i_jobs, "Problems processed concurrently");
        o.timeout = sub->add_option("--timeout-s", d_timeout, "Wall-clock limit per figure code execution");
        o.judge = sub->add_option("--judge-model", s_judge, "Model used for scoring and the baseline");
        o.pipeline = sub->add_option("--pipeline-model", s_pipeline, "Model used by the pipeline agents");
        o.prompts = sub->add_option("--prompts", s_prompts, "Prompt template directory");
        o.endpoint = sub->add_option("--endpoint", s_endpoint, "Base URL of a chat-completions endpoint");
        o.key = sub->add_option("--api-key-env", s_key, "Environment variable holding the API key");
        o.interp = sub->add_option("--interpreter", s_interp, "Command that runs figure code");
        o.ext = sub->add_option("--script-ext", s_ext, "File extension for figure code");
        sub->add_option("--config", s_config, "JSON config file");
        sub->add_flag("--dry-run", dry_run, "Print the resolved config and plan, then exit");
        opts[sub] = o;
    };

    auto* run = app.add_subcommand("run", "Run the agent pipeline on each problem");
    auto* base = app.add_subcommand("baseline", "Run the single-call baseline on each problem");
    auto* evalc = app.add_subcommand("eval", "Score generated runs with the judge model");
    auto* report = app.add_subcommand("report", "Print the report rebuilt from stored scores");
    for (auto* sub : {run, base, evalc, report}) add_common(sub);

    std::vector<std::string> rev(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
    std::reverse(rev.begin(), rev.end());
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    CLI::App* chosen = app.get_subcommands().front();
    const auto& o = opts.at(chosen);
    Layer flags;
    auto sflag = [](CLI::Option* opt, const std::string& v) {
        return opt->count() ? std::optional<std::string>(v) : std::nullopt;
    };
    flags.dataset = sflag(o.dataset, s_dataset);
    flags.problem = sflag(o.problem, s_problem);
    flags.out = sflag(o.out, s_out);
    flags.cassette = sflag(o.cassette, s_cassette);
    flags.cassette_mode = sflag(o.mode, s_mode);
    flags.judge_model = sflag(o.judge, s_judge);
    flags.pipeline_model = sflag(o.pipeline, s_pipeline);
    flags.prompts = sflag(o.prompts, s_prompts);
    flags.endpoint = sflag(o.endpoint, s_endpoint);
    flags.api_key_env = sflag(o.key, s_key);
    flags.interpreter = sflag(o.interp, s_interp);
    flags.script_ext = sflag(o.ext, s_ext);
    if (o.retries->count()) flags.max_retries = i_retries;
    if (o.jobs->count()) flags.jobs = i_jobs;
    if (o.timeout->count()) flags.timeout_s = d_timeout;

    try {
        const Layer file = s_config.empty() ? Layer{} : file_layer(s_config);
        const auto cfg = resolve(flags, env_layer(), file, dry_run);
        if (chosen == run) return cmd_generate(cfg, false, out, err);
        if (chosen == base) return cmd_generate(cfg, true, out, err);
        if (chosen == evalc) return cmd_eval(cfg, out, err);
        return cmd_report(cfg, out, err);
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const MalformedRecord& e) {
        err << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const IllegalSubtype& e) {
        err << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitPartial;
    }
}

}  // namespace vista::cli
