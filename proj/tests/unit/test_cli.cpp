#include <algorithm>
#include <cstdlib>
#include <sstream>

#include "doctest.h"
#include "fake_endpoint.hpp"
#include "scripted_model.hpp"
#include "vista/cli.hpp"
#include "vista/orchestrator.hpp"

using namespace vista;
using vista::testing::FakeEndpoint;
using vista::testing::read_file;
using vista::testing::TempDir;
using vista::testing::write_file;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string out;
    std::string err;
};

Result vista_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "vista");
    std::ostringstream out, err;
    Result r;
    r.code = cli::run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

// Sets an environment variable for the lifetime of the guard.
class EnvGuard {
public:
    EnvGuard(const char* name, const char* value) : name_(name) { ::setenv(name, value, 1); }
    ~EnvGuard() { ::unsetenv(name_); }

private:
    const char* name_;
};

std::string problem_line(const std::string& id, const std::string& category = "Geometry2D",
                         const std::string& subtype = "Length") {
    return R"({"id": ")" + id + R"(", "text": "In right triangle ABC the legs are 4 and 3. Find BC.", "category": ")" +
           category + R"(", "subtype": ")" + subtype + R"("})";
}

}  // namespace

TEST_SUITE("cli") {
    TEST_CASE("help and usage errors") {
        auto r = vista_cli({"--help"});
        CHECK(r.code == cli::kExitOk);
        CHECK(r.out.find("run") != std::string::npos);
        CHECK(vista_cli({}).code == cli::kExitConfig);
        CHECK(vista_cli({"frobnicate"}).code == cli::kExitConfig);
        CHECK(vista_cli({"run", "--cassette-mode", "sideways"}).code == cli::kExitConfig);
        CHECK(vista_cli({"run", "--jobs", "many"}).code == cli::kExitConfig);
    }

    TEST_CASE("configuration errors exit with 2") {
        TempDir dir;
        write_file(dir.path() / "p.json", problem_line("c1"));
        const auto p = (dir.path() / "p.json").string();
        auto r = vista_cli({"run", "--problem", p, "--jobs", "0", "--dry-run"});
        CHECK(r.code == cli::kExitConfig);
        CHECK(r.err.find("configuration error") != std::string::npos);
        CHECK(vista_cli({"run", "--problem", p, "--max-retries", "-1", "--dry-run"}).code == cli::kExitConfig);
        CHECK(vista_cli({"run", "--problem", p, "--timeout-s", "0", "--dry-run"}).code == cli::kExitConfig);
        CHECK(vista_cli({"run", "--problem", p, "--cassette", (dir.path() / "none.jsonl").string(), "--dry-run"})
                  .code == cli::kExitConfig);
        CHECK(vista_cli({"run", "--problem", p, "--cassette-mode", "record", "--dry-run"}).code == cli::kExitConfig);
        CHECK(vista_cli({"run", "--dry-run"}).code == cli::kExitConfig);
        CHECK(vista_cli({"run", "--problem", p, "--dataset", p, "--dry-run"}).code == cli::kExitConfig);
        CHECK(vista_cli({"run", "--dataset", (dir.path() / "missing.jsonl").string()}).code == cli::kExitConfig);
        write_file(dir.path() / "bad.jsonl", problem_line("x", "Function", "Angle") + "\n");
        r = vista_cli({"run", "--dataset", (dir.path() / "bad.jsonl").string()});
        CHECK(r.code == cli::kExitConfig);
        CHECK(r.err.find("line 1") != std::string::npos);
        CHECK(vista_cli({"run", "--problem", p, "--config", (dir.path() / "nope.json").string(), "--dry-run"}).code ==
              cli::kExitConfig);
        {
            EnvGuard g("VISTA_JOBS", "lots");
            CHECK(vista_cli({"run", "--problem", p, "--dry-run"}).code == cli::kExitConfig);
        }
        {
            EnvGuard g("VISTA_CASSETTE_MODE", "sideways");
            CHECK(vista_cli({"run", "--problem", p, "--dry-run"}).code == cli::kExitConfig);
        }
    }

    TEST_CASE("dry run prints the resolved config and plan without touching anything") {
        TempDir dir;
        write_file(dir.path() / "d.jsonl", problem_line("a") + "\n" + problem_line("b") + "\n");
        const auto out_dir = dir.path() / "out";
        const auto r = vista_cli({"run", "--dataset", (dir.path() / "d.jsonl").string(), "--out", out_dir.string(),
                                  "--dry-run"});
        CHECK(r.code == cli::kExitOk);
        CHECK(r.out.find("pipeline-model  claude-3-5-sonnet-20240620") != std::string::npos);
        CHECK(r.out.find("judge-model     gpt-4o") != std::string::npos);
        CHECK(r.out.find("max-retries     3") != std::string::npos);
        CHECK(r.out.find("cassette-mode   passthrough") != std::string::npos);
        CHECK(r.out.find((out_dir / "vista" / "a").string()) != std::string::npos);
        CHECK_FALSE(fs::exists(out_dir));
        for (const char* cmd : {"baseline", "eval", "report"})
            CHECK(vista_cli({cmd, "--out", out_dir.string(), "--dataset", (dir.path() / "d.jsonl").string(),
                             "--dry-run"})
                      .code == cli::kExitOk);
        CHECK_FALSE(fs::exists(out_dir));
    }

    TEST_CASE("flags beat environment beats config file") {
        TempDir dir;
        write_file(dir.path() / "p.json", problem_line("c1"));
        write_file(dir.path() / "cfg.json", R"({"jobs": 4, "max_retries": 5, "judge_model": "file-judge",
                                              "timeout_s": 7})");
        const auto p = (dir.path() / "p.json").string();
        const auto cfg = (dir.path() / "cfg.json").string();
        auto r = vista_cli({"run", "--problem", p, "--config", cfg, "--dry-run"});
        CHECK(r.out.find("jobs            4") != std::string::npos);
        CHECK(r.out.find("judge-model     file-judge") != std::string::npos);
        CHECK(r.out.find("timeout-s       7") != std::string::npos);
        EnvGuard jobs("VISTA_JOBS", "2");
        EnvGuard timeout("VISTA_EXEC_TIMEOUT_S", "9.5");
        r = vista_cli({"run", "--problem", p, "--config", cfg, "--dry-run"});
        CHECK(r.out.find("jobs            2") != std::string::npos);
        CHECK(r.out.find("timeout-s       9.5") != std::string::npos);
        CHECK(r.out.find("max-retries     5") != std::string::npos);
        r = vista_cli({"run", "--problem", p, "--config", cfg, "--jobs", "3", "--dry-run"});
        CHECK(r.out.find("jobs            3") != std::string::npos);
    }

    TEST_CASE("a cassette flag alone means replay") {
        TempDir dir;
        write_file(dir.path() / "p.json", problem_line("c1"));
        write_file(dir.path() / "c.jsonl", "");
        const auto r = vista_cli({"run", "--problem", (dir.path() / "p.json").string(), "--cassette",
                                  (dir.path() / "c.jsonl").string(), "--dry-run"});
        CHECK(r.code == cli::kExitOk);
        CHECK(r.out.find("cassette-mode   replay") != std::string::npos);
    }

    TEST_CASE("record against a live endpoint, then replay offline") {
        FakeEndpoint server;
        TempDir dir;
        write_file(dir.path() / "d.jsonl", problem_line("cli-clean") + "\n" +
                                                problem_line("cli-fn", "Function", "Property") + "\n");
        const auto data = (dir.path() / "d.jsonl").string();
        const auto cassette = (dir.path() / "c.jsonl").string();
        const auto rec_out = dir.path() / "rec";
        auto r = vista_cli({"run", "--dataset", data, "--out", rec_out.string(), "--cassette", cassette,
                            "--cassette-mode", "record", "--endpoint", server.base_url(), "--jobs", "2"});
        CHECK_MESSAGE(r.code == cli::kExitOk, r.out << r.err);
        CHECK(r.out.find("2/2 run(s) completed") != std::string::npos);
        CHECK(r.out.find("3400") != std::string::npos);
        const auto live_requests = server.requests();
        CHECK(live_requests == 10);
        for (const char* f : {"transcript", "questions", "summary", "figure.png", "result.json"})
            CHECK_MESSAGE(fs::exists(rec_out / "vista" / "cli-clean" / f), f);

        const auto rep_out = dir.path() / "rep";
        r = vista_cli({"run", "--dataset", data, "--out", rep_out.string(), "--cassette", cassette});
        CHECK_MESSAGE(r.code == cli::kExitOk, r.out << r.err);
        CHECK(server.requests() == live_requests);
        CHECK(read_file(rec_out / "vista" / "cli-fn" / "questions") ==
              read_file(rep_out / "vista" / "cli-fn" / "questions"));
        const auto a = orch::load_run(rec_out / "vista" / "cli-clean");
        const auto b = orch::load_run(rep_out / "vista" / "cli-clean");
        CHECK(a.usage.input_tokens == b.usage.input_tokens);
        CHECK(a.usage.output_tokens == b.usage.output_tokens);

        // A problem the cassette has never seen fails its run without touching the network.
        write_file(dir.path() / "new.json", problem_line("cli-unseen"));
        r = vista_cli({"run", "--problem", (dir.path() / "new.json").string(), "--out", rep_out.string(),
                       "--cassette", cassette});
        CHECK(r.code == cli::kExitPartial);
        CHECK(r.out.find("cassette has no entry") != std::string::npos);
        CHECK(server.requests() == live_requests);
    }

    TEST_CASE("partial failure exits 1 and lists failed runs") {
        FakeEndpoint server;
        TempDir dir;
        write_file(dir.path() / "d.jsonl", problem_line("ok-1") + "\n" + problem_line("bad-exhaust") + "\n");
        const auto r = vista_cli({"run", "--dataset", (dir.path() / "d.jsonl").string(), "--out",
                                  (dir.path() / "out").string(), "--endpoint", server.base_url(), "--max-retries",
                                  "1"});
        CHECK(r.code == cli::kExitPartial);
        CHECK(r.out.find("1/2 run(s) completed") != std::string::npos);
        CHECK(r.out.find("failed runs") != std::string::npos);
        CHECK(r.out.find("bad-exhaust") != std::string::npos);
        CHECK(fs::exists(dir.path() / "out" / "vista" / "bad-exhaust" / "transcript"));
    }

    TEST_CASE("baseline, eval and report") {
        FakeEndpoint server;
        TempDir dir;
        testing::write_png(dir.path() / "orig.png", 8, 8);
        write_file(dir.path() / "d.jsonl",
                   R"({"id": "e1", "text": "Find BC.", "category": "Geometry2D", "subtype": "Length", "image": "orig.png"})"
                   "\n");
        const auto data = (dir.path() / "d.jsonl").string();
        const auto out = (dir.path() / "out").string();
        const std::vector<std::string> common{"--dataset", data, "--out", out, "--endpoint", server.base_url()};
        auto with = [&](std::string cmd) {
            std::vector<std::string> a{std::move(cmd)};
            a.insert(a.end(), common.begin(), common.end());
            return vista_cli(a);
        };
        auto r = with("eval");
        CHECK(r.code == cli::kExitPartial);
        CHECK(r.err.find("nothing to evaluate") != std::string::npos);
        CHECK(with("report").code == cli::kExitPartial);

        CHECK(with("run").code == cli::kExitOk);
        r = with("baseline");
        CHECK_MESSAGE(r.code == cli::kExitOk, r.out << r.err);
        CHECK(server.last_body().find("\"model\":\"gpt-4o\"") != std::string::npos);
        r = with("eval");
        CHECK_MESSAGE(r.code == cli::kExitOk, r.out << r.err);
        CHECK(r.out.find("10 score(s) from 2 run(s)") != std::string::npos);
        const auto csv = read_file(fs::path(out) / "eval" / "report.csv");
        CHECK(csv.rfind("system,category,subtype,metric,n,mean,std\n", 0) == 0);
        CHECK(std::count(csv.begin(), csv.end(), '\n') == 11);

        r = with("report");
        CHECK(r.code == cli::kExitOk);
        CHECK(r.out.find("Vista minus Baseline") != std::string::npos);
    }
}
