#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "vista/llm.hpp"

namespace vista::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPartial = 1;
inline constexpr int kExitConfig = 2;

// Resolved settings for one command. Sources are layered: command-line flags
// over VISTA_* environment variables over an optional JSON config file over
// built-in defaults.
struct RunConfig {
    std::optional<std::filesystem::path> dataset;
    std::optional<std::filesystem::path> problem;
    std::filesystem::path out = "vista-out";
    std::optional<std::filesystem::path> cassette;
    llm::CassetteMode cassette_mode = llm::CassetteMode::Passthrough;
    int max_retries = 3;
    int jobs = 1;
    double timeout_s = 30.0;
    std::string judge_model = "gpt-4o";
    std::string pipeline_model = "claude-3-5-sonnet-20240620";
    std::filesystem::path prompts;
    llm::EndpointConfig endpoint;
    std::string interpreter = "python3";
    std::string script_ext = ".py";
    bool dry_run = false;

    // Throws ConfigError: jobs < 1, max_retries < 0, timeout <= 0, Replay
    // without a readable cassette, Record without a cassette path.
    void check() const;
    std::string describe() const;
};

// Entry point used by the `vista` executable; returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vista::cli
