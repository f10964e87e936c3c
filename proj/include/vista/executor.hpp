#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vista/core.hpp"

// Runs generated figure code in a child process confined to a working
// directory, and recognises the "figure saved to <name>" confirmation.
namespace vista::exec {

struct ExecLimits {
    double timeout_s = 30.0;
    std::size_t max_output_bytes = 64 * 1024;
};

struct InterpreterConfig {
    std::vector<std::string> command{"python3"};
    std::string script_extension = ".py";

    // "python3 -u" -> {"python3", "-u"}; throws ConfigError when empty.
    static InterpreterConfig parse(std::string_view command_line, std::string extension = ".py");
    std::string script_name() const { return "figure_script" + script_extension; }
};

struct ProducedFile {
    std::filesystem::path path;
    std::uintmax_t size = 0;
};

struct ExecutionOutcome {
    int exit_status = 0;  // 128 + signal when the child was killed
    std::string stdout_text;
    std::string stderr_text;
    std::vector<ProducedFile> produced_files;
    double duration = 0.0;
    std::filesystem::path workdir;
    bool output_truncated = false;

    bool succeeded() const noexcept { return exit_status == 0; }
};

class TimeoutExceeded : public Error {
public:
    TimeoutExceeded(double timeout_s, ExecutionOutcome partial)
        : Error("script exceeded " + std::to_string(timeout_s) + " s timeout"), partial_(std::move(partial)) {}
    const ExecutionOutcome& partial() const noexcept { return partial_; }

private:
    ExecutionOutcome partial_;
};

class SpawnFailure : public Error {
public:
    using Error::Error;
};

// Writes `code` to `<workdir>/figure_script<ext>` and runs the interpreter on
// it with cwd = workdir, HOME/TMPDIR pointed at workdir, proxy variables
// stripped and (where the kernel allows) a private network namespace.
// Streams are truncated at max_output_bytes; the whole process group is
// killed at the timeout.
ExecutionOutcome execute(std::string_view code, const std::filesystem::path& workdir, const ExecLimits& limits,
                         const InterpreterConfig& interpreter = {});

enum class ImageFormat { Png, Jpeg, Svg };
std::string_view extension_for(ImageFormat f) noexcept;
std::optional<ImageFormat> sniff_image(const std::filesystem::path& file);

// Name from the last stdout line of the form `figure saved to <name>`.
std::optional<std::string> confirmation_name(std::string_view stdout_text);

// The confirmed file, provided it was produced by this run, is non-empty and
// carries PNG/JPEG/SVG magic bytes.
std::optional<std::filesystem::path> detect_figure(const ExecutionOutcome& outcome);

}  // namespace vista::exec
