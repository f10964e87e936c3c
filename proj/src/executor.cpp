#include "vista/executor.hpp"

#include <fcntl.h>
#include <poll.h>
#include <sched.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <fstream>
#include <set>
#include <utility>

#include "vista/text.hpp"

extern char** environ;

namespace vista::exec {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kConfirmPrefix = "figure saved to ";

class Fd {
public:
    Fd() = default;
    explicit Fd(int fd) : fd_(fd) {}
    Fd(const Fd&) = delete;
    Fd& operator=(const Fd&) = delete;
    Fd(Fd&& o) noexcept : fd_(o.release()) {}
    Fd& operator=(Fd&& o) noexcept {
        reset(o.release());
        return *this;
    }
    ~Fd() { reset(); }
    int get() const noexcept { return fd_; }
    int release() noexcept { return std::exchange(fd_, -1); }
    void reset(int fd = -1) noexcept {
        if (fd_ >= 0) ::close(fd_);
        fd_ = fd;
    }

private:
    int fd_ = -1;
};

std::pair<Fd, Fd> make_pipe() {
    int p[2];
    if (::pipe2(p, O_CLOEXEC) != 0) throw SpawnFailure(std::string("pipe2: ") + std::strerror(errno));
    return {Fd(p[0]), Fd(p[1])};
}

bool is_proxy_var(std::string_view entry) {
    const auto eq = entry.find('=');
    std::string name(entry.substr(0, eq));
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
    return name == "http_proxy" || name == "https_proxy" || name == "all_proxy" || name == "ftp_proxy" ||
           name == "no_proxy";
}

std::vector<std::string> child_environment(const fs::path& workdir) {
    std::vector<std::string> env;
    for (char** e = environ; e && *e; ++e) {
        std::string_view entry(*e);
        if (is_proxy_var(entry) || entry.rfind("HOME=", 0) == 0 || entry.rfind("TMPDIR=", 0) == 0 ||
            entry.rfind("MPLBACKEND=", 0) == 0)
            continue;
        env.emplace_back(entry);
    }
    env.push_back("HOME=" + workdir.string());
    env.push_back("TMPDIR=" + workdir.string());
    env.push_back("MPLBACKEND=Agg");
    return env;
}

std::set<fs::path> snapshot(const fs::path& dir) {
    std::set<fs::path> out;
    std::error_code ec;
    for (auto it = fs::recursive_directory_iterator(dir, ec); !ec && it != fs::recursive_directory_iterator();
         it.increment(ec))
        if (it->is_regular_file()) out.insert(it->path());
    return out;
}

std::vector<ProducedFile> new_files(const fs::path& dir, const std::set<fs::path>& before) {
    std::vector<ProducedFile> out;
    for (const auto& p : snapshot(dir)) {
        if (before.contains(p)) continue;
        std::error_code ec;
        const auto size = fs::file_size(p, ec);
        out.push_back({p, ec ? 0 : size});
    }
    return out;
}

void append_capped(std::string& dst, const char* data, std::size_t n, std::size_t cap, bool& truncated) {
    if (dst.size() >= cap) {
        if (n) truncated = true;
        return;
    }
    const auto take = std::min(n, cap - dst.size());
    dst.append(data, take);
    if (take < n) truncated = true;
}

}  // namespace

InterpreterConfig InterpreterConfig::parse(std::string_view command_line, std::string extension) {
    InterpreterConfig cfg;
    cfg.command.clear();
    for (auto t : text::split_ws(command_line)) cfg.command.emplace_back(t);
    if (cfg.command.empty()) throw ConfigError("interpreter command is empty");
    cfg.script_extension = std::move(extension);
    return cfg;
}

ExecutionOutcome execute(std::string_view code, const fs::path& workdir, const ExecLimits& limits,
                         const InterpreterConfig& interpreter) {
    if (!fs::is_directory(workdir)) throw SpawnFailure("working directory does not exist: " + workdir.string());
    if (interpreter.command.empty()) throw SpawnFailure("no interpreter configured");

    const fs::path dir = fs::absolute(workdir).lexically_normal();
    const auto script = dir / interpreter.script_name();
    {
        std::ofstream out(script, std::ios::binary | std::ios::trunc);
        if (!out) throw SpawnFailure("cannot write " + script.string());
        out << code;
    }
    const auto before = snapshot(dir);

    // Everything the child needs is prepared before fork(); the child only
    // makes async-signal-safe calls.
    std::vector<std::string> args = interpreter.command;
    args.push_back(interpreter.script_name());
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    argv.push_back(nullptr);
    auto env_strings = child_environment(dir);
    std::vector<char*> envp;
    for (auto& e : env_strings) envp.push_back(e.data());
    envp.push_back(nullptr);
    const std::string dir_str = dir.string();

    auto [out_r, out_w] = make_pipe();
    auto [err_r, err_w] = make_pipe();
    auto [status_r, status_w] = make_pipe();
    Fd devnull(::open("/dev/null", O_RDONLY | O_CLOEXEC));

    const auto started = std::chrono::steady_clock::now();
    const pid_t pid = ::fork();
    if (pid < 0) throw SpawnFailure(std::string("fork: ") + std::strerror(errno));
    if (pid == 0) {
        ::setpgid(0, 0);
#ifdef CLONE_NEWNET
        ::unshare(CLONE_NEWNET);  // best effort; EPERM leaves networking as is
#endif
        int err = 0;
        if (::chdir(dir_str.c_str()) != 0) err = errno;
        if (!err && (::dup2(devnull.get(), 0) < 0 || ::dup2(out_w.get(), 1) < 0 || ::dup2(err_w.get(), 2) < 0))
            err = errno;
        if (!err) {
            ::execvpe(argv[0], argv.data(), envp.data());
            err = errno;
        }
        [[maybe_unused]] auto n = ::write(status_w.get(), &err, sizeof err);
        ::_exit(127);
    }
    ::setpgid(pid, pid);
    out_w.reset();
    err_w.reset();
    status_w.reset();

    int child_errno = 0;
    ssize_t got;
    do {
        got = ::read(status_r.get(), &child_errno, sizeof child_errno);
    } while (got < 0 && errno == EINTR);
    if (got == static_cast<ssize_t>(sizeof child_errno)) {
        ::waitpid(pid, nullptr, 0);
        throw SpawnFailure("cannot start '" + interpreter.command.front() + "': " + std::strerror(child_errno));
    }

    ExecutionOutcome outcome;
    outcome.workdir = dir;
    const auto deadline = started + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                        std::chrono::duration<double>(limits.timeout_s));
    bool timed_out = false;
    char buf[8192];
    pollfd fds[2] = {{out_r.get(), POLLIN, 0}, {err_r.get(), POLLIN, 0}};
    int open_streams = 2;
    while (open_streams > 0) {
        const auto now = std::chrono::steady_clock::now();
        if (!timed_out && now >= deadline) {
            ::kill(-pid, SIGKILL);
            timed_out = true;
        }
        int wait_ms = 100;
        if (!timed_out)
            wait_ms = static_cast<int>(std::clamp<long long>(
                std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count() + 1, 1, 100));
        const int rc = ::poll(fds, 2, wait_ms);
        if (rc < 0) {
            if (errno == EINTR) continue;
            break;
        }
        for (int i = 0; i < 2; ++i) {
            if (fds[i].fd < 0 || !(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
            const ssize_t n = ::read(fds[i].fd, buf, sizeof buf);
            if (n > 0) {
                append_capped(i == 0 ? outcome.stdout_text : outcome.stderr_text, buf, static_cast<std::size_t>(n),
                              limits.max_output_bytes, outcome.output_truncated);
            } else if (n == 0 || (errno != EINTR && errno != EAGAIN)) {
                fds[i].fd = -1;
                --open_streams;
            }
        }
        // A grandchild may keep the pipes open after the timeout kill; stop
        // waiting shortly after the deadline in that case.
        if (timed_out && std::chrono::steady_clock::now() > deadline + std::chrono::milliseconds(500)) break;
    }

    int status = 0;
    while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    ::kill(-pid, SIGKILL);  // reap stragglers in the group
    outcome.duration = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (WIFEXITED(status))
        outcome.exit_status = WEXITSTATUS(status);
    else if (WIFSIGNALED(status))
        outcome.exit_status = 128 + WTERMSIG(status);
    outcome.produced_files = new_files(dir, before);
    if (timed_out) throw TimeoutExceeded(limits.timeout_s, std::move(outcome));
    return outcome;
}

std::string_view extension_for(ImageFormat f) noexcept {
    switch (f) {
        case ImageFormat::Png: return ".png";
        case ImageFormat::Jpeg: return ".jpg";
        case ImageFormat::Svg: return ".svg";
    }
    return "";
}

std::optional<ImageFormat> sniff_image(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) return std::nullopt;
    std::string head(4096, '\0');
    in.read(head.data(), static_cast<std::streamsize>(head.size()));
    head.resize(static_cast<std::size_t>(in.gcount()));
    if (head.rfind("\x89PNG\r\n\x1a\n", 0) == 0) return ImageFormat::Png;
    if (head.size() >= 3 && static_cast<unsigned char>(head[0]) == 0xFF &&
        static_cast<unsigned char>(head[1]) == 0xD8 && static_cast<unsigned char>(head[2]) == 0xFF)
        return ImageFormat::Jpeg;
    std::string_view text = head;
    if (text.rfind("\xEF\xBB\xBF", 0) == 0) text.remove_prefix(3);
    text = text::trim(text);
    if (!text.empty() && text.front() == '<' && text.find("<svg") != std::string_view::npos)
        return ImageFormat::Svg;
    return std::nullopt;
}

std::optional<std::string> confirmation_name(std::string_view stdout_text) {
    std::optional<std::string> last;
    for (auto line : text::split_lines(stdout_text)) {
        if (line.rfind(kConfirmPrefix, 0) != 0) continue;
        const auto name = text::trim(line.substr(kConfirmPrefix.size()));
        if (!name.empty()) last = std::string(name);
    }
    return last;
}

std::optional<fs::path> detect_figure(const ExecutionOutcome& outcome) {
    const auto name = confirmation_name(outcome.stdout_text);
    if (!name) return std::nullopt;
    fs::path target(*name);
    if (target.is_relative()) target = outcome.workdir / target;
    target = target.lexically_normal();
    for (const auto& f : outcome.produced_files) {
        if (f.path.lexically_normal() != target) continue;
        if (f.size == 0) return std::nullopt;
        if (!sniff_image(f.path)) return std::nullopt;
        return f.path;
    }
    return std::nullopt;
}

}  // namespace vista::exec
