#include "edgebench/runner.hpp"

#include <algorithm>
#include <cerrno>
#include <condition_variable>
#include <csignal>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <thread>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include "edgebench/error.hpp"

namespace edgebench {

namespace {

void write_all(int fd, std::string_view data) {
    while (!data.empty()) {
        const ssize_t n = ::write(fd, data.data(), data.size());
        if (n < 0) {
            if (errno == EINTR) continue;
            return;  // runner closed stdin; the event stream reports what happened
        }
        data.remove_prefix(static_cast<std::size_t>(n));
    }
}

class ProcessSession final : public RunnerSession {
public:
    ProcessSession(const std::vector<std::string>& command, const RunConfig& config,
                   const RunClock& clock, double timeout_seconds, double memory_period)
        : clock_(clock), deadline_(clock.now() + timeout_seconds) {
        static std::once_flag sigpipe_once;
        std::call_once(sigpipe_once, [] { std::signal(SIGPIPE, SIG_IGN); });

        if (command.empty()) throw SpawnFailure("empty runner command");
        int in_pipe[2];
        int out_pipe[2];
        int err_pipe[2];
        if (::pipe2(in_pipe, O_CLOEXEC) != 0 || ::pipe2(out_pipe, O_CLOEXEC) != 0 ||
            ::pipe2(err_pipe, O_CLOEXEC) != 0) {
            throw SpawnFailure(std::string("pipe: ") + std::strerror(errno));
        }

        std::vector<char*> argv;
        for (const auto& arg : command) argv.push_back(const_cast<char*>(arg.c_str()));
        argv.push_back(nullptr);

        pid_ = ::fork();
        if (pid_ < 0) throw SpawnFailure(std::string("fork: ") + std::strerror(errno));
        if (pid_ == 0) {
            ::setpgid(0, 0);
            ::dup2(in_pipe[0], STDIN_FILENO);
            ::dup2(out_pipe[1], STDOUT_FILENO);
            ::execvp(argv[0], argv.data());
            const int err = errno;
            (void)!::write(err_pipe[1], &err, sizeof err);
            ::_exit(127);
        }
        ::setpgid(pid_, pid_);
        ::close(in_pipe[0]);
        ::close(out_pipe[1]);
        ::close(err_pipe[1]);

        int exec_errno = 0;
        ssize_t n;
        do {
            n = ::read(err_pipe[0], &exec_errno, sizeof exec_errno);
        } while (n < 0 && errno == EINTR);
        ::close(err_pipe[0]);
        if (n == sizeof exec_errno) {
            ::close(in_pipe[1]);
            ::close(out_pipe[0]);
            reap(true);
            throw SpawnFailure("cannot execute '" + command.front() + "': " +
                               std::strerror(exec_errno));
        }

        out_fd_ = out_pipe[0];
        write_all(in_pipe[1], encode_config(config) + "\n");
        ::close(in_pipe[1]);

        poller_ = std::jthread([this, memory_period](std::stop_token stop) {
            while (!stop.stop_requested()) {
                sample_memory();
                std::mutex m;
                std::condition_variable_any cv;
                std::unique_lock lock(m);
                cv.wait_for(lock, stop, std::chrono::duration<double>(memory_period),
                            [] { return false; });
            }
        });
    }

    ~ProcessSession() override {
        poller_.request_stop();
        if (poller_.joinable()) poller_.join();
        if (out_fd_ >= 0) ::close(out_fd_);
        reap(true);
    }

    std::optional<ReceivedLine> next_line() override {
        while (true) {
            if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
                ReceivedLine line{buffer_.substr(0, nl), clock_.now()};
                buffer_.erase(0, nl + 1);
                if (!line.line.empty() && line.line.back() == '\r') line.line.pop_back();
                sample_memory();
                return line;
            }
            if (eof_) {
                if (buffer_.empty()) return std::nullopt;
                ReceivedLine line{std::move(buffer_), clock_.now()};
                buffer_.clear();
                return line;
            }
            const double remaining = deadline_ - clock_.now();
            if (remaining <= 0.0) {
                kill_group();
                throw Timeout("runner exceeded the wall-clock limit");
            }
            pollfd pfd{out_fd_, POLLIN, 0};
            const int wait_ms = static_cast<int>(std::min(remaining * 1000.0, 1000.0)) + 1;
            const int rc = ::poll(&pfd, 1, wait_ms);
            if (rc < 0) {
                if (errno == EINTR) continue;
                throw SpawnFailure(std::string("poll: ") + std::strerror(errno));
            }
            if (rc == 0) continue;
            char chunk[4096];
            const ssize_t n = ::read(out_fd_, chunk, sizeof chunk);
            if (n < 0) {
                if (errno == EINTR || errno == EAGAIN) continue;
                throw SpawnFailure(std::string("read: ") + std::strerror(errno));
            }
            if (n == 0) {
                eof_ = true;
            } else {
                buffer_.append(chunk, static_cast<std::size_t>(n));
            }
        }
    }

    MemorySamples finish() override {
        poller_.request_stop();
        if (poller_.joinable()) poller_.join();
        reap(false);
        std::lock_guard lock(memory_mutex_);
        MemorySamples out = memory_;
        std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
        return out;
    }

private:
    void sample_memory() {
        if (pid_ <= 0 || reaped_) return;
        const double t = clock_.now();
        if (auto rss = process_tree_rss(pid_)) {
            std::lock_guard lock(memory_mutex_);
            if (memory_.empty() || t > memory_.back().t) memory_.push_back(MemorySample{t, *rss});
        }
    }

    void kill_group() {
        if (pid_ > 0 && !reaped_) ::kill(-pid_, SIGKILL);
    }

    /// Waits for the child; after a short grace period (or immediately when
    /// `force`) the whole process group is killed.
    void reap(bool force) {
        if (pid_ <= 0 || reaped_) return;
        if (force) kill_group();
        for (int i = 0; !force && i < 200; ++i) {
            int status = 0;
            const pid_t r = ::waitpid(pid_, &status, WNOHANG);
            if (r == pid_ || (r < 0 && errno != EINTR)) {
                reaped_ = true;
                ::kill(-pid_, SIGKILL);  // stray grandchildren
                return;
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(10));
        }
        kill_group();
        int status = 0;
        while (::waitpid(pid_, &status, 0) < 0 && errno == EINTR) {
        }
        reaped_ = true;
    }

    const RunClock& clock_;
    double deadline_;
    pid_t pid_ = -1;
    bool reaped_ = false;
    int out_fd_ = -1;
    bool eof_ = false;
    std::string buffer_;
    std::mutex memory_mutex_;
    MemorySamples memory_;
    std::jthread poller_;
};

class SyntheticSession final : public RunnerSession {
public:
    SyntheticSession(std::vector<ScriptedLine> script, MemorySamples memory, double timeout)
        : script_(std::move(script)), memory_(std::move(memory)), timeout_(timeout) {}

    std::optional<ReceivedLine> next_line() override {
        if (next_ >= script_.size()) return std::nullopt;
        const auto& s = script_[next_++];
        if (s.t > timeout_) throw Timeout("synthetic runner exceeded the time limit");
        return ReceivedLine{s.line, s.t};
    }

    MemorySamples finish() override { return memory_; }

private:
    std::vector<ScriptedLine> script_;
    MemorySamples memory_;
    double timeout_;
    std::size_t next_ = 0;
};

double inference_seconds(const RunConfig& config, const SyntheticRunnerOptions& o) {
    return o.inference_seconds +
           o.seconds_per_unit * static_cast<double>(config.input_size * config.batch_size);
}

}  // namespace

std::optional<std::uint64_t> process_tree_rss(pid_t root) {
    namespace fs = std::filesystem;
    std::multimap<pid_t, pid_t> children;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator("/proc", ec)) {
        const auto name = entry.path().filename().string();
        if (name.empty() || !std::all_of(name.begin(), name.end(), ::isdigit)) continue;
        std::ifstream stat(entry.path() / "stat");
        std::string content;
        if (!std::getline(stat, content)) continue;
        const auto close = content.rfind(')');
        if (close == std::string::npos || close + 4 >= content.size()) continue;
        // after ") " come the state char and the parent pid
        const pid_t ppid = static_cast<pid_t>(std::atol(content.c_str() + close + 4));
        children.emplace(ppid, static_cast<pid_t>(std::stol(name)));
    }

    const long page = ::sysconf(_SC_PAGESIZE);
    std::optional<std::uint64_t> total;
    std::vector<pid_t> stack{root};
    while (!stack.empty()) {
        const pid_t pid = stack.back();
        stack.pop_back();
        std::ifstream statm("/proc/" + std::to_string(pid) + "/statm");
        std::uint64_t size = 0;
        std::uint64_t resident = 0;
        if (statm >> size >> resident) {
            total = total.value_or(0) + resident * static_cast<std::uint64_t>(page);
        }
        auto [lo, hi] = children.equal_range(pid);
        for (auto it = lo; it != hi; ++it) stack.push_back(it->second);
    }
    return total;
}

ProcessLauncher::ProcessLauncher(std::vector<std::string> command, double memory_period)
    : command_(std::move(command)), memory_period_(memory_period) {
    if (command_.empty()) throw SpawnFailure("empty runner command");
    if (!(memory_period_ > 0.0)) throw SpawnFailure("memory polling period must be positive");
}

std::unique_ptr<RunnerSession> ProcessLauncher::launch(const RunConfig& config,
                                                       const RunClock& clock,
                                                       double timeout_seconds) {
    return std::make_unique<ProcessSession>(command_, config, clock, timeout_seconds,
                                            memory_period_);
}

std::string ProcessLauncher::describe() const {
    std::string out;
    for (const auto& arg : command_) {
        if (!out.empty()) out += ' ';
        out += arg;
    }
    return out;
}

std::vector<ScriptedLine> synthetic_script(const RunConfig& config,
                                           const SyntheticRunnerOptions& o) {
    std::vector<ScriptedLine> script;
    double t = 0.0;
    auto emit = [&](RunnerEvent e) {
        e.t_runner = t;
        script.push_back(ScriptedLine{t, encode_event(e)});
    };
    auto phase_event = [](EventKind kind, Phase phase) {
        RunnerEvent e;
        e.kind = kind;
        e.phase = phase;
        return e;
    };
    auto fatal = [&](Phase phase) {
        RunnerEvent e;
        e.kind = EventKind::Fatal;
        e.message = "synthetic failure during " + std::string(to_string(phase));
        emit(e);
        return script;
    };

    emit(RunnerEvent{});
    const std::pair<Phase, double> steps[] = {
        {Phase::Baseline, config.baseline_seconds},
        {Phase::DatasetLoad, o.dataset_load_seconds},
        {Phase::ModelLoad, o.model_load_seconds},
        {Phase::Inference, inference_seconds(config, o)},
    };
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const bool fails_here = o.fail_input_size && *o.fail_input_size == config.input_size;

    for (const auto& [phase, seconds] : steps) {
        if (seconds <= 0.0 && phase != Phase::Baseline && phase != Phase::Inference) continue;
        emit(phase_event(EventKind::PhaseStart, phase));
        if (o.fatal_in == phase || (fails_here && phase == Phase::Inference)) return fatal(phase);
        const double start = t;
        if (phase == Phase::Inference && o.emit_predictions) {
            for (std::size_t i = 0; i < o.inputs; ++i) {
                t = start + seconds * static_cast<double>(i + 1) / static_cast<double>(o.inputs + 1);
                const std::string truth = "c" + std::to_string(i % 4);
                const bool wrong = unit(rng) < o.error_rate;
                RunnerEvent e;
                e.kind = EventKind::Prediction;
                e.prediction = Prediction{std::to_string(i),
                                          wrong ? "c" + std::to_string((i + 1) % 4) : truth, truth};
                emit(e);
            }
        }
        t = start + seconds;
        emit(phase_event(EventKind::PhaseEnd, phase));
    }
    if (!o.omit_done) {
        RunnerEvent done;
        done.kind = EventKind::Done;
        emit(done);
    }
    return script;
}

MemorySamples synthetic_memory(const RunConfig& config, const SyntheticRunnerOptions& o) {
    const double model_start = config.baseline_seconds + o.dataset_load_seconds;
    const double inference_start = model_start + o.model_load_seconds;
    const double end = inference_start + inference_seconds(config, o);
    MemorySamples out;
    for (std::uint64_t k = 0;; ++k) {
        const double t = static_cast<double>(k) / 4.0;
        if (!(t < end)) break;
        double mb = o.idle_mb;
        if (t >= inference_start) {
            // ramps to the peak at mid-inference, then settles to the model footprint
            const double mid = 0.5 * (inference_start + end);
            const double w = t <= mid ? (t - inference_start) / (mid - inference_start)
                                      : (end - t) / (end - mid);
            mb = o.model_mb + (o.inference_mb - o.model_mb) * std::clamp(w, 0.0, 1.0);
        } else if (t >= model_start) {
            mb = o.model_mb;
        }
        out.push_back(MemorySample{t, static_cast<std::uint64_t>(mb * kBytesPerMB)});
    }
    return out;
}

std::unique_ptr<RunnerSession> SyntheticLauncher::launch(const RunConfig& config, const RunClock&,
                                                         double timeout_seconds) {
    return std::make_unique<SyntheticSession>(synthetic_script(config, options_),
                                              synthetic_memory(config, options_), timeout_seconds);
}

}  // namespace edgebench
