#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <sys/types.h>
#include <vector>

#include "edgebench/metrics.hpp"
#include "edgebench/phase.hpp"
#include "edgebench/protocol.hpp"

namespace edgebench {

/// Harness clock of one run: seconds since the run started.
class RunClock {
public:
    RunClock() : origin_(std::chrono::steady_clock::now()) {}
    double now() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - origin_).count();
    }

private:
    std::chrono::steady_clock::time_point origin_;
};

/// One line of runner output and its harness receipt time.
struct ReceivedLine {
    std::string line;
    double t;
};

/// A live connection to an inference runner for a single run.
class RunnerSession {
public:
    virtual ~RunnerSession() = default;
    /// Blocks for the next stdout line; nullopt at end of stream.
    /// Throws Timeout once the wall limit is exceeded.
    virtual std::optional<ReceivedLine> next_line() = 0;
    /// Stops the runner (if still alive) and returns the memory samples taken
    /// during the session.
    virtual MemorySamples finish() = 0;
};

class RunnerLauncher {
public:
    virtual ~RunnerLauncher() = default;
    virtual std::unique_ptr<RunnerSession> launch(const RunConfig& config, const RunClock& clock,
                                                  double timeout_seconds) = 0;
    /// True when receipt times come from a simulated clock rather than wall time.
    virtual bool virtual_time() const noexcept { return false; }
    virtual std::string describe() const = 0;
};

/// Spawns `command` as a child process, writes the encoded config as one line
/// to its stdin and reads events from its stdout. Polls the resident set of
/// the child's process tree every `memory_period` seconds.
class ProcessLauncher final : public RunnerLauncher {
public:
    explicit ProcessLauncher(std::vector<std::string> command, double memory_period = 0.25);

    std::unique_ptr<RunnerSession> launch(const RunConfig& config, const RunClock& clock,
                                          double timeout_seconds) override;
    std::string describe() const override;

    const std::vector<std::string>& command() const noexcept { return command_; }

private:
    std::vector<std::string> command_;
    double memory_period_;
};

/// Resident set of `pid` and all its descendants, in bytes (Linux /proc).
std::optional<std::uint64_t> process_tree_rss(pid_t pid);

/// Behaviour of the built-in synthetic runner stub.
struct SyntheticRunnerOptions {
    double dataset_load_seconds = 0.5;
    double model_load_seconds = 0.5;
    double inference_seconds = 5.0;
    /// Extra inference seconds per (input_size x batch_size) unit.
    double seconds_per_unit = 0.0;
    std::size_t inputs = 10;
    double error_rate = 0.0;
    bool emit_predictions = true;
    std::optional<Phase> fatal_in;
    /// Fail (fatal in inference) for this input_size only.
    std::optional<std::int64_t> fail_input_size;
    bool omit_done = false;
    double idle_mb = 48.0;
    double model_mb = 256.0;
    double inference_mb = 332.0;

    friend bool operator==(const SyntheticRunnerOptions&, const SyntheticRunnerOptions&) = default;
};

struct ScriptedLine {
    double t;  ///< seconds since hello
    std::string line;
};

/// Deterministic event script of the stub for `config`. Predictions carry
/// labels `c0..c3`; each is wrong with probability error_rate, drawn from
/// config.seed.
std::vector<ScriptedLine> synthetic_script(const RunConfig& config,
                                           const SyntheticRunnerOptions& options);

/// Memory profile of the stub sampled at 4 Hz over [0, end).
MemorySamples synthetic_memory(const RunConfig& config, const SyntheticRunnerOptions& options);

/// In-process runner stub on a virtual clock: receipt times are the scripted
/// times, so runs are exactly reproducible.
class SyntheticLauncher final : public RunnerLauncher {
public:
    explicit SyntheticLauncher(SyntheticRunnerOptions options = {}) : options_(options) {}

    std::unique_ptr<RunnerSession> launch(const RunConfig& config, const RunClock& clock,
                                          double timeout_seconds) override;
    bool virtual_time() const noexcept override { return true; }
    std::string describe() const override { return "builtin:synthetic"; }

    const SyntheticRunnerOptions& options() const noexcept { return options_; }

private:
    SyntheticRunnerOptions options_;
};

}  // namespace edgebench
