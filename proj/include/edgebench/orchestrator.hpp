#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "edgebench/metrics.hpp"
#include "edgebench/phase.hpp"
#include "edgebench/protocol.hpp"
#include "edgebench/runner.hpp"
#include "edgebench/simmeter.hpp"
#include "edgebench/trace.hpp"

namespace edgebench {

/// Where power samples come from: `sim:<profile>`, `replay:<path>` or `live:<path>`.
struct SimMeter {
    LoadProfile profile;
};
struct ReplayMeter {
    std::string path;
};
/// A growing file, FIFO or character device in the trace format. Samples are
/// stamped with the harness clock at receipt.
struct LiveMeter {
    std::string path;
};
using MeterSpec = std::variant<SimMeter, ReplayMeter, LiveMeter>;

/// Throws InvalidTrace on an unknown scheme or a bad profile.
MeterSpec parse_meter_spec(std::string_view spec);
std::string describe(const MeterSpec& meter);

/// Full evidence of one measured run.
struct RunRecord {
    RunConfig config;
    PhaseLog phases;
    PowerTrace raw_trace;
    BaselineEstimate baseline;
    MemorySamples memory;
    std::optional<PredictionSet> predictions;
    MetricSet metrics;
    std::vector<std::string> warnings;
    /// Campaign-relative start time of the run, seconds.
    double started_at = 0.0;
};

/// Metrics recomputed from the record's evidence (raw trace, phases, memory,
/// predictions). Deterministic: equal to the stored metrics of an intact record.
MetricSet recompute_metrics(const RunRecord& record);

/// Baseline estimated over the Baseline phase window of the raw trace.
BaselineEstimate recompute_baseline(const RunRecord& record);

/// Diagnostics derived from the evidence (negative fraction, meter gaps,
/// missing memory samples).
std::vector<std::string> derive_warnings(const RunRecord& record);

inline constexpr double kTimeoutFloorSeconds = 120.0;
inline constexpr double kTimeoutFactor = 10.0;
inline constexpr double kDefaultCoolingSeconds = 30.0;
inline constexpr std::int64_t kDefaultRepeats = 5;

struct RunOptions {
    double timeout_seconds = kTimeoutFloorSeconds;
};

/// Spawns the runner, ingests meter and event streams concurrently, validates
/// the phase log and assembles a RunRecord. Throws RunnerFailure,
/// ProtocolViolation, MeterFailure or Timeout.
RunRecord execute_run(const RunConfig& config, const MeterSpec& meter, RunnerLauncher& runner,
                      const RunOptions& options = {});

inline constexpr std::string_view kSweepableParameters[] = {"batch_size", "input_size",
                                                            "token_window"};

struct SweepSpec {
    RunConfig base_config;
    std::map<std::string, std::vector<std::int64_t>> grid;
    std::int64_t repeats = kDefaultRepeats;
    double cooling_seconds = kDefaultCoolingSeconds;

    /// Throws InvalidSweep.
    void validate() const;
};

/// Run configs in execution order: grid keys sorted, values in given order,
/// repeat_index innermost. Seeds are base seed + flat run index.
std::vector<RunConfig> expand_sweep(const SweepSpec& spec);

struct SweepFailure {
    RunConfig config;
    std::string error_kind;
    std::string message;
};

struct SweepOptions {
    bool abort_on_error = false;
    /// Overrides the adaptive timeout (10x longest same-config run, floor 120 s).
    std::optional<double> timeout_seconds;
    /// Called after every run with the record or the failure.
    std::function<void(std::size_t index, std::size_t total, const RunRecord*, const SweepFailure*)>
        on_run;
};

struct SweepResult {
    std::vector<RunRecord> records;
    std::vector<SweepFailure> failures;
    bool aborted = false;
};

/// Executes every cell serially, sleeping cooling_seconds between consecutive
/// runs (virtual time when the runner is simulated).
SweepResult execute_sweep(const SweepSpec& spec, const MeterSpec& meter, RunnerLauncher& runner,
                          const SweepOptions& options = {});

/// Identity of a sweep cell: the config without repeat_index and seed.
std::string cell_key(const RunConfig& config);

}  // namespace edgebench
