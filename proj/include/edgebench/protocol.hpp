#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "edgebench/metrics.hpp"
#include "edgebench/phase.hpp"
#include "edgebench/trace.hpp"

namespace edgebench {

/// Configuration of one measured run, sent to the runner as one JSON line.
struct RunConfig {
    std::string model_id;
    std::string device_id;
    std::string framework_id;
    std::int64_t input_size = 1;
    std::int64_t batch_size = 1;
    std::optional<std::int64_t> token_window;
    std::string dataset_ref;
    std::int64_t repeat_index = 0;
    std::uint64_t seed = 0;
    double baseline_seconds = kDefaultBaselineWindowSeconds;

    /// Throws InvalidConfig on a violated invariant.
    void validate() const;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Single line (no trailing newline). Validates first.
std::string encode_config(const RunConfig& config);
/// Throws MalformedEvent on bad JSON or missing fields, InvalidConfig on bad values.
RunConfig decode_config(std::string_view line);

enum class EventKind { Hello, PhaseStart, PhaseEnd, Prediction, MemoryReport, Done, Fatal };

std::string_view to_string(EventKind kind) noexcept;

struct RunnerEvent {
    EventKind kind = EventKind::Hello;
    std::optional<Phase> phase;         ///< phase_start / phase_end
    std::optional<double> t_runner;     ///< diagnostics only
    std::optional<Prediction> prediction;
    std::optional<std::uint64_t> resident_bytes;  ///< memory_report
    std::string message;                ///< fatal

    friend bool operator==(const RunnerEvent&, const RunnerEvent&) = default;
};

std::string encode_event(const RunnerEvent& event);

/// Parses one stdout line of the runner. Unknown fields are ignored; an
/// unknown `kind` raises UnknownKind, anything else malformed MalformedEvent.
RunnerEvent decode_event(std::string_view line);

struct ValidatedRun {
    PhaseLog phases;
    PredictionSet predictions;
    MemorySamples reported_memory;
};

/// Checks the event stream against the grammar
///   hello (baseline) (dataset_load)? (model_load)? (inference) done
/// where each parenthesized phase is a start/end pair. Phase times come from
/// `harness_times` (receipt time of each event). Predictions must fall inside
/// the inference pair. Throws RunnerFailure when terminated by fatal and
/// ProtocolViolation otherwise.
ValidatedRun validate_events(std::span<const RunnerEvent> events,
                             std::span<const double> harness_times);

/// PhaseLog part of validate_events.
PhaseLog validate_sequence(std::span<const RunnerEvent> events,
                           std::span<const double> harness_times);

}  // namespace edgebench
