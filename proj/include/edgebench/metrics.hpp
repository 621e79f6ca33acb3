#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "edgebench/phase.hpp"

namespace edgebench {

struct Prediction {
    std::string input_id;
    std::string predicted;
    std::string truth;
    friend bool operator==(const Prediction&, const Prediction&) = default;
};

using PredictionSet = std::vector<Prediction>;

enum class F1Averaging { Macro, Micro };

/// F1 as a percentage. Macro averages per-class F1 over the union of true and
/// predicted labels; per-class F1 is 0 when precision + recall is 0.
/// Throws EmptyPredictions.
double f1_score(std::span<const Prediction> preds, F1Averaging averaging = F1Averaging::Macro);

struct MemorySample {
    double t;
    std::uint64_t resident_bytes;
    friend bool operator==(const MemorySample&, const MemorySample&) = default;
};

using MemorySamples = std::vector<MemorySample>;

inline constexpr double kBytesPerMB = 1024.0 * 1024.0;

/// Seconds between start and end of `phase`. Throws PhaseAbsent.
double phase_duration(const PhaseLog& phases, Phase phase);

/// Peak resident set in MB (2^20 bytes) over [start, end) of `phase`.
/// Throws PhaseAbsent or NoSamplesInPhase.
double peak_memory(std::span<const MemorySample> samples, const PhaseLog& phases, Phase phase);

struct MetricSet {
    std::optional<double> f1_percent;
    double inference_time_s = 0.0;
    double summed_power_w = 0.0;
    double mean_power_w = 0.0;
    double energy_j = 0.0;
    double peak_memory_mb = 0.0;

    friend bool operator==(const MetricSet&, const MetricSet&) = default;
};

/// Student-t quantile. Throws InvalidDf (df < 1) or InvalidP (p outside (0, 1)).
double t_quantile(std::int64_t df, double p);

struct AggregateMetric {
    double mean = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::size_t n = 0;
    double std_dev = 0.0;

    double half_width() const noexcept { return ci_high - mean; }
    friend bool operator==(const AggregateMetric&, const AggregateMetric&) = default;
};

/// Mean with a Student-t confidence interval (n-1 dof). A single value gives
/// a degenerate interval. Throws EmptyInput.
AggregateMetric aggregate(std::span<const double> values, double confidence = 0.95);

}  // namespace edgebench
