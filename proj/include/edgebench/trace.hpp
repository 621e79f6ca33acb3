#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "edgebench/phase.hpp"

namespace edgebench {

inline constexpr double kDefaultRateHz = 16.0;
inline constexpr double kDefaultBaselineWindowSeconds = 3.0;
/// Fraction of negative post-subtraction samples above which a run is flagged.
inline constexpr double kNegativeFractionWarning = 0.10;

/// Electrical reading a sample was derived from (volts-amps meters only).
struct VoltsAmps {
    double volts;
    double amps;
    friend bool operator==(const VoltsAmps&, const VoltsAmps&) = default;
};

struct PowerSample {
    double t;      ///< seconds, relative to run start
    double watts;  ///< non-negative at ingestion; may go negative after baseline subtraction
    std::optional<VoltsAmps> va{};

    friend bool operator==(const PowerSample&, const PowerSample&) = default;
};

/// Ordered power samples from one meter source. Timestamps are strictly
/// increasing; the constructor enforces it.
class PowerTrace {
public:
    PowerTrace() = default;
    PowerTrace(std::vector<PowerSample> samples, double nominal_rate_hz = kDefaultRateHz,
               std::string source_id = {});

    std::span<const PowerSample> samples() const noexcept { return samples_; }
    std::size_t size() const noexcept { return samples_.size(); }
    bool empty() const noexcept { return samples_.empty(); }
    double nominal_rate_hz() const noexcept { return nominal_rate_hz_; }
    double nominal_period() const noexcept { return 1.0 / nominal_rate_hz_; }
    const std::string& source_id() const noexcept { return source_id_; }

    friend bool operator==(const PowerTrace&, const PowerTrace&) = default;

private:
    std::vector<PowerSample> samples_;
    double nominal_rate_hz_ = kDefaultRateHz;
    std::string source_id_;
};

enum class TraceFormat { Watts, VoltsAmps };

std::string_view to_string(TraceFormat format) noexcept;

/// Parses a trace file body. A `#format: watts|va` header selects the row
/// layout (default watts) and overrides `format`; `#rate_hz:` and `#source:`
/// headers set the trace metadata. Other `#` lines are comments.
PowerTrace parse_trace(std::istream& in, TraceFormat format = TraceFormat::Watts);
PowerTrace parse_trace(std::string_view text, TraceFormat format = TraceFormat::Watts);
PowerTrace load_trace(const std::string& path);

/// Inverse of parse_trace. Numbers are written in shortest round-trip form.
std::string serialize_trace(const PowerTrace& trace, TraceFormat format = TraceFormat::Watts);

/// Incremental row parser shared by file parsing and streaming meters.
class TraceLineParser {
public:
    explicit TraceLineParser(TraceFormat format = TraceFormat::Watts) : format_(format) {}

    /// Feeds one line. Returns a sample for data rows, nullopt for blank and
    /// comment/header lines. Throws MalformedRow / NonMonotonicTime.
    std::optional<PowerSample> feed(std::string_view line);

    TraceFormat format() const noexcept { return format_; }
    double rate_hz() const noexcept { return rate_hz_; }
    const std::string& source_id() const noexcept { return source_id_; }
    std::size_t line_no() const noexcept { return line_no_; }

    /// Skip the monotonicity check (used when samples are re-stamped).
    void set_check_monotonic(bool check) noexcept { check_monotonic_ = check; }

private:
    TraceFormat format_;
    double rate_hz_ = kDefaultRateHz;
    std::string source_id_;
    std::size_t line_no_ = 0;
    bool seen_data_ = false;
    bool check_monotonic_ = true;
    std::optional<double> last_t_;
};

struct BaselineEstimate {
    double watts = 0.0;
    double window_seconds = kDefaultBaselineWindowSeconds;
    std::size_t sample_count = 0;
    double dispersion = 0.0;  ///< sample standard deviation (n-1), W

    friend bool operator==(const BaselineEstimate&, const BaselineEstimate&) = default;
};

/// Mean and dispersion of the samples with t in [window_start, window_start + window_seconds).
/// Throws EmptyWindow if none fall inside.
BaselineEstimate estimate_baseline(const PowerTrace& trace,
                                   double window_seconds = kDefaultBaselineWindowSeconds,
                                   double window_start = 0.0);

struct SubtractedTrace {
    PowerTrace trace;
    double negative_fraction = 0.0;
};

/// Subtracts the baseline from every sample. Negative results are kept.
SubtractedTrace subtract_baseline(const PowerTrace& trace, const BaselineEstimate& baseline);

/// Samples with t in [start, end) of `phase`. Throws PhaseAbsent.
PowerTrace slice_by_phase(const PowerTrace& trace, const PhaseLog& phases, Phase phase);
PowerTrace slice_by_interval(const PowerTrace& trace, double start, double end);

/// Trapezoidal energy in joules. Throws InsufficientSamples below two samples.
double integrate_energy(const PowerTrace& trace);

/// Plain sum of the sample values (W-sum, not energy). Empty trace gives 0.
double summed_power(const PowerTrace& trace) noexcept;

/// Throws EmptyTrace.
double mean_power(const PowerTrace& trace);

/// Inter-sample gaps longer than `factor` nominal periods.
struct MeterGap {
    double at;
    double gap;
};
std::vector<MeterGap> find_gaps(const PowerTrace& trace, double factor = 3.0);

}  // namespace edgebench
