#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <stop_token>
#include <string>
#include <string_view>

#include "edgebench/phase.hpp"
#include "edgebench/trace.hpp"

namespace edgebench {

/// Baseline plus per-phase additive load, sampled at a fixed rate with
/// optional i.i.d. Gaussian noise.
struct LoadProfile {
    double baseline_w = 2.0;
    std::map<Phase, double> phase_deltas;
    double noise_std_w = 0.0;
    double rate_hz = kDefaultRateHz;
    /// Sample-time jitter as a fraction of the period, in [0, 0.5).
    double jitter = 0.0;
    std::uint64_t seed = 0;

    /// Throws InvalidTrace on a violated invariant.
    void validate() const;
    double delta(Phase phase) const;

    friend bool operator==(const LoadProfile&, const LoadProfile&) = default;
};

/// Parses `sim:baseline=2.0,inference=+3.0,noise=0.05,rate=16,seed=42`.
/// Keys: baseline, noise, rate, seed, jitter, and the per-phase deltas
/// dataset_load, model_load, inference. The `sim:` prefix is optional.
/// Throws InvalidTrace.
LoadProfile parse_profile(std::string_view spec);
std::string format_profile(const LoadProfile& profile);

/// Samples at k / rate_hz for every k with k / rate_hz < phases.end(). The
/// expected value of a sample is baseline_w plus the delta of its enclosing
/// phase; noise is seeded by `seed` and readings are clamped at 0 W.
PowerTrace synth_trace(const LoadProfile& profile, const PhaseLog& phases, std::uint64_t seed);

/// Pull-style meter stream.
class MeterStream {
public:
    virtual ~MeterStream() = default;
    /// Next sample, or nullopt at clean end of stream or when stop is
    /// requested. Parse errors propagate as exceptions.
    virtual std::optional<PowerSample> next(std::stop_token stop) = 0;
    virtual double nominal_rate_hz() const = 0;
    virtual std::string source_id() const = 0;
};

/// Streams a trace file, pacing samples by their file timestamps divided by
/// `speed`. An infinite speed streams as fast as possible.
std::unique_ptr<MeterStream> replay_trace(const std::string& path, double speed);

}  // namespace edgebench
