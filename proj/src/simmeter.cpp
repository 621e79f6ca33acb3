#include "edgebench/simmeter.hpp"

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <mutex>
#include <random>
#include <vector>

#include "edgebench/error.hpp"
#include "edgebench/numfmt.hpp"

namespace edgebench {

void LoadProfile::validate() const {
    if (!(baseline_w >= 0.0) || !std::isfinite(baseline_w)) {
        throw InvalidTrace("baseline_w must be >= 0");
    }
    if (!(rate_hz > 0.0) || !std::isfinite(rate_hz)) throw InvalidTrace("rate_hz must be > 0");
    if (!(noise_std_w >= 0.0) || !std::isfinite(noise_std_w)) {
        throw InvalidTrace("noise_std_w must be >= 0");
    }
    if (!(jitter >= 0.0 && jitter < 0.5)) throw InvalidTrace("jitter must lie in [0, 0.5)");
}

double LoadProfile::delta(Phase phase) const {
    auto it = phase_deltas.find(phase);
    return it == phase_deltas.end() ? 0.0 : it->second;
}

LoadProfile parse_profile(std::string_view spec) {
    if (spec.starts_with("sim:")) spec.remove_prefix(4);
    LoadProfile profile;
    while (!spec.empty()) {
        auto comma = spec.find(',');
        auto item = spec.substr(0, comma);
        spec = comma == std::string_view::npos ? std::string_view{} : spec.substr(comma + 1);
        if (item.empty()) continue;

        auto eq = item.find('=');
        if (eq == std::string_view::npos) {
            throw InvalidTrace("profile item '" + std::string(item) + "' lacks '='");
        }
        auto key = item.substr(0, eq);
        auto text = item.substr(eq + 1);
        auto value = parse_double(text);
        if (!value) throw InvalidTrace("profile value for '" + std::string(key) + "' is not a number");

        if (key == "baseline") {
            profile.baseline_w = *value;
        } else if (key == "noise") {
            profile.noise_std_w = *value;
        } else if (key == "rate") {
            profile.rate_hz = *value;
        } else if (key == "jitter") {
            profile.jitter = *value;
        } else if (key == "seed") {
            if (*value < 0 || std::floor(*value) != *value) {
                throw InvalidTrace("seed must be a non-negative integer");
            }
            profile.seed = static_cast<std::uint64_t>(*value);
        } else if (auto phase = parse_phase(key); phase && *phase != Phase::Baseline) {
            profile.phase_deltas[*phase] = *value;
        } else {
            throw InvalidTrace("unknown profile key '" + std::string(key) + "'");
        }
    }
    profile.validate();
    return profile;
}

std::string format_profile(const LoadProfile& p) {
    std::string out = "sim:baseline=" + format_shortest(p.baseline_w);
    for (const auto& [phase, delta] : p.phase_deltas) {
        out += "," + std::string(to_string(phase)) + "=" + (delta >= 0 ? "+" : "") +
               format_shortest(delta);
    }
    out += ",noise=" + format_shortest(p.noise_std_w);
    out += ",rate=" + format_shortest(p.rate_hz);
    if (p.jitter > 0.0) out += ",jitter=" + format_shortest(p.jitter);
    out += ",seed=" + std::to_string(p.seed);
    return out;
}

PowerTrace synth_trace(const LoadProfile& profile, const PhaseLog& phases, std::uint64_t seed) {
    profile.validate();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::uniform_real_distribution<double> jitter(-1.0, 1.0);

    const double period = 1.0 / profile.rate_hz;
    const double end = phases.end();
    std::vector<PowerSample> samples;
    for (std::uint64_t k = 0;; ++k) {
        double t = static_cast<double>(k) / profile.rate_hz;
        if (!(t < end)) break;
        if (profile.jitter > 0.0 && k > 0) t += profile.jitter * period * jitter(rng);
        double watts = profile.baseline_w;
        for (const auto& interval : phases.entries()) {
            if (interval.contains(t)) {
                watts += profile.delta(interval.phase);
                break;
            }
        }
        if (profile.noise_std_w > 0.0) watts += profile.noise_std_w * noise(rng);
        samples.push_back(PowerSample{t, std::max(watts, 0.0)});
    }
    return PowerTrace(std::move(samples), profile.rate_hz, format_profile(profile));
}

namespace {

class ReplayStream final : public MeterStream {
public:
    ReplayStream(const std::string& path, double speed) : in_(path), speed_(speed), path_(path) {
        if (!in_) throw InvalidTrace("cannot open trace file '" + path + "'");
        if (!(speed > 0.0)) throw InvalidTrace("replay speed must be positive");
    }

    std::optional<PowerSample> next(std::stop_token stop) override {
        std::string line;
        while (!stop.stop_requested() && std::getline(in_, line)) {
            auto sample = parser_.feed(line);
            if (!sample) continue;
            if (std::isfinite(speed_)) pace(sample->t, stop);
            if (stop.stop_requested()) return std::nullopt;
            return sample;
        }
        return std::nullopt;
    }

    double nominal_rate_hz() const override { return parser_.rate_hz(); }
    std::string source_id() const override {
        return parser_.source_id().empty() ? "replay:" + path_ : parser_.source_id();
    }

private:
    void pace(double t, std::stop_token stop) {
        using clock = std::chrono::steady_clock;
        if (!origin_) origin_ = std::pair{clock::now(), t};
        const auto due = origin_->first + std::chrono::duration_cast<clock::duration>(
                                              std::chrono::duration<double>((t - origin_->second) / speed_));
        std::mutex m;
        std::condition_variable_any cv;
        std::unique_lock lock(m);
        cv.wait_until(lock, stop, due, [] { return false; });
    }

    std::ifstream in_;
    double speed_;
    std::string path_;
    TraceLineParser parser_;
    std::optional<std::pair<std::chrono::steady_clock::time_point, double>> origin_;
};

}  // namespace

std::unique_ptr<MeterStream> replay_trace(const std::string& path, double speed) {
    return std::make_unique<ReplayStream>(path, speed);
}

}  // namespace edgebench
