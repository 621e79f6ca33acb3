#include "edgebench/orchestrator.hpp"

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstring>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include <fcntl.h>
#include <poll.h>
#include <unistd.h>

#include "edgebench/error.hpp"
#include "edgebench/numfmt.hpp"

namespace edgebench {

namespace {

void interruptible_sleep(std::stop_token stop, double seconds) {
    std::mutex m;
    std::condition_variable_any cv;
    std::unique_lock lock(m);
    cv.wait_for(lock, stop, std::chrono::duration<double>(seconds), [] { return false; });
}

/// Tails a file/FIFO/device in the trace format; every sample is re-stamped
/// with the harness clock when its line arrives.
class LiveStream final : public MeterStream {
public:
    LiveStream(const std::string& path, const RunClock& clock) : path_(path), clock_(clock) {
        fd_ = ::open(path.c_str(), O_RDONLY | O_NONBLOCK | O_CLOEXEC);
        if (fd_ < 0) {
            throw MeterFailure("cannot open live meter '" + path + "': " + std::strerror(errno));
        }
        parser_.set_check_monotonic(false);
    }
    ~LiveStream() override {
        if (fd_ >= 0) ::close(fd_);
    }

    std::optional<PowerSample> next(std::stop_token stop) override {
        while (!stop.stop_requested()) {
            if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
                const std::string line = buffer_.substr(0, nl);
                buffer_.erase(0, nl + 1);
                if (auto sample = parser_.feed(line)) {
                    sample->t = clock_.now();
                    return sample;
                }
                continue;
            }
            pollfd pfd{fd_, POLLIN, 0};
            const int rc = ::poll(&pfd, 1, 50);
            if (rc < 0 && errno != EINTR) {
                throw MeterFailure(std::string("poll on live meter: ") + std::strerror(errno));
            }
            if (rc <= 0) continue;
            char chunk[4096];
            const ssize_t n = ::read(fd_, chunk, sizeof chunk);
            if (n > 0) {
                buffer_.append(chunk, static_cast<std::size_t>(n));
            } else {
                // EOF on a regular file or a FIFO without writer: wait for more data
                interruptible_sleep(stop, 0.05);
            }
        }
        return std::nullopt;
    }

    double nominal_rate_hz() const override { return parser_.rate_hz(); }
    std::string source_id() const override { return "live:" + path_; }

private:
    std::string path_;
    const RunClock& clock_;
    int fd_ = -1;
    std::string buffer_;
    TraceLineParser parser_;
};

/// Background ingestion of a meter stream into an append-only buffer.
class MeterReader {
public:
    explicit MeterReader(std::unique_ptr<MeterStream> stream) : stream_(std::move(stream)) {
        thread_ = std::jthread([this](std::stop_token stop) {
            try {
                while (auto s = stream_->next(stop)) {
                    if (samples_.empty() || s->t > samples_.back().t) samples_.push_back(*s);
                }
            } catch (...) {
                error_ = std::current_exception();
            }
        });
    }

    /// Joins the reader. `stop` interrupts endless (live) streams.
    PowerTrace finish(bool stop) {
        if (stop) thread_.request_stop();
        if (thread_.joinable()) thread_.join();
        if (error_) {
            try {
                std::rethrow_exception(error_);
            } catch (const Error& e) {
                throw MeterFailure(std::string("meter stream failed: ") + e.what());
            }
        }
        return PowerTrace(std::move(samples_), stream_->nominal_rate_hz(), stream_->source_id());
    }

private:
    std::unique_ptr<MeterStream> stream_;
    std::vector<PowerSample> samples_;
    std::exception_ptr error_;
    std::jthread thread_;
};

std::uint64_t noise_seed(std::uint64_t profile_seed, std::uint64_t run_seed) {
    return profile_seed * 6364136223846793005ULL + run_seed;
}

MemorySamples merge_memory(MemorySamples polled, const MemorySamples& reported) {
    polled.insert(polled.end(), reported.begin(), reported.end());
    std::stable_sort(polled.begin(), polled.end(),
                     [](const auto& a, const auto& b) { return a.t < b.t; });
    MemorySamples out;
    for (const auto& s : polled) {
        if (!out.empty() && s.t == out.back().t) {
            out.back().resident_bytes = std::max(out.back().resident_bytes, s.resident_bytes);
        } else {
            out.push_back(s);
        }
    }
    return out;
}

void set_parameter(RunConfig& config, const std::string& name, std::int64_t value) {
    if (name == "input_size") {
        config.input_size = value;
    } else if (name == "batch_size") {
        config.batch_size = value;
    } else if (name == "token_window") {
        config.token_window = value;
    } else {
        throw InvalidSweep("parameter '" + name + "' is not sweepable");
    }
}

}  // namespace

MeterSpec parse_meter_spec(std::string_view spec) {
    if (spec.starts_with("sim:")) return SimMeter{parse_profile(spec)};
    if (spec.starts_with("replay:") && spec.size() > 7) return ReplayMeter{std::string(spec.substr(7))};
    if (spec.starts_with("live:") && spec.size() > 5) return LiveMeter{std::string(spec.substr(5))};
    throw InvalidTrace("meter spec must be sim:<profile>, replay:<path> or live:<path>, got '" +
                       std::string(spec) + "'");
}

std::string describe(const MeterSpec& meter) {
    struct Visitor {
        std::string operator()(const SimMeter& m) const { return format_profile(m.profile); }
        std::string operator()(const ReplayMeter& m) const { return "replay:" + m.path; }
        std::string operator()(const LiveMeter& m) const { return "live:" + m.path; }
    };
    return std::visit(Visitor{}, meter);
}

BaselineEstimate recompute_baseline(const RunRecord& record) {
    const auto& window = record.phases.at(Phase::Baseline);
    return estimate_baseline(record.raw_trace, window.duration(), window.start);
}

MetricSet recompute_metrics(const RunRecord& record) {
    const BaselineEstimate baseline = recompute_baseline(record);
    const PowerTrace inference =
        slice_by_phase(subtract_baseline(record.raw_trace, baseline).trace, record.phases,
                       Phase::Inference);

    MetricSet m;
    m.inference_time_s = phase_duration(record.phases, Phase::Inference);
    m.summed_power_w = summed_power(inference);
    m.mean_power_w = mean_power(inference);
    m.energy_j = integrate_energy(inference);
    try {
        m.peak_memory_mb = peak_memory(record.memory, record.phases, Phase::Inference);
    } catch (const NoSamplesInPhase&) {
        m.peak_memory_mb = 0.0;
    }
    if (record.predictions && !record.predictions->empty()) {
        m.f1_percent = f1_score(*record.predictions, F1Averaging::Macro);
    }
    return m;
}

std::vector<std::string> derive_warnings(const RunRecord& record) {
    std::vector<std::string> warnings;
    const BaselineEstimate baseline = recompute_baseline(record);
    const auto inference = slice_by_phase(record.raw_trace, record.phases, Phase::Inference);
    const auto sub = subtract_baseline(inference, baseline);
    if (sub.negative_fraction > kNegativeFractionWarning) {
        warnings.push_back("negative_fraction " + format_fixed(sub.negative_fraction, 3) +
                           " of inference samples fall below the baseline (> " +
                           format_fixed(kNegativeFractionWarning, 2) + ")");
    }
    for (const auto& gap : find_gaps(record.raw_trace)) {
        warnings.push_back("meter gap of " + format_fixed(gap.gap, 3) + " s after t=" +
                           format_fixed(gap.at, 3) + " s (> 3x nominal period)");
    }
    const auto& window = record.phases.at(Phase::Inference);
    const bool has_memory = std::any_of(record.memory.begin(), record.memory.end(),
                                        [&](const auto& s) { return window.contains(s.t); });
    if (!has_memory) warnings.push_back("no memory samples during inference; peak memory reported as 0");
    return warnings;
}

RunRecord execute_run(const RunConfig& config, const MeterSpec& meter, RunnerLauncher& runner,
                      const RunOptions& options) {
    config.validate();
    RunClock clock;

    std::optional<MeterReader> reader;
    if (const auto* replay = std::get_if<ReplayMeter>(&meter)) {
        std::unique_ptr<MeterStream> stream;
        try {
            stream = replay_trace(replay->path, std::numeric_limits<double>::infinity());
        } catch (const Error& e) {
            throw MeterFailure(e.what());
        }
        reader.emplace(std::move(stream));
    } else if (const auto* live = std::get_if<LiveMeter>(&meter)) {
        reader.emplace(std::make_unique<LiveStream>(live->path, clock));
    }

    std::vector<RunnerEvent> events;
    std::vector<double> times;
    MemorySamples polled;
    {
        auto session = runner.launch(config, clock, options.timeout_seconds);
        try {
            while (auto line = session->next_line()) {
                if (line->line.empty()) continue;
                RunnerEvent event;
                try {
                    event = decode_event(line->line);
                } catch (const Error& e) {
                    throw ProtocolViolation("undecodable runner output '" + line->line + "': " + e.what());
                }
                events.push_back(std::move(event));
                times.push_back(line->t);
                const auto kind = events.back().kind;
                if (kind == EventKind::Done || kind == EventKind::Fatal) break;
            }
        } catch (...) {
            session->finish();
            if (reader) {
                try {
                    reader->finish(true);
                } catch (const Error&) {
                }
            }
            throw;
        }
        polled = session->finish();
    }

    ValidatedRun validated;
    try {
        validated = validate_events(events, times);
    } catch (...) {
        if (reader) {
            try {
                reader->finish(true);
            } catch (const Error&) {
            }
        }
        throw;
    }

    RunRecord record;
    record.config = config;
    record.phases = validated.phases;
    if (const auto* sim = std::get_if<SimMeter>(&meter)) {
        record.raw_trace = synth_trace(sim->profile, record.phases,
                                       noise_seed(sim->profile.seed, config.seed));
    } else {
        record.raw_trace = reader->finish(std::holds_alternative<LiveMeter>(meter));
    }

    const auto& inference = record.phases.at(Phase::Inference);
    const double tolerance = 3.0 * record.raw_trace.nominal_period();
    if (record.raw_trace.empty() ||
        record.raw_trace.samples().back().t < inference.end - tolerance) {
        const std::string last = record.raw_trace.empty()
                                     ? std::string("no samples")
                                     : "last sample at t=" +
                                           format_shortest(record.raw_trace.samples().back().t);
        throw MeterFailure("meter stream ended before inference end (" + last + ", inference ends at t=" +
                           format_shortest(inference.end) + ")");
    }

    record.memory = merge_memory(std::move(polled), validated.reported_memory);
    if (!validated.predictions.empty()) record.predictions = std::move(validated.predictions);

    try {
        record.baseline = recompute_baseline(record);
        record.metrics = recompute_metrics(record);
    } catch (const EmptyWindow& e) {
        throw MeterFailure(std::string("no meter samples in the baseline phase: ") + e.what());
    } catch (const InsufficientSamples& e) {
        throw MeterFailure(std::string("too few meter samples in the inference phase: ") + e.what());
    } catch (const EmptyTrace& e) {
        throw MeterFailure(std::string("no meter samples in the inference phase: ") + e.what());
    }
    record.warnings = derive_warnings(record);
    return record;
}

void SweepSpec::validate() const {
    base_config.validate();
    if (repeats < 1) throw InvalidSweep("repeats must be >= 1");
    if (!(cooling_seconds >= 0.0) || !std::isfinite(cooling_seconds)) {
        throw InvalidSweep("cooling_seconds must be >= 0");
    }
    for (const auto& [name, values] : grid) {
        if (std::find(std::begin(kSweepableParameters), std::end(kSweepableParameters), name) ==
            std::end(kSweepableParameters)) {
            throw InvalidSweep("parameter '" + name + "' is not sweepable");
        }
        if (values.empty()) throw InvalidSweep("grid values for '" + name + "' are empty");
        for (auto v : values) {
            if (v < 1) throw InvalidSweep("grid value for '" + name + "' must be >= 1");
        }
    }
}

std::vector<RunConfig> expand_sweep(const SweepSpec& spec) {
    spec.validate();
    std::vector<RunConfig> cells{spec.base_config};
    for (const auto& [name, values] : spec.grid) {
        std::vector<RunConfig> next;
        next.reserve(cells.size() * values.size());
        for (const auto& cell : cells) {
            for (auto v : values) {
                RunConfig c = cell;
                set_parameter(c, name, v);
                next.push_back(std::move(c));
            }
        }
        cells = std::move(next);
    }
    std::vector<RunConfig> runs;
    runs.reserve(cells.size() * static_cast<std::size_t>(spec.repeats));
    for (const auto& cell : cells) {
        for (std::int64_t r = 0; r < spec.repeats; ++r) {
            RunConfig c = cell;
            c.repeat_index = r;
            c.seed = spec.base_config.seed + runs.size();
            runs.push_back(std::move(c));
        }
    }
    return runs;
}

std::string cell_key(const RunConfig& c) {
    return c.model_id + '|' + c.device_id + '|' + c.framework_id + '|' +
           std::to_string(c.input_size) + '|' + std::to_string(c.batch_size) + '|' +
           (c.token_window ? std::to_string(*c.token_window) : std::string("-")) + '|' +
           c.dataset_ref + '|' + format_shortest(c.baseline_seconds);
}

SweepResult execute_sweep(const SweepSpec& spec, const MeterSpec& meter, RunnerLauncher& runner,
                          const SweepOptions& options) {
    const auto runs = expand_sweep(spec);
    const bool simulated = runner.virtual_time();
    const auto wall_origin = std::chrono::steady_clock::now();
    double virtual_now = 0.0;
    auto now = [&] {
        return simulated ? virtual_now
                         : std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_origin)
                               .count();
    };

    std::map<std::string, double> longest;
    SweepResult result;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        if (i > 0 && spec.cooling_seconds > 0.0) {
            if (simulated) {
                virtual_now += spec.cooling_seconds;
            } else {
                std::this_thread::sleep_for(std::chrono::duration<double>(spec.cooling_seconds));
            }
        }
        const auto& config = runs[i];
        const auto key = cell_key(config);
        RunOptions run_options;
        if (options.timeout_seconds) {
            run_options.timeout_seconds = *options.timeout_seconds;
        } else {
            const auto it = longest.find(key);
            run_options.timeout_seconds =
                std::max(kTimeoutFloorSeconds, it == longest.end() ? 0.0 : kTimeoutFactor * it->second);
        }

        const double started = now();
        try {
            RunRecord record = execute_run(config, meter, runner, run_options);
            record.started_at = started;
            const double duration = simulated ? record.phases.end() : now() - started;
            if (simulated) virtual_now += record.phases.end();
            longest[key] = std::max(longest[key], duration);
            result.records.push_back(std::move(record));
            if (options.on_run) options.on_run(i, runs.size(), &result.records.back(), nullptr);
        } catch (const Error& e) {
            result.failures.push_back(SweepFailure{config, e.kind(), e.what()});
            if (options.on_run) options.on_run(i, runs.size(), nullptr, &result.failures.back());
            if (options.abort_on_error) {
                result.aborted = true;
                break;
            }
        }
    }
    return result;
}

}  // namespace edgebench
