#include "edgebench/trace.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include "edgebench/error.hpp"
#include "edgebench/numfmt.hpp"

namespace edgebench {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        auto comma = line.find(',', pos);
        out.push_back(line.substr(pos, comma == std::string_view::npos ? line.npos : comma - pos));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

}  // namespace

std::string_view to_string(TraceFormat format) noexcept {
    return format == TraceFormat::Watts ? "watts" : "va";
}

PowerTrace::PowerTrace(std::vector<PowerSample> samples, double nominal_rate_hz,
                       std::string source_id)
    : samples_(std::move(samples)), nominal_rate_hz_(nominal_rate_hz),
      source_id_(std::move(source_id)) {
    if (!(nominal_rate_hz_ > 0.0) || !std::isfinite(nominal_rate_hz_)) {
        throw InvalidTrace("nominal_rate_hz must be positive");
    }
    for (std::size_t i = 0; i < samples_.size(); ++i) {
        if (!std::isfinite(samples_[i].t) || !std::isfinite(samples_[i].watts)) {
            throw InvalidTrace("non-finite sample at index " + std::to_string(i));
        }
        if (i > 0 && !(samples_[i].t > samples_[i - 1].t)) {
            throw InvalidTrace("timestamps not strictly increasing at index " + std::to_string(i));
        }
    }
}

std::optional<PowerSample> TraceLineParser::feed(std::string_view raw) {
    ++line_no_;
    auto line = trim(raw);
    if (line.empty()) return std::nullopt;
    if (line.front() == '#') {
        auto body = trim(line.substr(1));
        auto colon = body.find(':');
        if (colon == std::string_view::npos) return std::nullopt;
        auto key = trim(body.substr(0, colon));
        auto value = trim(body.substr(colon + 1));
        if (key == "format") {
            if (seen_data_) throw MalformedRow(line_no_, "format header after data rows");
            if (value == "watts") {
                format_ = TraceFormat::Watts;
            } else if (value == "va") {
                format_ = TraceFormat::VoltsAmps;
            } else {
                throw MalformedRow(line_no_, "unknown trace format '" + std::string(value) + "'");
            }
        } else if (key == "rate_hz") {
            auto rate = parse_double(value);
            if (!rate || *rate <= 0.0) throw MalformedRow(line_no_, "invalid rate_hz header");
            rate_hz_ = *rate;
        } else if (key == "source") {
            source_id_ = std::string(value);
        }
        return std::nullopt;
    }

    auto fields = split_commas(line);
    const std::size_t expected = format_ == TraceFormat::Watts ? 2 : 3;
    if (fields.size() != expected) {
        throw MalformedRow(line_no_, "expected " + std::to_string(expected) + " fields, got " +
                                         std::to_string(fields.size()));
    }
    std::vector<double> values;
    values.reserve(expected);
    for (auto f : fields) {
        auto v = parse_double(f);
        if (!v) throw MalformedRow(line_no_, "not a number: '" + std::string(trim(f)) + "'");
        values.push_back(*v);
    }

    PowerSample sample{values[0], 0.0};
    if (format_ == TraceFormat::Watts) {
        sample.watts = values[1];
    } else {
        sample.va = VoltsAmps{values[1], values[2]};
        sample.watts = values[1] * values[2];
    }
    if (sample.watts < 0.0) throw MalformedRow(line_no_, "negative power reading");
    if (check_monotonic_ && last_t_ && !(sample.t > *last_t_)) {
        throw NonMonotonicTime(line_no_, "timestamp " + format_shortest(sample.t) +
                                             " does not exceed " + format_shortest(*last_t_));
    }
    last_t_ = sample.t;
    seen_data_ = true;
    return sample;
}

PowerTrace parse_trace(std::istream& in, TraceFormat format) {
    TraceLineParser parser(format);
    std::vector<PowerSample> samples;
    std::string line;
    while (std::getline(in, line)) {
        if (auto s = parser.feed(line)) samples.push_back(*s);
    }
    return PowerTrace(std::move(samples), parser.rate_hz(), parser.source_id());
}

PowerTrace parse_trace(std::string_view text, TraceFormat format) {
    std::istringstream in{std::string(text)};
    return parse_trace(in, format);
}

PowerTrace load_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidTrace("cannot open trace file '" + path + "'");
    return parse_trace(in);
}

std::string serialize_trace(const PowerTrace& trace, TraceFormat format) {
    constexpr double kNominalVolts = 5.0;
    std::string out = "#format: " + std::string(to_string(format)) + "\n";
    out += "#rate_hz: " + format_shortest(trace.nominal_rate_hz()) + "\n";
    if (!trace.source_id().empty()) out += "#source: " + trace.source_id() + "\n";
    for (const auto& s : trace.samples()) {
        out += format_shortest(s.t);
        out += ',';
        if (format == TraceFormat::Watts) {
            out += format_shortest(s.watts);
        } else {
            VoltsAmps va = s.va.value_or(VoltsAmps{kNominalVolts, s.watts / kNominalVolts});
            out += format_shortest(va.volts);
            out += ',';
            out += format_shortest(va.amps);
        }
        out += '\n';
    }
    return out;
}

BaselineEstimate estimate_baseline(const PowerTrace& trace, double window_seconds,
                                   double window_start) {
    if (!(window_seconds > 0.0)) throw EmptyWindow("window_seconds must be positive");
    const double window_end = window_start + window_seconds;
    // shifted by the first sample so a constant window averages exactly
    std::optional<double> pivot;
    double shifted = 0.0;
    std::size_t n = 0;
    for (const auto& s : trace.samples()) {
        if (s.t >= window_start && s.t < window_end) {
            if (!pivot) pivot = s.watts;
            shifted += s.watts - *pivot;
            ++n;
        }
    }
    if (n == 0) {
        throw EmptyWindow("no samples in [" + format_shortest(window_start) + ", " +
                          format_shortest(window_end) + ")");
    }
    const double mean = *pivot + shifted / static_cast<double>(n);
    double ss = 0.0;
    for (const auto& s : trace.samples()) {
        if (s.t >= window_start && s.t < window_end) ss += (s.watts - mean) * (s.watts - mean);
    }
    const double dispersion = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    return BaselineEstimate{mean, window_seconds, n, dispersion};
}

SubtractedTrace subtract_baseline(const PowerTrace& trace, const BaselineEstimate& baseline) {
    std::vector<PowerSample> out;
    out.reserve(trace.size());
    std::size_t negative = 0;
    for (const auto& s : trace.samples()) {
        const double w = s.watts - baseline.watts;
        if (w < 0.0) ++negative;
        out.push_back(PowerSample{s.t, w});
    }
    const double frac =
        trace.empty() ? 0.0 : static_cast<double>(negative) / static_cast<double>(trace.size());
    return SubtractedTrace{PowerTrace(std::move(out), trace.nominal_rate_hz(), trace.source_id()),
                           frac};
}

PowerTrace slice_by_interval(const PowerTrace& trace, double start, double end) {
    std::vector<PowerSample> out;
    for (const auto& s : trace.samples()) {
        if (s.t >= start && s.t < end) out.push_back(s);
    }
    return PowerTrace(std::move(out), trace.nominal_rate_hz(), trace.source_id());
}

PowerTrace slice_by_phase(const PowerTrace& trace, const PhaseLog& phases, Phase phase) {
    const auto& interval = phases.at(phase);
    return slice_by_interval(trace, interval.start, interval.end);
}

double integrate_energy(const PowerTrace& trace) {
    if (trace.size() < 2) {
        throw InsufficientSamples("energy integration needs >= 2 samples, got " +
                                  std::to_string(trace.size()));
    }
    auto s = trace.samples();
    double joules = 0.0;
    for (std::size_t i = 1; i < s.size(); ++i) {
        joules += 0.5 * (s[i].watts + s[i - 1].watts) * (s[i].t - s[i - 1].t);
    }
    return joules;
}

double summed_power(const PowerTrace& trace) noexcept {
    double sum = 0.0;
    for (const auto& s : trace.samples()) sum += s.watts;
    return sum;
}

double mean_power(const PowerTrace& trace) {
    if (trace.empty()) throw EmptyTrace("mean power of an empty trace");
    const double pivot = trace.samples().front().watts;
    double shifted = 0.0;
    for (const auto& s : trace.samples()) shifted += s.watts - pivot;
    return pivot + shifted / static_cast<double>(trace.size());
}

std::vector<MeterGap> find_gaps(const PowerTrace& trace, double factor) {
    std::vector<MeterGap> gaps;
    auto s = trace.samples();
    const double limit = factor * trace.nominal_period();
    for (std::size_t i = 1; i < s.size(); ++i) {
        const double gap = s[i].t - s[i - 1].t;
        if (gap > limit) gaps.push_back(MeterGap{s[i - 1].t, gap});
    }
    return gaps;
}

}  // namespace edgebench
