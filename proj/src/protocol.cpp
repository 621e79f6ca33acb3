#include "edgebench/protocol.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "edgebench/error.hpp"

namespace edgebench {

using nlohmann::json;

namespace {

constexpr std::string_view kKindNames[] = {"hello",         "phase_start", "phase_end", "prediction",
                                           "memory_report", "done",        "fatal"};

json parse_line(std::string_view line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw MalformedEvent(std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw MalformedEvent("line is not a JSON object");
    return j;
}

std::string require_string(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) {
        throw MalformedEvent(std::string("missing or non-string field '") + key + "'");
    }
    return it->get<std::string>();
}

std::int64_t require_int(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_number_integer()) {
        throw MalformedEvent(std::string("missing or non-integer field '") + key + "'");
    }
    return it->get<std::int64_t>();
}

std::string label_of(const json& v, const char* key) {
    // Labels are opaque tokens; numeric labels are accepted and stringified.
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
    throw MalformedEvent(std::string("field '") + key + "' must be a string or integer");
}

}  // namespace

void RunConfig::validate() const {
    if (input_size < 1) throw InvalidConfig("input_size must be >= 1");
    if (batch_size < 1) throw InvalidConfig("batch_size must be >= 1");
    if (token_window && *token_window < 1) throw InvalidConfig("token_window must be >= 1");
    if (repeat_index < 0) throw InvalidConfig("repeat_index must be >= 0");
    if (!(baseline_seconds > 0.0) || !std::isfinite(baseline_seconds)) {
        throw InvalidConfig("baseline_seconds must be positive");
    }
}

std::string encode_config(const RunConfig& c) {
    c.validate();
    json j = {{"model_id", c.model_id},
              {"device_id", c.device_id},
              {"framework_id", c.framework_id},
              {"input_size", c.input_size},
              {"batch_size", c.batch_size},
              {"dataset_ref", c.dataset_ref},
              {"repeat_index", c.repeat_index},
              {"seed", c.seed},
              {"baseline_seconds", c.baseline_seconds}};
    if (c.token_window) j["token_window"] = *c.token_window;
    return j.dump();
}

RunConfig decode_config(std::string_view line) {
    const json j = parse_line(line);
    RunConfig c;
    c.model_id = require_string(j, "model_id");
    c.device_id = require_string(j, "device_id");
    c.framework_id = require_string(j, "framework_id");
    c.input_size = require_int(j, "input_size");
    c.batch_size = require_int(j, "batch_size");
    c.dataset_ref = require_string(j, "dataset_ref");
    c.repeat_index = require_int(j, "repeat_index");
    if (auto it = j.find("seed"); it != j.end()) {
        if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<std::int64_t>() >= 0)) {
            throw MalformedEvent("field 'seed' must be an unsigned integer");
        }
        c.seed = it->get<std::uint64_t>();
    }
    if (auto it = j.find("token_window"); it != j.end() && !it->is_null()) {
        if (!it->is_number_integer()) throw MalformedEvent("field 'token_window' must be an integer");
        c.token_window = it->get<std::int64_t>();
    }
    if (auto it = j.find("baseline_seconds"); it != j.end()) {
        if (!it->is_number()) throw MalformedEvent("field 'baseline_seconds' must be a number");
        c.baseline_seconds = it->get<double>();
    }
    c.validate();
    return c;
}

std::string_view to_string(EventKind kind) noexcept {
    return kKindNames[static_cast<int>(kind)];
}

std::string encode_event(const RunnerEvent& e) {
    json j = {{"kind", to_string(e.kind)}};
    if (e.phase) j["phase"] = to_string(*e.phase);
    if (e.t_runner) j["t_runner"] = *e.t_runner;
    if (e.prediction) {
        j["input_id"] = e.prediction->input_id;
        j["predicted"] = e.prediction->predicted;
        j["truth"] = e.prediction->truth;
    }
    if (e.resident_bytes) j["resident_bytes"] = *e.resident_bytes;
    if (e.kind == EventKind::Fatal) j["message"] = e.message;
    return j.dump();
}

RunnerEvent decode_event(std::string_view line) {
    const json j = parse_line(line);
    const std::string kind = require_string(j, "kind");

    RunnerEvent e;
    bool known = false;
    for (int i = 0; i < static_cast<int>(std::size(kKindNames)); ++i) {
        if (kKindNames[i] == kind) {
            e.kind = static_cast<EventKind>(i);
            known = true;
        }
    }
    if (!known) throw UnknownKind(kind);

    if (auto it = j.find("t_runner"); it != j.end() && !it->is_null()) {
        if (!it->is_number()) throw MalformedEvent("field 't_runner' must be a number");
        e.t_runner = it->get<double>();
    }

    switch (e.kind) {
        case EventKind::PhaseStart:
        case EventKind::PhaseEnd: {
            const std::string name = require_string(j, "phase");
            e.phase = parse_phase(name);
            if (!e.phase) throw MalformedEvent("unknown phase '" + name + "'");
            break;
        }
        case EventKind::Prediction: {
            Prediction p;
            auto id = j.find("input_id");
            if (id == j.end()) throw MalformedEvent("prediction without 'input_id'");
            p.input_id = label_of(*id, "input_id");
            auto pred = j.find("predicted");
            auto truth = j.find("truth");
            if (pred == j.end() || truth == j.end()) {
                throw MalformedEvent("prediction requires 'predicted' and 'truth'");
            }
            p.predicted = label_of(*pred, "predicted");
            p.truth = label_of(*truth, "truth");
            e.prediction = std::move(p);
            break;
        }
        case EventKind::MemoryReport: {
            auto it = j.find("resident_bytes");
            if (it == j.end() || !it->is_number_integer() || it->get<std::int64_t>() < 0) {
                throw MalformedEvent("memory_report requires non-negative integer 'resident_bytes'");
            }
            e.resident_bytes = it->get<std::uint64_t>();
            break;
        }
        case EventKind::Fatal:
            if (auto it = j.find("message"); it != j.end() && it->is_string()) {
                e.message = it->get<std::string>();
            }
            break;
        default:
            break;
    }
    return e;
}

ValidatedRun validate_events(std::span<const RunnerEvent> events,
                             std::span<const double> harness_times) {
    if (events.size() != harness_times.size()) {
        throw ProtocolViolation("event count and receipt time count differ");
    }
    if (events.empty()) throw ProtocolViolation("empty event stream");

    // A fatal terminator reports the runner's own failure, whatever came before.
    if (events.back().kind == EventKind::Fatal) throw RunnerFailure(events.back().message);
    if (events.back().kind != EventKind::Done) {
        throw ProtocolViolation("stream not terminated by done or fatal");
    }
    if (events.front().kind != EventKind::Hello) throw ProtocolViolation("first event must be hello");

    ValidatedRun out;
    std::vector<PhaseInterval> intervals;
    bool is_open = false;
    Phase open = Phase::Baseline;
    double open_start = 0.0;
    int next_min = 0;  // lowest phase index still allowed to start

    for (std::size_t i = 1; i + 1 < events.size(); ++i) {
        const auto& e = events[i];
        const double t = harness_times[i];
        if (t < harness_times[i - 1]) {
            throw ProtocolViolation("receipt times decrease at event " + std::to_string(i));
        }
        switch (e.kind) {
            case EventKind::Hello:
                throw ProtocolViolation("duplicate hello at event " + std::to_string(i));
            case EventKind::Done:
            case EventKind::Fatal:
                throw ProtocolViolation(std::string(to_string(e.kind)) +
                                        " before end of stream at event " + std::to_string(i));
            case EventKind::PhaseStart: {
                const Phase p = *e.phase;
                if (is_open) {
                    throw ProtocolViolation("phase " + std::string(to_string(p)) +
                                            " started while " + std::string(to_string(open)) +
                                            " is open");
                }
                if (static_cast<int>(p) < next_min) {
                    throw ProtocolViolation("phase " + std::string(to_string(p)) +
                                            " out of canonical order or duplicated");
                }
                if (intervals.empty() && p != Phase::Baseline) {
                    throw ProtocolViolation("first phase must be baseline, got " +
                                            std::string(to_string(p)));
                }
                is_open = true;
                open = p;
                open_start = t;
                break;
            }
            case EventKind::PhaseEnd: {
                const Phase p = *e.phase;
                if (!is_open || open != p) {
                    throw ProtocolViolation("phase_end for " + std::string(to_string(p)) +
                                            " without matching phase_start");
                }
                if (!(t > open_start)) {
                    throw ProtocolViolation("phase " + std::string(to_string(p)) +
                                            " has zero duration");
                }
                intervals.push_back(PhaseInterval{p, open_start, t});
                next_min = static_cast<int>(p) + 1;
                is_open = false;
                break;
            }
            case EventKind::Prediction:
                if (!is_open || open != Phase::Inference) {
                    throw ProtocolViolation("prediction outside the inference phase at event " +
                                            std::to_string(i));
                }
                out.predictions.push_back(*e.prediction);
                break;
            case EventKind::MemoryReport:
                out.reported_memory.push_back(MemorySample{t, *e.resident_bytes});
                break;
        }
    }
    if (is_open) {
        throw ProtocolViolation("phase " + std::string(to_string(open)) + " never ended");
    }
    if (harness_times.size() > 1 &&
        harness_times.back() < harness_times[harness_times.size() - 2]) {
        throw ProtocolViolation("receipt times decrease at final event");
    }
    out.phases = PhaseLog(std::move(intervals));
    return out;
}

PhaseLog validate_sequence(std::span<const RunnerEvent> events,
                           std::span<const double> harness_times) {
    return validate_events(events, harness_times).phases;
}

}  // namespace edgebench
