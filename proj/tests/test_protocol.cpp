#include <doctest.h>

#include <functional>
#include <random>
#include <set>

#include "edgebench/error.hpp"
#include "edgebench/protocol.hpp"

using namespace edgebench;

namespace {

RunnerEvent ev(EventKind kind, std::optional<Phase> phase = std::nullopt) {
    RunnerEvent e;
    e.kind = kind;
    e.phase = phase;
    return e;
}

RunnerEvent start(Phase p) { return ev(EventKind::PhaseStart, p); }
RunnerEvent end(Phase p) { return ev(EventKind::PhaseEnd, p); }

std::vector<double> ticks(std::size_t n) {
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = static_cast<double>(i);
    return t;
}

std::vector<RunnerEvent> full_sequence() {
    return {ev(EventKind::Hello),        start(Phase::Baseline),  end(Phase::Baseline),
            start(Phase::DatasetLoad),   end(Phase::DatasetLoad), start(Phase::ModelLoad),
            end(Phase::ModelLoad),       start(Phase::Inference), end(Phase::Inference),
            ev(EventKind::Done)};
}

/// Token encoding for the brute-force recognizer: 2*phase for start, 2*phase+1 for end.
using Tokens = std::vector<int>;

/// The accepted language is finite: enumerate it explicitly.
const std::set<Tokens>& accepted_language() {
    static const std::set<Tokens> lang = [] {
        std::set<Tokens> out;
        for (bool with_dataset : {false, true}) {
            for (bool with_model : {false, true}) {
                Tokens t{0, 1};
                if (with_dataset) t.insert(t.end(), {2, 3});
                if (with_model) t.insert(t.end(), {4, 5});
                t.insert(t.end(), {6, 7});
                out.insert(t);
            }
        }
        return out;
    }();
    return lang;
}

bool brute_force_accepts(const Tokens& tokens) { return accepted_language().count(tokens) > 0; }

bool validator_accepts(const Tokens& tokens) {
    std::vector<RunnerEvent> events{ev(EventKind::Hello)};
    for (int tok : tokens) {
        const auto phase = static_cast<Phase>(tok / 2);
        events.push_back(tok % 2 == 0 ? start(phase) : end(phase));
    }
    events.push_back(ev(EventKind::Done));
    try {
        const auto log = validate_sequence(events, ticks(events.size()));
        // produced log must satisfy the PhaseLog invariants
        PhaseLog copy(log.entries());
        return true;
    } catch (const ProtocolViolation&) {
        return false;
    }
}

}  // namespace

TEST_CASE("encode_config / decode_config") {
    RunConfig c;
    c.model_id = "resnet50";
    c.device_id = "rpi4";
    c.input_size = 224;
    c.batch_size = 1;

    SUBCASE("minimal config") {
        const auto line = encode_config(c);
        CHECK(line.find('\n') == std::string::npos);
        CHECK(line.find("\"input_size\":224") != std::string::npos);
        CHECK(line.find("\"batch_size\":1") != std::string::npos);
        CHECK(line.find("token_window") == std::string::npos);
        CHECK(decode_config(line) == c);
    }
    SUBCASE("token window") {
        c.token_window = 2048;
        const auto line = encode_config(c);
        CHECK(line.find("\"token_window\":2048") != std::string::npos);
        CHECK(decode_config(line) == c);
    }
    SUBCASE("invalid batch size") {
        c.batch_size = 0;
        CHECK_THROWS_AS(encode_config(c), InvalidConfig);
    }
    SUBCASE("baseline_seconds on the wire") {
        c.baseline_seconds = 2.5;
        CHECK(encode_config(c).find("\"baseline_seconds\":2.5") != std::string::npos);
    }
}

TEST_CASE("config round-trip over randomized values (property)") {
    std::mt19937_64 rng(17);
    const std::vector<std::string> alphabet{"a", "b", "c", "X", "Z", "0", "9", " ", "_", "-", "\"", "\\", "/", "é"};
    auto text = [&] {
        std::string s;
        const auto n = rng() % 12;
        for (std::size_t i = 0; i < n; ++i) s += alphabet[rng() % alphabet.size()];
        return s;
    };
    for (int i = 0; i < 300; ++i) {
        RunConfig c;
        c.model_id = text();
        c.device_id = text();
        c.framework_id = text();
        c.dataset_ref = text();
        c.input_size = 1 + static_cast<std::int64_t>(rng() % 100000);
        c.batch_size = 1 + static_cast<std::int64_t>(rng() % 64);
        if (rng() % 2) c.token_window = 1 + static_cast<std::int64_t>(rng() % 4096);
        c.repeat_index = static_cast<std::int64_t>(rng() % 10);
        c.seed = rng();
        c.baseline_seconds = 0.5 + static_cast<double>(rng() % 1000) / 97.0;
        CHECK(decode_config(encode_config(c)) == c);
    }
}

TEST_CASE("event round-trip over randomized values (property)") {
    std::mt19937_64 rng(23);
    for (int i = 0; i < 300; ++i) {
        RunnerEvent e;
        e.kind = static_cast<EventKind>(rng() % 7);
        if (rng() % 2) e.t_runner = static_cast<double>(rng() % 100000) / 1000.0;
        switch (e.kind) {
            case EventKind::PhaseStart:
            case EventKind::PhaseEnd: e.phase = static_cast<Phase>(rng() % 4); break;
            case EventKind::Prediction:
                e.prediction = Prediction{std::to_string(rng() % 100), "p" + std::to_string(rng() % 3),
                                          "t" + std::to_string(rng() % 3)};
                break;
            case EventKind::MemoryReport: e.resident_bytes = rng() >> 4; break;
            case EventKind::Fatal: e.message = "boom " + std::to_string(rng() % 9); break;
            default: break;
        }
        CHECK(decode_event(encode_event(e)) == e);
    }
}

TEST_CASE("decode_event") {
    SUBCASE("phase_start") {
        const auto e = decode_event(R"({"kind":"phase_start","phase":"inference","t_runner":1.5})");
        CHECK(e.kind == EventKind::PhaseStart);
        CHECK(e.phase == Phase::Inference);
        CHECK(e.t_runner == 1.5);
    }
    SUBCASE("prediction") {
        const auto e = decode_event(R"({"kind":"prediction","input_id":3,"predicted":"7","truth":"7"})");
        REQUIRE(e.prediction);
        CHECK(e.prediction->predicted == "7");
        CHECK(e.prediction->truth == "7");
        CHECK(e.prediction->input_id == "3");
    }
    SUBCASE("typo kind") {
        CHECK_THROWS_AS(decode_event(R"({"kind":"pahse_start","phase":"inference"})"), UnknownKind);
    }
    SUBCASE("unknown fields ignored") {
        const auto e = decode_event(R"({"kind":"done","gpu_temp":41.5,"extra":{"a":1}})");
        CHECK(e.kind == EventKind::Done);
    }
    SUBCASE("malformed") {
        CHECK_THROWS_AS(decode_event("not json"), MalformedEvent);
        CHECK_THROWS_AS(decode_event("[1,2]"), MalformedEvent);
        CHECK_THROWS_AS(decode_event(R"({"phase":"inference"})"), MalformedEvent);
        CHECK_THROWS_AS(decode_event(R"({"kind":"phase_end"})"), MalformedEvent);
        CHECK_THROWS_AS(decode_event(R"({"kind":"phase_end","phase":"warmup"})"), MalformedEvent);
        CHECK_THROWS_AS(decode_event(R"({"kind":"prediction","input_id":"1","truth":"a"})"), MalformedEvent);
        CHECK_THROWS_AS(decode_event(R"({"kind":"memory_report","resident_bytes":-5})"), MalformedEvent);
    }
    SUBCASE("fatal message") {
        const auto e = decode_event(R"({"kind":"fatal","message":"CUDA OOM"})");
        CHECK(e.kind == EventKind::Fatal);
        CHECK(e.message == "CUDA OOM");
    }
}

TEST_CASE("validate_sequence happy path uses harness receipt times") {
    auto events = full_sequence();
    for (std::size_t i = 0; i < events.size(); ++i) events[i].t_runner = 1000.0 + static_cast<double>(i);
    const std::vector<double> times{0.0, 0.1, 3.1, 3.1, 3.6, 3.6, 4.0, 4.0, 9.0, 9.0};
    const auto log = validate_sequence(events, times);
    REQUIRE(log.entries().size() == 4);
    CHECK(log.entries()[0] == PhaseInterval{Phase::Baseline, 0.1, 3.1});
    CHECK(log.entries()[1].phase == Phase::DatasetLoad);
    CHECK(log.entries()[2].phase == Phase::ModelLoad);
    CHECK(log.entries()[3] == PhaseInterval{Phase::Inference, 4.0, 9.0});
}

TEST_CASE("validate_sequence errors") {
    SUBCASE("inference never ends") {
        std::vector<RunnerEvent> events{ev(EventKind::Hello), start(Phase::Baseline), end(Phase::Baseline),
                                        start(Phase::Inference), ev(EventKind::Done)};
        CHECK_THROWS_AS(validate_sequence(events, ticks(events.size())), ProtocolViolation);
    }
    SUBCASE("model load before dataset load") {
        std::vector<RunnerEvent> events{ev(EventKind::Hello),       start(Phase::Baseline),  end(Phase::Baseline),
                                        start(Phase::ModelLoad),    end(Phase::ModelLoad),   start(Phase::DatasetLoad),
                                        end(Phase::DatasetLoad),    start(Phase::Inference), end(Phase::Inference),
                                        ev(EventKind::Done)};
        CHECK_THROWS_AS(validate_sequence(events, ticks(events.size())), ProtocolViolation);
    }
    SUBCASE("fatal terminator") {
        std::vector<RunnerEvent> events{ev(EventKind::Hello), start(Phase::Baseline), end(Phase::Baseline),
                                        start(Phase::ModelLoad)};
        RunnerEvent fatal = ev(EventKind::Fatal);
        fatal.message = "model file missing";
        events.push_back(fatal);
        try {
            validate_sequence(events, ticks(events.size()));
            FAIL("expected RunnerFailure");
        } catch (const RunnerFailure& e) {
            CHECK(std::string(e.what()).find("model file missing") != std::string::npos);
        }
    }
    SUBCASE("missing hello") {
        auto events = full_sequence();
        events.erase(events.begin());
        CHECK_THROWS_AS(validate_sequence(events, ticks(events.size())), ProtocolViolation);
    }
    SUBCASE("unterminated") {
        auto events = full_sequence();
        events.pop_back();
        CHECK_THROWS_AS(validate_sequence(events, ticks(events.size())), ProtocolViolation);
    }
    SUBCASE("events after done") {
        auto events = full_sequence();
        events.insert(events.end() - 1, ev(EventKind::Done));
        CHECK_THROWS_AS(validate_sequence(events, ticks(events.size())), ProtocolViolation);
    }
    SUBCASE("prediction outside inference") {
        auto events = full_sequence();
        RunnerEvent p = ev(EventKind::Prediction);
        p.prediction = Prediction{"0", "a", "a"};
        events.insert(events.begin() + 3, p);
        CHECK_THROWS_AS(validate_sequence(events, ticks(events.size())), ProtocolViolation);
    }
    SUBCASE("zero-length phase") {
        auto events = full_sequence();
        std::vector<double> times = ticks(events.size());
        times[2] = times[1];
        CHECK_THROWS_AS(validate_sequence(events, times), ProtocolViolation);
    }
    SUBCASE("time count mismatch") {
        auto events = full_sequence();
        CHECK_THROWS_AS(validate_sequence(events, ticks(3)), ProtocolViolation);
    }
}

TEST_CASE("validate_events collects predictions and memory reports") {
    auto events = full_sequence();
    RunnerEvent p = ev(EventKind::Prediction);
    p.prediction = Prediction{"0", "cat", "dog"};
    events.insert(events.begin() + 8, p);
    RunnerEvent m = ev(EventKind::MemoryReport);
    m.resident_bytes = 1234;
    events.insert(events.begin() + 2, m);
    const auto v = validate_events(events, ticks(events.size()));
    REQUIRE(v.predictions.size() == 1);
    CHECK(v.predictions[0].truth == "dog");
    REQUIRE(v.reported_memory.size() == 1);
    CHECK(v.reported_memory[0].resident_bytes == 1234);
    CHECK(v.reported_memory[0].t == 2.0);
}

TEST_CASE("validate_sequence agrees with a brute-force recognizer") {
    std::size_t checked = 0;
    std::size_t accepted = 0;
    // (a) every ordering of up to 5 start/end pairs drawn from the 4 phases
    std::function<void(Tokens&, int)> pairs = [&](Tokens& t, int remaining) {
        const bool expect = brute_force_accepts(t);
        CHECK_MESSAGE(validator_accepts(t) == expect, "pair sequence of length " << t.size());
        ++checked;
        accepted += expect ? 1 : 0;
        if (remaining == 0) return;
        for (int p = 0; p < 4; ++p) {
            t.push_back(2 * p);
            t.push_back(2 * p + 1);
            pairs(t, remaining - 1);
            t.resize(t.size() - 2);
        }
    };
    Tokens t;
    pairs(t, 5);
    // (b) every token string up to length 6 (unpaired, nested, reversed)
    std::function<void(Tokens&, int)> strings = [&](Tokens& s, int remaining) {
        const bool got = validator_accepts(s);
        if (got != brute_force_accepts(s)) FAIL_CHECK("token string disagreement");
        ++checked;
        if (remaining == 0) return;
        for (int tok = 0; tok < 8; ++tok) {
            s.push_back(tok);
            strings(s, remaining - 1);
            s.pop_back();
        }
    };
    Tokens s;
    strings(s, 6);
    CHECK(accepted == 4);
    CHECK(checked > 300000);
}
