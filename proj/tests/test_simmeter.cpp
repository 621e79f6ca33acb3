#include <doctest.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "edgebench/error.hpp"
#include "edgebench/simmeter.hpp"

using namespace edgebench;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

PhaseLog standard_log() {
    return PhaseLog({{Phase::Baseline, 0.0, 3.0},
                     {Phase::DatasetLoad, 3.0, 3.5},
                     {Phase::ModelLoad, 3.5, 4.0},
                     {Phase::Inference, 4.0, 9.0}});
}

std::filesystem::path temp_file(const std::string& name, const std::string& content) {
    const auto path = std::filesystem::temp_directory_path() / ("edgebench_sim_" + name);
    std::ofstream(path) << content;
    return path;
}

std::vector<PowerSample> drain(MeterStream& stream) {
    std::stop_source src;
    std::vector<PowerSample> out;
    while (auto s = stream.next(src.get_token())) out.push_back(*s);
    return out;
}

}  // namespace

TEST_CASE("parse_profile reads the campaign syntax") {
    const auto p = parse_profile("sim:baseline=2.0,inference=+3.0,noise=0.05,rate=16,seed=42");
    CHECK(p.baseline_w == 2.0);
    CHECK(p.delta(Phase::Inference) == 3.0);
    CHECK(p.delta(Phase::ModelLoad) == 0.0);
    CHECK(p.noise_std_w == 0.05);
    CHECK(p.rate_hz == 16.0);
    CHECK(p.seed == 42);
    CHECK(parse_profile(format_profile(p)) == p);
    CHECK(parse_profile("sim:model_load=+0.5,dataset_load=0.25").delta(Phase::DatasetLoad) == 0.25);
}

TEST_CASE("parse_profile rejects bad input") {
    CHECK_THROWS_AS(parse_profile("sim:baseline=-1"), InvalidTrace);
    CHECK_THROWS_AS(parse_profile("sim:rate=0"), InvalidTrace);
    CHECK_THROWS_AS(parse_profile("sim:warmup=1"), InvalidTrace);
    CHECK_THROWS_AS(parse_profile("sim:noise"), InvalidTrace);
    CHECK_THROWS_AS(parse_profile("sim:seed=1.5"), InvalidTrace);
    CHECK_THROWS_AS(parse_profile("sim:jitter=0.6"), InvalidTrace);
}

TEST_CASE("synth_trace baseline window has 48 samples at 16 Hz") {
    LoadProfile p;
    p.baseline_w = 2.0;
    const auto t = synth_trace(p, PhaseLog({{Phase::Baseline, 0.0, 3.0}, {Phase::Inference, 3.0, 4.0}}), 0);
    const auto baseline = estimate_baseline(t, 3.0);
    CHECK(baseline.sample_count == 48);
    CHECK(baseline.watts == 2.0);
    std::size_t in_window = 0;
    for (const auto& s : t.samples()) {
        if (s.t < 3.0) {
            ++in_window;
            CHECK(s.watts == 2.0);
        }
    }
    CHECK(in_window == 48);
    CHECK(t.samples().back().t < 4.0);
}

TEST_CASE("synth_trace adds the phase delta") {
    LoadProfile p;
    p.baseline_w = 2.0;
    p.phase_deltas[Phase::Inference] = 3.0;
    const auto t = synth_trace(p, standard_log(), 1);
    std::size_t n = 0;
    for (const auto& s : t.samples()) {
        if (s.t >= 4.0 && s.t < 9.0) {
            CHECK(s.watts == 5.0);
            ++n;
        } else {
            CHECK(s.watts == 2.0);
        }
    }
    CHECK(n == 80);
}

TEST_CASE("synth_trace is deterministic per seed") {
    LoadProfile p;
    p.noise_std_w = 0.3;
    p.phase_deltas[Phase::Inference] = 1.0;
    CHECK(synth_trace(p, standard_log(), 42) == synth_trace(p, standard_log(), 42));
    CHECK_FALSE(synth_trace(p, standard_log(), 42) == synth_trace(p, standard_log(), 43));
}

TEST_CASE("noise-free profile: baseline and inference delta recovered exactly") {
    for (double base : {0.0, 1.25, 2.0, 4.7}) {
        for (double delta : {0.5, 3.0, 7.25}) {
            LoadProfile p;
            p.baseline_w = base;
            p.phase_deltas[Phase::Inference] = delta;
            const auto log = standard_log();
            const auto t = synth_trace(p, log, 0);
            const auto b = estimate_baseline(t, 3.0);
            CHECK(b.watts == base);
            const auto inf = slice_by_phase(subtract_baseline(t, b).trace, log, Phase::Inference);
            CHECK(mean_power(inf) == doctest::Approx(delta).epsilon(1e-12));
            // trapezoid edge error bounded by one sample period x delta
            const double expected = delta * log.at(Phase::Inference).duration();
            CHECK(std::abs(integrate_energy(inf) - expected) <= delta / p.rate_hz + 1e-12);
        }
    }
}

TEST_CASE("noisy baseline estimate concentrates (statistical, 1000 seeds)") {
    LoadProfile p;
    p.baseline_w = 2.0;
    p.noise_std_w = 0.05;
    const PhaseLog log({{Phase::Baseline, 0.0, 3.0}, {Phase::Inference, 3.0, 3.5}});
    const double bound = 3.0 * p.noise_std_w / std::sqrt(48.0);
    int within = 0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        const auto b = estimate_baseline(synth_trace(p, log, seed), 3.0);
        if (std::abs(b.watts - p.baseline_w) < bound) ++within;
    }
    CHECK(within >= 990);
}

TEST_CASE("synth_trace jitter keeps timestamps increasing") {
    LoadProfile p;
    p.jitter = 0.45;
    const auto t = synth_trace(p, standard_log(), 5);
    CHECK(t.size() == 144);
    CHECK(t.samples()[1].t != 0.0625);
}

TEST_CASE("replay_trace streams a file") {
    std::string body = "#format: watts\n";
    for (int k = 0; k < 48; ++k) body += std::to_string(k / 16.0) + ",1.5\n";
    const auto path = temp_file("48.csv", body);

    SUBCASE("as fast as possible") {
        auto stream = replay_trace(path.string(), kInf);
        const auto s = drain(*stream);
        REQUIRE(s.size() == 48);
        CHECK(s[47].t == 47 / 16.0);
        CHECK(stream->nominal_rate_hz() == 16.0);
    }
    SUBCASE("paced") {
        const auto begin = std::chrono::steady_clock::now();
        auto stream = replay_trace(path.string(), 10.0);  // 2.9375 s of samples in ~0.29 s
        CHECK(drain(*stream).size() == 48);
        const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - begin).count();
        CHECK(elapsed >= 0.25);
        CHECK(elapsed < 2.0);
    }
    SUBCASE("stop interrupts pacing") {
        auto stream = replay_trace(path.string(), 0.01);
        std::stop_source src;
        CHECK(stream->next(src.get_token()).has_value());
        src.request_stop();
        CHECK_FALSE(stream->next(src.get_token()).has_value());
    }
}

TEST_CASE("replay_trace empty file ends cleanly") {
    const auto path = temp_file("empty.csv", "");
    auto stream = replay_trace(path.string(), kInf);
    CHECK(drain(*stream).empty());
}

TEST_CASE("replay_trace surfaces malformed rows") {
    const auto path = temp_file("bad.csv", "0,1\n0.0625,1\n0.125,oops\n0.1875,1\n");
    auto stream = replay_trace(path.string(), kInf);
    std::stop_source src;
    CHECK(stream->next(src.get_token()));
    CHECK(stream->next(src.get_token()));
    CHECK_THROWS_AS(stream->next(src.get_token()), MalformedRow);
}

TEST_CASE("replay_trace missing file") {
    CHECK_THROWS_AS(replay_trace("/nonexistent/edgebench.csv", kInf), InvalidTrace);
}
