// Acceptance suite: one PASS/FAIL line per criterion, each checked against
// its tolerance and wall-clock budget. Exit status is nonzero on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include "edgebench/error.hpp"
#include "edgebench/metrics.hpp"
#include "edgebench/orchestrator.hpp"
#include "edgebench/protocol.hpp"
#include "edgebench/report.hpp"
#include "edgebench/simmeter.hpp"
#include "edgebench/trace.hpp"
#include "support/oracles.hpp"

using namespace edgebench;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            detail = what;
        }
    }
};

int failures = 0;

void criterion(const char* name, double budget_s, const std::function<void(Outcome&)>& body) {
    Outcome o;
    const auto begin = std::chrono::steady_clock::now();
    try {
        body(o);
    } catch (const std::exception& e) {
        o.ok = false;
        o.detail = std::string("exception: ") + e.what();
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - begin).count();
    if (o.ok && elapsed >= budget_s) {
        o.ok = false;
        o.detail = "over time budget";
    }
    if (!o.ok) ++failures;
    std::printf("%s  %-34s %8.3f s (limit %g s)%s%s\n", o.ok ? "PASS" : "FAIL", name, elapsed, budget_s,
                o.detail.empty() ? "" : "  ", o.detail.c_str());
    std::fflush(stdout);
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

RunConfig base_config() {
    RunConfig c;
    c.model_id = "tinybert";
    c.device_id = "rpi4";
    c.framework_id = "litert";
    c.dataset_ref = "synthetic";
    c.input_size = 128;
    c.batch_size = 1;
    c.seed = 2024;
    return c;
}

void baseline_fidelity(Outcome& o) {
    const auto profile = parse_profile("sim:baseline=2.0,inference=+3.0,noise=0,rate=16");
    const PhaseLog phases({{Phase::Baseline, 0.0, 3.0}, {Phase::Inference, 3.0, 8.0}});
    const auto trace = synth_trace(profile, phases, 1);
    const auto b = estimate_baseline(trace, 3.0);
    o.require(b.watts == 2.0, "baseline " + fmt(b.watts) + " != 2.0");
    o.require(b.sample_count == 48, "baseline window held " + std::to_string(b.sample_count) + " samples");
}

void energy_oracle(Outcome& o) {
    auto rel = [](double got, double want) { return std::abs(got - want) / std::abs(want); };
    // linear ramps P(t) = a + b t sampled at assorted rates
    for (double rate : {1.0, 4.0, 16.0, 100.0}) {
        for (double b : {0.5, 2.0, -0.25}) {
            const double a = 5.0;
            const int n = static_cast<int>(4.0 * rate);
            std::vector<PowerSample> s;
            for (int k = 0; k <= n; ++k) {
                const double t = k / rate;
                s.push_back({t, a + b * t, std::nullopt});
            }
            const double T = n / rate;
            const double closed = a * T + 0.5 * b * T * T;
            const double got = integrate_energy(PowerTrace(s, rate));
            o.require(rel(got, closed) <= 1e-12, "ramp rate " + fmt(rate) + ": " + fmt(got) + " vs " + fmt(closed));
        }
    }
    // piecewise-constant steps sampled densely at the step edges (zero-width risers)
    {
        std::vector<PowerSample> s;
        const double levels[] = {2.0, 5.0, 3.5, 7.25};
        double closed = 0.0;
        for (int seg = 0; seg < 4; ++seg) {
            for (int k = 0; k < 16; ++k) s.push_back({seg + k / 16.0, levels[seg], std::nullopt});
            closed += levels[seg] * (15.0 / 16.0);
            if (seg < 3) closed += 0.5 * (levels[seg] + levels[seg + 1]) / 16.0;
        }
        const double got = integrate_energy(PowerTrace(s, 16.0));
        o.require(rel(got, closed) <= 1e-12, "steps: " + fmt(got) + " vs " + fmt(closed));
    }
    // a constant trace integrates to P * T
    {
        std::vector<PowerSample> s;
        for (int k = 0; k <= 160; ++k) s.push_back({k / 16.0, 3.0, std::nullopt});
        const double got = integrate_energy(PowerTrace(s, 16.0));
        o.require(rel(got, 30.0) <= 1e-12, "constant: " + fmt(got));
    }
}

void ci_oracle(Outcome& o) {
    const std::vector<double> v{10.0, 12.0, 14.0};
    const auto a = aggregate(v);
    o.require(std::abs(a.ci_low - 7.032) <= 1e-2 && std::abs(a.ci_high - 16.968) <= 1e-2,
              "aggregate({10,12,14}) = [" + fmt(a.ci_low) + ", " + fmt(a.ci_high) + "]");
    std::vector<std::int64_t> dfs;
    for (std::int64_t df = 1; df <= 30; ++df) dfs.push_back(df);
    dfs.push_back(100);
    dfs.push_back(1000);
    for (auto df : dfs) {
        const double got = t_quantile(df, 0.975);
        const double want = oracle::t_quantile(static_cast<double>(df), 0.975);
        o.require(std::abs(got - want) <= 1e-3,
                  "df " + std::to_string(df) + ": " + fmt(got) + " vs oracle " + fmt(want));
    }
}

void f1_oracle(Outcome& o) {
    std::mt19937_64 rng(20240601);
    for (int instance = 0; instance < 500; ++instance) {
        const std::size_t pairs = 1 + rng() % 20;
        const std::size_t classes = 1 + rng() % 4;
        PredictionSet preds;
        std::vector<std::pair<std::string, std::string>> tp;
        for (std::size_t i = 0; i < pairs; ++i) {
            const std::string truth = "c" + std::to_string(rng() % classes);
            const std::string pred = "c" + std::to_string(rng() % classes);
            preds.push_back(Prediction{"x" + std::to_string(i), pred, truth});
            tp.emplace_back(truth, pred);
        }
        const auto want = oracle::f1_confusion(tp);
        const double macro = f1_score(preds, F1Averaging::Macro);
        const double micro = f1_score(preds, F1Averaging::Micro);
        o.require(macro == want.macro, "instance " + std::to_string(instance) + " macro " + fmt(macro) +
                                           " vs " + fmt(want.macro));
        o.require(micro == want.micro, "instance " + std::to_string(instance) + " micro " + fmt(micro) +
                                           " vs " + fmt(want.micro));
    }
}

void end_to_end(Outcome& o) {
    const auto meter = parse_meter_spec("sim:baseline=2.0,inference=+3.0,noise=0.05,rate=16,seed=17");
    SyntheticRunnerOptions options;
    options.inference_seconds = 5.0;
    SyntheticLauncher runner(options);
    SweepSpec spec;
    spec.base_config = base_config();
    spec.repeats = 5;
    const auto result = execute_sweep(spec, meter, runner);
    o.require(result.failures.empty(), "sweep reported failures");
    o.require(result.records.size() == 5, "expected 5 records, got " + std::to_string(result.records.size()));
    for (const auto& r : result.records) {
        const auto& m = r.metrics;
        o.require(std::abs(m.inference_time_s - 5.0) <= 0.1, "inference_time " + fmt(m.inference_time_s));
        o.require(std::abs(m.energy_j - 15.0) <= 0.5, "energy " + fmt(m.energy_j));
        o.require(std::abs(m.mean_power_w - 3.0) <= 0.1, "mean power " + fmt(m.mean_power_w));
        o.require(recompute_metrics(r) == m, "stored metrics differ from recomputed");
    }
    const auto table = build_comparison(result.records, kDefaultGroupBy, {"inference_time", "energy", "mean_power"});
    o.require(table.rows.size() == 1, "expected one comparison row");
    const auto csv = parse_csv(emit(table, ReportFormat::Csv));
    static const std::regex shape(R"(^(-?\d+\.\d{2}) \[(-?\d+\.\d{2}), (-?\d+\.\d{2})\]$)");
    for (std::size_t col = kDefaultGroupBy.size(); col < csv.at(1).size(); ++col) {
        const auto& cell = csv[1][col];
        std::smatch m;
        const bool shaped = std::regex_match(cell, m, shape) && std::stod(m[2]) <= std::stod(m[1]) &&
                            std::stod(m[1]) <= std::stod(m[3]);
        o.require(shaped, "cell '" + cell + "' is not MEAN [LO, HI]");
    }
    const std::string fixture = format_interval(AggregateMetric{85.50, 84.12, 86.88, 5, 0.0}, 2);
    o.require(fixture == "85.50 [84.12, 86.88]", "fixture rendered as '" + fixture + "'");
}

void ranking_semantics(Outcome& o) {
    auto agg = [](double mean, double lo, double hi) { return AggregateMetric{mean, lo, hi, 5, 0.0}; };
    const std::vector<DeviceAggregate> disjoint{{"jetson", agg(97.4, 97.1, 97.7)}, {"rpi", agg(96.8, 96.5, 97.0)}};
    const auto w = rank_cell(disjoint, Direction::HigherBetter);
    o.require(w.winner == std::optional<std::string>("jetson"), "disjoint intervals did not give jetson");
    const std::vector<DeviceAggregate> overlap{{"A", agg(10.0, 9.5, 10.5)}, {"B", agg(9.8, 9.3, 10.3)}};
    const auto t = rank_cell(overlap, Direction::HigherBetter);
    o.require(t.tie(), "overlapping intervals did not tie");

    // rendered through the ranking report
    std::vector<RunRecord> records;
    auto add = [&](const std::string& dev, double f1, double time) {
        RunRecord r;
        r.config = base_config();
        r.config.device_id = dev;
        r.metrics.f1_percent = f1;
        r.metrics.inference_time_s = time;
        records.push_back(r);
    };
    for (double d : {-0.01, 0.0, 0.01}) {
        add("jetson", 97.4 + d, 1.0 + d);
        add("rpi", 97.4 - d, 3.0 + d);
    }
    const auto table = build_comparison(records, kDefaultGroupBy, {"f1", "inference_time"});
    const auto ranking = build_ranking(table, {{"f1", Direction::HigherBetter}, {"inference_time", Direction::LowerBetter}});
    const auto rows = parse_csv(emit(ranking, ReportFormat::Csv));
    o.require(rows.size() == 2, "ranking should have one row");
    o.require(rows[1][rows[1].size() - 2] == std::string(kTieMarker), "f1 column should show the tie marker");
    o.require(rows[1].back() == "jetson", "inference_time column should name jetson");
}

void sweep_determinism(Outcome& o) {
    SweepSpec spec;
    spec.base_config = base_config();
    spec.grid = {{"input_size", {128, 256}}, {"batch_size", {1, 4}}};
    spec.repeats = 2;
    SyntheticRunnerOptions options;
    options.seconds_per_unit = 0.001;
    SyntheticLauncher runner(options);
    const auto meter = parse_meter_spec("sim:baseline=2.0,inference=+3.0,noise=0.1,rate=16,seed=11");
    const auto first = execute_sweep(spec, meter, runner);
    const auto second = execute_sweep(spec, meter, runner);
    o.require(first.records.size() == 8, "expected 8 records, got " + std::to_string(first.records.size()));
    o.require(second.records.size() == 8, "second sweep size differs");
    const auto expected = expand_sweep(spec);
    for (std::size_t i = 0; i < first.records.size() && i < second.records.size(); ++i) {
        o.require(first.records[i].config == expected[i], "record " + std::to_string(i) + " out of order");
        o.require(second.records[i].config == first.records[i].config, "order differs between sweeps");
        const auto& a = first.records[i].metrics;
        const auto& b = second.records[i].metrics;
        const double diffs[] = {a.inference_time_s - b.inference_time_s, a.summed_power_w - b.summed_power_w,
                                a.mean_power_w - b.mean_power_w,         a.energy_j - b.energy_j,
                                a.peak_memory_mb - b.peak_memory_mb,     a.f1_percent.value_or(0) - b.f1_percent.value_or(0)};
        for (double d : diffs) o.require(std::abs(d) <= 1e-9, "metric drift on record " + std::to_string(i));
        o.require(a.f1_percent.has_value() == b.f1_percent.has_value(), "f1 presence differs");
    }
}

using Tokens = std::vector<int>;

RunnerEvent ev(EventKind kind, std::optional<Phase> phase = std::nullopt) {
    RunnerEvent e;
    e.kind = kind;
    e.phase = phase;
    return e;
}

bool validator_accepts(const Tokens& tokens) {
    std::vector<RunnerEvent> events{ev(EventKind::Hello)};
    for (int tok : tokens) events.push_back(ev(tok % 2 == 0 ? EventKind::PhaseStart : EventKind::PhaseEnd,
                                               static_cast<Phase>(tok / 2)));
    events.push_back(ev(EventKind::Done));
    std::vector<double> times(events.size());
    for (std::size_t i = 0; i < times.size(); ++i) times[i] = static_cast<double>(i);
    try {
        validate_sequence(events, times);
        return true;
    } catch (const ProtocolViolation&) {
        return false;
    }
}

/// Well-formed sequences: Baseline pair, optional DatasetLoad pair, optional
/// ModelLoad pair, Inference pair, each closed before the next opens.
bool brute_force_accepts(const Tokens& tokens) {
    std::size_t i = 0;
    auto pair = [&](int phase) {
        if (i + 1 < tokens.size() && tokens[i] == 2 * phase && tokens[i + 1] == 2 * phase + 1) {
            i += 2;
            return true;
        }
        return false;
    };
    if (!pair(0)) return false;
    pair(1);
    pair(2);
    if (!pair(3)) return false;
    return i == tokens.size();
}

void protocol_recognizer(Outcome& o) {
    std::size_t checked = 0;
    std::size_t accepted = 0;
    std::function<void(Tokens&, int)> walk = [&](Tokens& t, int remaining) {
        const bool want = brute_force_accepts(t);
        const bool got = validator_accepts(t);
        ++checked;
        accepted += want ? 1 : 0;
        if (got != want && o.ok) {
            std::string s;
            for (int tok : t) s += std::to_string(tok) + " ";
            o.require(false, "disagreement on tokens [" + s + "]");
        }
        if (remaining == 0) return;
        for (int p = 0; p < 4; ++p) {
            t.push_back(2 * p);
            t.push_back(2 * p + 1);
            walk(t, remaining - 1);
            t.resize(t.size() - 2);
        }
    };
    Tokens t;
    walk(t, 5);
    o.require(checked == 1 + 4 + 16 + 64 + 256 + 1024, "enumerated " + std::to_string(checked) + " orderings");
    o.require(accepted == 4, "recognizer accepted " + std::to_string(accepted) + " orderings");
}

}  // namespace

int main() {
    criterion("baseline fidelity", 1.0, baseline_fidelity);
    criterion("energy oracle", 1.0, energy_oracle);
    criterion("confidence interval oracle", 5.0, ci_oracle);
    criterion("f1 oracle", 5.0, f1_oracle);
    criterion("end-to-end synthetic run", 30.0, end_to_end);
    criterion("ranking semantics", 1.0, ranking_semantics);
    criterion("sweep cardinality and determinism", 60.0, sweep_determinism);
    criterion("protocol recognizer", 5.0, protocol_recognizer);
    std::printf("%s: %d failing criteria\n", failures == 0 ? "ALL PASS" : "FAILED", failures);
    return failures == 0 ? 0 : 1;
}
