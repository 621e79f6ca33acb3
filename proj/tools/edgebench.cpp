// edgebench: measured inference campaigns, evidence re-analysis and trace tools.

#include <cmath>
#include <iostream>
#include <limits>
#include <string>

#include <CLI11.hpp>

#include "edgebench/campaign.hpp"
#include "edgebench/numfmt.hpp"

namespace {

double parse_speed(const std::string& text) {
    if (text == "inf" || text == "max") return std::numeric_limits<double>::infinity();
    auto v = edgebench::parse_double(text);
    if (!v || *v <= 0.0) throw CLI::ValidationError("--speed", "must be a positive number or 'inf'");
    return *v;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"edgebench - phase-synchronized power, latency and memory benchmarking of edge inference"};
    app.require_subcommand(1);

    std::string manifest;
    edgebench::RunFlags run_flags;
    std::vector<std::string> formats;
    std::int64_t repeats = 0;
    double cooling = 0.0;
    std::uint64_t seed = 0;
    auto* run = app.add_subcommand("run", "Execute the sweep described by a campaign manifest");
    run->add_option("manifest", manifest, "Campaign manifest (JSON)")->required();
    run->add_flag("--keep-going", run_flags.keep_going, "Exit 0 even when some cells fail");
    auto* repeats_opt = run->add_option("--repeats", repeats, "Repeats per cell (overrides manifest)")
                            ->check(CLI::PositiveNumber);
    auto* cooling_opt = run->add_option("--cooling", cooling, "Cooling seconds between runs")
                            ->check(CLI::NonNegativeNumber);
    auto* seed_opt = run->add_option("--seed", seed, "Base seed (overrides manifest)");
    run->add_option("--format", formats, "Report format(s): csv, json, markdown")
        ->check(CLI::IsMember({"csv", "json", "markdown", "md"}));

    std::string records_dir;
    auto* analyze = app.add_subcommand("analyze", "Recompute metrics from stored evidence and rebuild reports");
    analyze->add_option("dir", records_dir, "Campaign output directory")->required();
    analyze->add_option("--format", formats, "Report format(s): csv, json, markdown")
        ->check(CLI::IsMember({"csv", "json", "markdown", "md"}));

    std::string trace_sub;
    std::string trace_file;
    edgebench::TraceFlags trace_flags;
    std::string phase;
    std::string phases_file;
    auto* trace = app.add_subcommand("trace", "Analyze a power trace file");
    trace->add_option("sub", trace_sub, "baseline | energy | slice | summed | mean")
        ->required()
        ->check(CLI::IsMember({"baseline", "energy", "slice", "summed", "mean"}));
    trace->add_option("file", trace_file, "Trace file")->required();
    trace->add_option("--window", trace_flags.window, "Baseline window in seconds")->check(CLI::PositiveNumber);
    trace->add_option("--window-start", trace_flags.window_start, "Baseline window start in seconds");
    auto* phase_opt = trace->add_option("--phase", phase, "Restrict to a phase (baseline, dataset_load, ...)");
    auto* phases_opt = trace->add_option("--phases", phases_file, "Phase log JSON (array or run record)");

    std::string replay_file;
    std::string speed = "1";
    auto* replay = app.add_subcommand("replay", "Stream a trace file with its original timing");
    replay->add_option("file", replay_file, "Trace file")->required();
    replay->add_option("--speed", speed, "Playback speed multiplier, or 'inf'");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    std::vector<edgebench::ReportFormat> parsed_formats;
    for (const auto& f : formats) parsed_formats.push_back(*edgebench::parse_report_format(f));

    if (run->parsed()) {
        if (*repeats_opt) run_flags.repeats = repeats;
        if (*cooling_opt) run_flags.cooling = cooling;
        if (*seed_opt) run_flags.seed = seed;
        run_flags.formats = parsed_formats;
        return edgebench::cmd_run(manifest, run_flags, std::cout, std::cerr);
    }
    if (analyze->parsed()) return edgebench::cmd_analyze(records_dir, parsed_formats, std::cout, std::cerr);
    if (trace->parsed()) {
        if (*phase_opt) trace_flags.phase = phase;
        if (*phases_opt) trace_flags.phases_file = phases_file;
        return edgebench::cmd_trace(trace_sub, trace_file, trace_flags, std::cout, std::cerr);
    }
    if (replay->parsed()) {
        double s = 0.0;
        try {
            s = parse_speed(speed);
        } catch (const CLI::Error& e) {
            std::cerr << "edgebench replay: " << e.what() << '\n';
            return 2;
        }
        return edgebench::cmd_replay(replay_file, s, std::cout, std::cerr);
    }
    return 2;
}
