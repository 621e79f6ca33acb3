#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "edgebench/orchestrator.hpp"
#include "edgebench/report.hpp"
#include "edgebench/runner.hpp"

namespace edgebench {

inline constexpr std::string_view kBuiltinSyntheticRunner = "builtin:synthetic";
inline constexpr std::string_view kOutputDirEnv = "EDGEBENCH_OUT";

/// A campaign file: runner, meter, sweep, output directory and report formats.
struct CampaignManifest {
    std::string campaign;
    std::vector<std::string> runner_command;
    SyntheticRunnerOptions synthetic;  ///< used when the command is builtin:synthetic
    MeterSpec meter;
    SweepSpec sweep;
    std::filesystem::path output_dir;
    std::vector<ReportFormat> report_formats{ReportFormat::Csv, ReportFormat::Json,
                                             ReportFormat::Markdown};
    std::vector<std::string> group_by = kDefaultGroupBy;
    std::optional<double> timeout_seconds;
    bool abort_on_error = false;
};

/// Parses and validates a manifest. Relative paths (output_dir, replay/live
/// meter paths) resolve against `base_dir`. Throws ManifestError naming the
/// offending field.
CampaignManifest parse_manifest(const nlohmann::json& j, const std::filesystem::path& base_dir);
CampaignManifest load_manifest(const std::filesystem::path& path);

std::unique_ptr<RunnerLauncher> make_launcher(const CampaignManifest& manifest);

SyntheticRunnerOptions synthetic_options_from_json(const nlohmann::json& j);

/// Writes comparison (and, when at least two devices share a row, ranking)
/// reports into `dir`. Returns the written file names.
std::vector<std::string> write_reports(const std::filesystem::path& dir,
                                       std::span<const RunRecord> records,
                                       const std::vector<std::string>& group_by,
                                       const std::vector<ReportFormat>& formats, std::ostream& log);

struct RunFlags {
    bool keep_going = false;
    std::optional<std::int64_t> repeats;
    std::optional<double> cooling;
    std::vector<ReportFormat> formats;
    std::optional<std::uint64_t> seed;
};

/// Exit codes: 0 success, 1 failed cell or evidence mismatch, 2 usage/input error.
int cmd_run(const std::filesystem::path& manifest, const RunFlags& flags, std::ostream& out,
            std::ostream& err);
int cmd_analyze(const std::filesystem::path& dir, const std::vector<ReportFormat>& formats,
                std::ostream& out, std::ostream& err);

struct TraceFlags {
    double window = kDefaultBaselineWindowSeconds;
    double window_start = 0.0;
    std::optional<std::string> phase;
    std::optional<std::filesystem::path> phases_file;
};

/// `sub` is one of baseline, energy, slice, summed, mean.
int cmd_trace(const std::string& sub, const std::filesystem::path& file, const TraceFlags& flags,
              std::ostream& out, std::ostream& err);
int cmd_replay(const std::filesystem::path& file, double speed, std::ostream& out, std::ostream& err);

}  // namespace edgebench
