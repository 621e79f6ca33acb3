#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "edgebench/metrics.hpp"
#include "edgebench/orchestrator.hpp"

namespace edgebench {

/// Record fields usable as grouping keys.
inline constexpr std::string_view kGroupFields[] = {
    "device_id", "model_id", "framework_id", "dataset_ref", "input_size", "batch_size", "token_window"};

/// Metric columns, in canonical order.
inline constexpr std::string_view kMetricNames[] = {"f1", "inference_time", "summed_power",
                                                    "mean_power", "energy", "peak_memory"};

inline const std::vector<std::string> kDefaultGroupBy{"device_id", "model_id", "input_size",
                                                      "batch_size", "token_window"};

/// Value of a record's metric by name; nullopt for an absent F1.
/// Throws UnknownMetric for an unrecognized name.
std::optional<double> metric_value(const MetricSet& metrics, std::string_view name);

/// Display decimals: 0 for peak memory, 2 otherwise.
int default_decimals(std::string_view metric);

std::string_view metric_unit(std::string_view metric);

/// Value of a record's grouping field as text ("-" for an absent token window).
std::string group_value(const RunConfig& config, std::string_view field);

struct ComparisonRow {
    std::vector<std::string> key;                  ///< one value per group_by field
    std::vector<std::optional<AggregateMetric>> cells;  ///< one per metric; empty when no data
};

struct ComparisonTable {
    std::vector<std::string> group_by;
    std::vector<std::string> metrics;
    std::vector<ComparisonRow> rows;
};

/// Groups records by `group_by` and aggregates each metric per group. Rows are
/// ordered lexicographically by key, comparing integer fields numerically.
/// Throws EmptyRecords, UnknownMetric (also for a metric no record carries).
ComparisonTable build_comparison(std::span<const RunRecord> records,
                                 const std::vector<std::string>& group_by,
                                 const std::vector<std::string>& metrics);

/// `MEAN [LO, HI]` in fixed point with half-even rounding. The printed bounds
/// are widened if rounding would put the mean outside them.
std::string format_interval(const AggregateMetric& agg, int decimals);

enum class Direction { HigherBetter, LowerBetter };

std::string_view to_string(Direction direction) noexcept;

/// Winner device, or the tie marker when the best and runner-up intervals overlap.
struct RankCell {
    std::optional<std::string> winner;
    bool tie() const noexcept { return !winner.has_value(); }
    friend bool operator==(const RankCell&, const RankCell&) = default;
};

inline constexpr std::string_view kTieMarker = "~";

struct RankColumn {
    std::string metric;
    Direction direction;
};

struct RankRow {
    std::vector<std::string> key;  ///< comparison key without device_id
    std::vector<RankCell> cells;   ///< one per column
};

struct RankTable {
    std::vector<std::string> key_fields;
    std::vector<RankColumn> columns;
    std::vector<RankRow> rows;
};

/// Best device by mean in `direction`; Tie when its interval intersects the
/// runner-up's. Needs >= 2 distinct devices among `candidates`; throws
/// InsufficientDevices otherwise.
struct DeviceAggregate {
    std::string device_id;
    AggregateMetric agg;
};
RankCell rank_cell(std::span<const DeviceAggregate> candidates, Direction direction);

/// One RankCell per model row (rows sharing every key except device_id).
/// Throws InsufficientDevices when some row has fewer than two devices, and
/// UnknownMetric / a missing device_id key as UnknownMetric.
std::vector<std::pair<std::vector<std::string>, RankCell>> rank_devices(
    const ComparisonTable& table, std::string_view metric, Direction direction);

/// Rank table over several metric columns.
RankTable build_ranking(const ComparisonTable& table, const std::vector<RankColumn>& columns);

/// Higher-better for f1, lower-better for every resource metric.
Direction default_direction(std::string_view metric);

enum class ReportFormat { Csv, Json, Markdown };

std::string_view to_string(ReportFormat format) noexcept;
std::optional<ReportFormat> parse_report_format(std::string_view name) noexcept;
std::string_view file_extension(ReportFormat format) noexcept;

std::string emit(const ComparisonTable& table, ReportFormat format);
std::string emit(const RankTable& table, ReportFormat format);

/// RFC 4180 style field quoting for CSV output.
std::string csv_field(std::string_view cell);
/// Splits CSV text into rows of unquoted cells.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

}  // namespace edgebench
