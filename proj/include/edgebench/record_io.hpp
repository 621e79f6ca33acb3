#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "edgebench/orchestrator.hpp"

namespace edgebench {

nlohmann::json to_json(const RunConfig& config);
RunConfig config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const PhaseLog& phases);
PhaseLog phases_from_json(const nlohmann::json& j);

nlohmann::json to_json(const MetricSet& metrics);
MetricSet metrics_from_json(const nlohmann::json& j);

/// Record body without the raw trace; `trace_file` names the sidecar.
nlohmann::json to_json(const RunRecord& record, const std::string& trace_file);

/// A persisted record and where it came from.
struct StoredRecord {
    std::filesystem::path path;
    RunRecord record;
};

/// Writes `<stem>.json` and the `<stem>.trace.csv` sidecar (watts format) into `dir`.
std::filesystem::path save_record(const std::filesystem::path& dir, const std::string& stem,
                                  const RunRecord& record);

/// Reads one record file and its sidecar. Throws EvidenceError.
RunRecord load_record(const std::filesystem::path& path);

/// Every `*.json` record in `dir`, in file-name order.
std::vector<StoredRecord> load_records(const std::filesystem::path& dir);

/// File stem for a run: `NNNN_<model>_<device>_<params>_rK`, filesystem-safe.
std::string record_stem(std::size_t index, const RunConfig& config);

}  // namespace edgebench
