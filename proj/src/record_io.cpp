#include "edgebench/record_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "edgebench/error.hpp"

namespace edgebench {

using nlohmann::json;

json to_json(const RunConfig& c) {
    json j = {{"model_id", c.model_id},
              {"device_id", c.device_id},
              {"framework_id", c.framework_id},
              {"input_size", c.input_size},
              {"batch_size", c.batch_size},
              {"dataset_ref", c.dataset_ref},
              {"repeat_index", c.repeat_index},
              {"seed", c.seed},
              {"baseline_seconds", c.baseline_seconds}};
    j["token_window"] = c.token_window ? json(*c.token_window) : json(nullptr);
    return j;
}

RunConfig config_from_json(const json& j) { return decode_config(j.dump()); }

json to_json(const PhaseLog& phases) {
    json arr = json::array();
    for (const auto& e : phases.entries()) {
        arr.push_back({{"phase", to_string(e.phase)}, {"start", e.start}, {"end", e.end}});
    }
    return arr;
}

PhaseLog phases_from_json(const json& j) {
    if (!j.is_array()) throw EvidenceError("phases must be an array");
    std::vector<PhaseInterval> entries;
    for (const auto& e : j) {
        const auto name = e.at("phase").get<std::string>();
        const auto phase = parse_phase(name);
        if (!phase) throw EvidenceError("unknown phase '" + name + "'");
        entries.push_back(PhaseInterval{*phase, e.at("start").get<double>(), e.at("end").get<double>()});
    }
    return PhaseLog(std::move(entries));
}

json to_json(const MetricSet& m) {
    return {{"f1_percent", m.f1_percent ? json(*m.f1_percent) : json(nullptr)},
            {"inference_time_s", m.inference_time_s},
            {"summed_power_w", m.summed_power_w},
            {"mean_power_w", m.mean_power_w},
            {"energy_j", m.energy_j},
            {"peak_memory_mb", m.peak_memory_mb}};
}

MetricSet metrics_from_json(const json& j) {
    MetricSet m;
    if (auto it = j.find("f1_percent"); it != j.end() && !it->is_null()) m.f1_percent = it->get<double>();
    m.inference_time_s = j.at("inference_time_s").get<double>();
    m.summed_power_w = j.at("summed_power_w").get<double>();
    m.mean_power_w = j.at("mean_power_w").get<double>();
    m.energy_j = j.at("energy_j").get<double>();
    m.peak_memory_mb = j.at("peak_memory_mb").get<double>();
    return m;
}

json to_json(const RunRecord& r, const std::string& trace_file) {
    json memory = json::array();
    for (const auto& s : r.memory) memory.push_back({s.t, s.resident_bytes});
    json preds = nullptr;
    if (r.predictions) {
        preds = json::array();
        for (const auto& p : *r.predictions) {
            preds.push_back({{"input_id", p.input_id}, {"predicted", p.predicted}, {"truth", p.truth}});
        }
    }
    return {{"config", to_json(r.config)},
            {"phases", to_json(r.phases)},
            {"trace_file", trace_file},
            {"trace_rate_hz", r.raw_trace.nominal_rate_hz()},
            {"trace_source", r.raw_trace.source_id()},
            {"baseline",
             {{"watts", r.baseline.watts},
              {"window_seconds", r.baseline.window_seconds},
              {"sample_count", r.baseline.sample_count},
              {"dispersion", r.baseline.dispersion}}},
            {"memory", memory},
            {"predictions", preds},
            {"metrics", to_json(r.metrics)},
            {"warnings", r.warnings},
            {"started_at", r.started_at}};
}

std::string record_stem(std::size_t index, const RunConfig& c) {
    char prefix[16];
    std::snprintf(prefix, sizeof prefix, "%04zu", index);
    std::string stem = std::string(prefix) + "_" + c.model_id + "_" + c.device_id + "_in" +
                       std::to_string(c.input_size) + "_b" + std::to_string(c.batch_size);
    if (c.token_window) stem += "_tw" + std::to_string(*c.token_window);
    stem += "_r" + std::to_string(c.repeat_index);
    for (char& ch : stem) {
        const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') ||
                        ch == '_' || ch == '-' || ch == '.';
        if (!ok) ch = '-';
    }
    return stem;
}

std::filesystem::path save_record(const std::filesystem::path& dir, const std::string& stem,
                                  const RunRecord& record) {
    std::filesystem::create_directories(dir);
    const std::string trace_file = stem + ".trace.csv";
    {
        std::ofstream out(dir / trace_file, std::ios::binary);
        out << serialize_trace(record.raw_trace);
        if (!out) throw EvidenceError("cannot write " + (dir / trace_file).string());
    }
    const auto path = dir / (stem + ".json");
    std::ofstream out(path, std::ios::binary);
    out << to_json(record, trace_file).dump(2) << '\n';
    if (!out) throw EvidenceError("cannot write " + path.string());
    return path;
}

RunRecord load_record(const std::filesystem::path& path) {
    try {
        std::ifstream in(path);
        if (!in) throw EvidenceError("cannot open " + path.string());
        const json j = json::parse(in);
        RunRecord r;
        r.config = config_from_json(j.at("config"));
        r.phases = phases_from_json(j.at("phases"));
        const auto trace_path = path.parent_path() / j.at("trace_file").get<std::string>();
        r.raw_trace = load_trace(trace_path.string());
        const auto& b = j.at("baseline");
        r.baseline = BaselineEstimate{b.at("watts").get<double>(), b.at("window_seconds").get<double>(),
                                      b.at("sample_count").get<std::size_t>(),
                                      b.at("dispersion").get<double>()};
        for (const auto& s : j.at("memory")) {
            r.memory.push_back(MemorySample{s.at(0).get<double>(), s.at(1).get<std::uint64_t>()});
        }
        if (const auto& p = j.at("predictions"); !p.is_null()) {
            PredictionSet preds;
            for (const auto& e : p) {
                preds.push_back(Prediction{e.at("input_id").get<std::string>(),
                                           e.at("predicted").get<std::string>(),
                                           e.at("truth").get<std::string>()});
            }
            r.predictions = std::move(preds);
        }
        r.metrics = metrics_from_json(j.at("metrics"));
        r.warnings = j.at("warnings").get<std::vector<std::string>>();
        r.started_at = j.at("started_at").get<double>();
        return r;
    } catch (const json::exception& e) {
        throw EvidenceError(path.string() + ": " + e.what());
    } catch (const EvidenceError&) {
        throw;
    } catch (const Error& e) {
        throw EvidenceError(path.string() + ": " + e.what());
    }
}

std::vector<StoredRecord> load_records(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> paths;
    std::error_code ec;
    for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") paths.push_back(entry.path());
    }
    std::sort(paths.begin(), paths.end());
    std::vector<StoredRecord> out;
    out.reserve(paths.size());
    for (auto& p : paths) out.push_back(StoredRecord{p, load_record(p)});
    return out;
}

}  // namespace edgebench
