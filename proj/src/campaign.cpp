#include "edgebench/campaign.hpp"

#include <cstdlib>
#include <fstream>
#include <ostream>
#include <set>

#include "edgebench/error.hpp"
#include "edgebench/numfmt.hpp"
#include "edgebench/record_io.hpp"

namespace edgebench {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kCampaignFile = "campaign.json";
constexpr const char* kRecordsDir = "records";

template <typename T>
T field(const json& j, const std::string& path, const char* key, const T& fallback) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw ManifestError("field '" + path + key + "' has the wrong type");
    }
}

template <typename T>
T required(const json& j, const std::string& path, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) throw ManifestError("missing required field '" + path + key + "'");
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw ManifestError("field '" + path + key + "' has the wrong type");
    }
}

fs::path resolve(const fs::path& base, const fs::path& p) {
    return p.is_absolute() ? p : base / p;
}

std::vector<ReportFormat> parse_formats(const std::vector<std::string>& names) {
    std::vector<ReportFormat> out;
    for (const auto& n : names) {
        auto f = parse_report_format(n);
        if (!f) throw ManifestError("unknown report format '" + n + "' in 'report_formats'");
        out.push_back(*f);
    }
    return out;
}

std::vector<std::string> metrics_present(std::span<const RunRecord> records) {
    std::vector<std::string> out;
    for (auto name : kMetricNames) {
        const bool any = std::any_of(records.begin(), records.end(), [&](const RunRecord& r) {
            return metric_value(r.metrics, name).has_value();
        });
        if (any) out.emplace_back(name);
    }
    return out;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
    if (!out) throw EvidenceError("cannot write " + path.string());
}

std::string summary_line(std::size_t index, std::size_t total, const RunRecord& r) {
    const auto& m = r.metrics;
    std::string line = "[ok]   " + std::to_string(index + 1) + "/" + std::to_string(total) + " " +
                       cell_key(r.config) + " r" + std::to_string(r.config.repeat_index) +
                       ": time " + format_fixed(m.inference_time_s, default_decimals("inference_time")) +
                       " s, energy " + format_fixed(m.energy_j, default_decimals("energy")) +
                       " J, mean power " + format_fixed(m.mean_power_w, default_decimals("mean_power")) +
                       " W, peak memory " +
                       format_fixed(m.peak_memory_mb, default_decimals("peak_memory")) + " MB";
    if (m.f1_percent) line += ", f1 " + format_fixed(*m.f1_percent, default_decimals("f1")) + " %";
    for (const auto& w : r.warnings) line += "\n       warning: " + w;
    return line;
}

std::string mismatch_detail(const MetricSet& stored, const MetricSet& fresh) {
    std::string out;
    for (auto name : kMetricNames) {
        const auto a = metric_value(stored, name);
        const auto b = metric_value(fresh, name);
        if (a != b) {
            if (!out.empty()) out += ", ";
            out += std::string(name) + " stored " + (a ? format_shortest(*a) : "none") +
                   " recomputed " + (b ? format_shortest(*b) : "none");
        }
    }
    return out;
}

/// Removes record files (`NNNN_*.json` / `NNNN_*.trace.csv`) left by an earlier run.
void clear_previous_records(const fs::path& dir, std::ostream& log) {
    std::size_t removed = 0;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(dir, ec)) {
        const auto name = entry.path().filename().string();
        const bool numbered = name.size() > 5 && std::all_of(name.begin(), name.begin() + 4, ::isdigit) &&
                              name[4] == '_';
        const bool ours = name.ends_with(".json") || name.ends_with(".trace.csv");
        if (entry.is_regular_file() && numbered && ours && fs::remove(entry.path(), ec)) ++removed;
    }
    if (removed > 0) log << "note: removed " << removed << " file(s) from a previous run\n";
}

}  // namespace

SyntheticRunnerOptions synthetic_options_from_json(const json& j) {
    SyntheticRunnerOptions o;
    if (j.is_null()) return o;
    if (!j.is_object()) throw ManifestError("field 'runner.synthetic' must be an object");
    const std::string p = "runner.synthetic.";
    o.dataset_load_seconds = field(j, p, "dataset_load_seconds", o.dataset_load_seconds);
    o.model_load_seconds = field(j, p, "model_load_seconds", o.model_load_seconds);
    o.inference_seconds = field(j, p, "inference_seconds", o.inference_seconds);
    o.seconds_per_unit = field(j, p, "seconds_per_unit", o.seconds_per_unit);
    o.inputs = field(j, p, "inputs", o.inputs);
    o.error_rate = field(j, p, "error_rate", o.error_rate);
    o.emit_predictions = field(j, p, "emit_predictions", o.emit_predictions);
    if (auto name = field<std::string>(j, p, "fatal_in", ""); !name.empty()) {
        o.fatal_in = parse_phase(name);
        if (!o.fatal_in) throw ManifestError("unknown phase in '" + p + "fatal_in'");
    }
    if (auto it = j.find("fail_input_size"); it != j.end() && !it->is_null()) {
        o.fail_input_size = field<std::int64_t>(j, p, "fail_input_size", 0);
    }
    o.idle_mb = field(j, p, "idle_mb", o.idle_mb);
    o.model_mb = field(j, p, "model_mb", o.model_mb);
    o.inference_mb = field(j, p, "inference_mb", o.inference_mb);
    if (!(o.inference_seconds > 0.0)) throw ManifestError("'" + p + "inference_seconds' must be > 0");
    return o;
}

CampaignManifest parse_manifest(const json& j, const fs::path& base_dir) {
    if (!j.is_object()) throw ManifestError("manifest must be a JSON object");
    CampaignManifest m;
    m.campaign = field<std::string>(j, "", "campaign", "campaign");

    const auto runner = j.find("runner");
    if (runner == j.end() || !runner->is_object()) throw ManifestError("missing required field 'runner'");
    m.runner_command = required<std::vector<std::string>>(*runner, "runner.", "command");
    if (m.runner_command.empty() || m.runner_command.front().empty()) {
        throw ManifestError("field 'runner.command' must name a program");
    }
    if (auto s = runner->find("synthetic"); s != runner->end()) m.synthetic = synthetic_options_from_json(*s);
    if (auto t = runner->find("timeout_seconds"); t != runner->end() && !t->is_null()) {
        m.timeout_seconds = field<double>(*runner, "runner.", "timeout_seconds", 0.0);
        if (!(*m.timeout_seconds > 0.0)) throw ManifestError("field 'runner.timeout_seconds' must be > 0");
    }

    const auto meter = required<std::string>(j, "", "meter");
    try {
        m.meter = parse_meter_spec(meter);
    } catch (const Error& e) {
        throw ManifestError(std::string("field 'meter': ") + e.what());
    }
    if (auto* r = std::get_if<ReplayMeter>(&m.meter)) r->path = resolve(base_dir, r->path).string();
    if (auto* l = std::get_if<LiveMeter>(&m.meter)) l->path = resolve(base_dir, l->path).string();

    const auto base = j.find("base_config");
    if (base == j.end() || !base->is_object()) throw ManifestError("missing required field 'base_config'");
    const std::string p = "base_config.";
    RunConfig& c = m.sweep.base_config;
    c.model_id = required<std::string>(*base, p, "model_id");
    c.device_id = required<std::string>(*base, p, "device_id");
    c.framework_id = field<std::string>(*base, p, "framework_id", "");
    c.dataset_ref = field<std::string>(*base, p, "dataset_ref", "");
    c.input_size = field<std::int64_t>(*base, p, "input_size", 1);
    c.batch_size = field<std::int64_t>(*base, p, "batch_size", 1);
    if (auto it = base->find("token_window"); it != base->end() && !it->is_null()) {
        c.token_window = field<std::int64_t>(*base, p, "token_window", 1);
    }
    c.seed = field<std::uint64_t>(*base, p, "seed", 0);
    c.baseline_seconds = field<double>(*base, p, "baseline_seconds", kDefaultBaselineWindowSeconds);

    m.sweep.grid = field<std::map<std::string, std::vector<std::int64_t>>>(j, "", "grid", {});
    m.sweep.repeats = field<std::int64_t>(j, "", "repeats", kDefaultRepeats);
    m.sweep.cooling_seconds = field<double>(j, "", "cooling_seconds", kDefaultCoolingSeconds);
    try {
        m.sweep.validate();
    } catch (const Error& e) {
        throw ManifestError(e.what());
    }

    m.output_dir = resolve(base_dir, required<std::string>(j, "", "output_dir"));
    if (auto it = j.find("report_formats"); it != j.end()) {
        m.report_formats = parse_formats(field<std::vector<std::string>>(j, "", "report_formats", {}));
    }
    m.group_by = field<std::vector<std::string>>(j, "", "group_by", m.group_by);
    for (const auto& g : m.group_by) {
        if (std::find(std::begin(kGroupFields), std::end(kGroupFields), g) == std::end(kGroupFields)) {
            throw ManifestError("unknown grouping field '" + g + "' in 'group_by'");
        }
    }
    m.abort_on_error = field<bool>(j, "", "abort_on_error", false);
    return m;
}

CampaignManifest load_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ManifestError("cannot open manifest '" + path.string() + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ManifestError(std::string("manifest is not valid JSON: ") + e.what());
    }
    return parse_manifest(j, fs::absolute(path).parent_path());
}

std::unique_ptr<RunnerLauncher> make_launcher(const CampaignManifest& m) {
    if (m.runner_command.size() == 1 && m.runner_command.front() == kBuiltinSyntheticRunner) {
        return std::make_unique<SyntheticLauncher>(m.synthetic);
    }
    return std::make_unique<ProcessLauncher>(m.runner_command);
}

std::vector<std::string> write_reports(const fs::path& dir, std::span<const RunRecord> records,
                                       const std::vector<std::string>& group_by,
                                       const std::vector<ReportFormat>& formats, std::ostream& log) {
    std::vector<std::string> written;
    const auto table = build_comparison(records, group_by, metrics_present(records));
    std::optional<RankTable> ranking;
    if (std::find(group_by.begin(), group_by.end(), "device_id") != group_by.end()) {
        std::vector<RankColumn> columns;
        for (const auto& m : table.metrics) columns.push_back(RankColumn{m, default_direction(m)});
        try {
            ranking = build_ranking(table, columns);
        } catch (const InsufficientDevices&) {
            log << "note: fewer than two devices per row; ranking report skipped\n";
        }
    }
    for (auto f : formats) {
        const std::string ext(file_extension(f));
        write_file(dir / ("comparison." + ext), emit(table, f));
        written.push_back("comparison." + ext);
        if (ranking) {
            write_file(dir / ("ranking." + ext), emit(*ranking, f));
            written.push_back("ranking." + ext);
        }
    }
    return written;
}

int cmd_run(const fs::path& manifest_path, const RunFlags& flags, std::ostream& out, std::ostream& err) {
    CampaignManifest m;
    std::unique_ptr<RunnerLauncher> launcher;
    try {
        m = load_manifest(manifest_path);
        if (flags.repeats) m.sweep.repeats = *flags.repeats;
        if (flags.cooling) m.sweep.cooling_seconds = *flags.cooling;
        if (flags.seed) m.sweep.base_config.seed = *flags.seed;
        if (!flags.formats.empty()) m.report_formats = flags.formats;
        if (const char* env = std::getenv(std::string(kOutputDirEnv).c_str()); env && *env) {
            m.output_dir = env;
        }
        try {
            m.sweep.validate();
        } catch (const Error& e) {
            throw ManifestError(e.what());
        }
        launcher = make_launcher(m);
        std::error_code ec;
        fs::create_directories(m.output_dir / kRecordsDir, ec);
        clear_previous_records(m.output_dir / kRecordsDir, out);
        const auto probe = m.output_dir / ".write-probe";
        std::ofstream(probe) << "";
        if (ec || !fs::exists(probe)) {
            throw ManifestError("output directory '" + m.output_dir.string() + "' is not writable");
        }
        fs::remove(probe, ec);
    } catch (const Error& e) {
        err << "edgebench run: " << e.what() << '\n';
        return 2;
    }

    const auto records_dir = m.output_dir / kRecordsDir;
    SweepOptions options;
    options.abort_on_error = m.abort_on_error;
    options.timeout_seconds = m.timeout_seconds;
    std::size_t saved = 0;
    std::vector<RunRecord> persisted;
    options.on_run = [&](std::size_t i, std::size_t total, const RunRecord* r, const SweepFailure* f) {
        if (r != nullptr) {
            save_record(records_dir, record_stem(i, r->config), *r);
            ++saved;
            out << summary_line(i, total, *r) << '\n';
        } else {
            out << "[fail] " << i + 1 << "/" << total << " " << cell_key(f->config) << " r"
                << f->config.repeat_index << ": " << f->message << '\n';
        }
        out.flush();
    };

    SweepResult result;
    try {
        result = execute_sweep(m.sweep, m.meter, *launcher, options);
    } catch (const Error& e) {
        err << "edgebench run: " << e.what() << '\n';
        return 2;
    }

    {
        json meta = {{"campaign", m.campaign}, {"group_by", m.group_by}, {"report_formats", json::array()}};
        for (auto f : m.report_formats) meta["report_formats"].push_back(to_string(f));
        write_file(m.output_dir / kCampaignFile, meta.dump(2) + "\n");
    }
    if (!result.records.empty()) {
        try {
            // reports are built from the persisted evidence so that analyze reproduces them
            std::vector<RunRecord> stored;
            for (auto& s : load_records(records_dir)) stored.push_back(std::move(s.record));
            for (const auto& name : write_reports(m.output_dir, stored, m.group_by, m.report_formats, out)) {
                out << "wrote " << (m.output_dir / name).string() << '\n';
            }
        } catch (const Error& e) {
            err << "edgebench run: report generation failed: " << e.what() << '\n';
            return 1;
        }
    }

    out << "campaign '" << m.campaign << "': " << saved << " run(s) recorded, " << result.failures.size()
        << " failed" << (result.aborted ? " (aborted)" : "") << '\n';
    for (const auto& f : result.failures) {
        out << "  failed: " << cell_key(f.config) << " r" << f.config.repeat_index << " [" << f.error_kind
            << "] " << f.message << '\n';
    }
    if (!result.failures.empty() && !flags.keep_going) return 1;
    return 0;
}

int cmd_analyze(const fs::path& dir, const std::vector<ReportFormat>& format_flags, std::ostream& out,
                std::ostream& err) {
    if (!fs::is_directory(dir)) {
        err << "edgebench analyze: '" << dir.string() << "' is not a directory\n";
        return 2;
    }
    const auto records_dir = fs::is_directory(dir / kRecordsDir) ? dir / kRecordsDir : dir;

    std::vector<std::string> group_by = kDefaultGroupBy;
    std::vector<ReportFormat> formats{ReportFormat::Csv, ReportFormat::Json, ReportFormat::Markdown};
    if (std::ifstream meta_in(dir / kCampaignFile); meta_in) {
        try {
            const json meta = json::parse(meta_in);
            group_by = meta.value("group_by", group_by);
            formats = parse_formats(meta.value("report_formats", std::vector<std::string>{}));
        } catch (const std::exception& e) {
            err << "edgebench analyze: unreadable " << kCampaignFile << ": " << e.what() << '\n';
            return 2;
        }
    }
    if (!format_flags.empty()) formats = format_flags;

    std::vector<fs::path> paths;
    for (const auto& entry : fs::directory_iterator(records_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json" &&
            entry.path().filename() != kCampaignFile) {
            paths.push_back(entry.path());
        }
    }
    std::sort(paths.begin(), paths.end());
    if (paths.empty()) {
        err << "edgebench analyze: no records in '" << records_dir.string() << "'\n";
        return 2;
    }

    std::vector<RunRecord> records;
    bool corrupt = false;
    for (const auto& p : paths) {
        try {
            RunRecord r = load_record(p);
            const auto baseline = recompute_baseline(r);
            const auto metrics = recompute_metrics(r);
            if (!(baseline == r.baseline)) {
                err << "edgebench analyze: " << p.string() << ": stored baseline differs from recomputed\n";
                corrupt = true;
            } else if (!(metrics == r.metrics)) {
                err << "edgebench analyze: " << p.string() << ": stored metrics differ from recomputed ("
                    << mismatch_detail(r.metrics, metrics) << ")\n";
                corrupt = true;
            }
            records.push_back(std::move(r));
        } catch (const Error& e) {
            err << "edgebench analyze: " << p.string() << ": " << e.what() << '\n';
            corrupt = true;
        }
    }
    if (corrupt) return 1;

    try {
        for (const auto& name : write_reports(dir, records, group_by, formats, out)) {
            out << "wrote " << (dir / name).string() << '\n';
        }
    } catch (const Error& e) {
        err << "edgebench analyze: " << e.what() << '\n';
        return 1;
    }
    out << "analyzed " << records.size() << " record(s); evidence consistent\n";
    return 0;
}

int cmd_trace(const std::string& sub, const fs::path& file, const TraceFlags& flags, std::ostream& out,
              std::ostream& err) {
    static const std::set<std::string> kSubs{"baseline", "energy", "slice", "summed", "mean"};
    if (!kSubs.count(sub)) {
        err << "edgebench trace: unknown subcommand '" << sub << "'\n";
        return 2;
    }
    PowerTrace trace;
    try {
        trace = load_trace(file.string());
    } catch (const Error& e) {
        err << "edgebench trace: " << e.what() << '\n';
        return 2;
    }

    std::optional<Phase> phase;
    if (flags.phase) {
        phase = parse_phase(*flags.phase);
        if (!phase) {
            err << "edgebench trace: unknown phase '" << *flags.phase << "'\n";
            return 2;
        }
    }
    if (sub == "slice" && !phase) {
        err << "edgebench trace slice: --phase is required\n";
        return 2;
    }
    if (phase && !flags.phases_file) {
        err << "edgebench trace: --phase needs a phase file (--phases)\n";
        return 2;
    }

    try {
        if (phase) {
            std::ifstream in(*flags.phases_file);
            if (!in) {
                err << "edgebench trace: cannot open phase file '" << flags.phases_file->string() << "'\n";
                return 2;
            }
            json j;
            try {
                j = json::parse(in);
            } catch (const json::parse_error& e) {
                err << "edgebench trace: phase file is not valid JSON: " << e.what() << '\n';
                return 2;
            }
            const PhaseLog phases = phases_from_json(j.is_object() ? j.at("phases") : j);
            trace = slice_by_phase(trace, phases, *phase);
        }

        if (sub == "baseline") {
            const auto b = estimate_baseline(trace, flags.window, flags.window_start);
            out << format_number(b.watts) << '\n';
        } else if (sub == "energy") {
            out << format_number(integrate_energy(trace)) << '\n';
        } else if (sub == "summed") {
            out << format_number(summed_power(trace)) << '\n';
        } else if (sub == "mean") {
            out << format_number(mean_power(trace)) << '\n';
        } else {
            out << serialize_trace(trace);
        }
    } catch (const Error& e) {
        err << "edgebench trace: " << e.what() << '\n';
        return e.kind() == "EvidenceError" || e.kind() == "PhaseAbsent" || e.kind() == "ProtocolViolation" ? 2 : 1;
    } catch (const json::exception& e) {
        err << "edgebench trace: malformed phase file: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

int cmd_replay(const fs::path& file, double speed, std::ostream& out, std::ostream& err) {
    std::unique_ptr<MeterStream> stream;
    try {
        stream = replay_trace(file.string(), speed);
        std::stop_source never;
        while (auto s = stream->next(never.get_token())) {
            out << format_shortest(s->t) << ',' << format_shortest(s->watts) << '\n';
            out.flush();
        }
    } catch (const Error& e) {
        err << "edgebench replay: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

}  // namespace edgebench
