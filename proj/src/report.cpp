#include "edgebench/report.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "edgebench/error.hpp"
#include "edgebench/numfmt.hpp"

namespace edgebench {

using nlohmann::ordered_json;

namespace {

std::optional<long long> as_integer(std::string_view s) {
    long long v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

/// Lexicographic key order; integer-valued fields compare numerically.
struct KeyLess {
    bool operator()(const std::vector<std::string>& a, const std::vector<std::string>& b) const {
        const auto n = std::min(a.size(), b.size());
        for (std::size_t i = 0; i < n; ++i) {
            if (a[i] == b[i]) continue;
            const auto ia = as_integer(a[i]);
            const auto ib = as_integer(b[i]);
            if (ia && ib) return *ia < *ib;
            return a[i] < b[i];
        }
        return a.size() < b.size();
    }
};

bool is_metric(std::string_view name) {
    return std::find(std::begin(kMetricNames), std::end(kMetricNames), name) != std::end(kMetricNames);
}

std::string column_title(std::string_view metric) {
    return std::string(metric) + " (" + std::string(metric_unit(metric)) + ")";
}

ordered_json aggregate_json(const AggregateMetric& agg, int decimals) {
    return {{"mean", agg.mean},         {"ci_low", agg.ci_low},
            {"ci_high", agg.ci_high},   {"n", agg.n},
            {"std_dev", agg.std_dev},   {"formatted", format_interval(agg, decimals)}};
}

std::string md_escape(std::string_view cell) {
    std::string out;
    for (char c : cell) {
        if (c == '|') out += '\\';
        out += c;
    }
    return out;
}

std::string markdown_table(const std::vector<std::string>& header,
                           const std::vector<std::vector<std::string>>& rows) {
    std::string out = "|";
    for (const auto& h : header) out += " " + md_escape(h) + " |";
    out += "\n|";
    for (std::size_t i = 0; i < header.size(); ++i) out += "---|";
    out += '\n';
    for (const auto& row : rows) {
        out += "|";
        for (const auto& c : row) out += " " + md_escape(c) + " |";
        out += '\n';
    }
    return out;
}

std::string csv_table(const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i > 0) out += ',';
            out += csv_field(cells[i]);
        }
        out += '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out;
}

std::string rank_text(const RankCell& cell) {
    return cell.winner ? *cell.winner : std::string(kTieMarker);
}

}  // namespace

std::optional<double> metric_value(const MetricSet& m, std::string_view name) {
    if (name == "f1") return m.f1_percent;
    if (name == "inference_time") return m.inference_time_s;
    if (name == "summed_power") return m.summed_power_w;
    if (name == "mean_power") return m.mean_power_w;
    if (name == "energy") return m.energy_j;
    if (name == "peak_memory") return m.peak_memory_mb;
    throw UnknownMetric(std::string(name));
}

int default_decimals(std::string_view metric) { return metric == "peak_memory" ? 0 : 2; }

std::string_view metric_unit(std::string_view metric) {
    if (metric == "f1") return "%";
    if (metric == "inference_time") return "s";
    if (metric == "summed_power") return "W-sum";
    if (metric == "mean_power") return "W";
    if (metric == "energy") return "J";
    if (metric == "peak_memory") return "MB";
    return "";
}

std::string group_value(const RunConfig& c, std::string_view field) {
    if (field == "device_id") return c.device_id;
    if (field == "model_id") return c.model_id;
    if (field == "framework_id") return c.framework_id;
    if (field == "dataset_ref") return c.dataset_ref;
    if (field == "input_size") return std::to_string(c.input_size);
    if (field == "batch_size") return std::to_string(c.batch_size);
    if (field == "token_window") return c.token_window ? std::to_string(*c.token_window) : "-";
    throw UnknownMetric("unknown grouping field '" + std::string(field) + "'");
}

ComparisonTable build_comparison(std::span<const RunRecord> records,
                                 const std::vector<std::string>& group_by,
                                 const std::vector<std::string>& metrics) {
    if (records.empty()) throw EmptyRecords("no records to compare");
    for (const auto& m : metrics) {
        if (!is_metric(m)) throw UnknownMetric(m);
        const bool any = std::any_of(records.begin(), records.end(), [&](const RunRecord& r) {
            return metric_value(r.metrics, m).has_value();
        });
        if (!any) throw UnknownMetric(m + " (no record carries it)");
    }

    std::map<std::vector<std::string>, std::vector<const RunRecord*>, KeyLess> groups;
    for (const auto& r : records) {
        std::vector<std::string> key;
        key.reserve(group_by.size());
        for (const auto& f : group_by) key.push_back(group_value(r.config, f));
        groups[std::move(key)].push_back(&r);
    }

    ComparisonTable table{group_by, metrics, {}};
    for (const auto& [key, members] : groups) {
        ComparisonRow row{key, {}};
        for (const auto& m : metrics) {
            std::vector<double> values;
            for (const auto* r : members) {
                if (auto v = metric_value(r->metrics, m)) values.push_back(*v);
            }
            row.cells.push_back(values.empty() ? std::nullopt
                                               : std::optional<AggregateMetric>(aggregate(values)));
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

std::string format_interval(const AggregateMetric& agg, int decimals) {
    const std::string mean = format_fixed(agg.mean, decimals);
    std::string lo = format_fixed(agg.ci_low, decimals);
    std::string hi = format_fixed(agg.ci_high, decimals);
    const double mean_r = *parse_double(mean);
    if (*parse_double(lo) > mean_r) lo = mean;
    if (*parse_double(hi) < mean_r) hi = mean;
    return mean + " [" + lo + ", " + hi + "]";
}

std::string_view to_string(Direction d) noexcept {
    return d == Direction::HigherBetter ? "higher_better" : "lower_better";
}

Direction default_direction(std::string_view metric) {
    return metric == "f1" ? Direction::HigherBetter : Direction::LowerBetter;
}

RankCell rank_cell(std::span<const DeviceAggregate> candidates, Direction direction) {
    std::set<std::string> devices;
    for (const auto& c : candidates) devices.insert(c.device_id);
    if (devices.size() < 2 || devices.size() != candidates.size()) {
        throw InsufficientDevices("ranking needs >= 2 distinct devices, got " +
                                  std::to_string(devices.size()));
    }
    std::vector<const DeviceAggregate*> order;
    for (const auto& c : candidates) order.push_back(&c);
    std::stable_sort(order.begin(), order.end(), [&](const auto* a, const auto* b) {
        return direction == Direction::HigherBetter ? a->agg.mean > b->agg.mean
                                                    : a->agg.mean < b->agg.mean;
    });
    const auto& best = order[0]->agg;
    const auto& second = order[1]->agg;
    const bool overlap = std::max(best.ci_low, second.ci_low) <= std::min(best.ci_high, second.ci_high);
    if (overlap) return RankCell{};
    return RankCell{order[0]->device_id};
}

std::vector<std::pair<std::vector<std::string>, RankCell>> rank_devices(
    const ComparisonTable& table, std::string_view metric, Direction direction) {
    const auto dev_it = std::find(table.group_by.begin(), table.group_by.end(), "device_id");
    if (dev_it == table.group_by.end()) throw UnknownMetric("comparison table is not grouped by device_id");
    const auto dev_col = static_cast<std::size_t>(dev_it - table.group_by.begin());
    const auto met_it = std::find(table.metrics.begin(), table.metrics.end(), metric);
    if (met_it == table.metrics.end()) throw UnknownMetric(std::string(metric));
    const auto met_col = static_cast<std::size_t>(met_it - table.metrics.begin());

    std::map<std::vector<std::string>, std::vector<DeviceAggregate>, KeyLess> models;
    for (const auto& row : table.rows) {
        std::vector<std::string> key;
        for (std::size_t i = 0; i < row.key.size(); ++i) {
            if (i != dev_col) key.push_back(row.key[i]);
        }
        auto& bucket = models[key];
        if (row.cells[met_col]) bucket.push_back(DeviceAggregate{row.key[dev_col], *row.cells[met_col]});
    }

    std::vector<std::pair<std::vector<std::string>, RankCell>> out;
    for (const auto& [key, candidates] : models) out.emplace_back(key, rank_cell(candidates, direction));
    return out;
}

RankTable build_ranking(const ComparisonTable& table, const std::vector<RankColumn>& columns) {
    RankTable out;
    for (const auto& f : table.group_by) {
        if (f != "device_id") out.key_fields.push_back(f);
    }
    out.columns = columns;
    std::map<std::vector<std::string>, std::vector<RankCell>, KeyLess> rows;
    for (const auto& col : columns) {
        for (auto& [key, cell] : rank_devices(table, col.metric, col.direction)) {
            rows[key].push_back(cell);
        }
    }
    for (auto& [key, cells] : rows) {
        if (cells.size() != columns.size()) {
            throw InsufficientDevices("model row lacks data for some ranked metric");
        }
        out.rows.push_back(RankRow{key, std::move(cells)});
    }
    return out;
}

std::string_view to_string(ReportFormat f) noexcept {
    switch (f) {
        case ReportFormat::Csv: return "csv";
        case ReportFormat::Json: return "json";
        case ReportFormat::Markdown: return "markdown";
    }
    return "csv";
}

std::optional<ReportFormat> parse_report_format(std::string_view name) noexcept {
    if (name == "csv") return ReportFormat::Csv;
    if (name == "json") return ReportFormat::Json;
    if (name == "markdown" || name == "md") return ReportFormat::Markdown;
    return std::nullopt;
}

std::string_view file_extension(ReportFormat f) noexcept {
    return f == ReportFormat::Markdown ? "md" : to_string(f);
}

std::string emit(const ComparisonTable& table, ReportFormat format) {
    if (format == ReportFormat::Json) {
        ordered_json rows = ordered_json::array();
        for (const auto& row : table.rows) {
            ordered_json key = ordered_json::object();
            for (std::size_t i = 0; i < table.group_by.size(); ++i) key[table.group_by[i]] = row.key[i];
            ordered_json cells = ordered_json::object();
            for (std::size_t i = 0; i < table.metrics.size(); ++i) {
                const auto& m = table.metrics[i];
                cells[m] = row.cells[i] ? aggregate_json(*row.cells[i], default_decimals(m))
                                        : ordered_json(nullptr);
            }
            rows.push_back({{"key", key}, {"cells", cells}});
        }
        ordered_json units = ordered_json::object();
        for (const auto& m : table.metrics) units[m] = metric_unit(m);
        ordered_json doc = {{"kind", "comparison"},
                            {"group_by", table.group_by},
                            {"metrics", table.metrics},
                            {"units", units},
                            {"rows", rows}};
        return doc.dump(2) + "\n";
    }

    std::vector<std::string> header = table.group_by;
    for (const auto& m : table.metrics) header.push_back(column_title(m));
    std::vector<std::vector<std::string>> rows;
    for (const auto& row : table.rows) {
        std::vector<std::string> cells = row.key;
        for (std::size_t i = 0; i < table.metrics.size(); ++i) {
            cells.push_back(row.cells[i] ? format_interval(*row.cells[i], default_decimals(table.metrics[i]))
                                         : "n/a");
        }
        rows.push_back(std::move(cells));
    }
    return format == ReportFormat::Csv ? csv_table(header, rows) : markdown_table(header, rows);
}

std::string emit(const RankTable& table, ReportFormat format) {
    if (format == ReportFormat::Json) {
        ordered_json columns = ordered_json::array();
        for (const auto& c : table.columns) {
            columns.push_back({{"metric", c.metric}, {"direction", to_string(c.direction)}});
        }
        ordered_json rows = ordered_json::array();
        for (const auto& row : table.rows) {
            ordered_json key = ordered_json::object();
            for (std::size_t i = 0; i < table.key_fields.size(); ++i) key[table.key_fields[i]] = row.key[i];
            ordered_json cells = ordered_json::object();
            for (std::size_t i = 0; i < table.columns.size(); ++i) {
                const auto& cell = row.cells[i];
                cells[table.columns[i].metric] = {
                    {"winner", cell.winner ? ordered_json(*cell.winner) : ordered_json(nullptr)},
                    {"tie", cell.tie()},
                    {"text", rank_text(cell)}};
            }
            rows.push_back({{"key", key}, {"cells", cells}});
        }
        ordered_json doc = {{"kind", "ranking"},
                            {"key_fields", table.key_fields},
                            {"columns", columns},
                            {"tie_marker", kTieMarker},
                            {"rows", rows}};
        return doc.dump(2) + "\n";
    }

    std::vector<std::string> header = table.key_fields;
    for (const auto& c : table.columns) {
        header.push_back(c.metric + (c.direction == Direction::HigherBetter ? " ↑" : " ↓"));
    }
    std::vector<std::vector<std::string>> rows;
    for (const auto& row : table.rows) {
        std::vector<std::string> cells = row.key;
        for (const auto& c : row.cells) cells.push_back(rank_text(c));
        rows.push_back(std::move(cells));
    }
    return format == ReportFormat::Csv ? csv_table(header, rows) : markdown_table(header, rows);
}

std::string csv_field(std::string_view cell) {
    if (cell.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(cell);
    std::string out = "\"";
    for (char c : cell) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string cell;
    bool quoted = false;
    bool any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
                cell += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cell += c;
            }
            continue;
        }
        any = true;
        if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            row.push_back(std::move(cell));
            cell.clear();
        } else if (c == '\n') {
            row.push_back(std::move(cell));
            cell.clear();
            rows.push_back(std::move(row));
            row.clear();
            any = false;
        } else if (c != '\r') {
            cell += c;
        }
    }
    if (any || !cell.empty() || !row.empty()) {
        row.push_back(std::move(cell));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace edgebench
