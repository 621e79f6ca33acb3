#include "edgebench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <boost/math/distributions/students_t.hpp>

#include "edgebench/error.hpp"

namespace edgebench {

namespace {

struct ClassCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
};

double ratio_or_zero(std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double f1_from_counts(const ClassCounts& c) {
    const double precision = ratio_or_zero(c.tp, c.tp + c.fp);
    const double recall = ratio_or_zero(c.tp, c.tp + c.fn);
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

double f1_score(std::span<const Prediction> preds, F1Averaging averaging) {
    if (preds.empty()) throw EmptyPredictions("f1 requires at least one prediction");

    std::map<std::string, ClassCounts> classes;
    for (const auto& p : preds) {
        if (p.predicted == p.truth) {
            ++classes[p.truth].tp;
        } else {
            ++classes[p.predicted].fp;
            ++classes[p.truth].fn;
        }
    }

    if (averaging == F1Averaging::Micro) {
        ClassCounts pooled;
        for (const auto& [label, c] : classes) {
            pooled.tp += c.tp;
            pooled.fp += c.fp;
            pooled.fn += c.fn;
        }
        return 100.0 * f1_from_counts(pooled);
    }

    double sum = 0.0;
    for (const auto& [label, c] : classes) sum += f1_from_counts(c);
    return 100.0 * (sum / static_cast<double>(classes.size()));
}

double phase_duration(const PhaseLog& phases, Phase phase) { return phases.at(phase).duration(); }

double peak_memory(std::span<const MemorySample> samples, const PhaseLog& phases, Phase phase) {
    const auto& interval = phases.at(phase);
    std::optional<std::uint64_t> peak;
    for (const auto& s : samples) {
        if (interval.contains(s.t)) peak = std::max(peak.value_or(0), s.resident_bytes);
    }
    if (!peak) throw NoSamplesInPhase(std::string(to_string(phase)));
    return static_cast<double>(*peak) / kBytesPerMB;
}

double t_quantile(std::int64_t df, double p) {
    if (df < 1) throw InvalidDf("degrees of freedom must be >= 1, got " + std::to_string(df));
    if (!(p > 0.0 && p < 1.0)) throw InvalidP("probability must lie in (0, 1)");
    const boost::math::students_t dist(static_cast<double>(df));
    return boost::math::quantile(dist, p);
}

AggregateMetric aggregate(std::span<const double> values, double confidence) {
    if (values.empty()) throw EmptyInput("aggregate of an empty sample");
    if (!(confidence > 0.0 && confidence < 1.0)) throw InvalidP("confidence must lie in (0, 1)");

    const auto n = values.size();
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mean = sum / static_cast<double>(n);
    if (n == 1) return AggregateMetric{mean, mean, mean, 1, 0.0};

    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    const double half = t_quantile(static_cast<std::int64_t>(n - 1), (1.0 + confidence) / 2.0) *
                        sd / std::sqrt(static_cast<double>(n));
    return AggregateMetric{mean, mean - half, mean + half, n, sd};
}

}  // namespace edgebench
