#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace edgebench {

/// Lifecycle phases of a measured run, in canonical order.
enum class Phase { Baseline = 0, DatasetLoad = 1, ModelLoad = 2, Inference = 3 };

inline constexpr std::array<Phase, 4> kAllPhases{Phase::Baseline, Phase::DatasetLoad,
                                                 Phase::ModelLoad, Phase::Inference};

/// Wire name: `baseline`, `dataset_load`, `model_load`, `inference`.
std::string_view to_string(Phase phase) noexcept;
std::optional<Phase> parse_phase(std::string_view name) noexcept;

struct PhaseInterval {
    Phase phase;
    double start;  ///< seconds, inclusive
    double end;    ///< seconds, exclusive

    double duration() const noexcept { return end - start; }
    bool contains(double t) const noexcept { return t >= start && t < end; }
    friend bool operator==(const PhaseInterval&, const PhaseInterval&) = default;
};

/// Start/end of each phase of one run. Construction validates ordering,
/// non-overlap, uniqueness and the mandatory Baseline and Inference phases.
class PhaseLog {
public:
    PhaseLog() = default;
    explicit PhaseLog(std::vector<PhaseInterval> entries);

    const std::vector<PhaseInterval>& entries() const noexcept { return entries_; }
    bool empty() const noexcept { return entries_.empty(); }
    bool has(Phase phase) const noexcept { return find(phase) != nullptr; }

    /// Throws PhaseAbsent when missing.
    const PhaseInterval& at(Phase phase) const;
    const PhaseInterval* find(Phase phase) const noexcept;

    /// End of the last phase (0 for an empty log).
    double end() const noexcept { return entries_.empty() ? 0.0 : entries_.back().end; }

    friend bool operator==(const PhaseLog&, const PhaseLog&) = default;

private:
    std::vector<PhaseInterval> entries_;
};

}  // namespace edgebench
