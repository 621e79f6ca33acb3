#include "edgebench/phase.hpp"

#include <cmath>

#include "edgebench/error.hpp"

namespace edgebench {

std::string_view to_string(Phase phase) noexcept {
    switch (phase) {
        case Phase::Baseline: return "baseline";
        case Phase::DatasetLoad: return "dataset_load";
        case Phase::ModelLoad: return "model_load";
        case Phase::Inference: return "inference";
    }
    return "unknown";
}

std::optional<Phase> parse_phase(std::string_view name) noexcept {
    for (Phase p : kAllPhases) {
        if (to_string(p) == name) return p;
    }
    return std::nullopt;
}

PhaseLog::PhaseLog(std::vector<PhaseInterval> entries) : entries_(std::move(entries)) {
    const PhaseInterval* prev = nullptr;
    for (const auto& e : entries_) {
        if (!std::isfinite(e.start) || !std::isfinite(e.end) || !(e.start < e.end)) {
            throw ProtocolViolation("phase " + std::string(to_string(e.phase)) +
                                    " must satisfy start < end");
        }
        if (prev != nullptr) {
            if (static_cast<int>(e.phase) <= static_cast<int>(prev->phase)) {
                throw ProtocolViolation("phase " + std::string(to_string(e.phase)) +
                                        " out of canonical order or duplicated");
            }
            if (e.start < prev->end) {
                throw ProtocolViolation("phase " + std::string(to_string(e.phase)) +
                                        " overlaps " + std::string(to_string(prev->phase)));
            }
        }
        prev = &e;
    }
    if (!has(Phase::Baseline)) throw ProtocolViolation("missing mandatory baseline phase");
    if (!has(Phase::Inference)) throw ProtocolViolation("missing mandatory inference phase");
}

const PhaseInterval* PhaseLog::find(Phase phase) const noexcept {
    for (const auto& e : entries_) {
        if (e.phase == phase) return &e;
    }
    return nullptr;
}

const PhaseInterval& PhaseLog::at(Phase phase) const {
    if (const auto* e = find(phase)) return *e;
    throw PhaseAbsent(std::string(to_string(phase)));
}

}  // namespace edgebench
