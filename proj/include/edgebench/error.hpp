#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace edgebench {

/// Base of every error the harness raises. `kind()` is the stable error-class
/// name used in diagnostics and sweep failure records.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& detail)
        : std::runtime_error(kind + ": " + detail), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define EDGEBENCH_DEFINE_ERROR(Name)                                          \
    class Name : public Error {                                               \
    public:                                                                   \
        explicit Name(const std::string& detail = {}) : Error(#Name, detail) {} \
    };

// trace
EDGEBENCH_DEFINE_ERROR(EmptyWindow)
EDGEBENCH_DEFINE_ERROR(PhaseAbsent)
EDGEBENCH_DEFINE_ERROR(InsufficientSamples)
EDGEBENCH_DEFINE_ERROR(EmptyTrace)
EDGEBENCH_DEFINE_ERROR(InvalidTrace)
// metrics
EDGEBENCH_DEFINE_ERROR(EmptyPredictions)
EDGEBENCH_DEFINE_ERROR(NoSamplesInPhase)
EDGEBENCH_DEFINE_ERROR(InvalidDf)
EDGEBENCH_DEFINE_ERROR(InvalidP)
EDGEBENCH_DEFINE_ERROR(EmptyInput)
// runner protocol
EDGEBENCH_DEFINE_ERROR(InvalidConfig)
EDGEBENCH_DEFINE_ERROR(MalformedEvent)
EDGEBENCH_DEFINE_ERROR(UnknownKind)
EDGEBENCH_DEFINE_ERROR(ProtocolViolation)
EDGEBENCH_DEFINE_ERROR(RunnerFailure)
// orchestrator
EDGEBENCH_DEFINE_ERROR(MeterFailure)
EDGEBENCH_DEFINE_ERROR(Timeout)
EDGEBENCH_DEFINE_ERROR(SpawnFailure)
EDGEBENCH_DEFINE_ERROR(InvalidSweep)
EDGEBENCH_DEFINE_ERROR(EvidenceError)
// report
EDGEBENCH_DEFINE_ERROR(EmptyRecords)
EDGEBENCH_DEFINE_ERROR(UnknownMetric)
EDGEBENCH_DEFINE_ERROR(InsufficientDevices)
// cli
EDGEBENCH_DEFINE_ERROR(ManifestError)

#undef EDGEBENCH_DEFINE_ERROR

/// Row-numbered parse errors (1-based line numbers).
class LineError : public Error {
public:
    LineError(std::string kind, std::size_t line_no, const std::string& detail)
        : Error(std::move(kind), "line " + std::to_string(line_no) + ": " + detail),
          line_no_(line_no) {}

    std::size_t line_no() const noexcept { return line_no_; }

private:
    std::size_t line_no_;
};

class MalformedRow : public LineError {
public:
    MalformedRow(std::size_t line_no, const std::string& detail)
        : LineError("MalformedRow", line_no, detail) {}
};

class NonMonotonicTime : public LineError {
public:
    NonMonotonicTime(std::size_t line_no, const std::string& detail)
        : LineError("NonMonotonicTime", line_no, detail) {}
};

}  // namespace edgebench
