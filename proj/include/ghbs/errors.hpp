#pragma once

#include <stdexcept>
#include <string>

namespace ghbs {

struct ReturnMapDivergence : std::runtime_error {
    explicit ReturnMapDivergence(const std::string& msg) : std::runtime_error(msg) {}
};

struct LateralControlFailure : std::runtime_error {
    explicit LateralControlFailure(const std::string& msg) : std::runtime_error(msg) {}
};

struct InvalidInitialState : std::runtime_error {
    explicit InvalidInitialState(const std::string& msg) : std::runtime_error(msg) {}
};

struct StationOutOfRange : std::out_of_range {
    explicit StationOutOfRange(const std::string& msg) : std::out_of_range(msg) {}
};

struct MisfitEvaluationError : std::runtime_error {
    explicit MisfitEvaluationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct OutOfBox : std::domain_error {
    explicit OutOfBox(const std::string& msg) : std::domain_error(msg) {}
};

struct DimensionMismatch : std::invalid_argument {
    explicit DimensionMismatch(const std::string& msg) : std::invalid_argument(msg) {}
};

struct InsufficientSamples : std::invalid_argument {
    explicit InsufficientSamples(const std::string& msg) : std::invalid_argument(msg) {}
};

struct NoFeasibleStart : std::runtime_error {
    explicit NoFeasibleStart(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct StageError : std::runtime_error {
    explicit StageError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace ghbs
