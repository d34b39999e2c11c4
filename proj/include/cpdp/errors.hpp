#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cpdp {

/// Base class for all library errors; carries a stable machine-readable code.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(what), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

#define CPDP_DEFINE_ERROR(NAME, CODE)                                        \
    class NAME : public Error {                                              \
    public:                                                                  \
        explicit NAME(const std::string& what) : Error(CODE, what) {}        \
    }

// dataspace
CPDP_DEFINE_ERROR(MissingFileError, "MissingFile");
CPDP_DEFINE_ERROR(MalformedHeaderError, "MalformedHeader");
CPDP_DEFINE_ERROR(TooFewRowsError, "TooFewRows");
CPDP_DEFINE_ERROR(UnknownTargetError, "UnknownTarget");
CPDP_DEFINE_ERROR(TargetTooSmallError, "TargetTooSmall");
CPDP_DEFINE_ERROR(SingleClassTargetError, "SingleClassTarget");

class NonNumericCellError : public Error {
public:
    NonNumericCellError(std::size_t row, std::size_t col, const std::string& what)
        : Error("NonNumericCell", what), row(row), col(col) {}
    std::size_t row;
    std::size_t col;
};

class BadLabelError : public Error {
public:
    BadLabelError(std::size_t row, const std::string& what)
        : Error("BadLabel", what), row(row) {}
    std::size_t row;
};

// learners
CPDP_DEFINE_ERROR(UnknownLearnerError, "UnknownLearner");
CPDP_DEFINE_ERROR(DegenerateTrainingError, "DegenerateTraining");
CPDP_DEFINE_ERROR(ShapeMismatchError, "ShapeMismatch");
CPDP_DEFINE_ERROR(BadConfigurationError, "BadConfiguration");

// metrics
CPDP_DEFINE_ERROR(LengthMismatchError, "LengthMismatch");
CPDP_DEFINE_ERROR(SingleClassError, "SingleClass");

// lower-level search
CPDP_DEFINE_ERROR(BudgetZeroError, "BudgetZero");

// upper-level search
CPDP_DEFINE_ERROR(OutOfRangeError, "OutOfRange");
CPDP_DEFINE_ERROR(DimensionMismatchError, "DimensionMismatch");

// ensemble
CPDP_DEFINE_ERROR(SingletonEnsembleError, "SingletonEnsemble");

// stats
CPDP_DEFINE_ERROR(TooFewSamplesError, "TooFewSamples");
CPDP_DEFINE_ERROR(TooFewGroupsError, "TooFewGroups");

// cli
CPDP_DEFINE_ERROR(ConfigError, "Config");
CPDP_DEFINE_ERROR(InsufficientRepeatsError, "InsufficientRepeats");

#undef CPDP_DEFINE_ERROR

}  // namespace cpdp
