#pragma once

#include <stdexcept>
#include <string>

namespace ctqw {

// Base for all library errors. `name()` is the stable identifier printed on
// stderr by the CLI; `exit_code()` maps onto the process exit status
// (2 = invalid input, 1 = numeric failure).
class Error : public std::runtime_error {
public:
    Error(std::string name, const std::string& what)
        : std::runtime_error(name + ": " + what), name_(std::move(name)) {}

    const std::string& name() const noexcept { return name_; }
    virtual int exit_code() const noexcept { return 2; }

private:
    std::string name_;
};

// Invalid caller input (bad spec, unknown vertex, bad flags, ...).
class InputError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 2; }
};

// Numeric or internal failure (eigensolver did not converge, inconsistent
// partition data, ...).
class NumericError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 1; }
};

#define CTQW_INPUT_ERROR(NAME)                                        \
    class NAME : public InputError {                                  \
    public:                                                           \
        explicit NAME(const std::string& what) : InputError(#NAME, what) {} \
    }

#define CTQW_NUMERIC_ERROR(NAME)                                      \
    class NAME : public NumericError {                                \
    public:                                                           \
        explicit NAME(const std::string& what) : NumericError(#NAME, what) {} \
    }

CTQW_INPUT_ERROR(InvalidSpec);
CTQW_INPUT_ERROR(UnknownVertex);
CTQW_INPUT_ERROR(LevelOutOfRange);
CTQW_INPUT_ERROR(InvalidOracle);
CTQW_INPUT_ERROR(NonPositiveGamma);
CTQW_INPUT_ERROR(InvalidStage);
CTQW_INPUT_ERROR(UnknownScenario);
CTQW_INPUT_ERROR(UnknownTable);
CTQW_INPUT_ERROR(DimensionMismatch);
CTQW_INPUT_ERROR(EmptyWindow);
CTQW_INPUT_ERROR(InvalidSchedule);
CTQW_INPUT_ERROR(InvalidConfig);

CTQW_NUMERIC_ERROR(NotEquitable);
CTQW_NUMERIC_ERROR(ConvergenceFailure);
CTQW_NUMERIC_ERROR(NoCrossing);
CTQW_NUMERIC_ERROR(DegenerateBlockGround);
CTQW_NUMERIC_ERROR(ThresholdNotMetAtCenter);
CTQW_NUMERIC_ERROR(ModelBuildFailure);

#undef CTQW_INPUT_ERROR
#undef CTQW_NUMERIC_ERROR

} // namespace ctqw
