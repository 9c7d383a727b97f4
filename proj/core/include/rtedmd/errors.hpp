#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rtedmd {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid user input: malformed config, inconsistent parameters, bad file.
class ConfigError : public Error {
public:
    using Error::Error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

/// The dictionary lacks an observable an operation needs.
class DictionaryError : public Error {
public:
    using Error::Error;
};

/// Base for failures of the numerics themselves (divergence, rank loss, branch cuts).
class NumericalError : public Error {
public:
    using Error::Error;
};

class IntegrationDiverged : public NumericalError {
public:
    IntegrationDiverged(std::size_t initial_index, std::size_t path_index, std::size_t step)
        : NumericalError("integration diverged at initial state " + std::to_string(initial_index) +
                         ", path " + std::to_string(path_index) + ", step " + std::to_string(step)),
          initial_index_(initial_index), path_index_(path_index), step_(step) {}

    std::size_t initial_index() const noexcept { return initial_index_; }
    std::size_t path_index() const noexcept { return path_index_; }
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t initial_index_;
    std::size_t path_index_;
    std::size_t step_;
};

class RankDeficientError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class ConditioningError : public NumericalError {
public:
    ConditioningError(const std::string& what, double condition)
        : NumericalError(what + " (condition number " + std::to_string(condition) + ")"),
          condition_(condition) {}

    double condition() const noexcept { return condition_; }

private:
    double condition_;
};

/// Principal matrix logarithm undefined: eigenvalue at zero or on the negative real axis.
class LogBranchError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class EmptyDataError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace rtedmd
