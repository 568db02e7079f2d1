#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dae {

/// Base of every error raised by the library. The CLI maps each subclass
/// onto a distinct process exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid user configuration (layer sizes, hyperparameters, generator kinds).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Bad or missing data: empty datasets, non-finite inputs, unreadable files.
class DataError : public Error {
public:
    using Error::Error;
};

/// A file that does not follow its binary layout. Carries the byte offset
/// at which the problem was detected.
class FormatError : public DataError {
public:
    FormatError(const std::string& what, std::uint64_t offset)
        : DataError(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::uint64_t offset_;
};

/// File dimensions disagree with the requested event layout.
class LayoutMismatchError : public DataError {
public:
    using DataError::DataError;
};

/// Caller broke a precondition: shape mismatch, stale cache, length mismatch.
class ContractError : public Error {
public:
    using Error::Error;
};

/// Distance correlation requested for a constant score vector.
class DegenerateInputError : public ContractError {
public:
    using ContractError::ContractError;
};

/// ABCD prediction with an empty control region.
class UndefinedPredictionError : public ContractError {
public:
    using ContractError::ContractError;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, int epoch)
        : Error(what + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}

    int epoch() const noexcept { return epoch_; }

private:
    int epoch_;
};

}  // namespace dae
