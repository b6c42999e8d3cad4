#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace thyroid {

// Exception hierarchy. The CLI maps each branch to its own exit status.

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

// A mapped column is missing from the CSV header.
class SchemaError : public DataError {
public:
    using DataError::DataError;
};

// A single cell failed to parse. Carries the 0-based data row and field name.
class RowError : public DataError {
public:
    RowError(std::size_t row, std::string field, const std::string& what)
        : DataError("row " + std::to_string(row) + ", field '" + field + "': " + what),
          row_(row),
          field_(std::move(field)) {}

    std::size_t row() const noexcept { return row_; }
    const std::string& field() const noexcept { return field_; }

private:
    std::size_t row_;
    std::string field_;
};

class EmptyDatasetError : public DataError {
public:
    using DataError::DataError;
};

class ComputationError : public Error {
public:
    using Error::Error;
};

// Invalid numeric input to a model or metric (non-finite values, length mismatch).
class InputError : public ComputationError {
public:
    using ComputationError::ComputationError;
};

// A statistic that is undefined for the given input, e.g. AUROC with one class.
class UndefinedMetricError : public ComputationError {
public:
    using ComputationError::ComputationError;
};

}  // namespace thyroid
