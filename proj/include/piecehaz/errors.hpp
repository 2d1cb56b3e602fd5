#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace piecehaz {

// Argument outside the mathematical domain of an operation (t <= 0 etc.).
class DomainError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

// Malformed input text. Row is 1-based and counts the header as row 1.
class ParseError : public std::runtime_error {
  public:
    ParseError(const std::string& what, std::size_t row, std::size_t column)
        : std::runtime_error(what), row_(row), column_(column) {}

    std::size_t row() const noexcept { return row_; }
    std::size_t column() const noexcept { return column_; }

  private:
    std::size_t row_;
    std::size_t column_;
};

// Well-formed input that violates a data rule; lists every offending row.
class ValidationError : public std::runtime_error {
  public:
    ValidationError(const std::string& what, std::vector<std::size_t> rows)
        : std::runtime_error(what), rows_(std::move(rows)) {}

    const std::vector<std::size_t>& rows() const noexcept { return rows_; }

  private:
    std::vector<std::size_t> rows_;
};

// The optimizer or resampler could not produce a usable result.
class FitError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace piecehaz
