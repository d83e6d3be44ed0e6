#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace genscale {

// Invalid arguments are reported with std::invalid_argument. The types below
// cover the failure modes that callers are expected to distinguish.

/// Every problem was excluded from a benchmark average.
class EmptyBenchmarkError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fewer usable observations than free parameters.
class UnderdeterminedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed corpus input. `line()` is 1-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A record that parsed but violates a data invariant.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string record, std::string field, const std::string& what)
      : std::runtime_error("record '" + record + "', field '" + field + "': " + what),
        record_(std::move(record)),
        field_(std::move(field)) {}
  const std::string& record() const noexcept { return record_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::string record_;
  std::string field_;
};

/// Synthetic generation hit an unrepresentable ground truth.
class GenerationError : public std::runtime_error {
 public:
  GenerationError(std::size_t grid_index, const std::string& what)
      : std::runtime_error("grid point " + std::to_string(grid_index) + ": " + what),
        grid_index_(grid_index) {}
  std::size_t grid_index() const noexcept { return grid_index_; }

 private:
  std::size_t grid_index_;
};

/// A fit failure inside a k sweep, tagged with the k that failed.
class SweepError : public std::runtime_error {
 public:
  SweepError(std::int64_t k, const std::string& what)
      : std::runtime_error("k=" + std::to_string(k) + ": " + what), k_(k) {}
  std::int64_t k() const noexcept { return k_; }

 private:
  std::int64_t k_;
};

}  // namespace genscale
