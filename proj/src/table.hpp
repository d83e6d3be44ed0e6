#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace genscale::cli {

using Cell = std::variant<std::string, double, std::int64_t, bool>;

/// A header plus rows, emitted as CSV or as a JSON array of row objects with
/// the header names as keys.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row);
  std::string to_csv() const;
  std::string to_json() const;
};

/// Shortest round-trip decimal form (scientific outside [1e-5, 1e16)); "nan", "inf", "-inf" for non-finite values.
std::string format_double(double v);

/// Writes to `<path>.tmp` and renames over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace genscale::cli
