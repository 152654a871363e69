#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace steinlab {

// %.17g; "inf", "-inf" and "nan" for non-finite values.
std::string format_double(double value);

std::uint64_t fnv1a64(std::string_view bytes) noexcept;
std::string hex64(std::uint64_t value);

/// One line of a result table. `value` is the primary Monte Carlo or numeric
/// quantity, `reference` what it is compared against (NaN when informational).
struct ResultRow {
  std::string check;
  std::string operation;
  std::string model;
  std::string estimator;
  double theta_norm = 0.0;
  std::uint64_t n = 0;
  std::uint64_t seed = 0;
  double value = 0.0;
  double reference = 0.0;
  double std_error = 0.0;
  bool pass = true;
  std::string note;
};

std::string results_to_csv(const std::vector<ResultRow>& rows);
nlohmann::json results_to_json(const std::vector<ResultRow>& rows);

// Plain CSV with a header row.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::string to_csv() const;
};

void write_text(const std::filesystem::path& path, std::string_view content);

}  // namespace steinlab
