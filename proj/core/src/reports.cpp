#include "steinlab/reports.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "steinlab/errors.hpp"

namespace steinlab {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string hex64(std::uint64_t value) {
  char buffer[17];
  std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(value));
  return buffer;
}

namespace {

// Quotes a CSV field when it contains a separator, quote or newline.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

// JSON has no inf/nan; such values are written as strings.
nlohmann::json json_number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

}  // namespace

std::string results_to_csv(const std::vector<ResultRow>& rows) {
  CsvTable table;
  table.columns = {"check", "operation", "model", "estimator", "theta_norm", "n",  "seed",
                   "value", "reference", "difference", "std_error", "pass", "note"};
  for (const auto& r : rows) {
    table.rows.push_back({r.check, r.operation, r.model, r.estimator, format_double(r.theta_norm),
                          std::to_string(r.n), std::to_string(r.seed), format_double(r.value),
                          format_double(r.reference), format_double(r.value - r.reference),
                          format_double(r.std_error), r.pass ? "true" : "false", r.note});
  }
  return table.to_csv();
}

nlohmann::json results_to_json(const std::vector<ResultRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    out.push_back({{"check", r.check},
                   {"operation", r.operation},
                   {"model", r.model},
                   {"estimator", r.estimator},
                   {"theta_norm", json_number(r.theta_norm)},
                   {"n", r.n},
                   {"seed", r.seed},
                   {"mean", json_number(r.value)},
                   {"reference", json_number(r.reference)},
                   {"se", json_number(r.std_error)},
                   {"pass", r.pass},
                   {"note", r.note}});
  }
  return out;
}

std::string CsvTable::to_csv() const {
  std::string out;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) out += ',';
    out += csv_field(columns[i]);
  }
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += csv_field(row[i]);
    }
    out += '\n';
  }
  return out;
}

void write_text(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::config, "cannot open '" + path.string() + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(ErrorCode::config, "failed writing '" + path.string() + "'");
}

}  // namespace steinlab
