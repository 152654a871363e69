#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "steinlab/bayes_prior.hpp"
#include "steinlab/estimators.hpp"
#include "steinlab/reports.hpp"
#include "steinlab/shrink_fn.hpp"
#include "steinlab/spherical_models.hpp"
#include "steinlab/vector_field.hpp"

namespace steinlab {

/// Serializable description of a VectorField.
struct FieldSpec {
  enum class Kind { james_stein, baranchik, baranchik_unknown, generalized_bayes, affine, constant };

  Kind kind = Kind::james_stein;
  double a = 0.0;           // james_stein, baranchik
  ShrinkFn r;               // baranchik, baranchik_unknown
  int k = 0;                // baranchik_unknown
  BayesPriorSpec prior;     // generalized_bayes
  Eigen::MatrixXd matrix;   // affine
  Eigen::VectorXd offset;   // affine, constant

  VectorField make() const;
  std::string kind_name() const;
  bool operator==(const FieldSpec& other) const;
};

nlohmann::json to_json(const FieldSpec& field);
FieldSpec field_from_json(const nlohmann::json& j);

/// Location vectors for sweeps. `norms` places theta = c * d / |d|, `scales`
/// places theta = c * d, `vectors` lists them outright. The direction d is the
/// all-ones vector, the first axis, an explicit vector, or a fixed seeded
/// random unit vector.
struct ThetaGrid {
  enum class Mode { norms, scales, vectors };
  enum class Direction { random, ones, axis, vector };

  Mode mode = Mode::norms;
  std::vector<double> values{0.0, 1.0, 2.0, 5.0, 10.0, 100.0};
  Direction direction = Direction::random;
  Eigen::VectorXd direction_vector;
  std::vector<Eigen::VectorXd> vectors;

  std::vector<Eigen::VectorXd> expand(int p) const;
  bool operator==(const ThetaGrid& other) const;
};

nlohmann::json to_json(const ThetaGrid& grid);
ThetaGrid theta_grid_from_json(const nlohmann::json& j);

struct CheckSpec {
  std::string name;
  std::string type;
  std::string model;
  std::string estimator;
  std::string baseline;
  std::string field;
  // Type-specific parameters (theta, radius, prior, expected, ...).
  nlohmann::json params = nlohmann::json::object();

  bool operator==(const CheckSpec&) const = default;
};

struct OutputSpec {
  std::string dir = "steinlab_out";
  std::vector<std::string> formats{"csv", "json"};

  bool operator==(const OutputSpec&) const = default;
};

template <typename T>
using Named = std::vector<std::pair<std::string, T>>;

struct ExperimentConfig {
  std::uint64_t n = 100000;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  Named<ModelSpec> models;
  Named<EstimatorSpec> estimators;
  Named<FieldSpec> fields;
  std::vector<CheckSpec> checks;
  ThetaGrid theta_grid;
  OutputSpec output;

  bool operator==(const ExperimentConfig& other) const;
};

// Names accepted in CheckSpec::type.
const std::vector<std::string>& check_types();

/// Parses and validates a config document. Every violation is collected; the
/// thrown Error(config) lists them one per line.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
// Canonical form: every field present, defaults spelled out.
nlohmann::json to_json(const ExperimentConfig& config);
std::uint64_t config_hash(const ExperimentConfig& config);

struct RunOptions {
  // Highest precedence; then the STEINLAB_OUTPUT_DIR environment variable,
  // then the config.
  std::optional<std::filesystem::path> output_dir;
  std::optional<unsigned> threads;
  bool write_files = true;
  std::ostream* log = nullptr;
};

struct CheckOutcome {
  std::string name;
  std::string type;
  bool pass = false;
  std::string error;
  std::vector<ResultRow> rows;
  std::vector<std::string> outputs;
  double seconds = 0.0;
};

struct RunManifest {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string version;
  std::filesystem::path output_dir;
  std::vector<CheckOutcome> checks;
  std::vector<std::string> outputs;
  double seconds = 0.0;
  bool all_pass = true;

  nlohmann::json to_json() const;
};

std::filesystem::path resolve_output_dir(const ExperimentConfig& config, const RunOptions& options);

/// Executes every check, writes per-check CSVs, results.csv/json and
/// manifest.json. Failed checks (including ones that threw) are recorded with
/// pass = false; the run continues.
RunManifest run(const ExperimentConfig& config, const RunOptions& options = {});

// Seed used by a check: params.seed if present, else derived from the config
// seed and the check name.
std::uint64_t check_seed(const ExperimentConfig& config, const CheckSpec& check);

}  // namespace steinlab
