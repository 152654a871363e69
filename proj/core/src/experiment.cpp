#include "steinlab/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

#include "steinlab/bayes_shrinkage.hpp"
#include "steinlab/conditions.hpp"
#include "steinlab/errors.hpp"
#include "steinlab/risk_lab.hpp"
#include "steinlab/rng.hpp"
#include "steinlab/serialization.hpp"

#ifndef STEINLAB_VERSION
#define STEINLAB_VERSION "unknown"
#endif

namespace steinlab {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::uint64_t kDirectionSeed = 0xd1ec7104;

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::config, what); }

// Error text without the "config: " prefix the Error constructor adds.
std::string message_of(const std::exception& e) {
  std::string what = e.what();
  const std::string prefix = "config: ";
  if (what.rfind(prefix, 0) == 0) what.erase(0, prefix.size());
  return what;
}

double number(const json& j, const char* key) {
  if (!j.contains(key)) bad(std::string("missing key '") + key + "'");
  if (!j[key].is_number()) bad(std::string("'") + key + "' must be a number");
  return j[key].get<double>();
}

double number_or(const json& j, const char* key, double fallback) {
  return j.contains(key) ? number(j, key) : fallback;
}

std::uint64_t count(const json& j, const char* key) {
  if (!j[key].is_number_unsigned() && !(j[key].is_number_integer() && j[key].get<long long>() >= 0)) {
    bad(std::string("'") + key + "' must be a nonnegative integer");
  }
  return j[key].get<std::uint64_t>();
}

bool flag_or(const json& j, const char* key, bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_boolean()) bad(std::string("'") + key + "' must be a boolean");
  return j[key].get<bool>();
}

Eigen::VectorXd unit_random_direction(int p) {
  ReplicateStream stream(kDirectionSeed, static_cast<std::uint64_t>(p));
  Eigen::VectorXd d(p);
  do {
    for (int i = 0; i < p; ++i) d[i] = stream.normal();
  } while (d.norm() == 0.0);
  return d.normalized();
}

}  // namespace

// ---------------------------------------------------------------- FieldSpec

VectorField FieldSpec::make() const {
  switch (kind) {
    case Kind::james_stein: return james_stein_field(a);
    case Kind::baranchik: return baranchik_field(r, a);
    case Kind::baranchik_unknown: return baranchik_unknown_field(r, k);
    case Kind::generalized_bayes: return generalized_bayes_field(prior);
    case Kind::affine: return affine_field(matrix, offset);
    case Kind::constant: return constant_field(offset);
  }
  return james_stein_field(a);
}

std::string FieldSpec::kind_name() const {
  switch (kind) {
    case Kind::james_stein: return "james_stein";
    case Kind::baranchik: return "baranchik";
    case Kind::baranchik_unknown: return "baranchik_unknown";
    case Kind::generalized_bayes: return "generalized_bayes";
    case Kind::affine: return "affine";
    case Kind::constant: return "constant";
  }
  return "unknown";
}

bool FieldSpec::operator==(const FieldSpec& other) const {
  if (kind != other.kind) return false;
  switch (kind) {
    case Kind::james_stein: return a == other.a;
    case Kind::baranchik: return a == other.a && r == other.r;
    case Kind::baranchik_unknown: return k == other.k && r == other.r;
    case Kind::generalized_bayes: return prior == other.prior;
    case Kind::affine:
      return matrix.rows() == other.matrix.rows() && matrix.cols() == other.matrix.cols() &&
             matrix == other.matrix && offset.size() == other.offset.size() &&
             offset == other.offset;
    case Kind::constant: return offset.size() == other.offset.size() && offset == other.offset;
  }
  return false;
}

json to_json(const FieldSpec& field) {
  json out = {{"kind", field.kind_name()}};
  switch (field.kind) {
    case FieldSpec::Kind::james_stein: out["a"] = field.a; break;
    case FieldSpec::Kind::baranchik:
      out["a"] = field.a;
      out["r"] = to_json(field.r);
      break;
    case FieldSpec::Kind::baranchik_unknown:
      out["r"] = to_json(field.r);
      out["k"] = field.k;
      break;
    case FieldSpec::Kind::generalized_bayes: out["prior"] = to_json(field.prior); break;
    case FieldSpec::Kind::affine: {
      json rows = json::array();
      for (Eigen::Index i = 0; i < field.matrix.rows(); ++i) {
        rows.push_back(to_json(Eigen::VectorXd(field.matrix.row(i).transpose())));
      }
      out["matrix"] = rows;
      out["offset"] = to_json(field.offset);
      break;
    }
    case FieldSpec::Kind::constant: out["offset"] = to_json(field.offset); break;
  }
  return out;
}

FieldSpec field_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    bad("field needs a string 'kind'");
  }
  const std::string kind = j["kind"].get<std::string>();
  FieldSpec f;
  if (kind == "james_stein") {
    f.kind = FieldSpec::Kind::james_stein;
    f.a = number(j, "a");
  } else if (kind == "baranchik") {
    f.kind = FieldSpec::Kind::baranchik;
    f.a = number_or(j, "a", 1.0);
    if (!j.contains("r")) bad("baranchik field needs 'r'");
    f.r = shrink_fn_from_json(j["r"]);
  } else if (kind == "baranchik_unknown") {
    f.kind = FieldSpec::Kind::baranchik_unknown;
    if (!j.contains("r")) bad("baranchik_unknown field needs 'r'");
    f.r = shrink_fn_from_json(j["r"]);
    f.k = static_cast<int>(count(j, "k"));
  } else if (kind == "generalized_bayes") {
    f.kind = FieldSpec::Kind::generalized_bayes;
    if (!j.contains("prior")) bad("generalized_bayes field needs 'prior'");
    f.prior = prior_from_json(j["prior"]);
    f.k = f.prior.k;
  } else if (kind == "affine") {
    f.kind = FieldSpec::Kind::affine;
    if (!j.contains("matrix") || !j["matrix"].is_array() || j["matrix"].empty()) {
      bad("affine field needs a nonempty 'matrix'");
    }
    const auto& rows = j["matrix"];
    const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
    f.matrix.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::VectorXd row = vector_from_json(rows[static_cast<std::size_t>(i)]);
      if (row.size() != n) bad("affine 'matrix' must be square");
      f.matrix.row(i) = row.transpose();
    }
    f.offset = j.contains("offset") ? vector_from_json(j["offset"]) : Eigen::VectorXd::Zero(n);
    if (f.offset.size() != n) bad("affine 'offset' length must match the matrix");
  } else if (kind == "constant") {
    f.kind = FieldSpec::Kind::constant;
    if (!j.contains("offset")) bad("constant field needs 'offset'");
    f.offset = vector_from_json(j["offset"]);
  } else {
    bad("unknown field kind '" + kind + "'");
  }
  return f;
}

// ---------------------------------------------------------------- ThetaGrid

std::vector<Eigen::VectorXd> ThetaGrid::expand(int p) const {
  if (mode == Mode::vectors) {
    for (const auto& v : vectors) {
      if (v.size() != p) {
        throw Error(ErrorCode::dimension_mismatch, "theta grid vector has the wrong dimension");
      }
    }
    return vectors;
  }
  Eigen::VectorXd d;
  switch (direction) {
    case Direction::random: d = unit_random_direction(p); break;
    case Direction::ones: d = Eigen::VectorXd::Ones(p); break;
    case Direction::axis: d = Eigen::VectorXd::Unit(p, 0); break;
    case Direction::vector:
      if (direction_vector.size() != p) {
        throw Error(ErrorCode::dimension_mismatch, "theta grid direction has the wrong dimension");
      }
      d = direction_vector;
      break;
  }
  if (mode == Mode::norms) d.normalize();
  std::vector<Eigen::VectorXd> out;
  for (double c : values) out.push_back(c * d);
  return out;
}

bool ThetaGrid::operator==(const ThetaGrid& other) const {
  if (mode != other.mode) return false;
  if (mode == Mode::vectors) {
    if (vectors.size() != other.vectors.size()) return false;
    for (std::size_t i = 0; i < vectors.size(); ++i) {
      if (vectors[i].size() != other.vectors[i].size() || vectors[i] != other.vectors[i]) {
        return false;
      }
    }
    return true;
  }
  if (values != other.values || direction != other.direction) return false;
  return direction != Direction::vector ||
         (direction_vector.size() == other.direction_vector.size() &&
          direction_vector == other.direction_vector);
}

json to_json(const ThetaGrid& grid) {
  if (grid.mode == ThetaGrid::Mode::vectors) {
    json vs = json::array();
    for (const auto& v : grid.vectors) vs.push_back(to_json(v));
    return {{"vectors", vs}};
  }
  json out = {{grid.mode == ThetaGrid::Mode::norms ? "norms" : "scales", grid.values}};
  switch (grid.direction) {
    case ThetaGrid::Direction::random: out["direction"] = "random"; break;
    case ThetaGrid::Direction::ones: out["direction"] = "ones"; break;
    case ThetaGrid::Direction::axis: out["direction"] = "axis"; break;
    case ThetaGrid::Direction::vector: out["direction"] = to_json(grid.direction_vector); break;
  }
  return out;
}

ThetaGrid theta_grid_from_json(const json& j) {
  if (!j.is_object()) bad("theta_grid must be an object");
  ThetaGrid grid;
  const int modes = static_cast<int>(j.contains("norms")) + static_cast<int>(j.contains("scales")) +
                    static_cast<int>(j.contains("vectors"));
  if (modes != 1) bad("theta_grid needs exactly one of 'norms', 'scales', 'vectors'");
  for (const auto& [key, value] : j.items()) {
    if (key != "norms" && key != "scales" && key != "vectors" && key != "direction") {
      bad("unknown theta_grid key '" + key + "'");
    }
  }
  if (j.contains("vectors")) {
    grid.mode = ThetaGrid::Mode::vectors;
    if (!j["vectors"].is_array()) bad("'vectors' must be an array");
    for (const auto& v : j["vectors"]) grid.vectors.push_back(vector_from_json(v));
    return grid;
  }
  grid.mode = j.contains("norms") ? ThetaGrid::Mode::norms : ThetaGrid::Mode::scales;
  const json& values = j.contains("norms") ? j["norms"] : j["scales"];
  const Eigen::VectorXd v = vector_from_json(values);
  grid.values.assign(v.data(), v.data() + v.size());
  for (double c : grid.values) {
    if (!(c >= 0.0) || !std::isfinite(c)) bad("theta_grid norms/scales must be finite and >= 0");
  }
  if (j.contains("direction")) {
    const json& d = j["direction"];
    if (d.is_array()) {
      grid.direction = ThetaGrid::Direction::vector;
      grid.direction_vector = vector_from_json(d);
      if (grid.direction_vector.norm() == 0.0) bad("theta_grid direction must be nonzero");
    } else if (d == "random") {
      grid.direction = ThetaGrid::Direction::random;
    } else if (d == "ones") {
      grid.direction = ThetaGrid::Direction::ones;
    } else if (d == "axis") {
      grid.direction = ThetaGrid::Direction::axis;
    } else {
      bad("theta_grid direction must be random, ones, axis or a vector");
    }
  }
  return grid;
}

// ---------------------------------------------------------------- config

const std::vector<std::string>& check_types() {
  static const std::vector<std::string> types{
      "mc_risk",           "mc_risk_difference", "risk_sweep",
      "unbiased_risk_difference", "stein_identity", "q_identity",
      "sphere_ball",       "unknown_scale_cross_term", "orthant_domination",
      "minimax_a_bound",   "bayes_r_table",      "certify_minimax",
      "f_independence",    "ball_average"};
  return types;
}

bool ExperimentConfig::operator==(const ExperimentConfig& other) const {
  return n == other.n && seed == other.seed && threads == other.threads &&
         models == other.models && estimators == other.estimators && fields == other.fields &&
         checks == other.checks && theta_grid == other.theta_grid && output == other.output;
}

namespace {

class Collector {
 public:
  template <typename F>
  void attempt(const std::string& where, F&& f) {
    try {
      f();
    } catch (const Error& e) {
      errors_.push_back(where + ": " + message_of(e));
    } catch (const json::exception& e) {
      errors_.push_back(where + ": " + e.what());
    }
  }
  void add(std::string message) { errors_.push_back(std::move(message)); }
  void raise() const {
    if (errors_.empty()) return;
    std::string all;
    for (const auto& e : errors_) all += "\n  " + e;
    throw Error(ErrorCode::config, std::to_string(errors_.size()) + " config error(s):" + all);
  }

 private:
  std::vector<std::string> errors_;
};

template <typename T, typename Parse>
Named<T> parse_named(const json& j, const char* section, Collector& errors, Parse parse) {
  Named<T> out;
  if (!j.contains(section)) return out;
  if (!j[section].is_object()) {
    errors.add(std::string(section) + ": must be an object mapping names to definitions");
    return out;
  }
  for (const auto& [name, value] : j[section].items()) {
    errors.attempt(std::string(section) + "." + name,
                   [&] { out.emplace_back(name, parse(value)); });
  }
  return out;
}

template <typename T>
const T* find_named(const Named<T>& items, const std::string& name) {
  for (const auto& [key, value] : items) {
    if (key == name) return &value;
  }
  return nullptr;
}

const std::set<std::string> kCheckKeys{"name", "type", "model", "estimator", "baseline", "field"};

// Which references each check type needs.
struct Needs {
  bool model = false, estimator = false, field = false;
};

Needs needs_of(const std::string& type) {
  if (type == "mc_risk" || type == "mc_risk_difference" || type == "risk_sweep") {
    return {true, true, false};
  }
  if (type == "unbiased_risk_difference" || type == "stein_identity" || type == "q_identity" ||
      type == "unknown_scale_cross_term") {
    return {true, false, true};
  }
  if (type == "sphere_ball") return {false, false, true};
  if (type == "orthant_domination" || type == "minimax_a_bound") return {true, false, false};
  return {};
}

void validate_check(const ExperimentConfig& config, const CheckSpec& check, Collector& errors) {
  const std::string where = "checks." + check.name;
  const auto& types = check_types();
  if (std::find(types.begin(), types.end(), check.type) == types.end()) {
    errors.add(where + ": unknown check type '" + check.type + "'");
    return;
  }
  const Needs needs = needs_of(check.type);
  const ModelSpec* model = nullptr;
  if (needs.model || !check.model.empty()) {
    model = find_named(config.models, check.model);
    if (!model) errors.add(where + ": model '" + check.model + "' is not defined");
  }
  const EstimatorSpec* est = nullptr;
  if (needs.estimator || !check.estimator.empty()) {
    est = find_named(config.estimators, check.estimator);
    if (!est) errors.add(where + ": estimator '" + check.estimator + "' is not defined");
  }
  if (!check.baseline.empty() && !find_named(config.estimators, check.baseline)) {
    errors.add(where + ": baseline '" + check.baseline + "' is not defined");
  }
  const FieldSpec* field = nullptr;
  if (needs.field || !check.field.empty()) {
    field = find_named(config.fields, check.field);
    if (!field) errors.add(where + ": field '" + check.field + "' is not defined");
  }
  if (model && est) {
    if (est->needs_residual() && model->k < 1) {
      errors.add(where + ": estimator '" + check.estimator + "' needs k >= 1");
    }
    if (const auto* gb = std::get_if<estimator::GeneralizedBayes>(&est->variant)) {
      if (gb->prior.p != model->p() || gb->prior.k != model->k) {
        errors.add(where + ": prior dimensions do not match model '" + check.model + "'");
      }
    }
  }
  if (model && field && field->kind == FieldSpec::Kind::affine &&
      field->matrix.rows() != model->p()) {
    errors.add(where + ": affine field dimension does not match model '" + check.model + "'");
  }
  if (model && field && field->kind == FieldSpec::Kind::constant &&
      field->offset.size() != model->p()) {
    errors.add(where + ": constant field dimension does not match model '" + check.model + "'");
  }
  if (model) {
    if (check.type == "stein_identity" && !std::holds_alternative<NormalFamily>(model->family)) {
      errors.add(where + ": stein_identity needs a normal model");
    }
    if ((check.type == "unknown_scale_cross_term" || check.type == "unbiased_risk_difference") &&
        model->k < 1) {
      errors.add(where + ": " + check.type + " needs k >= 1");
    }
    if (check.params.contains("theta")) {
      errors.attempt(where + ".theta", [&] {
        if (vector_from_json(check.params["theta"]).size() != model->p()) {
          bad("length must equal p of model '" + check.model + "'");
        }
      });
    }
  }
  if (field && check.type == "unbiased_risk_difference" &&
      (field->kind == FieldSpec::Kind::baranchik_unknown ||
       field->kind == FieldSpec::Kind::generalized_bayes)) {
    errors.add(where + ": unbiased_risk_difference needs a u-independent field");
  }
  errors.attempt(where, [&] {
    const json& p = check.params;
    if (p.contains("n") && count(p, "n") < 1) bad("'n' must be >= 1");
    if (p.contains("seed")) (void)count(p, "seed");
    if (p.contains("theta_grid")) (void)theta_grid_from_json(p["theta_grid"]);
    if (check.type == "sphere_ball") {
      if (!p.contains("theta")) bad("sphere_ball needs 'theta'");
      if (!(number(p, "radius") > 0.0)) bad("'radius' must be positive");
      const Eigen::VectorXd theta = vector_from_json(p["theta"]);
      if (field && field->kind == FieldSpec::Kind::affine && field->matrix.rows() != theta.size()) {
        bad("affine field dimension does not match 'theta'");
      }
    }
    if (check.type == "bayes_r_table") {
      if (!p.contains("prior")) bad("bayes_r_table needs 'prior'");
      (void)prior_from_json(p["prior"]);
      const double lo = number_or(p, "w_min", 1e-3), hi = number_or(p, "w_max", 1e6);
      if (!(lo > 0.0 && hi > lo)) bad("need 0 < w_min < w_max");
      if (p.contains("points") && count(p, "points") < 2) bad("'points' must be >= 2");
    }
    if (check.type == "certify_minimax") {
      if (!p.contains("prior")) bad("certify_minimax needs 'prior'");
      const json& pr = p["prior"];
      (void)number(pr, "b_prior");
      (void)count(pr, "p");
      (void)count(pr, "k");
      (void)number_or(pr, "a_prior", 0.0);
    }
    if (check.type == "f_independence") {
      if (!p.contains("prior") || !p.contains("x") || !p.contains("u")) {
        bad("f_independence needs 'prior', 'x' and 'u'");
      }
      const BayesPriorSpec prior = prior_from_json(p["prior"]);
      if (vector_from_json(p["x"]).size() != prior.p || vector_from_json(p["u"]).size() != prior.k) {
        bad("'x'/'u' lengths must match the prior's p/k");
      }
      if (!p.contains("models") || !p["models"].is_array() || p["models"].size() != 2) {
        bad("f_independence needs 'models': [first, second]");
      }
      for (const auto& m : p["models"]) {
        if (!m.is_string() || !find_named(config.models, m.get<std::string>())) {
          bad("f_independence model " + m.dump() + " is not defined");
        }
      }
    }
    if (check.type == "ball_average") {
      if (!p.contains("theta") || !p.contains("radii")) bad("ball_average needs 'theta' and 'radii'");
      (void)vector_from_json(p["theta"]);
      (void)vector_from_json(p["radii"]);
    }
  });
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  Collector errors;
  ExperimentConfig config;
  if (!j.is_object()) {
    errors.add("config: the document must be an object");
    errors.raise();
  }
  static const std::set<std::string> top{"n",       "seed",   "threads",    "models", "estimators",
                                         "fields",  "checks", "theta_grid", "output"};
  for (const auto& [key, value] : j.items()) {
    if (!top.count(key)) errors.add("unknown top-level key '" + key + "'");
  }
  if (j.contains("n")) {
    errors.attempt("n", [&] {
      config.n = count(j, "n");
      if (config.n < 1) bad("must be >= 1");
    });
  }
  if (j.contains("seed")) errors.attempt("seed", [&] { config.seed = count(j, "seed"); });
  if (j.contains("threads")) {
    errors.attempt("threads", [&] { config.threads = static_cast<unsigned>(count(j, "threads")); });
  }
  config.models = parse_named<ModelSpec>(j, "models", errors, model_from_json);
  config.estimators = parse_named<EstimatorSpec>(j, "estimators", errors, estimator_from_json);
  config.fields = parse_named<FieldSpec>(j, "fields", errors, field_from_json);
  if (j.contains("theta_grid")) {
    errors.attempt("theta_grid", [&] { config.theta_grid = theta_grid_from_json(j["theta_grid"]); });
  }
  if (j.contains("output")) {
    errors.attempt("output", [&] {
      const json& o = j["output"];
      if (!o.is_object()) bad("must be an object");
      for (const auto& [key, value] : o.items()) {
        if (key != "dir" && key != "formats") bad("unknown key '" + key + "'");
      }
      if (o.contains("dir")) {
        if (!o["dir"].is_string() || o["dir"].get<std::string>().empty()) {
          bad("'dir' must be a nonempty string");
        }
        config.output.dir = o["dir"].get<std::string>();
      }
      if (o.contains("formats")) {
        if (!o["formats"].is_array()) bad("'formats' must be an array");
        config.output.formats.clear();
        for (const auto& f : o["formats"]) {
          if (f != "csv" && f != "json") bad("formats may only contain \"csv\" and \"json\"");
          config.output.formats.push_back(f.get<std::string>());
        }
      }
    });
  }
  if (j.contains("checks")) {
    if (!j["checks"].is_array()) {
      errors.add("checks: must be an array");
    } else {
      std::set<std::string> names;
      std::size_t index = 0;
      for (const auto& c : j["checks"]) {
        const std::string where = "checks[" + std::to_string(index++) + "]";
        errors.attempt(where, [&] {
          if (!c.is_object()) bad("must be an object");
          CheckSpec check;
          for (const auto& [key, value] : c.items()) {
            if (kCheckKeys.count(key)) {
              if (!value.is_string()) bad("'" + key + "' must be a string");
            } else {
              check.params[key] = value;
            }
          }
          if (!c.contains("name") || !c.contains("type")) bad("needs 'name' and 'type'");
          check.name = c["name"].get<std::string>();
          check.type = c["type"].get<std::string>();
          if (check.name.empty() ||
              check.name.find_first_of("/\\ ") != std::string::npos) {
            bad("name must be nonempty without spaces or slashes");
          }
          if (!names.insert(check.name).second) bad("duplicate check name '" + check.name + "'");
          for (const char* key : {"model", "estimator", "baseline", "field"}) {
            if (c.contains(key)) {
              std::string& slot = key == std::string("model")       ? check.model
                                  : key == std::string("estimator") ? check.estimator
                                  : key == std::string("baseline")  ? check.baseline
                                                                    : check.field;
              slot = c[key].get<std::string>();
            }
          }
          config.checks.push_back(std::move(check));
        });
      }
    }
  }
  for (const auto& check : config.checks) validate_check(config, check, errors);
  errors.raise();
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::config, "cannot read config '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::config, "'" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

json to_json(const ExperimentConfig& config) {
  json out;
  out["n"] = config.n;
  out["seed"] = config.seed;
  out["threads"] = config.threads;
  out["models"] = json::object();
  for (const auto& [name, m] : config.models) out["models"][name] = to_json(m);
  out["estimators"] = json::object();
  for (const auto& [name, e] : config.estimators) out["estimators"][name] = to_json(e);
  out["fields"] = json::object();
  for (const auto& [name, f] : config.fields) out["fields"][name] = to_json(f);
  out["checks"] = json::array();
  for (const auto& c : config.checks) {
    json cj = c.params;
    cj["name"] = c.name;
    cj["type"] = c.type;
    if (!c.model.empty()) cj["model"] = c.model;
    if (!c.estimator.empty()) cj["estimator"] = c.estimator;
    if (!c.baseline.empty()) cj["baseline"] = c.baseline;
    if (!c.field.empty()) cj["field"] = c.field;
    out["checks"].push_back(cj);
  }
  out["theta_grid"] = to_json(config.theta_grid);
  out["output"] = {{"dir", config.output.dir}, {"formats", config.output.formats}};
  return out;
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  return fnv1a64(to_json(config).dump());
}

std::uint64_t check_seed(const ExperimentConfig& config, const CheckSpec& check) {
  if (check.params.contains("seed")) return check.params["seed"].get<std::uint64_t>();
  return derive_seed(config.seed, fnv1a64(check.name));
}

// ---------------------------------------------------------------- running

namespace {

struct Context {
  const ExperimentConfig& config;
  const CheckSpec& check;
  ExecutionPolicy policy;
  std::uint64_t n;
  std::uint64_t seed;
  std::filesystem::path dir;
  bool csv;
  CheckOutcome& outcome;

  const ModelSpec& model() const { return *find_named(config.models, check.model); }
  ModelSpec model_at_theta() const {
    if (check.params.contains("theta")) return model().with_theta(vector_from_json(check.params["theta"]));
    return model();
  }
  const EstimatorSpec& estimator() const { return *find_named(config.estimators, check.estimator); }
  EstimatorSpec baseline() const {
    if (check.baseline.empty()) return EstimatorSpec{};
    return *find_named(config.estimators, check.baseline);
  }
  std::string baseline_name() const { return check.baseline.empty() ? "identity" : check.baseline; }
  const FieldSpec& field() const { return *find_named(config.fields, check.field); }
  std::vector<Eigen::VectorXd> thetas(int p) const {
    const ThetaGrid grid = check.params.contains("theta_grid")
                               ? theta_grid_from_json(check.params["theta_grid"])
                               : config.theta_grid;
    return grid.expand(p);
  }

  ResultRow row(std::string operation) const {
    ResultRow r;
    r.check = check.name;
    r.operation = std::move(operation);
    r.model = check.model;
    r.estimator = check.estimator.empty() ? check.field : check.estimator;
    r.n = n;
    r.seed = seed;
    r.reference = kNaN;
    return r;
  }

  void write(const std::string& suffix, const std::string& content) const {
    const std::filesystem::path path = dir / (check.name + suffix);
    write_text(path, content);
    outcome.outputs.push_back(path.filename().string());
  }
};

ResultRow discrepancy_row(const Context& ctx, const DiscrepancyReport& r, double theta_norm) {
  ResultRow row = ctx.row(r.operation);
  row.theta_norm = theta_norm;
  row.n = r.n;
  row.seed = r.seed;
  row.value = r.lhs;
  row.reference = r.rhs;
  row.std_error = r.std_error;
  row.pass = r.pass;
  if (!r.valid) row.note = "too many skipped replicates (" + std::to_string(r.skipped) + ")";
  return row;
}

void run_mc_risk(Context& ctx) {
  const ModelSpec model = ctx.model_at_theta();
  const RiskEstimate r = mc_risk(model, ctx.estimator(), ctx.n, ctx.seed, ctx.policy);
  ResultRow row = ctx.row("mc_risk");
  row.theta_norm = model.theta.norm();
  row.value = r.mean_loss;
  row.std_error = r.std_error;
  const json& p = ctx.check.params;
  if (p.contains("expected")) {
    if (p["expected"] == "p_variance") {
      row.reference = model.p() * model.coordinate_variance();
      row.note = "reference = p * per-coordinate variance";
    } else {
      row.reference = number(p, "expected");
    }
    row.pass = std::abs(row.value - row.reference) <= kSeMultiplier * row.std_error;
  }
  ctx.outcome.rows.push_back(row);
}

// Paired difference criterion: negative, nonpositive, zero or none.
bool difference_passes(const std::string& expect, double diff, double se) {
  if (expect == "negative") return diff < -kSeMultiplier * se;
  if (expect == "nonpositive") return diff <= kSeMultiplier * se;
  if (expect == "zero") return std::abs(diff) <= kSeMultiplier * se;
  if (expect == "none") return true;
  bad("'expect' must be negative, nonpositive, zero or none");
}

void run_mc_risk_difference(Context& ctx) {
  const ModelSpec model = ctx.model_at_theta();
  const RiskDifferenceReport r =
      mc_risk_difference(model, ctx.estimator(), ctx.baseline(), ctx.n, ctx.seed, ctx.policy);
  const std::string expect =
      ctx.check.params.contains("expect") ? ctx.check.params["expect"].get<std::string>() : "none";
  ResultRow row = ctx.row("mc_risk_difference");
  row.theta_norm = model.theta.norm();
  row.value = r.mean_difference;
  row.reference = 0.0;
  row.std_error = r.std_error;
  row.pass = difference_passes(expect, r.mean_difference, r.std_error);
  row.note = "vs " + ctx.baseline_name() + "; expect " + expect;
  ctx.outcome.rows.push_back(row);
}

void run_risk_sweep(Context& ctx) {
  const ModelSpec& base = ctx.model();
  for (const auto& theta : ctx.thetas(base.p())) {
    const RiskEstimate r = mc_risk(base.with_theta(theta), ctx.estimator(), ctx.n, ctx.seed, ctx.policy);
    ResultRow row = ctx.row("mc_risk");
    row.theta_norm = theta.norm();
    row.value = r.mean_loss;
    row.std_error = r.std_error;
    ctx.outcome.rows.push_back(row);
  }
}

void run_unbiased(Context& ctx) {
  const ModelSpec& base = ctx.model();
  const VectorField field = ctx.field().make();
  std::vector<Eigen::VectorXd> thetas;
  if (ctx.check.params.contains("theta_grid")) {
    thetas = ctx.thetas(base.p());
  } else {
    thetas = {ctx.model_at_theta().theta};
  }
  for (const auto& theta : thetas) {
    const ModelSpec model = base.with_theta(theta);
    // independent streams for the two estimators of the same quantity
    const MeanReport u = unbiased_risk_difference(model, field, ctx.n, derive_seed(ctx.seed, 1), ctx.policy);
    ResultRow row = ctx.row("unbiased_risk_difference");
    row.theta_norm = theta.norm();
    row.seed = derive_seed(ctx.seed, 1);
    row.value = u.mean;
    row.std_error = u.std_error;
    row.pass = u.valid;
    if (!ctx.check.estimator.empty()) {
      const RiskDifferenceReport d =
          mc_risk_difference(model, ctx.estimator(), ctx.baseline(), ctx.n, ctx.seed, ctx.policy);
      row.reference = d.mean_difference;
      row.std_error = std::hypot(u.std_error, d.std_error);
      row.pass = u.valid && std::abs(row.value - row.reference) <= kSeMultiplier * row.std_error;
      row.note = "reference = paired MC " + ctx.check.estimator + " vs " + ctx.baseline_name();
    }
    if (!u.valid) row.note = "too many skipped replicates";
    ctx.outcome.rows.push_back(row);
  }
}

void run_identity(Context& ctx) {
  const ModelSpec model = ctx.model_at_theta();
  const VectorField field = ctx.field().make();
  const double tn = model.theta.norm();
  if (ctx.check.type == "stein_identity") {
    ctx.outcome.rows.push_back(
        discrepancy_row(ctx, stein_identity_check(model, field, ctx.n, ctx.seed, ctx.policy), tn));
  } else if (ctx.check.type == "q_identity") {
    ctx.outcome.rows.push_back(
        discrepancy_row(ctx, q_identity_check(model, field, ctx.n, ctx.seed, ctx.policy), tn));
  } else {
    const CrossTermReport r = unknown_scale_cross_term_check(model, field, ctx.n, ctx.seed, ctx.policy);
    ctx.outcome.rows.push_back(discrepancy_row(ctx, r.cross_term, tn));
    ctx.outcome.rows.push_back(discrepancy_row(ctx, r.norm_term, tn));
  }
}

void run_sphere_ball(Context& ctx) {
  const Eigen::VectorXd theta = vector_from_json(ctx.check.params["theta"]);
  const double radius = number(ctx.check.params, "radius");
  const DiscrepancyReport r =
      sphere_ball_check(theta, radius, ctx.field().make(), ctx.n, ctx.seed, ctx.policy);
  ResultRow row = discrepancy_row(ctx, r, theta.norm());
  row.note = "R = " + format_double(radius);
  ctx.outcome.rows.push_back(row);
}

void run_orthant(Context& ctx) {
  const json& p = ctx.check.params;
  const ModelSpec& base = ctx.model();
  const OrthantFamily family =
      p.contains("family") ? orthant_family_from_json(p["family"]) : OrthantFamily::james_stein_faces();
  const bool known = flag_or(p, "known_scale", false);
  const bool strict = flag_or(p, "strict_at_origin", false);
  std::vector<Eigen::VectorXd> thetas;
  if (p.contains("theta_grid")) {
    thetas = ctx.thetas(base.p());
  } else {
    ThetaGrid grid;
    grid.mode = ThetaGrid::Mode::scales;
    grid.values = {0.0, 0.5, 2.0, 10.0};
    grid.direction = ThetaGrid::Direction::ones;
    thetas = grid.expand(base.p());
  }
  const OrthantSweepReport r =
      orthant_domination_check(base, family, ctx.n, ctx.seed, thetas, known, ctx.policy);
  for (const auto& rr : r.rows) {
    ResultRow row = ctx.row("orthant_domination");
    row.estimator = "orthant_restricted";
    row.theta_norm = rr.theta.norm();
    row.value = rr.mean_difference;
    row.reference = 0.0;
    row.std_error = rr.std_error;
    row.pass = rr.not_worse;
    row.note = "vs positive part";
    if (strict && rr.theta.norm() == 0.0) {
      row.pass = rr.strictly_better;
      row.note += "; strict improvement required";
    }
    ctx.outcome.rows.push_back(row);
  }
}

void run_minimax_bound(Context& ctx) {
  const json& p = ctx.check.params;
  const ModelSpec& model = ctx.model();
  const MinimaxBound b = minimax_a_bound(model, ctx.n, ctx.seed, ctx.policy, flag_or(p, "force_mc", false));
  ResultRow row = ctx.row("minimax_a_bound");
  row.estimator = "";
  row.n = b.n;
  row.value = b.value;
  row.std_error = b.std_error;
  row.note = b.analytic ? "analytic" : "monte carlo";
  if (p.contains("expected")) {
    if (p["expected"] == "closed_form") {
      // 1/(p E[1/|X|^2]) with |X|^2 | V ~ V sigma^2 chi^2_p
      row.reference = model.sigma * model.sigma * (model.p() - 2.0) /
                      (model.p() * model.mixing().moment(-1.0));
    } else {
      row.reference = number(p, "expected");
    }
    row.pass = b.analytic ? std::abs(row.value - row.reference) <= 1e-12 * std::abs(row.reference)
                          : std::abs(row.value - row.reference) <= kSeMultiplier * row.std_error;
  }
  ctx.outcome.rows.push_back(row);
}

std::string prior_label(const BayesPriorSpec& prior) {
  std::ostringstream os;
  os << "a=" << prior.a_prior << " b=" << prior.b_prior << " p=" << prior.p << " k=" << prior.k;
  return os.str();
}

void run_bayes_table(Context& ctx) {
  const json& p = ctx.check.params;
  const BayesPriorSpec prior = prior_from_json(p["prior"]);
  const std::size_t points = p.contains("points") ? count(p, "points") : 200;
  const std::vector<double> grid =
      log_grid(number_or(p, "w_min", 1e-3), number_or(p, "w_max", 1e6), points);
  const RwTable table = build_rw_table(prior, grid);
  if (ctx.csv) ctx.write("_rw.csv", table.to_csv());
  const double bound = prior.r_upper_bound();
  ResultRow row = ctx.row("bayes_r_table");
  row.model = "";
  row.estimator = "generalized_bayes";
  row.n = points;
  row.seed = 0;
  row.value = table.max_r();
  row.reference = bound;
  row.std_error = 0.0;
  const bool monotone = table.is_nondecreasing(1e-10);
  const bool bounded = table.max_r() <= bound + 1e-8;
  row.pass = monotone && bounded;
  row.note = prior_label(prior) + "; max decrease " + format_double(table.max_decrease()) +
             (monotone ? "" : " (not monotone)") + (bounded ? "" : " (exceeds bound)");
  ctx.outcome.rows.push_back(row);
}

void run_certificate(Context& ctx) {
  const json& pr = ctx.check.params["prior"];
  BayesPriorSpec prior;
  prior.a_prior = number_or(pr, "a_prior", 0.0);
  prior.b_prior = number(pr, "b_prior");
  prior.p = static_cast<int>(count(pr, "p"));
  prior.k = static_cast<int>(count(pr, "k"));
  const MinimaxCertificate cert = minimaxity_certificate(prior);
  if (ctx.csv) ctx.write(".txt", cert.to_text());
  for (const auto& clause : cert.clauses) {
    ResultRow row = ctx.row("certify_minimax:" + clause.name);
    row.model = "";
    row.estimator = "generalized_bayes";
    row.n = 0;
    row.seed = 0;
    row.value = clause.pass ? 1.0 : 0.0;
    row.reference = 1.0;
    row.pass = clause.evaluated && clause.pass;
    row.note = clause.detail;
    ctx.outcome.rows.push_back(row);
  }
}

void run_f_independence(Context& ctx) {
  const json& p = ctx.check.params;
  const BayesPriorSpec prior = prior_from_json(p["prior"]);
  const Eigen::VectorXd x = vector_from_json(p["x"]);
  const Eigen::VectorXd u = vector_from_json(p["u"]);
  const std::string first = p["models"][0].get<std::string>();
  const std::string second = p["models"][1].get<std::string>();
  const double tolerance = number_or(p, "tolerance", 1e-4);
  const FIndependenceReport r =
      verify_f_independence(prior, x, u, *find_named(ctx.config.models, first),
                            *find_named(ctx.config.models, second), tolerance);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    ResultRow row = ctx.row("f_independence[" + std::to_string(i) + "]");
    row.model = first + "|" + second;
    row.estimator = "generalized_bayes";
    row.theta_norm = 0.0;
    row.n = 0;
    row.seed = 0;
    row.value = r.estimate_first[i];
    row.reference = r.estimate_second[i];
    row.pass = r.pass;
    row.note = "closed form " + format_double(r.closed_form[i]) + "; tolerance " +
               format_double(tolerance);
    ctx.outcome.rows.push_back(row);
  }
}

void run_ball_average(Context& ctx) {
  const json& p = ctx.check.params;
  const Eigen::VectorXd theta = vector_from_json(p["theta"]);
  const Eigen::VectorXd radii = vector_from_json(p["radii"]);
  const BallAverageReport r = ball_average_monotonicity_check(
      theta, std::vector<double>(radii.data(), radii.data() + radii.size()), ctx.n, ctx.seed,
      ctx.policy);
  for (std::size_t i = 0; i < r.increments.size(); ++i) {
    ResultRow row = ctx.row("ball_average_increment");
    row.model = "";
    row.estimator = "";
    row.theta_norm = theta.norm();
    row.value = r.increments[i];
    row.reference = 0.0;
    row.std_error = r.increment_se[i];
    row.pass = r.increments[i] <= kSeMultiplier * r.increment_se[i];
    row.note = "R " + format_double(r.radii[i]) + " -> " + format_double(r.radii[i + 1]);
    ctx.outcome.rows.push_back(row);
  }
}

void dispatch(Context& ctx) {
  const std::string& type = ctx.check.type;
  if (type == "mc_risk") return run_mc_risk(ctx);
  if (type == "mc_risk_difference") return run_mc_risk_difference(ctx);
  if (type == "risk_sweep") return run_risk_sweep(ctx);
  if (type == "unbiased_risk_difference") return run_unbiased(ctx);
  if (type == "stein_identity" || type == "q_identity" || type == "unknown_scale_cross_term") {
    return run_identity(ctx);
  }
  if (type == "sphere_ball") return run_sphere_ball(ctx);
  if (type == "orthant_domination") return run_orthant(ctx);
  if (type == "minimax_a_bound") return run_minimax_bound(ctx);
  if (type == "bayes_r_table") return run_bayes_table(ctx);
  if (type == "certify_minimax") return run_certificate(ctx);
  if (type == "f_independence") return run_f_independence(ctx);
  if (type == "ball_average") return run_ball_average(ctx);
  bad("unknown check type '" + type + "'");
}

bool has_format(const ExperimentConfig& config, const char* format) {
  const auto& f = config.output.formats;
  return std::find(f.begin(), f.end(), format) != f.end();
}

}  // namespace

std::filesystem::path resolve_output_dir(const ExperimentConfig& config, const RunOptions& options) {
  if (options.output_dir) return *options.output_dir;
  if (const char* env = std::getenv("STEINLAB_OUTPUT_DIR"); env && *env) return env;
  return config.output.dir;
}

json RunManifest::to_json() const {
  json checks_json = json::array();
  for (const auto& c : checks) {
    json entry = {{"name", c.name}, {"type", c.type},       {"pass", c.pass},
                  {"outputs", c.outputs}, {"seconds", c.seconds}};
    if (!c.error.empty()) entry["error"] = c.error;
    checks_json.push_back(entry);
  }
  return {{"config_hash", config_hash},
          {"seed", seed},
          {"version", version},
          {"output_dir", output_dir.string()},
          {"outputs", outputs},
          {"checks", checks_json},
          {"seconds", seconds},
          {"all_pass", all_pass}};
}

RunManifest run(const ExperimentConfig& config, const RunOptions& options) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  RunManifest manifest;
  manifest.config_hash = hex64(config_hash(config));
  manifest.seed = config.seed;
  manifest.version = STEINLAB_VERSION;
  manifest.output_dir = resolve_output_dir(config, options);
  const bool csv = options.write_files && has_format(config, "csv");
  const bool json_out = options.write_files && has_format(config, "json");
  if (options.write_files) std::filesystem::create_directories(manifest.output_dir);

  ExecutionPolicy policy{options.threads.value_or(config.threads)};
  std::vector<ResultRow> all_rows;
  for (const auto& check : config.checks) {
    CheckOutcome outcome;
    outcome.name = check.name;
    outcome.type = check.type;
    const auto t0 = clock::now();
    const std::uint64_t n = check.params.contains("n") ? check.params["n"].get<std::uint64_t>() : config.n;
    Context ctx{config, check, policy, n, check_seed(config, check), manifest.output_dir, csv, outcome};
    try {
      dispatch(ctx);
      outcome.pass = std::all_of(outcome.rows.begin(), outcome.rows.end(),
                                 [](const ResultRow& r) { return r.pass; });
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.error = e.what();
      ResultRow row = ctx.row(check.type);
      row.value = kNaN;
      row.pass = false;
      row.note = std::string("error: ") + e.what();
      outcome.rows.push_back(row);
    }
    if (csv) ctx.write(".csv", results_to_csv(outcome.rows));
    outcome.seconds = std::chrono::duration<double>(clock::now() - t0).count();
    if (options.log) {
      *options.log << (outcome.pass ? "PASS " : "FAIL ") << check.name << " (" << check.type
                   << ")";
      if (!outcome.error.empty()) *options.log << ": " << outcome.error;
      *options.log << '\n';
      for (const auto& r : outcome.rows) {
        *options.log << "    " << r.operation << " theta_norm=" << format_double(r.theta_norm)
                     << " value=" << format_double(r.value)
                     << " reference=" << format_double(r.reference)
                     << " se=" << format_double(r.std_error) << (r.pass ? "" : "  <-- fail")
                     << '\n';
      }
    }
    manifest.all_pass = manifest.all_pass && outcome.pass;
    all_rows.insert(all_rows.end(), outcome.rows.begin(), outcome.rows.end());
    for (const auto& o : outcome.outputs) manifest.outputs.push_back(o);
    manifest.checks.push_back(std::move(outcome));
  }
  if (csv && !config.checks.empty()) {
    write_text(manifest.output_dir / "results.csv", results_to_csv(all_rows));
    manifest.outputs.push_back("results.csv");
  }
  if (json_out && !config.checks.empty()) {
    write_text(manifest.output_dir / "results.json", results_to_json(all_rows).dump(2) + "\n");
    manifest.outputs.push_back("results.json");
  }
  manifest.seconds = std::chrono::duration<double>(clock::now() - start).count();
  if (options.write_files) {
    write_text(manifest.output_dir / "manifest.json", manifest.to_json().dump(2) + "\n");
  }
  return manifest;
}

}  // namespace steinlab
