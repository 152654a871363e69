#include "steinlab/serialization.hpp"

#include <string>

#include "steinlab/errors.hpp"

namespace steinlab {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::config, what); }

const json& require(const json& j, const char* key) {
  if (!j.is_object()) bad(std::string("expected an object holding '") + key + "'");
  const auto it = j.find(key);
  if (it == j.end()) bad(std::string("missing key '") + key + "'");
  return *it;
}

double number(const json& j, const char* key) {
  const json& v = require(j, key);
  if (!v.is_number()) bad(std::string("'") + key + "' must be a number");
  return v.get<double>();
}

double number_or(const json& j, const char* key, double fallback) {
  return j.contains(key) ? number(j, key) : fallback;
}

int integer(const json& j, const char* key) {
  const json& v = require(j, key);
  if (!v.is_number_integer()) bad(std::string("'") + key + "' must be an integer");
  return v.get<int>();
}

std::string text(const json& j, const char* key) {
  const json& v = require(j, key);
  if (!v.is_string()) bad(std::string("'") + key + "' must be a string");
  return v.get<std::string>();
}

std::vector<double> numbers(const json& j) {
  if (!j.is_array()) bad("expected an array of numbers");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) bad("expected an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

// Domain constructors throw their own codes; surface them as config errors.
template <typename F>
auto as_config(F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::config) throw;
    bad(e.what());
  }
}

}  // namespace

json to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
  const std::vector<double> values = numbers(j);
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json to_json(const MixingLaw& law) {
  switch (law.kind()) {
    case MixingLaw::Kind::discrete:
      return {{"kind", "discrete"},
              {"atoms", std::vector<double>(law.atoms().begin(), law.atoms().end())},
              {"weights", std::vector<double>(law.weights().begin(), law.weights().end())}};
    case MixingLaw::Kind::inverse_gamma:
      return {{"kind", "inverse_gamma"}, {"shape", law.shape()}, {"scale", law.scale()}};
    case MixingLaw::Kind::log_uniform:
      return {{"kind", "log_uniform"}, {"lo", law.lo()}, {"hi", law.hi()}};
  }
  return {};
}

MixingLaw mixing_from_json(const json& j) {
  const std::string kind = text(j, "kind");
  return as_config([&] {
    if (kind == "discrete") {
      return MixingLaw::discrete(numbers(require(j, "atoms")), numbers(require(j, "weights")));
    }
    if (kind == "inverse_gamma") {
      return MixingLaw::inverse_gamma(number(j, "shape"), number(j, "scale"));
    }
    if (kind == "log_uniform") return MixingLaw::log_uniform(number(j, "lo"), number(j, "hi"));
    bad("unknown mixing kind '" + kind + "'");
  });
}

json to_json(const ModelSpec& model) {
  json out = {{"family", model.family_name()}};
  if (const auto* t = std::get_if<StudentTFamily>(&model.family)) {
    out["degrees_of_freedom"] = t->degrees_of_freedom;
  } else if (const auto* m = std::get_if<ScaleMixtureFamily>(&model.family)) {
    out["mixing"] = to_json(m->mixing);
  }
  out["p"] = model.p();
  out["theta"] = to_json(model.theta);
  out["sigma"] = model.sigma;
  out["k"] = model.k;
  return out;
}

ModelSpec model_from_json(const json& j) {
  const std::string family = text(j, "family");
  ModelSpec model;
  if (family == "normal") {
    model.family = NormalFamily{};
  } else if (family == "student_t") {
    model.family = StudentTFamily{number(j, "degrees_of_freedom")};
  } else if (family == "scale_mixture") {
    model.family = ScaleMixtureFamily{mixing_from_json(require(j, "mixing"))};
  } else {
    bad("unknown family '" + family + "'");
  }
  if (j.contains("theta")) {
    model.theta = vector_from_json(j["theta"]);
    if (j.contains("p") && integer(j, "p") != model.p()) bad("'p' disagrees with the length of 'theta'");
  } else {
    const int p = integer(j, "p");
    if (p < 1) bad("'p' must be at least 1");
    model.theta = Eigen::VectorXd::Zero(p);
  }
  model.sigma = number_or(j, "sigma", 1.0);
  model.k = j.contains("k") ? integer(j, "k") : 0;
  as_config([&] {
    model.validate();
    return 0;
  });
  return model;
}

json to_json(const ShrinkFn& r) {
  switch (r.kind) {
    case ShrinkFn::Kind::constant:
      return {{"kind", "constant"}, {"value", r.value}};
    case ShrinkFn::Kind::saturating_linear:
      return {{"kind", "saturating_linear"}, {"slope", r.slope}, {"bound", r.declared_upper_bound}};
    case ShrinkFn::Kind::rational:
      return {{"kind", "rational"}, {"bound", r.declared_upper_bound}};
    case ShrinkFn::Kind::custom:
      break;
  }
  bad("custom shrinkage profiles cannot be serialized");
}

ShrinkFn shrink_fn_from_json(const json& j) {
  const std::string kind = text(j, "kind");
  return as_config([&] {
    if (kind == "constant") return ShrinkFn::constant(number(j, "value"));
    if (kind == "saturating_linear") {
      return ShrinkFn::saturating_linear(number(j, "slope"), number(j, "bound"));
    }
    if (kind == "rational") return ShrinkFn::rational(number(j, "bound"));
    bad("unknown shrinkage profile '" + kind + "'");
  });
}

json to_json(const OrthantFamily& family) {
  if (family.kind == OrthantFamily::Kind::james_stein_faces) {
    return {{"kind", "james_stein_faces"}, {"multiplier", family.multiplier}};
  }
  json faces = json::array();
  for (const auto& f : family.faces) faces.push_back(to_json(f));
  return {{"kind", "per_face"}, {"faces", faces}};
}

OrthantFamily orthant_family_from_json(const json& j) {
  const std::string kind = text(j, "kind");
  if (kind == "james_stein_faces") {
    return as_config([&] { return OrthantFamily::james_stein_faces(number_or(j, "multiplier", 1.0)); });
  }
  if (kind == "per_face") {
    const json& faces = require(j, "faces");
    if (!faces.is_array()) bad("'faces' must be an array");
    std::vector<ShrinkFn> out;
    for (const auto& f : faces) out.push_back(shrink_fn_from_json(f));
    return as_config([&] { return OrthantFamily::per_face(std::move(out)); });
  }
  bad("unknown orthant family '" + kind + "'");
}

json to_json(const BayesPriorSpec& prior) {
  return {{"a_prior", prior.a_prior}, {"b_prior", prior.b_prior}, {"p", prior.p}, {"k", prior.k}};
}

BayesPriorSpec prior_from_json(const json& j) {
  BayesPriorSpec prior;
  prior.a_prior = number_or(j, "a_prior", 0.0);
  prior.b_prior = number(j, "b_prior");
  prior.p = integer(j, "p");
  prior.k = integer(j, "k");
  as_config([&] {
    prior.validate();
    return 0;
  });
  return prior;
}

json to_json(const EstimatorSpec& spec) {
  json out = {{"variant", spec.variant_name()}};
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, estimator::JsKnown> ||
                      std::is_same_v<T, estimator::JsUnknown>) {
          out["a"] = v.a;
        } else if constexpr (std::is_same_v<T, estimator::BaranchikKnown>) {
          out["a"] = v.a;
          out["r"] = to_json(v.r);
        } else if constexpr (std::is_same_v<T, estimator::BaranchikUnknown>) {
          out["r"] = to_json(v.r);
        } else if constexpr (std::is_same_v<T, estimator::OrthantRestricted>) {
          out["family"] = to_json(v.family);
          out["known_scale"] = v.known_scale;
        } else if constexpr (std::is_same_v<T, estimator::GeneralizedBayes>) {
          out["prior"] = to_json(v.prior);
        }
      },
      spec.variant);
  if (spec.sigma) out["sigma"] = *spec.sigma;
  return out;
}

EstimatorSpec estimator_from_json(const json& j) {
  const std::string variant = text(j, "variant");
  EstimatorSpec spec;
  if (variant == "identity") {
    spec.variant = estimator::Identity{};
  } else if (variant == "js_known") {
    spec.variant = estimator::JsKnown{number(j, "a")};
  } else if (variant == "baranchik_known") {
    spec.variant = estimator::BaranchikKnown{number_or(j, "a", 1.0), shrink_fn_from_json(require(j, "r"))};
  } else if (variant == "js_unknown") {
    spec.variant = estimator::JsUnknown{number(j, "a")};
  } else if (variant == "baranchik_unknown") {
    spec.variant = estimator::BaranchikUnknown{shrink_fn_from_json(require(j, "r"))};
  } else if (variant == "orthant_restricted") {
    const OrthantFamily family = j.contains("family") ? orthant_family_from_json(j["family"])
                                                      : OrthantFamily::james_stein_faces();
    bool known = false;
    if (j.contains("known_scale")) {
      if (!j["known_scale"].is_boolean()) bad("'known_scale' must be a boolean");
      known = j["known_scale"].get<bool>();
    }
    spec.variant = estimator::OrthantRestricted{family, known};
  } else if (variant == "generalized_bayes") {
    spec.variant = estimator::GeneralizedBayes{prior_from_json(require(j, "prior"))};
  } else {
    bad("unknown estimator variant '" + variant + "'");
  }
  if (j.contains("sigma")) spec.sigma = number(j, "sigma");
  as_config([&] {
    spec.validate();
    return 0;
  });
  return spec;
}

}  // namespace steinlab
