#pragma once

#include <nlohmann/json.hpp>

#include "steinlab/bayes_prior.hpp"
#include "steinlab/estimators.hpp"
#include "steinlab/shrink_fn.hpp"
#include "steinlab/spherical_models.hpp"

// JSON codecs for the domain types. Parsers throw Error(ErrorCode::config) with
// the offending key in the message; writers emit the canonical form.
namespace steinlab {

nlohmann::json to_json(const MixingLaw& law);
MixingLaw mixing_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ModelSpec& model);
ModelSpec model_from_json(const nlohmann::json& j);

// Custom profiles have no serial form and are rejected.
nlohmann::json to_json(const ShrinkFn& r);
ShrinkFn shrink_fn_from_json(const nlohmann::json& j);

nlohmann::json to_json(const OrthantFamily& family);
OrthantFamily orthant_family_from_json(const nlohmann::json& j);

nlohmann::json to_json(const BayesPriorSpec& prior);
BayesPriorSpec prior_from_json(const nlohmann::json& j);

nlohmann::json to_json(const EstimatorSpec& spec);
EstimatorSpec estimator_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const nlohmann::json& j);

}  // namespace steinlab
