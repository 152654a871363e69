// steinlab command-line front end.
//
// Exit status: 0 every check passed, 1 some check failed, 2 usage or config
// error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "steinlab/bayes_shrinkage.hpp"
#include "steinlab/errors.hpp"
#include "steinlab/experiment.hpp"
#include "steinlab/serialization.hpp"

using nlohmann::json;
using namespace steinlab;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> n;
  std::string model;
  std::string estimator;
  std::string field;
  std::optional<unsigned> threads;
  std::string out;
};

void add_common(CLI::App* app, Overrides& o, bool config_required = false) {
  auto* cfg = app->add_option("--config,-c", o.config, "experiment config (JSON)");
  if (config_required) cfg->required();
  cfg->check(CLI::ExistingFile);
  app->add_option("--seed", o.seed, "override the master seed");
  app->add_option("--n", o.n, "override the replicate count")->check(CLI::PositiveNumber);
  app->add_option("--threads", o.threads, "worker threads (0 = all cores)");
  app->add_option("--out", o.out, "output directory");
}

void add_selection(CLI::App* app, Overrides& o) {
  app->add_option("--model", o.model, "model: a config name or inline JSON");
  app->add_option("--estimator", o.estimator, "estimator: a config name or inline JSON");
}

json base_document(const Overrides& o) {
  if (o.config.empty()) return json::object();
  std::ifstream in(o.config);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::config, "'" + o.config + "' is not valid JSON: " + e.what());
  }
  return j;
}

// Returns the name to reference; inline JSON is registered under `inline_name`.
std::string register_ref(json& doc, const char* section, const std::string& value,
                         const std::string& inline_name) {
  if (value.empty()) return {};
  if (value.front() == '{') {
    json parsed;
    try {
      parsed = json::parse(value);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::config, std::string("inline ") + section + " is not valid JSON: " + e.what());
    }
    doc[section][inline_name] = parsed;
    return inline_name;
  }
  if (!doc.contains(section) || !doc[section].contains(value)) {
    throw Error(ErrorCode::config, std::string(section) + " '" + value + "' is not defined");
  }
  return value;
}

void apply_scalars(json& doc, const Overrides& o) {
  if (o.seed) doc["seed"] = *o.seed;
  if (o.n) doc["n"] = *o.n;
  if (doc.contains("checks") && doc["checks"].is_array()) {
    for (auto& c : doc["checks"]) {
      if (o.seed) c.erase("seed");
      if (o.n) c.erase("n");
    }
  }
}

// Keeps only checks whose type is in `types`; --model/--estimator retarget them.
void select_checks(json& doc, const std::set<std::string>& types, const std::string& model,
                   const std::string& estimator, const std::string& field) {
  json kept = json::array();
  if (doc.contains("checks") && doc["checks"].is_array()) {
    for (auto c : doc["checks"]) {
      if (!c.contains("type") || !types.count(c["type"].get<std::string>())) continue;
      if (!model.empty() && c.contains("model")) c["model"] = model;
      if (!estimator.empty() && c.contains("estimator")) c["estimator"] = estimator;
      if (!field.empty() && c.contains("field")) c["field"] = field;
      kept.push_back(c);
    }
  }
  doc["checks"] = kept;
}

int execute(const json& doc, const Overrides& o) {
  const ExperimentConfig config = parse_config(doc);
  RunOptions options;
  if (!o.out.empty()) options.output_dir = o.out;
  options.threads = o.threads;
  options.log = &std::cout;
  const RunManifest manifest = run(config, options);
  std::size_t failed = 0;
  for (const auto& c : manifest.checks) failed += c.pass ? 0 : 1;
  std::cout << (failed == 0 ? "all " + std::to_string(manifest.checks.size()) + " check(s) passed"
                            : std::to_string(failed) + " of " + std::to_string(manifest.checks.size()) +
                                  " check(s) failed")
            << "; outputs in " << manifest.output_dir.string() << '\n';
  return failed == 0 ? kExitPass : kExitFail;
}

int model_p(const json& doc, const std::string& name) {
  return model_from_json(doc["models"][name]).p();
}

BayesPriorSpec prior_of(double a, double b, int p, int k) {
  BayesPriorSpec prior;
  prior.a_prior = a;
  prior.b_prior = b;
  prior.p = p;
  prior.k = k;
  return prior;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"steinlab: risk experiments for shrinkage estimators under spherical models"};
  app.require_subcommand(1);
  app.set_version_flag("--version", STEINLAB_VERSION);

  Overrides o;
  std::string expect = "nonpositive";
  double a = 0.0, b = 0.0, w_min = 1e-3, w_max = 1e6;
  int p = 0, k = 0;
  std::size_t points = 200;
  std::string family;

  auto* run_cmd = app.add_subcommand("run", "run every check in a config");
  add_common(run_cmd, o, true);

  auto* sim = app.add_subcommand("simulate-risk", "Monte Carlo risk, or paired risk difference vs a baseline");
  add_common(sim, o);
  add_selection(sim, o);
  std::string baseline;
  sim->add_option("--baseline", baseline, "baseline estimator for a paired difference");
  sim->add_option("--expect", expect, "negative | nonpositive | zero | none")
      ->check(CLI::IsMember({"negative", "nonpositive", "zero", "none"}));

  auto* sweep = app.add_subcommand("risk-sweep", "risk over a grid of theta");
  add_common(sweep, o);
  add_selection(sweep, o);

  auto* ident = app.add_subcommand("verify-identities", "Stein, Q, sphere/ball and cross-term identities");
  add_common(ident, o);
  add_selection(ident, o);
  ident->add_option("--field", o.field, "vector field: a config name or inline JSON");

  auto* table = app.add_subcommand("bayes-r-table", "tabulate r(w) for the generalized Bayes prior");
  auto* cert = app.add_subcommand("certify-minimax", "clause-by-clause minimaxity report");
  for (auto* cmd : {table, cert}) {
    cmd->add_option("--a", a, "prior exponent on eta")->default_val(0.0);
    cmd->add_option("--b", b, "prior exponent on |theta|")->required();
    cmd->add_option("--p", p, "dimension of X")->required()->check(CLI::PositiveNumber);
    cmd->add_option("--k", k, "dimension of U")->required()->check(CLI::NonNegativeNumber);
    cmd->add_option("--out", o.out, "output directory");
  }
  table->add_option("--w-min", w_min, "smallest w")->default_val(1e-3);
  table->add_option("--w-max", w_max, "largest w")->default_val(1e6);
  table->add_option("--points", points, "log-spaced grid points")->default_val(200);

  auto* orth = app.add_subcommand("orthant-sweep", "orthant-restricted estimator vs the positive part");
  add_common(orth, o);
  orth->add_option("--model", o.model, "model: a config name or inline JSON");
  orth->add_option("--family", family, "shrinkage family as inline JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kExitUsage;
  }

  try {
    if (*run_cmd) {
      json doc = base_document(o);
      apply_scalars(doc, o);
      return execute(doc, o);
    }

    if (*cert) {
      const MinimaxCertificate c = minimaxity_certificate(prior_of(a, b, p, k));
      std::cout << c.to_text();
      if (!o.out.empty()) {
        const std::string name = "certify_minimax.txt";
        write_text(std::filesystem::path(o.out) / name, c.to_text());
      }
      return c.pass ? kExitPass : kExitFail;
    }

    if (*table) {
      json doc = {{"checks", json::array({{{"name", "bayes_r_table"},
                                           {"type", "bayes_r_table"},
                                           {"prior", to_json(prior_of(a, b, p, k))},
                                           {"w_min", w_min},
                                           {"w_max", w_max},
                                           {"points", points}}})},
                  {"output", {{"dir", "steinlab_out"}, {"formats", {"csv"}}}}};
      return execute(doc, o);
    }

    json doc = base_document(o);
    apply_scalars(doc, o);
    const std::string model = register_ref(doc, "models", o.model, "cli_model");
    const std::string est = register_ref(doc, "estimators", o.estimator, "cli_estimator");
    const bool from_config = !o.config.empty();
    auto need_model = [&] {
      if (model.empty()) throw Error(ErrorCode::config, "--model is required without --config");
    };

    if (*sim) {
      const std::string base = register_ref(doc, "estimators", baseline, "cli_baseline");
      select_checks(doc, {"mc_risk", "mc_risk_difference"}, model, est, "");
      if (!base.empty()) {
        for (auto& c : doc["checks"]) {
          if (c["type"] == "mc_risk_difference") c["baseline"] = base;
        }
      }
      if (!from_config || doc["checks"].empty()) {
        need_model();
        if (est.empty()) throw Error(ErrorCode::config, "--estimator is required without --config");
        json c = {{"name", "simulate_risk"}, {"model", model}, {"estimator", est}};
        if (base.empty()) {
          c["type"] = "mc_risk";
        } else {
          c["type"] = "mc_risk_difference";
          c["baseline"] = base;
          c["expect"] = expect;
        }
        doc["checks"] = json::array({c});
      }
      return execute(doc, o);
    }

    if (*sweep) {
      select_checks(doc, {"risk_sweep"}, model, est, "");
      if (!from_config || doc["checks"].empty()) {
        need_model();
        if (est.empty()) throw Error(ErrorCode::config, "--estimator is required without --config");
        doc["checks"] = json::array({{{"name", "risk_sweep"}, {"type", "risk_sweep"},
                                      {"model", model}, {"estimator", est}}});
      }
      return execute(doc, o);
    }

    if (*ident) {
      const std::string field = register_ref(doc, "fields", o.field, "cli_field");
      select_checks(doc,
                    {"stein_identity", "q_identity", "sphere_ball", "unknown_scale_cross_term",
                     "unbiased_risk_difference", "ball_average"},
                    model, est, field);
      if (!from_config || doc["checks"].empty()) {
        need_model();
        const ModelSpec m = model_from_json(doc["models"][model]);
        std::string f = field;
        if (f.empty()) {
          doc["fields"]["cli_field"] = {{"kind", "james_stein"}, {"a", m.p() - 2.0}};
          f = "cli_field";
        }
        json checks = json::array();
        if (m.family_name() == "normal") {
          checks.push_back({{"name", "stein_identity"}, {"type", "stein_identity"},
                            {"model", model}, {"field", f}});
        }
        checks.push_back({{"name", "q_identity"}, {"type", "q_identity"}, {"model", model}, {"field", f}});
        if (m.k >= 1) {
          checks.push_back({{"name", "unknown_scale_cross_term"}, {"type", "unknown_scale_cross_term"},
                            {"model", model}, {"field", f}});
        }
        doc["checks"] = checks;
      }
      return execute(doc, o);
    }

    if (*orth) {
      select_checks(doc, {"orthant_domination"}, model, "", "");
      if (!family.empty()) {
        json fam;
        try {
          fam = json::parse(family);
        } catch (const json::parse_error& e) {
          throw Error(ErrorCode::config, std::string("--family is not valid JSON: ") + e.what());
        }
        for (auto& c : doc["checks"]) c["family"] = fam;
      }
      if (!from_config || doc["checks"].empty()) {
        need_model();
        (void)model_p(doc, model);
        json c = {{"name", "orthant_sweep"}, {"type", "orthant_domination"}, {"model", model},
                  {"strict_at_origin", true}};
        if (!family.empty()) c["family"] = json::parse(family);
        doc["checks"] = json::array({c});
      }
      return execute(doc, o);
    }
  } catch (const Error& e) {
    std::cerr << "steinlab: " << e.what() << '\n';
    return kExitUsage;
  } catch (const json::exception& e) {
    std::cerr << "steinlab: config: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
