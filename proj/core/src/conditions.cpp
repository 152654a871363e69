#include "steinlab/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "steinlab/bayes_shrinkage.hpp"
#include "steinlab/errors.hpp"
#include "steinlab/rng.hpp"

namespace steinlab {

ConditionGrid ConditionGrid::radial(int p, double r_min, double r_max, std::size_t radii,
                                    std::size_t directions, std::uint64_t seed) {
  if (p < 1) throw Error(ErrorCode::invalid_argument, "grid dimension must be >= 1");
  ConditionGrid grid;
  grid.usq = {1.0};
  const std::vector<double> norms = log_grid(r_min, r_max, radii);
  for (std::size_t d = 0; d < directions; ++d) {
    ReplicateStream stream(seed, d);
    Eigen::VectorXd dir(p);
    do {
      for (int i = 0; i < p; ++i) dir[i] = stream.normal();
    } while (dir.norm() == 0.0);
    dir.normalize();
    for (double r : norms) grid.points.push_back(r * dir);
  }
  return grid;
}

ConditionGrid& ConditionGrid::with_usq(double lo, double hi, std::size_t points) {
  usq = log_grid(lo, hi, points);
  return *this;
}

namespace {

template <typename Terms>
ConditionReport scan(const ConditionGrid& grid, Terms terms) {
  ConditionReport report;
  report.max_value = -std::numeric_limits<double>::infinity();
  report.pass = true;
  report.strictly_negative = true;
  for (const auto& x : grid.points) {
    for (double s : grid.usq) {
      const auto parts = terms(x, s);
      double value = 0.0;
      double scale = 0.0;
      for (double part : parts) {
        value += part;
        scale += std::abs(part);
      }
      ++report.points;
      if (value > report.max_value) {
        report.max_value = value;
        report.argmax_x = x;
        report.argmax_usq = s;
      }
      if (value > 1e-12 * scale) report.pass = false;
      if (!(value < 0.0)) report.strictly_negative = false;
    }
  }
  return report;
}

}  // namespace

ConditionReport check_domination_condition(const VectorField& field, double c,
                                           const ConditionGrid& grid) {
  if (!(c > 0.0)) throw Error(ErrorCode::invalid_argument, "c must be positive");
  return scan(grid, [&](const Eigen::VectorXd& x, double s) {
    return std::array<double, 2>{field.g(x, s).squaredNorm(), 2.0 * c * field.div_x(x, s)};
  });
}

ConditionReport check_thm42_condition(const VectorField& field, const ConditionGrid& grid,
                                      int k) {
  if (k < 1) throw Error(ErrorCode::invalid_argument, "k must be >= 1");
  return scan(grid, [&](const Eigen::VectorXd& x, double s) {
    const double third =
        field.u_dependent ? 2.0 * s / (k + 2.0) * field.d_usq_norm_sq(x, s) : 0.0;
    return std::array<double, 3>{field.g(x, s).squaredNorm(), 2.0 * field.div_x(x, s), third};
  });
}

MinimaxBound minimax_a_bound(const ModelSpec& model, std::uint64_t n_mc, std::uint64_t seed,
                             const ExecutionPolicy& policy, bool force_mc) {
  model.validate();
  const int p = model.p();
  if (p < 3) {
    throw Error(ErrorCode::infinite_expectation, "E_0[1/|X|^2] diverges for p < 3");
  }
  MinimaxBound out;
  const double sigma_sq = model.sigma * model.sigma;
  if (std::holds_alternative<NormalFamily>(model.family) && !force_mc) {
    // E[1/chi^2_p] = 1/(p-2)
    out.value = sigma_sq * (p - 2.0) / p;
    out.analytic = true;
    return out;
  }
  if (n_mc < 2) throw Error(ErrorCode::invalid_argument, "Monte Carlo needs n >= 2");
  const ModelSpec centred = model.with_theta(Eigen::VectorXd::Zero(p));
  const auto result = reduce_replicates<1>(
      n_mc, policy, [&](std::uint64_t first, std::uint64_t last, BlockResult<1>& partial) {
        Eigen::VectorXd x(p), u(centred.k);
        for (std::uint64_t i = first; i < last; ++i) {
          draw_replicate(centred, seed, i, x, u);
          const double t = x.squaredNorm();
          if (t == 0.0) {
            ++partial.skipped;
            continue;
          }
          partial.moments[0].add(1.0 / t);
        }
      });
  const Moments& m = result.moments[0];
  out.value = 1.0 / (p * m.mean);
  out.std_error = m.std_error() / (p * m.mean * m.mean);
  out.n = m.count;
  return out;
}

}  // namespace steinlab
