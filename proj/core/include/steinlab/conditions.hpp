#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "steinlab/parallel.hpp"
#include "steinlab/spherical_models.hpp"
#include "steinlab/vector_field.hpp"

namespace steinlab {

struct ConditionGrid {
  std::vector<Eigen::VectorXd> points;
  std::vector<double> usq;  // residual norms; {1} for u-independent checks

  // Log-spaced radii over [r_min, r_max] times seeded random unit directions.
  static ConditionGrid radial(int p, double r_min = 1e-2, double r_max = 1e3,
                              std::size_t radii = 61, std::size_t directions = 50,
                              std::uint64_t seed = 0x5eed);
  ConditionGrid& with_usq(double lo = 1e-2, double hi = 1e3, std::size_t points = 21);
};

struct ConditionReport {
  double max_value = 0.0;
  Eigen::VectorXd argmax_x;
  double argmax_usq = 0.0;
  std::size_t points = 0;
  // max_value <= 0 up to round-off in the summed terms
  bool pass = false;
  // every evaluated value < 0
  bool strictly_negative = false;
};

/// Evaluates |g(x)|^2 + 2 c div g(x) over the grid.
ConditionReport check_domination_condition(const VectorField& field, double c,
                                           const ConditionGrid& grid);

/// Evaluates |g|^2 + 2 div_x g + 2 (s / (k + 2)) d|g|^2/ds over the (x, s) grid,
/// s = |u|^2.
ConditionReport check_thm42_condition(const VectorField& field, const ConditionGrid& grid,
                                      int k);

struct MinimaxBound {
  double value = 0.0;
  double std_error = 0.0;
  bool analytic = false;
  std::uint64_t n = 0;
};

/// 1 / (p E_0[1/|X|^2]) at theta = 0. Closed form for the normal family,
/// Monte Carlo (delta-method standard error) otherwise or when force_mc is set.
/// Throws infinite_expectation for p < 3.
MinimaxBound minimax_a_bound(const ModelSpec& model, std::uint64_t n_mc, std::uint64_t seed,
                             const ExecutionPolicy& policy = {}, bool force_mc = false);

}  // namespace steinlab
