#pragma once

namespace steinlab {

/// Generalized prior proportional to eta^a_prior * |theta|^{-b_prior} for the
/// unknown-scale model with dim X = p and dim U = k.
struct BayesPriorSpec {
  double a_prior = 0.0;
  double b_prior = 1.0;
  int p = 3;
  int k = 1;

  // 0 < b < p and k/2 + a + b/2 + 2 > 0; throws parameter_domain otherwise.
  void validate() const;
  // b / (k + 2a + 2), the supremum of r(w) when k/2 + a + 1 > 0.
  double r_upper_bound() const { return b_prior / (k + 2.0 * a_prior + 2.0); }

  bool operator==(const BayesPriorSpec&) const = default;
};

}  // namespace steinlab
