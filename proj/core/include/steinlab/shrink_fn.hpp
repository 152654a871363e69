#pragma once

#include <functional>
#include <string>

namespace steinlab {

/// Scalar shrinkage profile r(t) >= 0 with its derivative and the metadata the
/// domination checkers rely on.
struct ShrinkFn {
  enum class Kind { constant, saturating_linear, rational, custom };

  Kind kind = Kind::constant;
  // constant: value; saturating_linear: slope, bound; rational: bound.
  double value = 0.0;
  double slope = 0.0;
  std::function<double(double)> r;
  std::function<double(double)> r_prime;
  double declared_upper_bound = 0.0;
  bool monotone_nondecreasing = true;

  double operator()(double t) const { return r(t); }
  double derivative(double t) const { return r_prime(t); }

  std::string describe() const;

  // r == a
  static ShrinkFn constant(double a);
  // r(t) = min(slope * t, bound)
  static ShrinkFn saturating_linear(double slope, double bound);
  // r(t) = bound * t / (1 + t)
  static ShrinkFn rational(double bound);
  static ShrinkFn custom(std::function<double(double)> r, std::function<double(double)> r_prime,
                         double declared_upper_bound, bool monotone_nondecreasing);
};

bool operator==(const ShrinkFn& a, const ShrinkFn& b);

}  // namespace steinlab
