#include "steinlab/shrink_fn.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "steinlab/errors.hpp"

namespace steinlab {

namespace {

void require_nonnegative(double v, const char* what) {
  if (!(std::isfinite(v) && v >= 0.0)) {
    throw Error(ErrorCode::invalid_argument, std::string(what) + " must be >= 0");
  }
}

}  // namespace

ShrinkFn ShrinkFn::constant(double a) {
  require_nonnegative(a, "shrinkage constant");
  ShrinkFn fn;
  fn.kind = Kind::constant;
  fn.value = a;
  fn.r = [a](double) { return a; };
  fn.r_prime = [](double) { return 0.0; };
  fn.declared_upper_bound = a;
  return fn;
}

ShrinkFn ShrinkFn::saturating_linear(double slope, double bound) {
  require_nonnegative(slope, "slope");
  require_nonnegative(bound, "bound");
  ShrinkFn fn;
  fn.kind = Kind::saturating_linear;
  fn.slope = slope;
  fn.value = bound;
  fn.r = [slope, bound](double t) { return std::min(slope * t, bound); };
  fn.r_prime = [slope, bound](double t) { return slope * t < bound ? slope : 0.0; };
  fn.declared_upper_bound = bound;
  return fn;
}

ShrinkFn ShrinkFn::rational(double bound) {
  require_nonnegative(bound, "bound");
  ShrinkFn fn;
  fn.kind = Kind::rational;
  fn.value = bound;
  fn.r = [bound](double t) { return bound * t / (1.0 + t); };
  fn.r_prime = [bound](double t) { return bound / ((1.0 + t) * (1.0 + t)); };
  fn.declared_upper_bound = bound;
  return fn;
}

ShrinkFn ShrinkFn::custom(std::function<double(double)> r, std::function<double(double)> r_prime,
                          double declared_upper_bound, bool monotone_nondecreasing) {
  ShrinkFn fn;
  fn.kind = Kind::custom;
  fn.r = std::move(r);
  fn.r_prime = std::move(r_prime);
  fn.declared_upper_bound = declared_upper_bound;
  fn.monotone_nondecreasing = monotone_nondecreasing;
  return fn;
}

std::string ShrinkFn::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::constant: os << "constant(" << value << ")"; break;
    case Kind::saturating_linear: os << "saturating_linear(" << slope << "," << value << ")"; break;
    case Kind::rational: os << "rational(" << value << ")"; break;
    case Kind::custom: os << "custom"; break;
  }
  return os.str();
}

bool operator==(const ShrinkFn& a, const ShrinkFn& b) {
  if (a.kind == ShrinkFn::Kind::custom || b.kind == ShrinkFn::Kind::custom) return false;
  return a.kind == b.kind && a.value == b.value && a.slope == b.slope;
}

}  // namespace steinlab
