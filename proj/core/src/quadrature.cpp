#include "steinlab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "steinlab/errors.hpp"

namespace steinlab {

QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw Error(ErrorCode::invalid_argument, "Gauss-Legendre order must be >= 1");
  QuadratureRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Tricomi initial guess, then Newton on P_n.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double derivative = 1.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int j = 2; j <= n; ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      derivative = n * (x * p1 - p0) / (x * x - 1.0);
      const double step = p1 / derivative;
      x -= step;
      if (std::abs(step) < 1e-16) break;
    }
    if (n == 1) derivative = 1.0;
    const double w = 2.0 / ((1.0 - x * x) * derivative * derivative);
    const auto lo = static_cast<std::size_t>(i);
    const auto hi = static_cast<std::size_t>(n - 1 - i);
    rule.nodes[lo] = -x;
    rule.nodes[hi] = x;
    rule.weights[lo] = w;
    rule.weights[hi] = w;
  }
  if (n == 1) {
    rule.nodes[0] = 0.0;
    rule.weights[0] = 2.0;
  }
  return rule;
}

IntegralResult integrate_gk(const std::function<double(double)>& f, double a, double b,
                            double rel_tol, std::size_t max_intervals) {
  IntegralResult out;
  if (a == b) return out;
  const auto r = integrate_gk_vector<1>([&](double x) { return std::array<double, 1>{f(x)}; }, a, b,
                                        rel_tol, max_intervals);
  out.value = r.value[0];
  out.abs_error = r.abs_error[0];
  if (!std::isfinite(out.value)) {
    throw Error(ErrorCode::quadrature_failure, "non-finite Gauss-Kronrod result");
  }
  return out;
}

IntegralResult integrate_gk_pieces(const std::function<double(double)>& f,
                                   std::span<const double> breaks, double rel_tol) {
  IntegralResult total;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const IntegralResult piece = integrate_gk(f, breaks[i], breaks[i + 1], rel_tol);
    total.value += piece.value;
    total.abs_error += piece.abs_error;
  }
  return total;
}

double log_sum_exp(std::span<const double> values) noexcept {
  if (values.empty()) return -std::numeric_limits<double>::infinity();
  const double peak = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(peak)) return peak;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - peak);
  return peak + std::log(sum);
}

}  // namespace steinlab
