#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <queue>
#include <vector>
#include <span>
#include <vector>

namespace steinlab {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// n-point Gauss–Legendre rule on [-1, 1]; nodes ascending.
QuadratureRule gauss_legendre(int n);

struct IntegralResult {
  double value = 0.0;
  double abs_error = 0.0;
};

/// Globally adaptive 15-point Gauss–Kronrod over [a, b], bisecting the worst
/// piece until the estimated error falls below rel_tol * |value| or
/// max_intervals is reached. Throws quadrature_failure if the result is not
/// finite.
IntegralResult integrate_gk(const std::function<double(double)>& f, double a, double b,
                            double rel_tol = 1e-12, std::size_t max_intervals = 2000);

/// Sums adaptive integrals over consecutive pieces [breaks[i], breaks[i+1]].
IntegralResult integrate_gk_pieces(const std::function<double(double)>& f,
                                   std::span<const double> breaks,
                                   double rel_tol = 1e-12);

namespace detail {
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights at the odd Kronrod nodes 1, 3, 5, 7.
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};
}  // namespace detail

template <std::size_t N>
struct VectorIntegral {
  std::array<double, N> value{};
  std::array<double, N> abs_error{};
};

/// Adaptive G7/K15 for an N-component integrand sharing its nodes. The interval
/// with the largest scaled error is bisected until every component satisfies
/// abs_error <= rel_tol * |value| (or max_intervals is reached).
template <std::size_t N, typename F>
VectorIntegral<N> integrate_gk_vector(const F& f, double a, double b, double rel_tol = 1e-12,
                                      std::size_t max_intervals = 2000) {
  struct Piece {
    double lo, hi;
    std::array<double, N> value, error;
    double score;
    bool operator<(const Piece& o) const { return score < o.score; }
  };
  auto rule = [&](double lo, double hi) {
    Piece piece{lo, hi, {}, {}, 0.0};
    const double centre = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    std::array<double, N> gauss{};
    const std::array<double, N> mid = f(centre);
    for (std::size_t c = 0; c < N; ++c) {
      piece.value[c] = detail::kKronrodWeights[7] * mid[c];
      gauss[c] = detail::kGaussWeights[3] * mid[c];
    }
    for (std::size_t j = 0; j < 7; ++j) {
      const double dx = half * detail::kKronrodNodes[j];
      const std::array<double, N> left = f(centre - dx);
      const std::array<double, N> right = f(centre + dx);
      for (std::size_t c = 0; c < N; ++c) {
        const double pair = left[c] + right[c];
        piece.value[c] += detail::kKronrodWeights[j] * pair;
        if (j % 2 == 1) gauss[c] += detail::kGaussWeights[j / 2] * pair;
      }
    }
    for (std::size_t c = 0; c < N; ++c) {
      piece.value[c] *= half;
      piece.error[c] = std::abs(piece.value[c] - half * gauss[c]);
    }
    return piece;
  };

  std::priority_queue<Piece> queue;
  VectorIntegral<N> total;
  auto push = [&](Piece piece) {
    for (std::size_t c = 0; c < N; ++c) {
      total.value[c] += piece.value[c];
      total.abs_error[c] += piece.error[c];
    }
    piece.score = 0.0;
    for (std::size_t c = 0; c < N; ++c) {
      const double magnitude = std::abs(total.value[c]);
      piece.score = std::max(piece.score,
                             magnitude > 0.0 ? piece.error[c] / magnitude : piece.error[c]);
    }
    queue.push(std::move(piece));
  };
  auto converged = [&] {
    for (std::size_t c = 0; c < N; ++c) {
      if (total.abs_error[c] > rel_tol * std::abs(total.value[c])) return false;
    }
    return true;
  };

  push(rule(a, b));
  std::size_t intervals = 1;
  while (!converged() && intervals < max_intervals) {
    Piece worst = queue.top();
    queue.pop();
    for (std::size_t c = 0; c < N; ++c) {
      total.value[c] -= worst.value[c];
      total.abs_error[c] -= worst.error[c];
    }
    const double mid = 0.5 * (worst.lo + worst.hi);
    push(rule(worst.lo, mid));
    push(rule(mid, worst.hi));
    ++intervals;
  }
  // Recompute totals from the final partition to drop accumulated cancellation.
  total = {};
  while (!queue.empty()) {
    const Piece& piece = queue.top();
    for (std::size_t c = 0; c < N; ++c) {
      total.value[c] += piece.value[c];
      total.abs_error[c] += piece.error[c];
    }
    queue.pop();
  }
  return total;
}

// log(sum(exp(values))) without overflow; -inf for an empty span.
double log_sum_exp(std::span<const double> values) noexcept;

}  // namespace steinlab
