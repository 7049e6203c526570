#pragma once

// Globally adaptive Gauss–Kronrod (G7/K15) integration for scalar- and
// Eigen-vector-valued integrands. Vector integrands share one subdivision,
// which is what the sandwich and tilted-moment computations need: all
// components are integrated against the same weight in one pass.

#include "robust_bayes/core.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <span>
#include <sstream>
#include <type_traits>
#include <vector>

namespace robust_bayes {

struct QuadratureOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-12;
  int max_intervals = 4000;
};

namespace detail {

inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};

inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

// Gauss weights for the odd-indexed Kronrod nodes 1, 3, 5 and the centre.
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

inline double max_abs(double v) { return std::abs(v); }

template <class Derived>
double max_abs(const Eigen::MatrixBase<Derived>& v) {
  return v.cwiseAbs().maxCoeff();
}

template <class V>
struct Segment {
  double a;
  double b;
  V value;
  double error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

template <class F, class V>
Segment<V> kronrod15(F& f, double a, double b) {
  const double centre = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const V fc = f(centre);
  V kronrod = kKronrodWeights[7] * fc;
  V gauss = kGaussWeights[3] * fc;
  for (int n = 0; n < 7; ++n) {
    const double dx = half * kKronrodNodes[static_cast<std::size_t>(n)];
    const V pair = f(centre - dx) + f(centre + dx);
    kronrod += kKronrodWeights[static_cast<std::size_t>(n)] * pair;
    if (n % 2 == 1) gauss += kGaussWeights[static_cast<std::size_t>(n / 2)] * pair;
  }
  kronrod *= half;
  gauss *= half;
  const double err = max_abs(V(kronrod - gauss));
  return {a, b, kronrod, err};
}

}  // namespace detail

template <class F>
using integrand_value_t = std::decay_t<std::invoke_result_t<F&, double>>;

/// Integrate f over the consecutive intervals defined by sorted `points`
/// (at least two). Subdivides the interval with the largest error estimate
/// until the total error is below max(abs_tol, rel_tol * |I|).
template <class F>
integrand_value_t<F> integrate(F&& f, std::span<const double> points, const QuadratureOptions& opts = {}) {
  using V = integrand_value_t<F>;
  if (points.size() < 2) throw std::invalid_argument("integrate: need at least two points");

  std::priority_queue<detail::Segment<V>> heap;
  bool first = true;
  V total{};
  double total_err = 0.0;
  for (std::size_t n = 0; n + 1 < points.size(); ++n) {
    if (!(points[n] < points[n + 1])) continue;
    auto seg = detail::kronrod15<std::remove_reference_t<F>, V>(f, points[n], points[n + 1]);
    if (first) {
      total = seg.value;
      first = false;
    } else {
      total += seg.value;
    }
    total_err += seg.error;
    heap.push(std::move(seg));
  }
  if (first) throw std::invalid_argument("integrate: empty integration range");

  auto converged = [&] {
    return total_err <= std::max(opts.abs_tol, opts.rel_tol * detail::max_abs(total));
  };

  int intervals = static_cast<int>(heap.size());
  while (!converged()) {
    if (intervals >= opts.max_intervals) {
      std::ostringstream msg;
      msg << "adaptive quadrature did not converge: error estimate " << total_err << " after " << intervals
          << " intervals";
      throw QuadratureError(msg.str());
    }
    auto worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    auto left = detail::kronrod15<std::remove_reference_t<F>, V>(f, worst.a, mid);
    auto right = detail::kronrod15<std::remove_reference_t<F>, V>(f, mid, worst.b);
    total += V(left.value + right.value - worst.value);
    total_err += left.error + right.error - worst.error;
    if (!std::isfinite(detail::max_abs(total))) throw QuadratureError("adaptive quadrature: non-finite integral");
    heap.push(std::move(left));
    heap.push(std::move(right));
    ++intervals;
  }
  // Re-sum to remove drift from the incremental updates.
  bool init = false;
  V exact_sum{};
  while (!heap.empty()) {
    if (!init) {
      exact_sum = heap.top().value;
      init = true;
    } else {
      exact_sum += heap.top().value;
    }
    heap.pop();
  }
  return exact_sum;
}

template <class F>
integrand_value_t<F> integrate(F&& f, double a, double b, const QuadratureOptions& opts = {}) {
  const std::array<double, 2> pts{a, b};
  return integrate(std::forward<F>(f), std::span<const double>(pts), opts);
}

/// Sorts and de-duplicates a breakpoint list.
inline std::vector<double> make_breakpoints(std::vector<double> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

}  // namespace robust_bayes
