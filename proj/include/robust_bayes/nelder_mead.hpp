#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>

namespace robust_bayes {

struct NelderMeadOptions {
  double simplex_tol = 1e-10;  // max-norm distance of every vertex from the best one
  int max_iterations = 10000;
  int max_restarts = 5;
};

template <std::size_t N>
struct NelderMeadResult {
  std::array<double, N> x{};
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Minimises f over R^N. The search is restarted from the best vertex with a
/// fresh simplex after each convergence, until a restart no longer improves
/// the value; this guards against the premature collapse plain Nelder–Mead
/// is prone to.
template <std::size_t N, class F>
NelderMeadResult<N> nelder_mead(F&& f, std::array<double, N> start, std::array<double, N> step,
                                const NelderMeadOptions& opts = {}) {
  using Point = std::array<double, N>;
  struct Vertex {
    Point x;
    double fx;
  };

  auto eval = [&](const Point& p) {
    const double v = f(p);
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
  };

  NelderMeadResult<N> result;
  result.x = start;
  result.value = eval(start);
  int total_iterations = 0;

  for (int restart = 0; restart <= opts.max_restarts; ++restart) {
    std::array<Vertex, N + 1> simplex;
    simplex[0] = {result.x, result.value};
    for (std::size_t d = 0; d < N; ++d) {
      Point p = result.x;
      p[d] += step[d];
      simplex[d + 1] = {p, eval(p)};
    }

    bool converged = false;
    while (total_iterations < opts.max_iterations) {
      std::sort(simplex.begin(), simplex.end(), [](const Vertex& a, const Vertex& b) { return a.fx < b.fx; });

      double size = 0.0;
      for (std::size_t v = 1; v <= N; ++v)
        for (std::size_t d = 0; d < N; ++d) size = std::max(size, std::abs(simplex[v].x[d] - simplex[0].x[d]));
      if (size < opts.simplex_tol) {
        converged = true;
        break;
      }
      ++total_iterations;

      Point centroid{};
      for (std::size_t v = 0; v < N; ++v)
        for (std::size_t d = 0; d < N; ++d) centroid[d] += simplex[v].x[d] / static_cast<double>(N);

      auto along = [&](double t) {
        Point p;
        for (std::size_t d = 0; d < N; ++d) p[d] = centroid[d] + t * (simplex[N].x[d] - centroid[d]);
        return p;
      };

      const Point xr = along(-1.0);
      const double fr = eval(xr);
      if (fr < simplex[0].fx) {
        const Point xe = along(-2.0);
        const double fe = eval(xe);
        simplex[N] = fe < fr ? Vertex{xe, fe} : Vertex{xr, fr};
        continue;
      }
      if (fr < simplex[N - 1].fx) {
        simplex[N] = {xr, fr};
        continue;
      }
      const bool outside = fr < simplex[N].fx;
      const Point xc = along(outside ? -0.5 : 0.5);
      const double fc = eval(xc);
      if (fc < (outside ? fr : simplex[N].fx)) {
        simplex[N] = {xc, fc};
        continue;
      }
      for (std::size_t v = 1; v <= N; ++v) {
        for (std::size_t d = 0; d < N; ++d) simplex[v].x[d] = simplex[0].x[d] + 0.5 * (simplex[v].x[d] - simplex[0].x[d]);
        simplex[v].fx = eval(simplex[v].x);
      }
    }

    std::sort(simplex.begin(), simplex.end(), [](const Vertex& a, const Vertex& b) { return a.fx < b.fx; });
    const double previous = result.value;
    result.x = simplex[0].x;
    result.value = simplex[0].fx;
    result.iterations = total_iterations;
    result.converged = converged;
    if (!converged) break;
    if (restart > 0 && !(result.value < previous - 1e-15 * (1.0 + std::abs(previous)))) break;
    for (auto& s : step) s = std::max(std::abs(s) * 0.1, 1e-4);
  }
  return result;
}

}  // namespace robust_bayes
