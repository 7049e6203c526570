#pragma once

#include <Eigen/Dense>

#include <array>
#include <charconv>
#include <cmath>
#include <optional>
#include <string_view>
#include <system_error>
#include <numbers>
#include <stdexcept>
#include <string>

namespace robust_bayes {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Parameter indices. Partial derivatives are taken with respect to (mu, sigma).
inline constexpr int kMu = 0;
inline constexpr int kSigma = 1;

/// Raised when a numerical routine cannot reach its requested accuracy.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class QuadratureError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ConvergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Raised when J (or another matrix that must be positive definite) is not.
class NotPositiveDefinite : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Fully symmetric 2x2x2 array, stored densely.
class Sym3 {
 public:
  Sym3() { v_.fill(0.0); }

  double& operator()(int i, int j, int k) { return v_[static_cast<std::size_t>(4 * i + 2 * j + k)]; }
  double operator()(int i, int j, int k) const { return v_[static_cast<std::size_t>(4 * i + 2 * j + k)]; }

  Sym3& operator+=(const Sym3& o) {
    for (std::size_t n = 0; n < v_.size(); ++n) v_[n] += o.v_[n];
    return *this;
  }
  Sym3& operator-=(const Sym3& o) {
    for (std::size_t n = 0; n < v_.size(); ++n) v_[n] -= o.v_[n];
    return *this;
  }
  Sym3& operator*=(double s) {
    for (auto& x : v_) x *= s;
    return *this;
  }
  friend Sym3 operator+(Sym3 a, const Sym3& b) { return a += b; }
  friend Sym3 operator-(Sym3 a, const Sym3& b) { return a -= b; }
  friend Sym3 operator*(double s, Sym3 a) { return a *= s; }
  friend Sym3 operator*(Sym3 a, double s) { return a *= s; }

  [[nodiscard]] double max_abs() const {
    double m = 0.0;
    for (double x : v_) m = std::max(m, std::abs(x));
    return m;
  }

  const std::array<double, 8>& data() const { return v_; }
  std::array<double, 8>& data() { return v_; }

 private:
  std::array<double, 8> v_;
};

/// log(2*pi)
inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

/// Shortest round-trip decimal representation; locale independent.
inline std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return {buf.data(), res.ptr};
}

/// Fixed-precision decimal representation; locale independent.
inline std::string format_fixed(double v, int digits) {
  std::array<char, 128> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed, digits);
  return {buf.data(), res.ptr};
}

/// Parses a whole string as a double; nullopt on any trailing garbage.
inline std::optional<double> parse_double(std::string_view text) {
  double v = 0.0;
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

inline std::optional<long long> parse_integer(std::string_view text) {
  long long v = 0;
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

}  // namespace robust_bayes
