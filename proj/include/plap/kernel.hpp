#pragma once

// Scalar nonlinearity J_p(t) = |t|^{p-2} t, its derivative and shifted
// regularization, and the constants D_{d,p} and |B_1| entering the
// discrete operator prefactor.

#include <cmath>
#include <numbers>
#include <string>

#include "plap/errors.hpp"

namespace plap {

/// Exponent p > 1 of the p-Laplacian. Caches a fast evaluation path for
/// |t|^{p-2} when p-2 is an integer or a half-integer.
class Exponent {
 public:
  explicit Exponent(double p) : p_(p) {
    if (!(p > 1.0) || !std::isfinite(p)) {
      throw InvalidParameter("exponent p must be a finite real > 1, got " +
                             std::to_string(p));
    }
    const double m = p - 2.0;
    if (m >= 0.0 && m <= 64.0 && m == std::floor(m)) {
      kind_ = Kind::kInteger;
      whole_ = static_cast<int>(m);
    } else if (m > -1.0 && m <= 64.0 && 2.0 * m == std::floor(2.0 * m)) {
      kind_ = Kind::kHalfInteger;
      whole_ = static_cast<int>(std::floor(m));
    }
  }

  double value() const noexcept { return p_; }
  /// q = p/(p-1).
  double conjugate() const noexcept { return p_ / (p_ - 1.0); }

  /// |a|^{p-2} for a >= 0. Returns +inf at a = 0 when p < 2.
  double abs_power(double a) const noexcept {
    switch (kind_) {
      case Kind::kInteger:
        return int_power(a, whole_);
      case Kind::kHalfInteger:
        if (whole_ < 0) return 1.0 / std::sqrt(a);
        return int_power(a, whole_) * std::sqrt(a);
      case Kind::kGeneral:
        break;
    }
    return std::pow(a, p_ - 2.0);
  }

 private:
  enum class Kind { kGeneral, kInteger, kHalfInteger };

  static double int_power(double base, int n) noexcept {
    double result = 1.0;
    while (n > 0) {
      if (n & 1) result *= base;
      base *= base;
      n >>= 1;
    }
    return result;
  }

  double p_;
  Kind kind_ = Kind::kGeneral;
  int whole_ = 0;
};

/// J_p(t) = |t|^{p-2} t, with J_p(0) = 0 for every p > 1.
inline double signed_power(double t, const Exponent& p) noexcept {
  if (t == 0.0) return 0.0;
  return t * p.abs_power(std::fabs(t));
}

/// J_p'(t) = (p-1)|t|^{p-2}. Singular at t = 0 when p < 2.
inline double signed_power_deriv(double t, const Exponent& p) {
  if (t == 0.0 && p.value() < 2.0) {
    throw SingularDerivative("J_p'(0) is unbounded for p = " +
                             std::to_string(p.value()) +
                             " < 2; use the regularized nonlinearity");
  }
  return (p.value() - 1.0) * p.abs_power(std::fabs(t));
}

/// Shifted regularization J_p^delta(t) = J_p(t + delta) - J_p(delta) for
/// t >= 0, extended to t < 0 by oddness.
inline double signed_power_reg(double t, const Exponent& p, double delta) {
  if (!(delta > 0.0)) {
    throw InvalidParameter("regularization delta must be > 0");
  }
  const double a = std::fabs(t);
  const double s = signed_power(a + delta, p) - signed_power(delta, p);
  return t < 0.0 ? -s : s;
}

/// Derivative of J_p^delta: (p-1)(|t| + delta)^{p-2}. Bounded for every p.
inline double signed_power_reg_deriv(double t, const Exponent& p, double delta) {
  if (!(delta > 0.0)) {
    throw InvalidParameter("regularization delta must be > 0");
  }
  return (p.value() - 1.0) * p.abs_power(std::fabs(t) + delta);
}

/// Lebesgue measure of the unit ball in R^d.
inline double unit_ball_volume(int d) {
  if (d < 1) throw InvalidParameter("dimension must be >= 1");
  const double half = 0.5 * d;
  return std::exp(half * std::log(std::numbers::pi) - std::lgamma(half + 1.0));
}

struct NormalizationConstant {
  int d = 1;
  double p = 2.0;
  double value = 0.0;    // D_{d,p}
  double omega_d = 0.0;  // |B_1| in R^d
};

namespace detail {

// d/(2(d+p)) times the sphere average of |y_1|^p, written through Gamma:
//   avg_{S^{d-1}} |y_1|^p = Gamma(d/2) Gamma((p+1)/2) / (sqrt(pi) Gamma((d+p)/2)).
inline double normalization_gamma(int d, double p) {
  const double log_avg = std::lgamma(0.5 * d) + std::lgamma(0.5 * (p + 1.0)) -
                         0.5 * std::log(std::numbers::pi) -
                         std::lgamma(0.5 * (d + p));
  return d / (2.0 * (d + p)) * std::exp(log_avg);
}

// Closed products for d = 2 and integer p >= 2.
inline double normalization_d2_integer(int p) {
  const int n = p / 2;
  double prod = 1.0;
  if (p % 2 == 0) {
    for (int i = 1; i <= n; ++i) prod *= (2.0 * i - 1.0) / (2.0 * i);
    return prod / (2.0 + p);
  }
  for (int i = 1; i <= n; ++i) prod *= (2.0 * i) / (2.0 * i + 1.0);
  return 2.0 / (std::numbers::pi * (2.0 + p)) * prod;
}

}  // namespace detail

inline NormalizationConstant normalization_constant(int d, const Exponent& p) {
  if (d < 1) throw InvalidParameter("dimension must be >= 1");
  const double pv = p.value();
  NormalizationConstant c{d, pv, 0.0, unit_ball_volume(d)};
  if (d == 1) {
    c.value = 1.0 / (2.0 * (1.0 + pv));
  } else if (d == 2 && pv >= 2.0 && pv <= 1e6 && pv == std::floor(pv)) {
    c.value = detail::normalization_d2_integer(static_cast<int>(pv));
  } else {
    c.value = detail::normalization_gamma(d, pv);
  }
  return c;
}

}  // namespace plap
