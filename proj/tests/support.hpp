#pragma once

// Shared helpers for the test suites: seeded generators and small problems.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "plap/plap.hpp"

namespace plap::testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : eng_(seed) {}

  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(eng_); }
  int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(eng_); }
  bool coin() { return integer(0, 1) == 1; }

  std::vector<double> vector(std::size_t n, double a, double b) {
    std::vector<double> v(n);
    for (double& x : v) x = uniform(a, b);
    return v;
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

// Adaptive Simpson; independent of the Gamma-function closed form.
inline double simpson(const std::function<double(double)>& f, double a, double b, double fa, double fm,
               double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::fabs(left + right - whole) <= 15.0 * tol) {
    return left + right + (left + right - whole) / 15.0;
  }
  return simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return simpson(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), 1e-15, 60);
}

// D_{d,p} = d / (2(d+p)) * average of |y_1|^p over the unit sphere, with the
// average written in polar angle: int |cos t|^p sin^{d-2} t / int sin^{d-2} t.
inline double quadrature_constant(int d, double p) {
  double avg = 1.0;
  if (d >= 2) {
    auto num = [&](double t) { return std::pow(std::cos(t), p) * std::pow(std::sin(t), d - 2); };
    auto den = [&](double t) { return std::pow(std::sin(t), d - 2); };
    avg = integrate(num, 0.0, std::numbers::pi / 2) / integrate(den, 0.0, std::numbers::pi / 2);
  }
  return d / (2.0 * (d + p)) * avg;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

inline PointFn constant_fn(double c) {
  return [c](std::span<const double>) { return c; };
}

/// Problem on (-1, 1) with roughly `n_interior` equation nodes and a stencil
/// reaching `reach` lattice steps.
inline DirichletProblem small_interval_problem(const Exponent& p, int n_interior, int reach,
                                               PointFn f = constant_fn(1.0),
                                               ExtensionRule ext = ExtensionRule::zero()) {
  const double h = 2.0 / (n_interior + 1);
  const double r = (reach + 0.5) * h;
  return DirichletProblem(Domain::interval(-1.0, 1.0), p, r, h, std::move(f), constant_fn(0.0),
                          std::move(ext));
}

inline GridFunction random_grid_function(const DirichletProblem& problem, Gen& gen, double a,
                                         double b) {
  return GridFunction(problem.shared_discretization(),
                      gen.vector(problem.discretization().size(), a, b));
}

}  // namespace plap::testing
