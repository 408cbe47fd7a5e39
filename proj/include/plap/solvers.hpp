#pragma once

// Three solvers for the scheme -Delta_p^h U = f, U = G:
//   * Newton-Raphson on the residual,
//   * the properized explicit iteration U <- U + tau (Delta_p^h U - eps U + f)
//     with the nonlinear CFL step,
//   * the monotone two-step iteration -L[u^k, u^{k-1}] = f solved node by node.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "plap/errors.hpp"
#include "plap/grid.hpp"
#include "plap/kernel.hpp"
#include "plap/linear.hpp"
#include "plap/operator.hpp"
#include "plap/problems.hpp"

namespace plap {

enum class Method { kNewton, kExplicit, kMonotone };

inline std::string method_name(Method m) {
  switch (m) {
    case Method::kNewton:
      return "newton";
    case Method::kExplicit:
      return "explicit";
    case Method::kMonotone:
      return "monotone";
  }
  return "";
}

inline std::optional<Method> parse_method(std::string_view s) {
  if (s == "newton") return Method::kNewton;
  if (s == "explicit") return Method::kExplicit;
  if (s == "monotone") return Method::kMonotone;
  return std::nullopt;
}

struct SolverReport {
  GridFunction solution;
  int iterations = 0;
  double final_residual = 0.0;
  double wall_time = 0.0;
  Method method = Method::kNewton;
  std::map<std::string, double> extras;
};

struct NewtonConfig {
  int max_iterations = 50;
  double residual_tol = 1e-12;
  double step_tol = 1e-14;
  double damping_floor = 1e-12;
  std::optional<double> delta;
  std::optional<GridFunction> initial_guess;
  LinearSolverKind linear_solver = LinearSolverKind::kAuto;
};

struct ExplicitConfig {
  double epsilon = 1e-8;
  double steady_state_tol = 1e-14;
  long long max_steps = 50'000'000;
  std::optional<double> delta;
  std::optional<GridFunction> initial_guess;
  double cfl_safety = 0.9;
};

struct MonotoneConfig {
  int max_outer = 1'000'000;
  double outer_tol = 1e-13;
  std::optional<GridFunction> initial_guess;
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

inline double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

// Starting iterate with its Dirichlet entries overwritten by G.
inline std::vector<double> projected_start(const DirichletProblem& problem,
                                           const std::optional<GridFunction>& guess,
                                           std::span<const double> ext,
                                           const GridFunction& fallback) {
  const GridFunction& u0 = guess ? *guess : fallback;
  if (&u0.discretization() != &problem.discretization()) {
    throw InvalidParameter("initial guess belongs to a different discretization");
  }
  std::vector<double> z(u0.values().begin(), u0.values().end());
  for (std::size_t i = problem.discretization().interior_count(); i < z.size(); ++i) {
    z[i] = ext[i];
  }
  return z;
}

inline void require_delta_below_two(const Exponent& p, const std::optional<double>& delta,
                                    const char* who) {
  if (p.value() < 2.0 && !delta) {
    throw SingularDerivative(std::string(who) + " needs a regularization delta for p = " +
                             std::to_string(p.value()) + " < 2");
  }
}

}  // namespace detail

/// Cone-shaped start: inside, G(x) + max(1, |G|_inf) depth(x) / max depth;
/// on the layer, G. On (-1, 1) with G = 0 this is (1 - |x|)_+.
inline GridFunction default_initial_guess(const DirichletProblem& problem) {
  const DomainDiscretization& g = problem.discretization();
  const std::vector<double> ext = problem.sample_extension();
  std::vector<double> values(g.size(), 0.0);
  const double amplitude =
      std::max(1.0, detail::max_abs(std::span<const double>(ext).subspan(g.interior_count())));
  std::vector<double> x(g.dimension());
  double max_depth = 0.0;
  std::vector<double> depth(g.interior_count(), 0.0);
  if (problem.domain().has_depth()) {
    for (std::size_t i = 0; i < g.interior_count(); ++i) {
      g.point(i, x);
      depth[i] = problem.domain().depth(x);
      max_depth = std::max(max_depth, depth[i]);
    }
  }
  for (std::size_t i = 0; i < g.interior_count(); ++i) {
    g.point(i, x);
    values[i] = problem.extension().evaluate(x, problem.exponent());
    if (max_depth > 0.0) values[i] += amplitude * depth[i] / max_depth;
  }
  for (std::size_t i = g.interior_count(); i < g.size(); ++i) values[i] = ext[i];
  return GridFunction(problem.shared_discretization(), std::move(values));
}

// ---------------------------------------------------------------------------
// Newton-Raphson

inline SolverReport newton_solve(const DirichletProblem& problem, const NewtonConfig& config = {}) {
  if (config.max_iterations < 1 || !(config.residual_tol > 0.0) || !(config.step_tol > 0.0) ||
      !(config.damping_floor > 0.0)) {
    throw InvalidParameter("Newton tolerances must be > 0 and max_iterations >= 1");
  }
  const auto t0 = detail::Clock::now();
  const Exponent& p = problem.exponent();
  detail::require_delta_below_two(p, config.delta, "Newton");
  const Nonlinearity nl = Nonlinearity::from_optional(config.delta);
  const DomainDiscretization& g = problem.discretization();
  const Stencil& stencil = problem.stencil();
  const std::size_t n_int = g.interior_count();

  const std::vector<double> f = problem.sample_source();
  const std::vector<double> ext = problem.sample_extension();
  std::vector<double> z = detail::projected_start(
      problem, config.initial_guess, ext,
      config.initial_guess ? *config.initial_guess : default_initial_guess(problem));

  std::vector<double> res(g.size());
  std::vector<double> rhs(n_int);
  std::vector<double> step(n_int);
  int damping_activations = 0;
  int linear_iterations = 0;
  double max_damping = 0.0;

  auto finish = [&](int iterations, double residual) {
    SolverReport rep{GridFunction(problem.shared_discretization(), z), iterations, residual,
                     detail::seconds_since(t0), Method::kNewton, {}};
    rep.extras["damping_activations"] = damping_activations;
    rep.extras["max_damping"] = max_damping;
    rep.extras["linear_iterations"] = linear_iterations;
    if (config.delta) rep.extras["delta"] = *config.delta;
    return rep;
  };

  for (int it = 0;; ++it) {
    detail::residual_into(g, stencil, z, f, ext, nl, res);
    const double rnorm = detail::max_abs(res);
    if (!std::isfinite(rnorm)) {
      throw LinearSolveFailure("Newton iterate became non-finite at iteration " +
                               std::to_string(it));
    }
    if (rnorm <= config.residual_tol) return finish(it, rnorm);
    if (it == config.max_iterations) {
      throw MaxIterationsExceeded("Newton did not converge in " +
                                  std::to_string(config.max_iterations) +
                                  " iterations (residual " + std::to_string(rnorm) + ")");
    }

    InteriorJacobian jac(g, stencil, z, nl);
    for (std::size_t i = 0; i < n_int; ++i) rhs[i] = -res[i];
    double damping = 0.0;
    if (!(jac.min_diagonal() > 0.0)) {
      damping = config.damping_floor;
      jac.add_damping(damping);
      ++damping_activations;
    }
    while (true) {
      const LinearSolveResult ls = solve_interior(jac, rhs, step, 1e-12, config.linear_solver);
      linear_iterations += ls.iterations;
      if (ls.ok) break;
      const double next = damping == 0.0 ? config.damping_floor : damping * 10.0;
      if (next > 1e-4 * (1.0 + 1e-9)) {
        throw LinearSolveFailure("Newton linear solve failed (relative residual " +
                                 std::to_string(ls.relative_residual) +
                                 ") even with diagonal damping " + std::to_string(damping));
      }
      jac.add_damping(next - damping);
      damping = next;
      ++damping_activations;
    }
    max_damping = std::max(max_damping, damping);
    double snorm = 0.0;
    for (std::size_t i = 0; i < n_int; ++i) {
      z[i] += step[i];
      snorm = std::max(snorm, std::fabs(step[i]));
    }
    if (snorm < config.step_tol) {
      detail::residual_into(g, stencil, z, f, ext, nl, res);
      return finish(it + 1, detail::max_abs(res));
    }
  }
}

// ---------------------------------------------------------------------------
// Explicit properized iteration

/// safety * min{1, r^p D_{d,p} (1 - eps) / (Lip (1 + sqrt d)^d)} with
/// Lip = (p-1) 2^{p-2} L^{p-2}. Under regularization Lip is the bound on the
/// derivative of J_p^delta: (p-1) delta^{p-2} for p < 2 and
/// (p-1) (2L + delta)^{p-2} for p >= 2.
inline double cfl_timestep(double lipschitz_state, double r, const Exponent& p, double epsilon,
                           int d, double safety, std::optional<double> delta = std::nullopt) {
  const double pv = p.value();
  if (!(r > 0.0) || d < 1) throw InvalidParameter("cfl_timestep needs r > 0 and d >= 1");
  if (!(safety > 0.0 && safety <= 1.0)) throw InvalidParameter("cfl safety must lie in (0, 1]");
  if (!(lipschitz_state >= 0.0)) throw InvalidParameter("L_m must be >= 0");
  double lip = 0.0;
  if (delta) {
    lip = pv < 2.0 ? (pv - 1.0) * std::pow(*delta, pv - 2.0)
                   : (pv - 1.0) * std::pow(2.0 * lipschitz_state + *delta, pv - 2.0);
  } else {
    if (pv < 2.0) {
      throw SingularDerivative("the CFL rule for p < 2 requires a regularization delta");
    }
    lip = (pv - 1.0) * std::pow(2.0, pv - 2.0) * std::pow(lipschitz_state, pv - 2.0);
  }
  const double D = normalization_constant(d, p).value;
  const double bound = std::pow(r, pv) * D * (1.0 - epsilon) /
                       (lip * std::pow(1.0 + std::sqrt(static_cast<double>(d)), d));
  return safety * std::min(1.0, bound);
}

/// Optional per-step observer: (step, max |U^{m+1} - U^m|, tau_m).
using ExplicitObserver = std::function<void(long long, double, double)>;

inline SolverReport explicit_solve(const DirichletProblem& problem,
                                   const ExplicitConfig& config = {},
                                   const ExplicitObserver& observer = {}) {
  if (!(config.epsilon > 0.0 && config.epsilon < 1.0)) {
    throw InvalidParameter("properization epsilon must lie in (0, 1)");
  }
  if (!(config.steady_state_tol > 0.0) || config.max_steps < 1) {
    throw InvalidParameter("explicit solver needs steady_state_tol > 0 and max_steps >= 1");
  }
  const auto t0 = detail::Clock::now();
  const Exponent& p = problem.exponent();
  detail::require_delta_below_two(p, config.delta, "the explicit solver");
  const Nonlinearity nl = Nonlinearity::from_optional(config.delta);
  const DomainDiscretization& g = problem.discretization();
  const Stencil& stencil = problem.stencil();
  const std::size_t n_int = g.interior_count();

  const std::vector<double> f = problem.sample_source();
  const std::vector<double> ext = problem.sample_extension();
  std::vector<double> u = detail::projected_start(
      problem, config.initial_guess, ext,
      config.initial_guess ? *config.initial_guess : default_initial_guess(problem));

  double lm = detail::max_abs(u);
  const double blowup =
      1e6 * (1.0 + lm + detail::max_abs(std::span<const double>(ext).subspan(n_int)) +
             detail::max_abs(f));
  std::vector<double> lap(n_int);
  double tau = 0.0;
  double min_tau = std::numeric_limits<double>::infinity();
  for (long long m = 0; m < config.max_steps; ++m) {
    tau = cfl_timestep(lm, problem.r(), p, config.epsilon, g.dimension(), config.cfl_safety,
                       config.delta);
    min_tau = std::min(min_tau, tau);
    detail::apply_interior(g, stencil, u, nl, lap);
    double diff = 0.0;
    double unorm = 0.0;
    for (std::size_t i = 0; i < n_int; ++i) {
      const double next = u[i] + tau * (lap[i] - config.epsilon * u[i] + f[i]);
      diff = std::max(diff, std::fabs(next - u[i]));
      u[i] = next;
      unorm = std::max(unorm, std::fabs(next));
    }
    if (!std::isfinite(unorm) || unorm > blowup) {
      throw Divergence("explicit iteration diverged at step " + std::to_string(m + 1));
    }
    lm = std::max(lm, unorm);
    if (observer) observer(m + 1, diff, tau);
    if (diff < config.steady_state_tol) {
      std::vector<double> res(g.size());
      detail::residual_into(g, stencil, u, f, ext, nl, res);
      SolverReport rep{GridFunction(problem.shared_discretization(), std::move(u)),
                       static_cast<int>(std::min<long long>(m + 1, std::numeric_limits<int>::max())),
                       detail::max_abs(res), detail::seconds_since(t0), Method::kExplicit, {}};
      rep.extras["final_tau"] = tau;
      rep.extras["min_tau"] = min_tau;
      rep.extras["lipschitz_state"] = lm;
      rep.extras["steps"] = static_cast<double>(m + 1);
      rep.extras["epsilon"] = config.epsilon;
      if (config.delta) rep.extras["delta"] = *config.delta;
      return rep;
    }
  }
  throw MaxStepsExceeded("explicit iteration did not reach a steady state in " +
                         std::to_string(config.max_steps) + " steps");
}

// ---------------------------------------------------------------------------
// Monotone two-step iteration

namespace detail {

struct ScalarSolve {
  double root = 0.0;
  int doublings = 0;
  int evaluations = 0;
};

// Root s of c * sum_j J_p(phi_j - s) + f = 0. The left side is strictly
// decreasing in s. A geometrically expanded bracket is refined by Newton
// steps, falling back to bisection whenever a step leaves the bracket or
// converges too slowly.
inline ScalarSolve solve_node(std::span<const double> neighbors, double c, double f,
                              const Exponent& p, double start) {
  ScalarSolve out;
  auto eval = [&](double s, double* slope) {
    double v = 0.0;
    double dv = 0.0;
    for (double phi : neighbors) {
      const double t = phi - s;
      const double a = std::fabs(t);
      const double w = p.abs_power(a);
      if (a != 0.0) v += t * w;
      dv += w;
    }
    ++out.evaluations;
    if (slope) *slope = -c * (p.value() - 1.0) * dv;
    return c * v + f;
  };
  const auto [mn, mx] = std::minmax_element(neighbors.begin(), neighbors.end());
  double lo = *mn - 1.0;
  double hi = *mx + 1.0;
  double width = 1.0;
  while (eval(lo, nullptr) < 0.0) {
    if (++out.doublings > 60) throw BracketFailure("monotone node solve: bracket expansion failed");
    width *= 2.0;
    lo -= width;
  }
  width = 1.0;
  while (eval(hi, nullptr) > 0.0) {
    if (++out.doublings > 60) throw BracketFailure("monotone node solve: bracket expansion failed");
    width *= 2.0;
    hi += width;
  }
  double s = std::clamp(start, lo, hi);
  constexpr double kTol = 1e-14;
  double step = hi - lo;
  double step_before = step;
  for (int it = 0; it < 400; ++it) {
    double slope = 0.0;
    const double v = eval(s, &slope);
    if (v == 0.0) return out.root = s, out;
    (v > 0.0 ? lo : hi) = s;
    const double tol = kTol * std::max(1.0, std::fabs(s));
    if (hi - lo <= tol) break;
    // Newton only while it stays inside and its steps at least halve every
    // two iterations; near a degenerate root (all neighbors close, p > 2)
    // Newton is merely linear and bisection takes over.
    double next = 0.5 * (lo + hi);
    if (std::isfinite(slope) && slope < 0.0) {
      const double newton = s - v / slope;
      if (newton > lo && newton < hi && std::fabs(2.0 * v) <= std::fabs(step_before * slope)) {
        next = newton;
      }
    }
    step_before = step;
    step = next - s;
    if (std::fabs(step) <= 0.5 * tol) {
      // A tiny step does not locate the root by itself: probe just beyond it
      // and accept only if the sign flips.
      const double probe = std::clamp(next + std::copysign(0.5 * tol, step), lo, hi);
      const double vp = eval(probe, nullptr);
      if (vp == 0.0) return out.root = probe, out;
      (vp > 0.0 ? lo : hi) = probe;
      if ((vp > 0.0) != (v > 0.0)) break;
      next = probe;
    }
    s = next;
  }
  // The low end has a positive residual, so a subsolution stays one and the
  // outer iteration cannot step down through rounding.
  out.root = lo;
  return out;
}

}  // namespace detail

/// Default start: the constant min G - 1 inside, G on the layer. It is a
/// discrete subsolution whenever f >= 0.
inline GridFunction monotone_start(const DirichletProblem& problem) {
  const DomainDiscretization& g = problem.discretization();
  std::vector<double> values = problem.sample_extension();
  double gmin = std::numeric_limits<double>::infinity();
  for (std::size_t i = g.interior_count(); i < g.size(); ++i) gmin = std::min(gmin, values[i]);
  if (!std::isfinite(gmin)) gmin = 0.0;
  for (std::size_t i = 0; i < g.interior_count(); ++i) values[i] = gmin - 1.0;
  return GridFunction(problem.shared_discretization(), std::move(values));
}

/// Optional per-pass observer: (pass, previous iterate, new iterate).
using MonotoneObserver =
    std::function<void(int, std::span<const double>, std::span<const double>)>;

inline SolverReport monotone_solve(const DirichletProblem& problem,
                                   const MonotoneConfig& config = {},
                                   const MonotoneObserver& observer = {}) {
  if (config.max_outer < 1 || !(config.outer_tol > 0.0)) {
    throw InvalidParameter("monotone solver needs max_outer >= 1 and outer_tol > 0");
  }
  const auto t0 = detail::Clock::now();
  const Exponent& p = problem.exponent();
  const DomainDiscretization& g = problem.discretization();
  const Stencil& stencil = problem.stencil();
  const std::size_t n_int = g.interior_count();
  const std::size_t n_st = stencil.size();
  const double c = stencil.prefactor();

  const std::vector<double> f = problem.sample_source();
  const std::vector<double> ext = problem.sample_extension();
  std::vector<double> prev = detail::projected_start(
      problem, config.initial_guess, ext,
      config.initial_guess ? *config.initial_guess : monotone_start(problem));

  // Whether the start is a subsolution, -Delta_p^h u0 <= f.
  std::vector<double> res(g.size());
  detail::residual_into(g, stencil, prev, f, ext, Nonlinearity::plain(), res);
  bool subsolution = true;
  for (std::size_t i = 0; i < n_int; ++i) subsolution = subsolution && res[i] <= 1e-12;

  std::vector<double> next = prev;
  long long doublings = 0;
  long long evaluations = 0;
  double max_descent = 0.0;
  for (int pass = 1; pass <= config.max_outer; ++pass) {
    const auto n = static_cast<std::ptrdiff_t>(n_int);
    long long pass_doublings = 0;
    long long pass_evaluations = 0;
#pragma omp parallel reduction(+ : pass_doublings, pass_evaluations)
    {
      std::vector<double> nb(n_st);
#pragma omp for schedule(static)
      for (std::ptrdiff_t i = 0; i < n; ++i) {
        for (std::size_t a = 0; a < n_st; ++a) nb[a] = prev[g.neighbor(i, a)];
        const auto sol = detail::solve_node(nb, c, f[i], p, prev[i]);
        next[i] = sol.root;
        pass_doublings += sol.doublings;
        pass_evaluations += sol.evaluations;
      }
    }
    doublings += pass_doublings;
    evaluations += pass_evaluations;
    double diff = 0.0;
    for (std::size_t i = 0; i < n_int; ++i) {
      diff = std::max(diff, std::fabs(next[i] - prev[i]));
      max_descent = std::max(max_descent, prev[i] - next[i]);
    }
    if (observer) observer(pass, prev, next);
    std::swap(prev, next);
    if (diff < config.outer_tol) {
      detail::residual_into(g, stencil, prev, f, ext, Nonlinearity::plain(), res);
      SolverReport rep{GridFunction(problem.shared_discretization(), std::move(prev)), pass,
                       detail::max_abs(res), detail::seconds_since(t0), Method::kMonotone, {}};
      rep.extras["bracket_doublings"] = static_cast<double>(doublings);
      rep.extras["inner_evaluations"] = static_cast<double>(evaluations);
      rep.extras["subsolution_start"] = subsolution ? 1.0 : 0.0;
      rep.extras["max_descent"] = max_descent;
      return rep;
    }
  }
  throw MaxIterationsExceeded("monotone iteration did not converge in " +
                              std::to_string(config.max_outer) + " passes");
}

}  // namespace plap
