#pragma once

// Experiment drivers: pointwise consistency of Delta_p^h, convergence tables
// against the radial torsion solution, and the Newton / explicit comparison.

#include <cmath>
#include <iomanip>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "plap/errors.hpp"
#include "plap/grid.hpp"
#include "plap/kernel.hpp"
#include "plap/operator.hpp"
#include "plap/problems.hpp"
#include "plap/solvers.hpp"

namespace plap {

struct TestFunction {
  PointFn fn;
  PointFn analytic_plap;  // Delta_p fn
};

/// phi = |x|^2 / 2, with Delta_p phi = |x|^{p-2} (d + p - 2).
inline TestFunction quadratic_test_function(const Exponent& p, int d) {
  const double pv = p.value();
  return {[](std::span<const double> x) {
            double s = 0.0;
            for (double v : x) s += v * v;
            return 0.5 * s;
          },
          [pv, d](std::span<const double> x) {
            double s = 0.0;
            for (double v : x) s += v * v;
            return std::pow(std::sqrt(s), pv - 2.0) * (d + pv - 2.0);
          }};
}

struct ConsistencyRow {
  double r = 0.0;
  double h = 0.0;
  double error = 0.0;
};

inline std::vector<ConsistencyRow> consistency_study(const Exponent& p, int d,
                                                     const TestFunction& test,
                                                     std::span<const double> x_eval,
                                                     std::span<const double> r_list,
                                                     const CouplingRule& coupling) {
  if (static_cast<int>(x_eval.size()) != d) {
    throw InvalidParameter("evaluation point has the wrong dimension");
  }
  std::vector<ConsistencyRow> rows;
  const double exact = test.analytic_plap(x_eval);
  for (double r : r_list) {
    const double h = coupling.spacing(r);
    const Stencil stencil = build_stencil(d, h, r, p);
    const double approx = apply_operator_at(test.fn, x_eval, stencil);
    rows.push_back({r, h, std::fabs(approx - exact)});
  }
  return rows;
}

/// One row of a convergence table. `error` is the max over interior nodes of
/// |U - u_exact|; `gamma` is the observed rate against the previous row.
struct ErrorTableRow {
  double r = 0.0;
  double h = 0.0;
  std::size_t k = 0;
  double error = 0.0;
  std::optional<double> gamma;
  int iterations = 0;
  Method solver = Method::kNewton;
  double seconds = 0.0;
  std::vector<double> argmax;  // node attaining the error
};

struct SolverSettings {
  Method method = Method::kNewton;
  NewtonConfig newton;
  ExplicitConfig explicit_iteration;
  MonotoneConfig monotone;
};

inline SolverReport run_solver(const DirichletProblem& problem, const SolverSettings& s) {
  switch (s.method) {
    case Method::kNewton:
      return newton_solve(problem, s.newton);
    case Method::kExplicit:
      return explicit_solve(problem, s.explicit_iteration);
    case Method::kMonotone:
      return monotone_solve(problem, s.monotone);
  }
  throw InvalidParameter("unknown solver");
}

/// log(e_prev / e) / log(r_prev / r); log base 2 for halvings.
inline double observed_rate(double r_prev, double e_prev, double r, double e) {
  return std::log(e_prev / e) / std::log(r_prev / r);
}

struct ConvergenceSpec {
  PresetKind preset = PresetKind::kTorsionD1;
  double p = 3.0;
  std::vector<double> r_list;
  CouplingRule coupling;
  PresetOptions options;
  SolverSettings solver;
};

inline std::vector<ErrorTableRow> convergence_study(const ConvergenceSpec& spec) {
  if (spec.preset == PresetKind::kNonhomogD2) {
    throw InvalidParameter("convergence studies need a preset with a known solution");
  }
  for (std::size_t j = 1; j < spec.r_list.size(); ++j) {
    if (!(spec.r_list[j] < spec.r_list[j - 1])) {
      throw InvalidParameter("r_list must be strictly decreasing");
    }
  }
  const Exponent p(spec.p);
  const int d = preset_dimension(spec.preset);
  const auto exact = exact_radial_solution(p, d);
  std::vector<ErrorTableRow> rows;
  for (double r : spec.r_list) {
    const DirichletProblem problem = make_preset(spec.preset, p, r, spec.coupling, spec.options);
    const SolverReport rep = run_solver(problem, spec.solver);
    const DomainDiscretization& g = problem.discretization();
    ErrorTableRow row;
    row.r = r;
    row.h = problem.h();
    row.k = g.size();
    row.iterations = rep.iterations;
    row.solver = rep.method;
    row.seconds = rep.wall_time;
    std::vector<double> x(d);
    std::size_t worst = 0;
    for (std::size_t i = 0; i < g.interior_count(); ++i) {
      g.point(i, x);
      const double e = std::fabs(rep.solution[i] - exact(x));
      if (e > row.error) {
        row.error = e;
        worst = i;
      }
    }
    row.argmax.resize(d);
    g.point(worst, row.argmax);
    if (!rows.empty()) row.gamma = observed_rate(rows.back().r, rows.back().error, r, row.error);
    rows.push_back(std::move(row));
  }
  return rows;
}

struct ComparisonRow {
  double r = 0.0;
  double h = 0.0;
  std::size_t k = 0;
  std::optional<int> explicit_iterations;
  int newton_iterations = 0;
  std::optional<double> explicit_seconds;
  double newton_seconds = 0.0;
};

/// Newton and explicit iteration counts per r. The explicit solver is skipped
/// for r < explicit_min_r, where its step counts grow like r^{-p}.
inline std::vector<ComparisonRow> solver_comparison(PresetKind preset, const Exponent& p,
                                                    std::span<const double> r_list,
                                                    const CouplingRule& coupling,
                                                    const NewtonConfig& newton,
                                                    const ExplicitConfig& explicit_iteration,
                                                    double explicit_min_r = 0.0,
                                                    const PresetOptions& options = {}) {
  std::vector<ComparisonRow> rows;
  for (double r : r_list) {
    const DirichletProblem problem = make_preset(preset, p, r, coupling, options);
    ComparisonRow row;
    row.r = r;
    row.h = problem.h();
    row.k = problem.discretization().size();
    const SolverReport nr = newton_solve(problem, newton);
    row.newton_iterations = nr.iterations;
    row.newton_seconds = nr.wall_time;
    if (r >= explicit_min_r) {
      const SolverReport ex = explicit_solve(problem, explicit_iteration);
      row.explicit_iterations = ex.iterations;
      row.explicit_seconds = ex.wall_time;
    }
    rows.push_back(row);
  }
  return rows;
}

/// Max scheme residual of the sampled exact solution over interior nodes
/// with |x| >= exclusion_radius.
inline double residual_check(PresetKind preset, const Exponent& p, double r,
                             const CouplingRule& coupling, double exclusion_radius,
                             const PresetOptions& options = {}) {
  if (!(exclusion_radius > 0.0)) throw InvalidParameter("exclusion radius must be > 0");
  const DirichletProblem problem = make_preset(preset, p, r, coupling, options);
  const auto exact = exact_radial_solution(p, problem.dimension());
  const GridFunction u = sample_on_grid(problem.shared_discretization(), exact);
  const SchemeResidual res = scheme_residual(u, problem);
  const DomainDiscretization& g = problem.discretization();
  std::vector<double> x(g.dimension());
  bool any = false;
  double worst = 0.0;
  for (std::size_t i = 0; i < g.interior_count(); ++i) {
    g.point(i, x);
    double n2 = 0.0;
    for (double v : x) n2 += v * v;
    if (std::sqrt(n2) < exclusion_radius) continue;
    any = true;
    worst = std::max(worst, std::fabs(res.values[i]));
  }
  if (!any) throw EmptyRegion("exclusion radius removes every interior node");
  return worst;
}

// ---------------------------------------------------------------------------
// CSV output. Floats carry 17 significant digits; absent values are empty.

namespace detail {

inline std::string csv_number(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace detail

inline void write_error_table_csv(std::ostream& os, const std::vector<ErrorTableRow>& rows,
                                  bool include_timing = true) {
  os << "r,h,k,error,gamma,iterations,solver,seconds\n";
  for (const auto& row : rows) {
    os << detail::csv_number(row.r) << ',' << detail::csv_number(row.h) << ',' << row.k << ','
       << detail::csv_number(row.error) << ','
       << (row.gamma ? detail::csv_number(*row.gamma) : std::string()) << ',' << row.iterations
       << ',' << method_name(row.solver) << ','
       << (include_timing ? detail::csv_number(row.seconds) : std::string()) << '\n';
  }
}

inline void write_comparison_csv(std::ostream& os, const std::vector<ComparisonRow>& rows,
                                 bool include_timing = true) {
  os << "r,h,k,it_explicit,it_newton,seconds_explicit,seconds_newton\n";
  for (const auto& row : rows) {
    os << detail::csv_number(row.r) << ',' << detail::csv_number(row.h) << ',' << row.k << ','
       << (row.explicit_iterations ? std::to_string(*row.explicit_iterations) : std::string())
       << ',' << row.newton_iterations << ','
       << (include_timing && row.explicit_seconds ? detail::csv_number(*row.explicit_seconds)
                                                  : std::string())
       << ',' << (include_timing ? detail::csv_number(row.newton_seconds) : std::string())
       << '\n';
  }
}

inline void write_consistency_csv(std::ostream& os, const std::vector<ConsistencyRow>& rows) {
  os << "r,h,error\n";
  for (const auto& row : rows) {
    os << detail::csv_number(row.r) << ',' << detail::csv_number(row.h) << ','
       << detail::csv_number(row.error) << '\n';
  }
}

}  // namespace plap
