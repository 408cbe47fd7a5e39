#pragma once

// Command-line front end. Flags override a JSON config file; outputs are
// written atomically. Exit codes: 0 ok, 1 solver failure, 2 bad config.

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "plap/plap.hpp"
#include "run_config.hpp"

namespace plap::cli {

inline constexpr const char* kOutputDirEnv = "PLAP_OUTPUT_DIR";

/// Resolves `path` against $PLAP_OUTPUT_DIR when it is relative.
inline std::filesystem::path resolve_output(const std::string& path) {
  std::filesystem::path out(path);
  if (const char* dir = std::getenv(kOutputDirEnv); dir && *dir && out.is_relative()) {
    out = std::filesystem::path(dir) / out;
  }
  return out;
}

/// Writes through a temporary sibling and renames it over the target.
inline void write_atomic(const std::filesystem::path& target, const std::string& content) {
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  std::filesystem::path tmp = target;
  tmp += ".tmp." + std::to_string(static_cast<long long>(::getpid()));
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    os << content;
    os.flush();
    if (!os) throw std::runtime_error("write to " + tmp.string() + " failed");
  }
  std::filesystem::rename(tmp, target);
}

namespace detail {

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline PresetOptions preset_options(const RunConfig& c) {
  PresetOptions o;
  o.extension = parse_extension(c.extension);
  o.source_constant = c.f_const;
  o.force_coupling = c.force_coupling;
  o.ball = c.stencil_ball == "closed" ? StencilBall::kClosed : StencilBall::kOpen;
  return o;
}

inline LinearSolverKind linear_kind(const std::string& s) {
  if (s == "direct") return LinearSolverKind::kDirect;
  if (s == "iterative") return LinearSolverKind::kIterative;
  return LinearSolverKind::kAuto;
}

inline NewtonConfig newton_config(const RunConfig& c) {
  NewtonConfig n;
  n.max_iterations = c.newton.max_iterations;
  n.residual_tol = c.newton.residual_tol;
  n.step_tol = c.newton.step_tol;
  n.delta = c.delta;
  n.linear_solver = linear_kind(c.newton.linear_solver);
  return n;
}

inline ExplicitConfig explicit_config(const RunConfig& c) {
  ExplicitConfig e;
  e.epsilon = c.explicit_iteration.epsilon;
  e.steady_state_tol = c.explicit_iteration.steady_state_tol;
  e.max_steps = c.explicit_iteration.max_steps;
  e.cfl_safety = c.explicit_iteration.cfl_safety;
  e.delta = c.delta;
  return e;
}

inline SolverSettings solver_settings(const RunConfig& c) {
  SolverSettings s;
  s.method = *parse_method(c.solver);
  s.newton = newton_config(c);
  s.explicit_iteration = explicit_config(c);
  s.monotone.max_outer = c.monotone.max_outer;
  s.monotone.outer_tol = c.monotone.outer_tol;
  return s;
}

// Emits `content` to the configured output, or to `out` when none is set.
inline void emit(const RunConfig& c, const std::string& content, std::ostream& out) {
  if (c.output.empty()) {
    out << content;
  } else {
    write_atomic(resolve_output(c.output), content);
  }
}

inline void run_solve(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const Exponent p(c.p);
  const DirichletProblem problem = make_preset(*parse_preset(c.preset), p, c.r.front(),
                                               {c.coupling_c, c.coupling_gamma}, preset_options(c));
  const SolverReport rep = run_solver(problem, solver_settings(c));
  std::ostringstream dump;
  write_grid_dump(dump, rep.solution);
  emit(c, dump.str(), out);
  std::ostringstream line;
  line << "preset=" << c.preset << " p=" << fmt(c.p) << " r=" << fmt(c.r.front())
       << " h=" << fmt(problem.h()) << " k=" << problem.discretization().size()
       << " solver=" << method_name(rep.method) << " iterations=" << rep.iterations
       << " residual=" << fmt(rep.final_residual);
  if (c.delta) line << " delta=" << fmt(*c.delta);
  if (!c.omit_timing) line << " seconds=" << fmt(rep.wall_time);
  line << '\n';
  // Keep stdout clean for the dump when it goes there.
  (c.output.empty() ? err : out) << line.str();
}

inline void run_convergence(const RunConfig& c, std::ostream& out) {
  ConvergenceSpec spec;
  spec.preset = *parse_preset(c.preset);
  spec.p = c.p;
  spec.r_list = c.r;
  spec.coupling = {c.coupling_c, c.coupling_gamma};
  spec.options = preset_options(c);
  spec.solver = solver_settings(c);
  std::ostringstream os;
  if (c.delta) os << "# delta=" << fmt(*c.delta) << '\n';
  write_error_table_csv(os, convergence_study(spec), !c.omit_timing);
  emit(c, os.str(), out);
}

inline void run_compare(const RunConfig& c, std::ostream& out) {
  const auto rows =
      solver_comparison(*parse_preset(c.preset), Exponent(c.p), c.r, {c.coupling_c, c.coupling_gamma},
                        newton_config(c), explicit_config(c), c.explicit_min_r, preset_options(c));
  std::ostringstream os;
  if (c.delta) os << "# delta=" << fmt(*c.delta) << '\n';
  write_comparison_csv(os, rows, !c.omit_timing);
  emit(c, os.str(), out);
}

inline void run_consistency(const RunConfig& c, std::ostream& out) {
  const Exponent p(c.p);
  std::vector<double> x = c.consistency_x;
  if (x.empty()) {
    x.assign(c.consistency_d, 0.0);
    x[0] = 0.5;
  }
  const auto rows = consistency_study(p, c.consistency_d, quadratic_test_function(p, c.consistency_d),
                                      x, c.r, {c.coupling_c, c.coupling_gamma});
  std::ostringstream os;
  write_consistency_csv(os, rows);
  emit(c, os.str(), out);
}

inline void run_constants(const RunConfig& c, std::ostream& out) {
  std::ostringstream os;
  os << "d,p,D,omega_d\n";
  for (const auto& [d, p] : c.constants) {
    const NormalizationConstant k = normalization_constant(d, Exponent(p));
    os << d << ',' << fmt(p) << ',' << fmt(k.value) << ',' << fmt(k.omega_d) << '\n';
  }
  emit(c, os.str(), out);
}

}  // namespace detail

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Finite-difference solver for the variational p-Laplacian"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  bool dump_config = false;
  std::string preset, solver, extension, coupling, stencil_ball, output, linear_solver;
  double p = 0, delta = 0, f_const = 0, epsilon = 0, sstol = 0, cfl = 0, rtol = 0, stol = 0,
         otol = 0, min_r = 0;
  int threads = 0, max_it = 0, max_outer = 0, dim = 0;
  long long max_steps = 0;
  std::vector<double> r_list, x_eval;
  std::vector<std::string> pairs;
  bool force = false, omit_timing = false, closed_ball = false;

  app.add_option("--config", config_path, "JSON run configuration (flags override it)");
  app.add_flag("--dump-config", dump_config, "Print the effective configuration as JSON and exit");
  auto* o_preset = app.add_option("--preset", preset, "torsion-d1 | torsion-d2 | nonhomog-d2");
  auto* o_p = app.add_option("--p", p, "Exponent p > 1");
  auto* o_r = app.add_option("--r", r_list, "Stencil radii, comma separated")->delimiter(',');
  auto* o_coupling = app.add_option("--coupling", coupling, "h = c r^gamma, as c=..,gamma=..");
  auto* o_solver = app.add_option("--solver", solver, "newton | explicit | monotone");
  auto* o_delta = app.add_option("--delta", delta, "Regularization delta (required for p < 2)");
  auto* o_force = app.add_flag("--force-coupling", force, "Run even if the coupling is inadmissible");
  auto* o_ext = app.add_option("--extension", extension, "default | zero | adapted | constant:<v>");
  auto* o_f = app.add_option("--f-const", f_const, "Constant source for nonhomog-d2");
  auto* o_closed = app.add_flag("--closed-ball", closed_ball, "Include offsets with |h alpha| = r");
  auto* o_maxit = app.add_option("--max-iterations", max_it, "Newton iteration cap");
  auto* o_rtol = app.add_option("--residual-tol", rtol, "Newton residual tolerance");
  auto* o_stol = app.add_option("--step-tol", stol, "Newton step tolerance");
  auto* o_lin = app.add_option("--linear-solver", linear_solver, "auto | direct | iterative");
  auto* o_eps = app.add_option("--epsilon", epsilon, "Explicit properization epsilon");
  auto* o_sstol = app.add_option("--steady-state-tol", sstol, "Explicit stopping tolerance");
  auto* o_steps = app.add_option("--max-steps", max_steps, "Explicit step cap");
  auto* o_cfl = app.add_option("--cfl-safety", cfl, "Explicit CFL safety factor in (0, 1]");
  auto* o_outer = app.add_option("--max-outer", max_outer, "Monotone outer pass cap");
  auto* o_otol = app.add_option("--outer-tol", otol, "Monotone stopping tolerance");
  auto* o_dim = app.add_option("--d", dim, "Dimension for consistency");
  auto* o_x = app.add_option("--x", x_eval, "Evaluation point for consistency")->delimiter(',');
  auto* o_pairs = app.add_option("--pairs", pairs, "d:p pairs for constants, e.g. 1:3,2:4")
                      ->delimiter(',');
  auto* o_minr = app.add_option("--explicit-min-r", min_r, "Skip the explicit solver below this r");
  auto* o_out = app.add_option("-o,--output", output, "Output file (default stdout)");
  auto* o_omit = app.add_flag("--omit-timing", omit_timing, "Leave wall-time fields empty");
  auto* o_threads = app.add_option("--threads", threads, "Worker thread bound (0 = default)");

  std::vector<CLI::App*> subs;
  const std::map<std::string, std::string> blurb{
      {"solve", "Solve one preset and dump the grid function"},
      {"consistency", "Operator error on a quadratic at one point, per r"},
      {"convergence", "Error table against the exact solution"},
      {"compare-solvers", "Explicit vs Newton iterations and timings per r"},
      {"constants", "Normalization constants D and omega_d"}};
  for (const auto& name : subcommands()) subs.push_back(app.add_subcommand(name, blurb.at(name)));

  std::vector<std::string> argv_store;
  argv_store.push_back("plap");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  }

  RunConfig cfg;
  try {
    if (!config_path.empty()) {
      std::ifstream is(config_path);
      if (!is) throw ConfigError("config", "cannot read '" + config_path + "'");
      std::stringstream text;
      text << is.rdbuf();
      cfg = parse_config_text(text.str());
    }
    for (auto* s : subs) {
      if (s->parsed()) cfg.subcommand = s->get_name();
    }
    if (o_preset->count()) cfg.preset = preset;
    if (o_p->count()) cfg.p = p;
    if (o_r->count()) cfg.r = r_list;
    if (o_coupling->count()) parse_coupling(coupling, cfg);
    if (o_solver->count()) cfg.solver = solver;
    if (o_delta->count()) cfg.delta = delta;
    if (o_force->count()) cfg.force_coupling = force;
    if (o_ext->count()) cfg.extension = extension;
    if (o_f->count()) cfg.f_const = f_const;
    if (o_closed->count()) cfg.stencil_ball = closed_ball ? "closed" : "open";
    if (o_maxit->count()) cfg.newton.max_iterations = max_it;
    if (o_rtol->count()) cfg.newton.residual_tol = rtol;
    if (o_stol->count()) cfg.newton.step_tol = stol;
    if (o_lin->count()) cfg.newton.linear_solver = linear_solver;
    if (o_eps->count()) cfg.explicit_iteration.epsilon = epsilon;
    if (o_sstol->count()) cfg.explicit_iteration.steady_state_tol = sstol;
    if (o_steps->count()) cfg.explicit_iteration.max_steps = max_steps;
    if (o_cfl->count()) cfg.explicit_iteration.cfl_safety = cfl;
    if (o_outer->count()) cfg.monotone.max_outer = max_outer;
    if (o_otol->count()) cfg.monotone.outer_tol = otol;
    if (o_dim->count()) cfg.consistency_d = dim;
    if (o_x->count()) cfg.consistency_x = x_eval;
    if (o_pairs->count()) {
      cfg.constants.clear();
      for (const auto& item : pairs) {
        const auto colon = item.find(':');
        try {
          if (colon == std::string::npos) throw std::invalid_argument("no colon");
          std::size_t used_d = 0, used_p = 0;
          const std::string ds = item.substr(0, colon), ps = item.substr(colon + 1);
          const int d = std::stoi(ds, &used_d);
          const double pv = std::stod(ps, &used_p);
          if (used_d != ds.size() || used_p != ps.size()) throw std::invalid_argument("trailing");
          cfg.constants.emplace_back(d, pv);
        } catch (const std::exception&) {
          throw ConfigError("constants", "expected d:p, got '" + item + "'");
        }
      }
    }
    if (o_minr->count()) cfg.explicit_min_r = min_r;
    if (o_out->count()) cfg.output = output;
    if (o_omit->count()) cfg.omit_timing = omit_timing;
    if (o_threads->count()) cfg.threads = threads;

    const auto warnings = validate(cfg);
    if (dump_config) {
      out << to_json(cfg).dump(2) << '\n';
      return 0;
    }
    for (const auto& w : warnings) err << w << '\n';
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  }

#ifdef _OPENMP
  if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
#endif

  try {
    if (cfg.subcommand == "solve") {
      detail::run_solve(cfg, out, err);
    } else if (cfg.subcommand == "convergence") {
      detail::run_convergence(cfg, out);
    } else if (cfg.subcommand == "compare-solvers") {
      detail::run_compare(cfg, out);
    } else if (cfg.subcommand == "consistency") {
      detail::run_consistency(cfg, out);
    } else {
      detail::run_constants(cfg, out);
    }
  } catch (const DegenerateStencil& e) {
    err << "config error: field 'r': " << e.name() << ": " << e.what() << '\n';
    return 2;
  } catch (const EmptyInterior& e) {
    err << "config error: field 'r': " << e.name() << ": " << e.what() << '\n';
    return 2;
  } catch (const InadmissibleCoupling& e) {
    err << "config error: field 'coupling.gamma': " << e.name() << ": " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.name() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace plap::cli
