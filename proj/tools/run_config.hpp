#pragma once

// Run configuration for the command-line tool: JSON (de)serialization with
// unknown-key rejection, and field-level validation.

#include <json.hpp>

#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "plap/plap.hpp"

namespace plap::cli {

/// Bad configuration; `field` names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error("field '" + field + "': " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

struct NewtonOverrides {
  int max_iterations = 50;
  double residual_tol = 1e-12;
  double step_tol = 1e-14;
  std::string linear_solver = "auto";

  bool operator==(const NewtonOverrides&) const = default;
};

struct ExplicitOverrides {
  double epsilon = 1e-8;
  double steady_state_tol = 1e-14;
  long long max_steps = 50'000'000;
  double cfl_safety = 0.9;

  bool operator==(const ExplicitOverrides&) const = default;
};

struct MonotoneOverrides {
  int max_outer = 1'000'000;
  double outer_tol = 1e-13;

  bool operator==(const MonotoneOverrides&) const = default;
};

struct RunConfig {
  std::string subcommand = "solve";
  std::string preset = "torsion-d1";
  double p = 3.0;
  std::vector<double> r{0.2};
  double coupling_c = 1.0;
  double coupling_gamma = 2.0;
  std::string solver = "newton";
  std::optional<double> delta;
  bool force_coupling = false;
  // "default", "zero", "adapted" or "constant:<value>".
  std::string extension = "default";
  double f_const = 1.0;
  std::string stencil_ball = "open";
  NewtonOverrides newton;
  ExplicitOverrides explicit_iteration;
  MonotoneOverrides monotone;
  int consistency_d = 1;
  std::vector<double> consistency_x;  // empty: 0.5 along the first axis
  std::vector<std::pair<int, double>> constants{{1, 3.0}, {2, 4.0}};
  double explicit_min_r = 0.0;
  std::string output;
  bool omit_timing = false;
  int threads = 0;

  bool operator==(const RunConfig&) const = default;
};

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> s{"solve", "consistency", "convergence",
                                          "compare-solvers", "constants"};
  return s;
}

using Json = nlohmann::ordered_json;

inline Json to_json(const RunConfig& c) {
  Json j;
  j["subcommand"] = c.subcommand;
  j["preset"] = c.preset;
  j["p"] = c.p;
  j["r"] = c.r;
  j["coupling"] = {{"c", c.coupling_c}, {"gamma", c.coupling_gamma}};
  j["solver"] = c.solver;
  j["delta"] = c.delta ? Json(*c.delta) : Json(nullptr);
  j["force_coupling"] = c.force_coupling;
  j["extension"] = c.extension;
  j["f_const"] = c.f_const;
  j["stencil_ball"] = c.stencil_ball;
  j["newton"] = {{"max_iterations", c.newton.max_iterations},
                 {"residual_tol", c.newton.residual_tol},
                 {"step_tol", c.newton.step_tol},
                 {"linear_solver", c.newton.linear_solver}};
  j["explicit"] = {{"epsilon", c.explicit_iteration.epsilon},
                   {"steady_state_tol", c.explicit_iteration.steady_state_tol},
                   {"max_steps", c.explicit_iteration.max_steps},
                   {"cfl_safety", c.explicit_iteration.cfl_safety}};
  j["monotone"] = {{"max_outer", c.monotone.max_outer}, {"outer_tol", c.monotone.outer_tol}};
  j["consistency"] = {{"d", c.consistency_d}, {"x", c.consistency_x}};
  Json pairs = Json::array();
  for (const auto& [d, p] : c.constants) pairs.push_back({{"d", d}, {"p", p}});
  j["constants"] = pairs;
  j["explicit_min_r"] = c.explicit_min_r;
  j["output"] = c.output;
  j["omit_timing"] = c.omit_timing;
  j["threads"] = c.threads;
  return j;
}

namespace detail {

inline void reject_unknown(const Json& obj, const std::set<std::string>& known,
                           const std::string& prefix) {
  if (!obj.is_object()) throw ConfigError(prefix.empty() ? "<root>" : prefix, "expected an object");
  for (const auto& item : obj.items()) {
    if (!known.count(item.key())) throw ConfigError(prefix + item.key(), "unknown key");
  }
}

template <class T>
void read(const Json& obj, const char* key, T& out, const std::string& prefix) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(prefix + key, std::string("wrong type (") + e.what() + ")");
  }
}

}  // namespace detail

/// Overlays the keys present in `j` onto `c`.
inline void apply_json(const Json& j, RunConfig& c) {
  using detail::read;
  detail::reject_unknown(
      j,
      {"subcommand", "preset", "p", "r", "coupling", "solver", "delta", "force_coupling",
       "extension", "f_const", "stencil_ball", "newton", "explicit", "monotone", "consistency",
       "constants", "explicit_min_r", "output", "omit_timing", "threads"},
      "");
  read(j, "subcommand", c.subcommand, "");
  read(j, "preset", c.preset, "");
  read(j, "p", c.p, "");
  read(j, "r", c.r, "");
  if (j.contains("coupling")) {
    const Json& k = j.at("coupling");
    detail::reject_unknown(k, {"c", "gamma"}, "coupling.");
    read(k, "c", c.coupling_c, "coupling.");
    read(k, "gamma", c.coupling_gamma, "coupling.");
  }
  read(j, "solver", c.solver, "");
  if (j.contains("delta")) {
    if (j.at("delta").is_null()) {
      c.delta.reset();
    } else {
      double d = 0.0;
      read(j, "delta", d, "");
      c.delta = d;
    }
  }
  read(j, "force_coupling", c.force_coupling, "");
  read(j, "extension", c.extension, "");
  read(j, "f_const", c.f_const, "");
  read(j, "stencil_ball", c.stencil_ball, "");
  if (j.contains("newton")) {
    const Json& k = j.at("newton");
    detail::reject_unknown(k, {"max_iterations", "residual_tol", "step_tol", "linear_solver"},
                           "newton.");
    read(k, "max_iterations", c.newton.max_iterations, "newton.");
    read(k, "residual_tol", c.newton.residual_tol, "newton.");
    read(k, "step_tol", c.newton.step_tol, "newton.");
    read(k, "linear_solver", c.newton.linear_solver, "newton.");
  }
  if (j.contains("explicit")) {
    const Json& k = j.at("explicit");
    detail::reject_unknown(k, {"epsilon", "steady_state_tol", "max_steps", "cfl_safety"},
                           "explicit.");
    read(k, "epsilon", c.explicit_iteration.epsilon, "explicit.");
    read(k, "steady_state_tol", c.explicit_iteration.steady_state_tol, "explicit.");
    read(k, "max_steps", c.explicit_iteration.max_steps, "explicit.");
    read(k, "cfl_safety", c.explicit_iteration.cfl_safety, "explicit.");
  }
  if (j.contains("monotone")) {
    const Json& k = j.at("monotone");
    detail::reject_unknown(k, {"max_outer", "outer_tol"}, "monotone.");
    read(k, "max_outer", c.monotone.max_outer, "monotone.");
    read(k, "outer_tol", c.monotone.outer_tol, "monotone.");
  }
  if (j.contains("consistency")) {
    const Json& k = j.at("consistency");
    detail::reject_unknown(k, {"d", "x"}, "consistency.");
    read(k, "d", c.consistency_d, "consistency.");
    read(k, "x", c.consistency_x, "consistency.");
  }
  if (j.contains("constants")) {
    const Json& k = j.at("constants");
    if (!k.is_array()) throw ConfigError("constants", "expected an array of {d, p} objects");
    c.constants.clear();
    for (std::size_t i = 0; i < k.size(); ++i) {
      const std::string prefix = "constants[" + std::to_string(i) + "].";
      detail::reject_unknown(k[i], {"d", "p"}, prefix);
      if (!k[i].contains("d") || !k[i].contains("p")) {
        throw ConfigError(prefix + "d", "both d and p are required");
      }
      std::pair<int, double> pr{1, 2.0};
      read(k[i], "d", pr.first, prefix);
      read(k[i], "p", pr.second, prefix);
      c.constants.push_back(pr);
    }
  }
  read(j, "explicit_min_r", c.explicit_min_r, "");
  read(j, "output", c.output, "");
  read(j, "omit_timing", c.omit_timing, "");
  read(j, "threads", c.threads, "");
}

inline RunConfig parse_config_text(const std::string& text, RunConfig base = {}) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("<file>", e.what());
  }
  apply_json(j, base);
  return base;
}

/// Parses "c=0.25,gamma=2" (either key may be omitted).
inline void parse_coupling(const std::string& text, RunConfig& c) {
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("coupling", "expected key=value, got '" + item + "'");
    const std::string key = item.substr(0, eq);
    double value = 0.0;
    try {
      std::size_t used = 0;
      value = std::stod(item.substr(eq + 1), &used);
      if (used != item.size() - eq - 1) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw ConfigError("coupling." + key, "not a number: '" + item.substr(eq + 1) + "'");
    }
    if (key == "c") {
      c.coupling_c = value;
    } else if (key == "gamma") {
      c.coupling_gamma = value;
    } else {
      throw ConfigError("coupling." + key, "unknown key (expected c or gamma)");
    }
  }
}

inline std::optional<ExtensionRule> parse_extension(const std::string& text) {
  if (text == "default") return std::nullopt;
  if (text == "zero") return ExtensionRule::zero();
  if (text == "adapted") return ExtensionRule::adapted_radial();
  if (text.rfind("constant:", 0) == 0) {
    try {
      std::size_t used = 0;
      const std::string v = text.substr(9);
      const double value = std::stod(v, &used);
      if (used != v.size() || !std::isfinite(value)) throw std::invalid_argument("bad");
      return ExtensionRule::constant(value);
    } catch (const std::exception&) {
      throw ConfigError("extension", "bad constant in '" + text + "'");
    }
  }
  throw ConfigError("extension", "expected default, zero, adapted or constant:<value>, got '" +
                                     text + "'");
}

/// Field checks mirroring the library's admissibility rules. Returns warnings.
inline std::vector<std::string> validate(const RunConfig& c) {
  std::vector<std::string> warnings;
  bool known = false;
  for (const auto& s : subcommands()) known = known || s == c.subcommand;
  if (!known) throw ConfigError("subcommand", "unknown subcommand '" + c.subcommand + "'");
  if (c.threads < 0) throw ConfigError("threads", "must be >= 0");

  if (c.subcommand == "constants") {
    if (c.constants.empty()) throw ConfigError("constants", "needs at least one (d, p) pair");
    for (std::size_t i = 0; i < c.constants.size(); ++i) {
      const std::string f = "constants[" + std::to_string(i) + "]";
      if (c.constants[i].first < 1) throw ConfigError(f + ".d", "dimension must be >= 1");
      if (!(c.constants[i].second > 1.0) || !std::isfinite(c.constants[i].second)) {
        throw ConfigError(f + ".p", "exponent must be finite and > 1");
      }
    }
    return warnings;
  }

  if (!(c.p > 1.0) || !std::isfinite(c.p)) throw ConfigError("p", "exponent must be finite and > 1");
  if (c.r.empty()) throw ConfigError("r", "needs at least one radius");
  for (double r : c.r) {
    if (!(r > 0.0) || !std::isfinite(r)) throw ConfigError("r", "radii must be finite and > 0");
  }
  if (!(c.coupling_c > 0.0)) throw ConfigError("coupling.c", "must be > 0");
  if (!(c.coupling_gamma > 0.0)) throw ConfigError("coupling.gamma", "must be > 0");
  if (c.delta && !(*c.delta > 0.0)) throw ConfigError("delta", "must be > 0");
  if (c.stencil_ball != "open" && c.stencil_ball != "closed") {
    throw ConfigError("stencil_ball", "expected open or closed");
  }

  const Exponent p(c.p);
  if (!coupling_admissible(p, c.coupling_gamma)) {
    if (!c.force_coupling) {
      std::ostringstream os;
      os << "h = c r^" << c.coupling_gamma << " is not admissible for p = " << c.p
         << " (needs gamma > " << coupling_exponent_min(p) << "); pass --force-coupling to run anyway";
      throw ConfigError("coupling.gamma", os.str());
    }
    std::ostringstream os;
    os << "warning: forcing inadmissible coupling gamma = " << c.coupling_gamma << " for p = "
       << c.p << " (consistency is not guaranteed)";
    warnings.push_back(os.str());
  }

  if (c.subcommand == "consistency") {
    if (c.consistency_d < 1) throw ConfigError("consistency.d", "dimension must be >= 1");
    if (!c.consistency_x.empty() &&
        static_cast<int>(c.consistency_x.size()) != c.consistency_d) {
      throw ConfigError("consistency.x", "point dimension does not match consistency.d");
    }
    return warnings;
  }

  const auto kind = parse_preset(c.preset);
  if (!kind) throw ConfigError("preset", "unknown preset '" + c.preset + "'");
  const auto method = parse_method(c.solver);
  if (!method) throw ConfigError("solver", "unknown solver '" + c.solver + "'");
  parse_extension(c.extension);
  if (!std::isfinite(c.f_const)) throw ConfigError("f_const", "must be finite");
  if (c.newton.max_iterations < 1) throw ConfigError("newton.max_iterations", "must be >= 1");
  if (!(c.newton.residual_tol > 0.0)) throw ConfigError("newton.residual_tol", "must be > 0");
  if (!(c.newton.step_tol > 0.0)) throw ConfigError("newton.step_tol", "must be > 0");
  if (c.newton.linear_solver != "auto" && c.newton.linear_solver != "direct" &&
      c.newton.linear_solver != "iterative") {
    throw ConfigError("newton.linear_solver", "expected auto, direct or iterative");
  }
  if (!(c.explicit_iteration.epsilon > 0.0 && c.explicit_iteration.epsilon < 1.0)) {
    throw ConfigError("explicit.epsilon", "must lie in (0, 1)");
  }
  if (!(c.explicit_iteration.steady_state_tol > 0.0)) {
    throw ConfigError("explicit.steady_state_tol", "must be > 0");
  }
  if (c.explicit_iteration.max_steps < 1) throw ConfigError("explicit.max_steps", "must be >= 1");
  if (!(c.explicit_iteration.cfl_safety > 0.0 && c.explicit_iteration.cfl_safety <= 1.0)) {
    throw ConfigError("explicit.cfl_safety", "must lie in (0, 1]");
  }
  if (c.monotone.max_outer < 1) throw ConfigError("monotone.max_outer", "must be >= 1");
  if (!(c.monotone.outer_tol > 0.0)) throw ConfigError("monotone.outer_tol", "must be > 0");

  const bool uses_derivative = c.subcommand == "compare-solvers" || *method != Method::kMonotone;
  if (c.p < 2.0 && uses_derivative && !c.delta) {
    throw ConfigError("delta", "p < 2 needs an explicit regularization --delta");
  }
  if (c.subcommand == "solve" && c.r.size() != 1) {
    throw ConfigError("r", "solve takes exactly one radius");
  }
  if (c.subcommand == "convergence") {
    if (*kind == PresetKind::kNonhomogD2) {
      throw ConfigError("preset", "convergence needs a preset with a known exact solution");
    }
    for (std::size_t i = 1; i < c.r.size(); ++i) {
      if (!(c.r[i] < c.r[i - 1])) throw ConfigError("r", "must be strictly decreasing");
    }
  }
  if (c.explicit_min_r < 0.0) throw ConfigError("explicit_min_r", "must be >= 0");
  return warnings;
}

}  // namespace plap::cli
