#pragma once

// Dirichlet problems for -Delta_p u = f: h-r coupling rules, boundary
// extensions onto the layer, the radial torsion solution and named presets.

#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "plap/errors.hpp"
#include "plap/grid.hpp"
#include "plap/kernel.hpp"

namespace plap {

/// Smallest exponent gamma such that h = c r^gamma' is admissible for every
/// gamma' > gamma_min (strict power surrogates of the o(.) coupling).
inline double coupling_exponent_min(const Exponent& p) {
  const double pv = p.value();
  if (pv == 2.0) return 1.0;
  if (pv >= 3.0) return 1.5;
  return pv / (pv - 1.0);
}

inline bool coupling_admissible(const Exponent& p, double gamma) {
  if (!(gamma > 0.0)) throw InvalidParameter("coupling exponent must be > 0");
  return gamma > coupling_exponent_min(p);
}

/// h = c * r^gamma.
struct CouplingRule {
  double c = 1.0;
  double gamma = 2.0;

  double spacing(double r) const { return c * std::pow(r, gamma); }
};

inline std::function<double(std::span<const double>)> exact_radial_solution(
    const Exponent& p, int d) {
  if (d < 1) throw InvalidParameter("dimension must be >= 1");
  const double q = p.conjugate();
  const double scale = (p.value() - 1.0) / p.value() *
                       std::pow(static_cast<double>(d), -1.0 / (p.value() - 1.0));
  return [q, scale](std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return scale * (1.0 - std::pow(std::sqrt(s), q));
  };
}

/// Rule producing the Dirichlet values G on the boundary layer.
class ExtensionRule {
 public:
  enum class Kind { kZero, kConstant, kAdaptedRadial, kCustom };

  static ExtensionRule zero() { return ExtensionRule(Kind::kZero); }
  static ExtensionRule constant(double c) {
    ExtensionRule e(Kind::kConstant);
    e.value_ = c;
    return e;
  }
  /// G(x) = ((p-1)/p) (1 - |x|^{p/(p-1)}).
  static ExtensionRule adapted_radial() { return ExtensionRule(Kind::kAdaptedRadial); }
  static ExtensionRule custom(PointFn fn, std::string label = "custom") {
    ExtensionRule e(Kind::kCustom);
    e.fn_ = std::move(fn);
    e.label_ = std::move(label);
    return e;
  }

  Kind kind() const noexcept { return kind_; }

  double evaluate(std::span<const double> x, const Exponent& p) const {
    switch (kind_) {
      case Kind::kZero:
        return 0.0;
      case Kind::kConstant:
        return value_;
      case Kind::kAdaptedRadial: {
        double s = 0.0;
        for (double v : x) s += v * v;
        const double pv = p.value();
        return (pv - 1.0) / pv * (1.0 - std::pow(std::sqrt(s), p.conjugate()));
      }
      case Kind::kCustom:
        return fn_(x);
    }
    return 0.0;
  }

  std::string describe() const {
    switch (kind_) {
      case Kind::kZero:
        return "zero";
      case Kind::kConstant: {
        std::ostringstream os;
        os.precision(17);
        os << "constant:" << value_;
        return os.str();
      }
      case Kind::kAdaptedRadial:
        return "adapted";
      case Kind::kCustom:
        return label_;
    }
    return "";
  }

 private:
  explicit ExtensionRule(Kind kind) : kind_(kind) {}
  Kind kind_;
  double value_ = 0.0;
  PointFn fn_;
  std::string label_;
};

/// Immutable problem: domain, exponent, discretization and data. Source and
/// boundary values are sampled on demand.
class DirichletProblem {
 public:
  DirichletProblem(Domain domain, Exponent p, double r, double h, PointFn f,
                   PointFn g, ExtensionRule extension, StencilBall ball = StencilBall::kOpen)
      : domain_(std::make_shared<const Domain>(std::move(domain))),
        p_(p),
        r_(r),
        h_(h),
        f_(std::move(f)),
        g_(std::move(g)),
        extension_(std::move(extension)),
        stencil_(build_stencil(domain_->dimension(), h, r, p, ball)),
        disc_(std::make_shared<const DomainDiscretization>(
            discretize_domain(*domain_, h, r, stencil_))) {
    if (!f_) throw InvalidParameter("source f must be callable");
  }

  const Domain& domain() const noexcept { return *domain_; }
  const Exponent& exponent() const noexcept { return p_; }
  int dimension() const noexcept { return domain_->dimension(); }
  double r() const noexcept { return r_; }
  double h() const noexcept { return h_; }
  const Stencil& stencil() const noexcept { return stencil_; }
  const DomainDiscretization& discretization() const noexcept { return *disc_; }
  const std::shared_ptr<const DomainDiscretization>& shared_discretization() const noexcept {
    return disc_;
  }
  const ExtensionRule& extension() const noexcept { return extension_; }
  const PointFn& source() const noexcept { return f_; }
  const PointFn& boundary_datum() const noexcept { return g_; }

  /// f at the interior nodes (length = interior_count()).
  std::vector<double> sample_source() const {
    const auto& g = *disc_;
    std::vector<double> out(g.interior_count());
    std::vector<double> x(g.dimension());
    for (std::size_t i = 0; i < out.size(); ++i) {
      g.point(i, x);
      out[i] = f_(x);
      if (!std::isfinite(out[i])) throw NonFiniteSample("source is not finite");
    }
    return out;
  }

  /// Full-length vector with G on the Dirichlet nodes and 0 elsewhere.
  std::vector<double> sample_extension() const {
    const auto& g = *disc_;
    std::vector<double> out(g.size(), 0.0);
    std::vector<double> x(g.dimension());
    for (std::size_t i = g.interior_count(); i < g.size(); ++i) {
      g.point(i, x);
      out[i] = extension_.evaluate(x, p_);
      if (!std::isfinite(out[i])) throw NonFiniteSample("boundary extension is not finite");
    }
    return out;
  }

 private:
  std::shared_ptr<const Domain> domain_;
  Exponent p_;
  double r_;
  double h_;
  PointFn f_;
  PointFn g_;
  ExtensionRule extension_;
  Stencil stencil_;
  std::shared_ptr<const DomainDiscretization> disc_;
};

/// Builds a problem with h = c r^gamma. `force_coupling` skips the
/// admissibility check (used for p < 2 runs with gamma = 2).
inline DirichletProblem build_problem(Domain domain, const Exponent& p, double r,
                                      const CouplingRule& coupling, PointFn f,
                                      PointFn g, ExtensionRule extension,
                                      bool force_coupling = false,
                                      StencilBall ball = StencilBall::kOpen) {
  if (!(r > 0.0)) throw InvalidParameter("stencil radius r must be > 0");
  if (!(coupling.c > 0.0)) throw InvalidParameter("coupling constant c must be > 0");
  if (!force_coupling && !coupling_admissible(p, coupling.gamma)) {
    std::ostringstream os;
    os << "coupling h = " << coupling.c << " r^" << coupling.gamma
       << " is not admissible for p = " << p.value() << " (needs gamma > "
       << coupling_exponent_min(p) << ")";
    throw InadmissibleCoupling(os.str());
  }
  const double h = coupling.spacing(r);
  return DirichletProblem(std::move(domain), p, r, h, std::move(f), std::move(g),
                          std::move(extension), ball);
}

// ---------------------------------------------------------------------------
// Named presets.

enum class PresetKind { kTorsionD1, kTorsionD2, kNonhomogD2 };

inline std::optional<PresetKind> parse_preset(std::string_view name) {
  if (name == "torsion-d1") return PresetKind::kTorsionD1;
  if (name == "torsion-d2") return PresetKind::kTorsionD2;
  if (name == "nonhomog-d2") return PresetKind::kNonhomogD2;
  return std::nullopt;
}

inline std::string preset_name(PresetKind kind) {
  switch (kind) {
    case PresetKind::kTorsionD1:
      return "torsion-d1";
    case PresetKind::kTorsionD2:
      return "torsion-d2";
    case PresetKind::kNonhomogD2:
      return "nonhomog-d2";
  }
  return "";
}

inline int preset_dimension(PresetKind kind) {
  return kind == PresetKind::kTorsionD1 ? 1 : 2;
}

struct PresetOptions {
  /// Overrides the preset's extension (torsion presets default to zero).
  std::optional<ExtensionRule> extension;
  /// Constant source value for nonhomog-d2.
  double source_constant = 1.0;
  bool force_coupling = false;
  StencilBall ball = StencilBall::kOpen;
};

/// torsion-d1 / torsion-d2: -Delta_p u = 1 in the unit ball, u = 0 on the
/// sphere. nonhomog-d2: constant f in the unit disk, g = G = 1/2 + x y.
inline DirichletProblem make_preset(PresetKind kind, const Exponent& p, double r,
                                    const CouplingRule& coupling,
                                    const PresetOptions& options = {}) {
  auto zero = [](std::span<const double>) { return 0.0; };
  switch (kind) {
    case PresetKind::kTorsionD1:
    case PresetKind::kTorsionD2: {
      Domain domain = kind == PresetKind::kTorsionD1
                          ? Domain::interval(-1.0, 1.0)
                          : Domain::ball({0.0, 0.0}, 1.0);
      return build_problem(std::move(domain), p, r, coupling,
                           [](std::span<const double>) { return 1.0; }, zero,
                           options.extension.value_or(ExtensionRule::zero()),
                           options.force_coupling, options.ball);
    }
    case PresetKind::kNonhomogD2: {
      const double fc = options.source_constant;
      auto g = [](std::span<const double> x) { return 0.5 + x[0] * x[1]; };
      return build_problem(Domain::ball({0.0, 0.0}, 1.0), p, r, coupling,
                           [fc](std::span<const double>) { return fc; }, g,
                           options.extension.value_or(ExtensionRule::custom(g, "half-plus-xy")),
                           options.force_coupling, options.ball);
    }
  }
  throw InvalidParameter("unknown preset");
}

}  // namespace plap
