#pragma once

// Discrete p-Laplacian
//   Delta_p^h U_beta = prefactor * sum_alpha J_p(U_{beta+alpha} - U_beta),
// the scheme residual and its sparse Jacobian.

#include <Eigen/SparseCore>

#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "plap/errors.hpp"
#include "plap/grid.hpp"
#include "plap/kernel.hpp"
#include "plap/problems.hpp"

namespace plap {

/// J_p, or its shifted regularization J_p^delta.
class Nonlinearity {
 public:
  static Nonlinearity plain() { return Nonlinearity(std::nullopt); }
  static Nonlinearity regularized(double delta) {
    if (!(delta > 0.0)) throw InvalidParameter("regularization delta must be > 0");
    return Nonlinearity(delta);
  }
  static Nonlinearity from_optional(std::optional<double> delta) {
    return delta ? regularized(*delta) : plain();
  }

  bool is_regularized() const noexcept { return delta_.has_value(); }
  double delta() const noexcept { return delta_.value_or(0.0); }

  double value(double t, const Exponent& p) const {
    return delta_ ? signed_power_reg(t, p, *delta_) : signed_power(t, p);
  }
  double deriv(double t, const Exponent& p) const {
    return delta_ ? signed_power_reg_deriv(t, p, *delta_) : signed_power_deriv(t, p);
  }

 private:
  explicit Nonlinearity(std::optional<double> delta) : delta_(delta) {}
  std::optional<double> delta_;
};

namespace detail {

inline constexpr std::size_t kPairwiseThreshold = 64;

// Tree summation with sequential leaves of at most 8 terms.
inline double pairwise_sum(const double* v, std::size_t n) noexcept {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

// sum_alpha phi(U_{i+alpha} - U_i) in stencil order; `scratch` must hold
// stencil-size doubles.
template <class Phi>
double stencil_sum(const DomainDiscretization& g, std::size_t i,
                   std::span<const double> u, Phi&& phi, double* scratch) {
  const std::size_t n = g.stencil_size();
  const double center = u[i];
  if (n <= kPairwiseThreshold) {
    double s = 0.0;
    for (std::size_t a = 0; a < n; ++a) s += phi(u[g.neighbor(i, a)] - center);
    return s;
  }
  for (std::size_t a = 0; a < n; ++a) scratch[a] = phi(u[g.neighbor(i, a)] - center);
  return pairwise_sum(scratch, n);
}

// Delta_p^h at every interior node; `out` has interior_count() entries.
inline void apply_interior(const DomainDiscretization& g, const Stencil& stencil,
                           std::span<const double> u, const Nonlinearity& nl,
                           std::span<double> out) {
  const Exponent& p = stencil.exponent();
  const double c = stencil.prefactor();
  const auto n_int = static_cast<std::ptrdiff_t>(g.interior_count());
#pragma omp parallel
  {
    std::vector<double> scratch(g.stencil_size());
    if (nl.is_regularized()) {
      const double delta = nl.delta();
#pragma omp for schedule(static)
      for (std::ptrdiff_t i = 0; i < n_int; ++i) {
        out[i] = c * stencil_sum(g, i, u,
                                 [&](double t) { return signed_power_reg(t, p, delta); },
                                 scratch.data());
      }
    } else {
#pragma omp for schedule(static)
      for (std::ptrdiff_t i = 0; i < n_int; ++i) {
        out[i] = c * stencil_sum(g, i, u, [&](double t) { return signed_power(t, p); },
                                 scratch.data());
      }
    }
  }
}

inline void check_compatible(const DomainDiscretization& g, const Stencil& stencil) {
  if (g.stencil_size() != stencil.size() || g.h() != stencil.h() || g.r() != stencil.r()) {
    throw InvalidParameter("grid function and stencil come from different discretizations");
  }
}

}  // namespace detail

/// Delta_p^h U at interior nodes, zero at Dirichlet nodes.
inline GridFunction apply_operator(const GridFunction& u, const Stencil& stencil,
                                   const Nonlinearity& nl = Nonlinearity::plain()) {
  const DomainDiscretization& g = u.discretization();
  detail::check_compatible(g, stencil);
  std::vector<double> out(g.size(), 0.0);
  detail::apply_interior(g, stencil, u.values(),
                         nl, std::span<double>(out.data(), g.interior_count()));
  return GridFunction(u.shared_discretization(), std::move(out));
}

/// Evaluates Delta_p^h phi at an arbitrary point x, summing over x + B_r^h.
inline double apply_operator_at(const PointFn& phi, std::span<const double> x,
                                const Stencil& stencil,
                                const Nonlinearity& nl = Nonlinearity::plain()) {
  const int d = stencil.dimension();
  const double h = stencil.h();
  const double center = phi(x);
  std::vector<double> y(d);
  std::vector<double> terms(stencil.size());
  for (std::size_t a = 0; a < stencil.size(); ++a) {
    for (int k = 0; k < d; ++k) y[k] = x[k] + h * stencil.offset(a)[k];
    terms[a] = nl.value(phi(y) - center, stencil.exponent());
  }
  double s = 0.0;
  if (terms.size() > detail::kPairwiseThreshold) {
    s = detail::pairwise_sum(terms.data(), terms.size());
  } else {
    for (double t : terms) s += t;
  }
  return stencil.prefactor() * s;
}

/// Residual of the scheme: -Delta_p^h U - f on interior nodes, U - G on the
/// Dirichlet layer.
struct SchemeResidual {
  std::shared_ptr<const DomainDiscretization> discretization;
  std::vector<double> values;

  double max_norm() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::fabs(v));
    return m;
  }
  double interior_max_norm() const {
    double m = 0.0;
    for (std::size_t i = 0; i < discretization->interior_count(); ++i) {
      m = std::max(m, std::fabs(values[i]));
    }
    return m;
  }
};

namespace detail {

// `source` holds interior_count() entries; `extension` is full length.
inline void residual_into(const DomainDiscretization& g, const Stencil& stencil,
                          std::span<const double> u, std::span<const double> source,
                          std::span<const double> extension, const Nonlinearity& nl,
                          std::span<double> out) {
  const std::size_t n_int = g.interior_count();
  apply_interior(g, stencil, u, nl, out.subspan(0, n_int));
  for (std::size_t i = 0; i < n_int; ++i) out[i] = -out[i] - source[i];
  for (std::size_t i = n_int; i < g.size(); ++i) out[i] = u[i] - extension[i];
}

}  // namespace detail

inline SchemeResidual scheme_residual(const GridFunction& u, const DirichletProblem& problem,
                                      const Nonlinearity& nl = Nonlinearity::plain()) {
  const DomainDiscretization& g = u.discretization();
  if (&g != &problem.discretization()) {
    throw InvalidParameter("grid function does not belong to the problem's discretization");
  }
  const std::vector<double> f = problem.sample_source();
  const std::vector<double> ext = problem.sample_extension();
  SchemeResidual res{u.shared_discretization(), std::vector<double>(g.size())};
  detail::residual_into(g, problem.stencil(), u.values(), f, ext, nl, res.values);
  return res;
}

/// Row-compressed k x k Jacobian of the scheme residual.
using SparseJacobian = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

/// Interior row beta: entry (beta, beta+alpha) = -c J'(U_{beta+alpha} - U_beta),
/// diagonal = -(sum of off-diagonals) + damping. Dirichlet rows are identity.
inline SparseJacobian assemble_jacobian(const GridFunction& u, const DirichletProblem& problem,
                                        const Nonlinearity& nl = Nonlinearity::plain(),
                                        double damping = 0.0) {
  const DomainDiscretization& g = u.discretization();
  const Stencil& stencil = problem.stencil();
  detail::check_compatible(g, stencil);
  const Exponent& p = stencil.exponent();
  if (!nl.is_regularized() && p.value() < 2.0) {
    throw SingularDerivative("plain Jacobian requested for p = " + std::to_string(p.value()) +
                             " < 2; a regularization delta is required");
  }
  if (!(damping >= 0.0)) throw InvalidParameter("damping must be >= 0");
  const std::size_t k = g.size();
  const std::size_t n_int = g.interior_count();
  const std::size_t n = stencil.size();
  const double c = stencil.prefactor();
  auto vals = u.values();

  SparseJacobian jac(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  Eigen::VectorXi nnz(static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < k; ++i) nnz[i] = i < n_int ? static_cast<int>(n + 1) : 1;
  jac.reserve(nnz);
  for (std::size_t i = 0; i < n_int; ++i) {
    double diag = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      const std::size_t j = g.neighbor(i, a);
      const double w = c * nl.deriv(vals[j] - vals[i], p);
      jac.insert(i, j) = -w;
      diag += w;
    }
    jac.insert(i, i) = diag + damping;
  }
  for (std::size_t i = n_int; i < k; ++i) jac.insert(i, i) = 1.0;
  jac.makeCompressed();
  return jac;
}

}  // namespace plap
