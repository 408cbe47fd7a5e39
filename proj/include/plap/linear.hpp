#pragma once

// Linear solves for the Newton step. With the Dirichlet entries projected
// onto G, the Newton correction vanishes there and the step solves the
// interior block of the Jacobian, which is symmetric with nonpositive
// off-diagonals and nonnegative row sums. It is stored on the lattice with
// one weight per (interior node, positive stencil offset).

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "plap/errors.hpp"
#include "plap/grid.hpp"
#include "plap/operator.hpp"

extern "C" {
void dpbtrf_(const char* uplo, const int* n, const int* kd, double* ab, const int* ldab,
             int* info);
void dpbtrs_(const char* uplo, const int* n, const int* kd, const int* nrhs, const double* ab,
             const int* ldab, double* b, const int* ldb, int* info);
}

namespace plap {

class InteriorJacobian {
 public:
  InteriorJacobian(const DomainDiscretization& g, const Stencil& stencil,
                   std::span<const double> u, const Nonlinearity& nl, double damping = 0.0)
      : g_(&g),
        n_(g.interior_count()),
        first_pos_(stencil.first_positive()),
        half_(stencil.size() - stencil.first_positive()),
        diag_(n_),
        weights_(n_ * half_) {
    detail::check_compatible(g, stencil);
    const Exponent& p = stencil.exponent();
    const double c = stencil.prefactor();
    const std::size_t full = stencil.size();
    const auto n = static_cast<std::ptrdiff_t>(n_);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      double d = 0.0;
      const double ui = u[i];
      for (std::size_t a = 0; a < full; ++a) {
        const double w = c * nl.deriv(u[g.neighbor(i, a)] - ui, p);
        d += w;
        if (a >= first_pos_) weights_[i * half_ + (a - first_pos_)] = w;
      }
      diag_[i] = d + damping;
    }
  }

  std::size_t size() const noexcept { return n_; }
  std::span<const double> diagonal() const noexcept { return diag_; }
  double min_diagonal() const noexcept {
    return n_ == 0 ? 0.0 : *std::min_element(diag_.begin(), diag_.end());
  }

  void add_damping(double extra) {
    for (double& d : diag_) d += extra;
  }

  /// y = A x on the interior unknowns.
  void apply(std::span<const double> x, std::span<double> y) const {
    const DomainDiscretization& g = *g_;
    const auto n = static_cast<std::ptrdiff_t>(n_);
    const std::size_t full = 2 * half_;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      double s = diag_[i] * x[i];
      const double* wi = weights_.data() + static_cast<std::size_t>(i) * half_;
      for (std::size_t a = 0; a < half_; ++a) {
        const std::size_t j = g.neighbor(i, first_pos_ + a);
        if (j < n_) s -= wi[a] * x[j];
        // Mirror offset: the weight is stored at the neighbor.
        const std::size_t m = g.neighbor(i, full - 1 - (first_pos_ + a));
        if (m < n_) s -= weights_[m * half_ + a] * x[m];
      }
      y[i] = s;
    }
  }

  /// Lower triangle in column-major form (for factorizations).
  Eigen::SparseMatrix<double> lower_triangle() const {
    const DomainDiscretization& g = *g_;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(n_ * (half_ + 1));
    for (std::size_t i = 0; i < n_; ++i) {
      trip.emplace_back(static_cast<int>(i), static_cast<int>(i), diag_[i]);
      for (std::size_t a = 0; a < half_; ++a) {
        const std::size_t j = g.neighbor(i, first_pos_ + a);
        if (j >= n_) continue;
        const double w = weights_[i * half_ + a];
        // Positive offsets point to larger lattice positions, and interior
        // nodes are numbered in lattice order, so j > i.
        trip.emplace_back(static_cast<int>(j), static_cast<int>(i), -w);
      }
    }
    Eigen::SparseMatrix<double> m(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_));
    m.setFromTriplets(trip.begin(), trip.end());
    return m;
  }

  /// Largest |i - j| over stored couplings between interior nodes.
  std::size_t bandwidth() const {
    const DomainDiscretization& g = *g_;
    std::size_t bw = 0;
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t a = 0; a < half_; ++a) {
        const std::size_t j = g.neighbor(i, first_pos_ + a);
        if (j < n_) bw = std::max(bw, j - i);
      }
    }
    return bw;
  }

  const DomainDiscretization& discretization() const noexcept { return *g_; }
  std::size_t half_size() const noexcept { return half_; }
  std::size_t first_positive() const noexcept { return first_pos_; }
  std::span<const double> weights() const noexcept { return weights_; }

 private:
  const DomainDiscretization* g_;
  std::size_t n_;
  std::size_t first_pos_;
  std::size_t half_;
  std::vector<double> diag_;
  std::vector<double> weights_;
};

enum class LinearSolverKind { kAuto, kDirect, kIterative };

struct LinearSolveResult {
  bool ok = false;
  double relative_residual = 0.0;
  int iterations = 0;  // PCG iterations, or refinement sweeps for direct
  bool direct = false;
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double relative_residual(const InteriorJacobian& A, std::span<const double> x,
                                std::span<const double> b, std::vector<double>& work) {
  work.resize(x.size());
  A.apply(x, work);
  double num = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) num += (b[i] - work[i]) * (b[i] - work[i]);
  const double den = norm2(b);
  return den > 0.0 ? std::sqrt(num) / den : std::sqrt(num);
}

}  // namespace detail

/// Sparse LDL^T with up to two sweeps of iterative refinement.
inline LinearSolveResult solve_direct(const InteriorJacobian& A, std::span<const double> b,
                                      std::span<double> x, double tol) {
  LinearSolveResult out;
  out.direct = true;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower> ldlt;
  ldlt.compute(A.lower_triangle());
  if (ldlt.info() != Eigen::Success) return out;
  const auto n = static_cast<Eigen::Index>(A.size());
  Eigen::Map<const Eigen::VectorXd> bv(b.data(), n);
  Eigen::VectorXd sol = ldlt.solve(bv);
  if (ldlt.info() != Eigen::Success || !sol.allFinite()) return out;
  std::vector<double> work(A.size());
  std::vector<double> r(A.size());
  for (int sweep = 0;; ++sweep) {
    out.relative_residual = detail::relative_residual(
        A, std::span<const double>(sol.data(), A.size()), b, work);
    if (out.relative_residual <= tol || sweep == 2) break;
    for (std::size_t i = 0; i < A.size(); ++i) r[i] = b[i] - work[i];
    Eigen::Map<const Eigen::VectorXd> rv(r.data(), n);
    sol += ldlt.solve(rv);
    ++out.iterations;
  }
  std::copy(sol.data(), sol.data() + n, x.begin());
  out.ok = out.relative_residual <= tol && sol.allFinite();
  return out;
}

/// Dense band Cholesky (LAPACK) for one-dimensional lattices, where the
/// interior block is banded with bandwidth = number of positive offsets.
inline LinearSolveResult solve_banded(const InteriorJacobian& A, std::span<const double> b,
                                      std::span<double> x, double tol) {
  LinearSolveResult out;
  out.direct = true;
  const DomainDiscretization& g = A.discretization();
  const std::size_t n = A.size();
  const std::size_t kd = A.bandwidth();
  const std::size_t ld = kd + 1;
  const std::size_t half = A.half_size();
  // Lower band storage: ab[(i - j) + j * ld] = A(i, j) for j <= i <= j + kd.
  std::vector<double> ab(ld * n, 0.0);
  auto diag = A.diagonal();
  auto w = A.weights();
  for (std::size_t j = 0; j < n; ++j) {
    ab[j * ld] = diag[j];
    for (std::size_t a = 0; a < half; ++a) {
      const std::size_t i = g.neighbor(j, A.first_positive() + a);
      if (i < n) ab[(i - j) + j * ld] = -w[j * half + a];
    }
  }
  const int ni = static_cast<int>(n), kdi = static_cast<int>(kd), ldi = static_cast<int>(ld);
  const int one = 1;
  int info = 0;
  dpbtrf_("L", &ni, &kdi, ab.data(), &ldi, &info);
  if (info != 0) return out;
  std::vector<double> sol(b.begin(), b.end());
  dpbtrs_("L", &ni, &kdi, &one, ab.data(), &ldi, sol.data(), &ni, &info);
  if (info != 0) return out;
  std::vector<double> work(n), r(n);
  for (int sweep = 0;; ++sweep) {
    out.relative_residual = detail::relative_residual(A, sol, b, work);
    if (out.relative_residual <= tol || sweep == 2) break;
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - work[i];
    dpbtrs_("L", &ni, &kdi, &one, ab.data(), &ldi, r.data(), &ni, &info);
    if (info != 0) return out;
    for (std::size_t i = 0; i < n; ++i) sol[i] += r[i];
    ++out.iterations;
  }
  std::copy(sol.begin(), sol.end(), x.begin());
  out.ok = out.relative_residual <= tol && std::isfinite(out.relative_residual);
  return out;
}

/// Jacobi-preconditioned conjugate gradients from x = 0.
inline LinearSolveResult solve_pcg(const InteriorJacobian& A, std::span<const double> b,
                                   std::span<double> x, double tol, int max_iterations) {
  const std::size_t n = A.size();
  LinearSolveResult out;
  std::fill(x.begin(), x.end(), 0.0);
  const double bnorm = detail::norm2(b);
  if (bnorm == 0.0) {
    out.ok = true;
    return out;
  }
  auto diag = A.diagonal();
  std::vector<double> r(b.begin(), b.end());
  std::vector<double> z(n), p(n), q(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / diag[i];
  p = z;
  double rz = detail::dot(r, z);
  for (int it = 1; it <= max_iterations; ++it) {
    A.apply(p, q);
    const double pq = detail::dot(p, q);
    if (!(pq > 0.0)) break;
    const double alpha = rz / pq;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    out.iterations = it;
    const double rel = detail::norm2(r) / bnorm;
    if (rel <= tol) {
      std::vector<double> work;
      out.relative_residual = detail::relative_residual(A, x, b, work);
      out.ok = out.relative_residual <= 10.0 * tol;
      return out;
    }
    for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / diag[i];
    const double rz_new = detail::dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  std::vector<double> work;
  out.relative_residual = detail::relative_residual(A, x, b, work);
  out.ok = false;
  return out;
}

/// Band Cholesky in one dimension, sparse LDL^T for moderate systems, PCG
/// for large multi-dimensional lattices.
inline LinearSolveResult solve_interior(const InteriorJacobian& A, std::span<const double> b,
                                        std::span<double> x, double tol = 1e-12,
                                        LinearSolverKind kind = LinearSolverKind::kAuto) {
  if (kind == LinearSolverKind::kAuto) {
    const bool small = A.size() <= 40000 && A.size() * A.half_size() <= 4000000;
    kind = (A.discretization().dimension() == 1 || small) ? LinearSolverKind::kDirect
                                                           : LinearSolverKind::kIterative;
  }
  if (kind == LinearSolverKind::kDirect) {
    if (A.discretization().dimension() == 1) return solve_banded(A, b, x, tol);
    return solve_direct(A, b, x, tol);
  }
  return solve_pcg(A, b, x, tol, 20000);
}

}  // namespace plap
