#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "plap/operator.hpp"
#include "support.hpp"

namespace {

using plap::Exponent;
using plap::GridFunction;
using plap::Nonlinearity;
using plap::testing::Gen;

GridFunction from_values(const plap::DirichletProblem& pb, std::vector<double> v) {
  return GridFunction(pb.shared_discretization(), std::move(v));
}

// Residual of U as a plain vector, used by the finite-difference oracle.
std::vector<double> residual_vector(const plap::DirichletProblem& pb, const std::vector<double>& u,
                                    const Nonlinearity& nl) {
  return plap::scheme_residual(from_values(pb, u), pb, nl).values;
}

TEST(Operator, ConstantGivesZero) {
  for (double p : {1.5, 2.0, 3.0, 10.0}) {
    const auto pb = plap::testing::small_interval_problem(Exponent(p), 30, 4);
    const auto lu = plap::apply_operator(plap::sample_on_grid(pb.shared_discretization(), plap::testing::constant_fn(3.7)),
                                         pb.stencil());
    for (double v : lu.values()) EXPECT_EQ(v, 0.0);
  }
}

TEST(Operator, QuadraticNearOrigin) {
  const Exponent p(2.0);
  const double h = 0.019037, r = 0.2;
  const auto st = plap::build_stencil(1, h, r, p);
  const double x0[] = {0.0};
  const auto sq = [](std::span<const double> x) { return x[0] * x[0]; };
  const double value = plap::apply_operator_at(sq, x0, st);
  // Direct sum over |m h| < r with D = 1/6, |B_1| = 2.
  double s = 0.0;
  for (int m = -20; m <= 20; ++m) {
    if (m != 0 && std::fabs(m * h) < r) s += (m * h) * (m * h);
  }
  const double oracle = h / ((1.0 / 6.0) * 2.0 * r * r * r) * s;
  EXPECT_NEAR(value, oracle, 1e-13);
  EXPECT_LE(std::fabs(value - 2.0), 0.05);

  // Same value on the grid at the node x = 0.
  const auto pb = plap::DirichletProblem(plap::Domain::interval(-1.0, 1.0), p, r, h,
                                         plap::testing::constant_fn(1.0),
                                         plap::testing::constant_fn(0.0),
                                         plap::ExtensionRule::zero());
  const auto u = plap::sample_on_grid(pb.shared_discretization(), sq);
  const auto lu = plap::apply_operator(u, pb.stencil());
  const int zero[] = {0};
  EXPECT_NEAR(lu[*pb.discretization().index_of(zero)], value, 1e-13);
}

TEST(Operator, TranslationInvarianceIsExact) {
  Gen gen(31);
  for (double p : {2.0, 3.0, 4.5}) {
    const auto pb = plap::testing::small_interval_problem(Exponent(p), 40, 6);
    for (int trial = 0; trial < 10; ++trial) {
      // Multiples of 1/8 keep every difference exact after the shift.
      std::vector<double> u(pb.discretization().size());
      for (double& v : u) v = gen.integer(-16, 16) / 8.0;
      const double c = gen.integer(-64, 64) / 4.0;
      std::vector<double> shifted(u);
      for (double& v : shifted) v += c;
      const auto a = plap::apply_operator(from_values(pb, u), pb.stencil());
      const auto b = plap::apply_operator(from_values(pb, shifted), pb.stencil());
      for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
    }
  }
}

TEST(Operator, Homogeneity) {
  Gen gen(32);
  for (double p : {2.0, 3.0, 4.0, 10.0}) {
    const Exponent ex(p);
    const auto pb = plap::testing::small_interval_problem(ex, 50, 8);
    const auto v = plap::testing::random_grid_function(pb, gen, -1.0, 1.0);
    const auto lv = plap::apply_operator(v, pb.stencil());
    for (double lambda : {-2.0, 0.5, 3.0}) {
      std::vector<double> scaled(v.values().begin(), v.values().end());
      for (double& x : scaled) x *= lambda;
      const auto ls = plap::apply_operator(from_values(pb, scaled), pb.stencil());
      const double jl = plap::signed_power(lambda, ex);
      for (std::size_t i = 0; i < ls.size(); ++i) {
        EXPECT_NEAR(ls[i], jl * lv[i], 1e-12 * std::fabs(jl * lv[i]) + 1e-300);
      }
    }
  }
  // J_3(-2) = -4.
  const auto pb = plap::testing::small_interval_problem(Exponent(3.0), 20, 3);
  Gen g2(33);
  const auto v = plap::testing::random_grid_function(pb, g2, -1.0, 1.0);
  std::vector<double> m2(v.values().begin(), v.values().end());
  for (double& x : m2) x *= -2.0;
  const auto a = plap::apply_operator(v, pb.stencil());
  const auto b = plap::apply_operator(from_values(pb, m2), pb.stencil());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(b[i], -4.0 * a[i], 1e-12 * std::fabs(4.0 * a[i]));
}

TEST(Operator, Antisymmetry) {
  Gen gen(34);
  for (double p : {1.5, 2.0, 3.0, 7.0}) {
    const auto pb = plap::testing::small_interval_problem(Exponent(p), 40, 5);
    for (const auto& nl : {Nonlinearity::plain(), Nonlinearity::regularized(1e-2)}) {
      const auto v = plap::testing::random_grid_function(pb, gen, -2.0, 2.0);
      std::vector<double> neg(v.values().begin(), v.values().end());
      for (double& x : neg) x = -x;
      const auto a = plap::apply_operator(v, pb.stencil(), nl);
      const auto b = plap::apply_operator(from_values(pb, neg), pb.stencil(), nl);
      for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(b[i], -a[i]);
    }
  }
}

TEST(Operator, TwoDimensionalAgreesWithPointEvaluation) {
  const Exponent p(3.0);
  const auto pb = plap::DirichletProblem(plap::Domain::ball({0.0, 0.0}, 1.0), p, 0.3, 0.05,
                                         plap::testing::constant_fn(1.0),
                                         plap::testing::constant_fn(0.0),
                                         plap::ExtensionRule::zero());
  const auto fn = [](std::span<const double> x) { return std::sin(2.0 * x[0]) * std::cos(x[1]); };
  const auto u = plap::sample_on_grid(pb.shared_discretization(), fn);
  const auto lu = plap::apply_operator(u, pb.stencil());
  std::vector<double> x(2);
  const auto& g = pb.discretization();
  ASSERT_GT(pb.stencil().size(), 64u);  // exercises the pairwise branch
  for (std::size_t i = 0; i < g.interior_count(); i += 37) {
    g.point(i, x);
    EXPECT_NEAR(lu[i], plap::apply_operator_at(fn, x, pb.stencil()), 1e-10 * (1.0 + std::fabs(lu[i])));
  }
}

TEST(SchemeMonotonicity, RandomOrderedPairs) {
  Gen gen(35);
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const double p = gen.coin() ? gen.uniform(2.0, 8.0) : gen.uniform(1.2, 2.0);
    const auto pb = plap::testing::small_interval_problem(Exponent(p), gen.integer(10, 40),
                                                          gen.integer(1, 6));
    const auto& g = pb.discretization();
    const std::size_t k = g.size();
    std::vector<double> phi = gen.vector(k, -1.0, 1.0);
    std::vector<double> psi(phi);
    const std::size_t beta = static_cast<std::size_t>(gen.integer(0, static_cast<int>(g.interior_count()) - 1));
    for (std::size_t j = 0; j < k; ++j) {
      if (j != beta) psi[j] += gen.coin() ? gen.uniform(0.0, 1.0) : 0.0;
    }
    const auto nl = p < 2.0 ? Nonlinearity::regularized(1e-3) : Nonlinearity::plain();
    const auto s_phi = residual_vector(pb, phi, nl);
    const auto s_psi = residual_vector(pb, psi, nl);
    EXPECT_LE(s_psi[beta], s_phi[beta]) << "trial " << trial;
    ++checked;
  }
  EXPECT_EQ(checked, 100);
}

TEST(Residual, ZeroIterateOnTorsionData) {
  const auto pb = plap::testing::small_interval_problem(Exponent(3.0), 25, 3);
  const auto res = plap::scheme_residual(GridFunction::zeros(pb.shared_discretization()), pb);
  for (std::size_t i = 0; i < res.values.size(); ++i) {
    EXPECT_EQ(res.values[i], pb.discretization().is_interior(i) ? -1.0 : 0.0);
  }
  EXPECT_EQ(res.max_norm(), 1.0);
  EXPECT_EQ(res.interior_max_norm(), 1.0);
}

TEST(Residual, RejectsForeignGrid) {
  const auto a = plap::testing::small_interval_problem(Exponent(3.0), 25, 3);
  const auto b = plap::testing::small_interval_problem(Exponent(3.0), 25, 3);
  EXPECT_THROW(plap::scheme_residual(GridFunction::zeros(a.shared_discretization()), b),
               plap::InvalidParameter);
}

// Dense summation over all lattice points on the exact torsion profile,
// without the discretization machinery.
double residual_oracle(double p, double r, double h, double exclusion) {
  const double q = p / (p - 1.0);
  // Sampled everywhere, layer included: negative past |x| = 1.
  auto u = [&](double x) { return (p - 1.0) / p * (1.0 - std::pow(std::fabs(x), q)); };
  const double D = 1.0 / (2.0 * (1.0 + p));
  const double pref = h / (D * 2.0 * std::pow(r, p + 1.0));
  const int reach = static_cast<int>(std::floor(r / h * (1.0 - 1e-12)));
  const int n = static_cast<int>(std::floor(1.0 / h));
  double worst = 0.0;
  for (int b = -n; b <= n; ++b) {
    const double x = b * h;
    if (!(std::fabs(x) < 1.0) || std::fabs(x) < exclusion) continue;
    double s = 0.0;
    for (int m = -reach; m <= reach; ++m) {
      if (m == 0) continue;
      const double t = u(x + m * h) - u(x);
      s += std::fabs(t) * t;  // p = 3 only
    }
    worst = std::max(worst, std::fabs(-pref * s - 1.0));
  }
  return worst;
}

TEST(Residual, ExactSolutionSampleIsSmallAwayFromOrigin) {
  const double oracle = residual_oracle(3.0, 0.1, 0.0025, 0.2);
  EXPECT_NEAR(oracle, 0.049245307281140152, 1e-12);
  const double got = plap::residual_check(plap::PresetKind::kTorsionD1, Exponent(3.0), 0.1,
                                          plap::CouplingRule{0.25, 2.0}, 0.2);
  EXPECT_NEAR(got, oracle, 1e-9);
  EXPECT_LT(got, 0.15);
}

// Dense Jacobian by central differences of the residual.
std::vector<double> fd_jacobian(const plap::DirichletProblem& pb, const std::vector<double>& u,
                                const Nonlinearity& nl) {
  const std::size_t k = u.size();
  std::vector<double> jac(k * k);
  std::vector<double> w(u);
  for (std::size_t j = 0; j < k; ++j) {
    const double step = 1e-7 * (1.0 + std::fabs(u[j]));
    w[j] = u[j] + step;
    const auto plus = residual_vector(pb, w, nl);
    w[j] = u[j] - step;
    const auto minus = residual_vector(pb, w, nl);
    w[j] = u[j];
    for (std::size_t i = 0; i < k; ++i) jac[i * k + j] = (plus[i] - minus[i]) / (2.0 * step);
  }
  return jac;
}

TEST(Jacobian, MatchesFiniteDifferences) {
  Gen gen(36);
  struct Case {
    double p;
    std::optional<double> delta;
  };
  const Case cases[] = {{1.5, 1e-3}, {2.0, {}}, {3.0, {}}, {4.0, {}}, {10.0, {}}};
  for (const Case& c : cases) {
    for (int trial = 0; trial < 4; ++trial) {
      const int reach = gen.integer(1, 3);
      // Interior count plus 2 * reach layer nodes lands in [10, 50].
      const int n_int = gen.integer(10 - 2 * reach > 4 ? 10 - 2 * reach : 4, 50 - 2 * reach);
      const auto pb = plap::testing::small_interval_problem(Exponent(c.p), n_int, reach);
      const std::size_t k = pb.discretization().size();
      ASSERT_GE(k, 10u);
      ASSERT_LE(k, 50u);
      const auto nl = Nonlinearity::from_optional(c.delta);
      const auto u = gen.vector(k, -1.0, 1.0);
      const auto jac = plap::assemble_jacobian(from_values(pb, u), pb, nl);
      const auto fd = fd_jacobian(pb, u, nl);
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
          const double a = jac.coeff(static_cast<int>(i), static_cast<int>(j));
          num += (a - fd[i * k + j]) * (a - fd[i * k + j]);
          den += a * a;
        }
      }
      EXPECT_LE(std::sqrt(num / den), 1e-6) << "p=" << c.p << " k=" << k;
    }
  }
}

TEST(Jacobian, RowSumsAndSignPattern) {
  Gen gen(37);
  for (double p : {2.0, 3.0, 4.0, 10.0}) {
    const auto pb = plap::testing::small_interval_problem(Exponent(p), 40, 5);
    const auto u = plap::testing::random_grid_function(pb, gen, -1.0, 1.0);
    const auto jac = plap::assemble_jacobian(u, pb);
    const auto& g = pb.discretization();
    for (std::size_t i = 0; i < g.size(); ++i) {
      double sum = 0.0, l1 = 0.0;
      for (plap::SparseJacobian::InnerIterator it(jac, static_cast<int>(i)); it; ++it) {
        sum += it.value();
        l1 += std::fabs(it.value());
        if (g.is_interior(i)) {
          if (static_cast<std::size_t>(it.col()) == i) {
            EXPECT_GE(it.value(), 0.0);
          } else {
            EXPECT_LE(it.value(), 0.0);
          }
        } else {
          EXPECT_EQ(static_cast<std::size_t>(it.col()), i);
          EXPECT_EQ(it.value(), 1.0);
        }
      }
      if (g.is_interior(i)) {
        EXPECT_LE(std::fabs(sum), 1e-12 * l1);
      }
    }
  }
}

TEST(Jacobian, QuadraticCaseIsIndependentOfIterate) {
  Gen gen(38);
  const auto pb = plap::testing::small_interval_problem(Exponent(2.0), 30, 4);
  const auto a = plap::assemble_jacobian(plap::testing::random_grid_function(pb, gen, -1, 1), pb);
  const auto b = plap::assemble_jacobian(plap::testing::random_grid_function(pb, gen, -5, 5), pb);
  const double c = pb.stencil().prefactor();
  const auto& g = pb.discretization();
  for (std::size_t i = 0; i < g.interior_count(); ++i) {
    EXPECT_NEAR(a.coeff(i, i), c * static_cast<double>(pb.stencil().size()), 1e-12 * c * 10);
    for (std::size_t s = 0; s < pb.stencil().size(); ++s) {
      const auto j = g.neighbor(i, s);
      EXPECT_EQ(a.coeff(i, j), -c);
    }
  }
  EXPECT_EQ((a - b).norm(), 0.0);
}

TEST(Jacobian, ConstantIterateGivesZeroRowsAndDampingShiftsDiagonal) {
  const auto pb = plap::testing::small_interval_problem(Exponent(4.0), 30, 4);
  const auto u = plap::sample_on_grid(pb.shared_discretization(), plap::testing::constant_fn(0.3));
  const auto jac = plap::assemble_jacobian(u, pb);
  const auto damped = plap::assemble_jacobian(u, pb, Nonlinearity::plain(), 1e-6);
  for (std::size_t i = 0; i < pb.discretization().interior_count(); ++i) {
    for (plap::SparseJacobian::InnerIterator it(jac, static_cast<int>(i)); it; ++it) {
      EXPECT_EQ(it.value(), 0.0);
    }
    EXPECT_EQ(damped.coeff(i, i), 1e-6);
  }
}

TEST(Jacobian, SingularWithoutRegularization) {
  const auto pb = plap::testing::small_interval_problem(Exponent(1.5), 20, 3);
  const auto u = GridFunction::zeros(pb.shared_discretization());
  EXPECT_THROW(plap::assemble_jacobian(u, pb), plap::SingularDerivative);
  EXPECT_NO_THROW(plap::assemble_jacobian(u, pb, Nonlinearity::regularized(1e-3)));
  EXPECT_THROW(plap::assemble_jacobian(u, pb, Nonlinearity::regularized(1e-3), -1.0),
               plap::InvalidParameter);
}

}  // namespace
