#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "plap/kernel.hpp"
#include "support.hpp"

namespace {

using plap::Exponent;
using plap::signed_power;
using plap::signed_power_deriv;
using plap::signed_power_reg;
using plap::signed_power_reg_deriv;

TEST(Exponent, RejectsNonAdmissibleValues) {
  EXPECT_THROW(Exponent(1.0), plap::InvalidParameter);
  EXPECT_THROW(Exponent(0.5), plap::InvalidParameter);
  EXPECT_THROW(Exponent(-3.0), plap::InvalidParameter);
  EXPECT_THROW(Exponent(std::nan("")), plap::InvalidParameter);
  EXPECT_THROW(Exponent{INFINITY}, plap::InvalidParameter);
  EXPECT_NO_THROW(Exponent(1.0000001));
}

TEST(Exponent, ConjugateExceedsOne) {
  for (double p : {1.1, 1.5, 2.0, 3.0, 10.0, 50.0}) {
    const Exponent e(p);
    EXPECT_GT(e.conjugate(), 1.0);
    EXPECT_NEAR(1.0 / p + 1.0 / e.conjugate(), 1.0, 1e-15);
  }
}

TEST(Exponent, FastPowersMatchPow) {
  plap::testing::Gen gen(11);
  for (double p : {1.5, 2.0, 2.5, 3.0, 4.0, 7.5, 10.0, 12.0, 2.3}) {
    const Exponent e(p);
    for (int k = 0; k < 200; ++k) {
      const double a = gen.uniform(1e-3, 20.0);
      const double ref = std::pow(a, p - 2.0);
      EXPECT_NEAR(e.abs_power(a), ref, 1e-13 * ref) << "p=" << p << " a=" << a;
    }
  }
}

TEST(SignedPower, Examples) {
  EXPECT_EQ(signed_power(0.0, Exponent(1.5)), 0.0);
  EXPECT_EQ(signed_power(2.0, Exponent(3.0)), 4.0);
  EXPECT_EQ(signed_power(-2.0, Exponent(3.0)), -4.0);
  EXPECT_EQ(signed_power(0.5, Exponent(10.0)), 1.953125e-3);
  EXPECT_EQ(std::ldexp(1.0, -9), 1.953125e-3);
}

TEST(SignedPower, DerivativeExamples) {
  EXPECT_EQ(signed_power_deriv(1.0, Exponent(3.0)), 2.0);
  EXPECT_EQ(signed_power_deriv(0.0, Exponent(4.0)), 0.0);
  EXPECT_THROW(signed_power_deriv(0.0, Exponent(1.5)), plap::SingularDerivative);
  EXPECT_NO_THROW(signed_power_deriv(1e-300, Exponent(1.5)));
}

TEST(SignedPower, RegularizedExamples) {
  EXPECT_EQ(signed_power_reg(0.0, Exponent(1.5), 0.1), 0.0);
  EXPECT_DOUBLE_EQ(signed_power_reg(1.0, Exponent(2.0), 0.3), 1.0);
  // J_{1.5}(t) = sign(t) sqrt|t|, so J(-0.51) - J(-0.01) = 0.1 - sqrt(0.51).
  const double v = signed_power_reg(-0.5, Exponent(1.5), 0.01);
  EXPECT_NEAR(v, 0.1 - std::sqrt(0.51), 1e-15);
  EXPECT_EQ(v, -signed_power_reg(0.5, Exponent(1.5), 0.01));
  EXPECT_THROW(signed_power_reg(1.0, Exponent(3.0), 0.0), plap::InvalidParameter);
  EXPECT_THROW(signed_power_reg(1.0, Exponent(3.0), -1.0), plap::InvalidParameter);
  EXPECT_THROW(signed_power_reg_deriv(1.0, Exponent(3.0), 0.0), plap::InvalidParameter);
}

TEST(SignedPower, RegularizedIsIdentityForQuadratic) {
  plap::testing::Gen gen(5);
  for (int k = 0; k < 200; ++k) {
    const double t = gen.uniform(-10.0, 10.0);
    const double delta = gen.uniform(1e-4, 1.0);
    EXPECT_NEAR(signed_power_reg(t, Exponent(2.0), delta), t, 1e-13 * (1.0 + std::fabs(t)));
  }
}

TEST(SignedPowerProperty, OddAndStrictlyIncreasing) {
  plap::testing::Gen gen(1);
  for (int trial = 0; trial < 2000; ++trial) {
    const Exponent p(gen.uniform(1.01, 12.0));
    const double t = gen.uniform(-10.0, 10.0);
    const double s = gen.uniform(-10.0, 10.0);
    EXPECT_EQ(signed_power(-t, p), -signed_power(t, p));
    if (t < s) {
      EXPECT_LT(signed_power(t, p), signed_power(s, p)) << p.value();
    }
  }
}

TEST(SignedPowerProperty, Multiplicative) {
  plap::testing::Gen gen(2);
  for (int trial = 0; trial < 2000; ++trial) {
    const Exponent p(gen.uniform(1.01, 12.0));
    const double a = gen.uniform(-10.0, 10.0);
    const double b = gen.uniform(-10.0, 10.0);
    const double jab = signed_power(a * b, p);
    EXPECT_LE(std::fabs(jab - signed_power(a, p) * signed_power(b, p)),
              1e-12 * (1.0 + std::fabs(jab)));
  }
}

TEST(SignedPowerProperty, DerivativeMatchesCentralDifference) {
  plap::testing::Gen gen(3);
  for (double pv : {2.0, 2.5, 3.0, 4.0, 7.0, 10.0}) {
    const Exponent p(pv);
    for (int trial = 0; trial < 300; ++trial) {
      double t = gen.uniform(1e-3, 10.0);
      if (gen.coin()) t = -t;
      const double eps = 1e-6 * std::max(1.0, std::fabs(t));
      const double fd = (signed_power(t + eps, p) - signed_power(t - eps, p)) / (2.0 * eps);
      const double d = signed_power_deriv(t, p);
      EXPECT_LE(std::fabs(d - fd) / std::max(1.0, std::fabs(d)), 1e-6) << "p=" << pv << " t=" << t;
    }
  }
}

TEST(SignedPowerProperty, RegularizedDerivativeMatchesCentralDifference) {
  plap::testing::Gen gen(4);
  for (double pv : {1.2, 1.5, 1.9, 2.5, 4.0}) {
    const Exponent p(pv);
    for (double delta : {1e-1, 1e-2, 1e-3}) {
      for (int trial = 0; trial < 100; ++trial) {
        double t = gen.uniform(1e-3, 5.0);
        if (gen.coin()) t = -t;
        const double eps = 1e-7 * std::max(1.0, std::fabs(t));
        const double fd =
            (signed_power_reg(t + eps, p, delta) - signed_power_reg(t - eps, p, delta)) / (2.0 * eps);
        const double d = signed_power_reg_deriv(t, p, delta);
        EXPECT_LE(std::fabs(d - fd) / std::max(1.0, std::fabs(d)), 1e-6);
      }
    }
  }
}

TEST(SignedPowerProperty, RegularizationConvergesMonotonically) {
  plap::testing::Gen gen(6);
  for (double pv : {1.2, 1.5, 2.5, 3.0, 4.0, 10.0}) {
    const Exponent p(pv);
    for (int trial = 0; trial < 200; ++trial) {
      double t = gen.uniform(1e-2, 3.0);
      if (gen.coin()) t = -t;
      const double exact = signed_power(t, p);
      double prev = INFINITY;
      for (double delta : {1e-1, 1e-2, 1e-3}) {
        const double gap = std::fabs(signed_power_reg(t, p, delta) - exact);
        EXPECT_LT(gap, prev) << "p=" << pv << " t=" << t << " delta=" << delta;
        prev = gap;
      }
    }
  }
}

TEST(NormalizationConstant, OneDimensionalClosedForm) {
  for (double p : {1.5, 2.0, 3.0, 10.0}) {
    const auto c = plap::normalization_constant(1, Exponent(p));
    EXPECT_EQ(c.value, 1.0 / (2.0 * (1.0 + p)));
    EXPECT_EQ(c.omega_d, 2.0);
  }
  EXPECT_EQ(plap::normalization_constant(1, Exponent(3.0)).value, 0.125);
}

TEST(NormalizationConstant, PlanarIntegerExponents) {
  EXPECT_NEAR(plap::normalization_constant(2, Exponent(4.0)).value, 1.0 / 16.0, 1e-12);
  EXPECT_NEAR(plap::normalization_constant(2, Exponent(3.0)).value, 4.0 / (15.0 * std::numbers::pi),
              1e-12);
  for (int p = 2; p <= 10; ++p) {
    EXPECT_NEAR(plap::detail::normalization_gamma(2, p), plap::detail::normalization_d2_integer(p),
                1e-12)
        << "p=" << p;
  }
}

TEST(NormalizationConstant, GammaFormMatchesQuadrature) {
  for (int d : {1, 2, 3}) {
    for (double p : {1.5, 2.5, 7.0}) {
      const double value = plap::normalization_constant(d, Exponent(p)).value;
      EXPECT_NEAR(value, plap::testing::quadrature_constant(d, p), 1e-10) << "d=" << d << " p=" << p;
    }
  }
}

TEST(NormalizationConstant, FrozenHighPrecisionValues) {
  // 30-digit evaluation of the sphere-average integral.
  struct Case {
    int d;
    double p;
    double value;
  };
  const Case cases[] = {{2, 1.5, 0.15897654127125203548}, {2, 2.5, 0.10170130180024175841},
                        {2, 7.0, 0.03233624240597238568}, {3, 1.5, 0.13333333333333333333},
                        {3, 2.5, 0.077922077922077922078}, {3, 7.0, 0.01875}};
  for (const auto& c : cases) {
    EXPECT_NEAR(plap::normalization_constant(c.d, Exponent(c.p)).value, c.value, 1e-14)
        << "d=" << c.d << " p=" << c.p;
  }
}

TEST(NormalizationConstant, PositiveEverywhere) {
  plap::testing::Gen gen(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = gen.integer(1, 6);
    const auto c = plap::normalization_constant(d, Exponent(gen.uniform(1.01, 30.0)));
    EXPECT_GT(c.value, 0.0);
    EXPECT_GT(c.omega_d, 0.0);
  }
  EXPECT_THROW(plap::normalization_constant(0, Exponent(2.0)), plap::InvalidParameter);
}

TEST(NormalizationConstant, UnitBallVolumes) {
  EXPECT_NEAR(plap::unit_ball_volume(1), 2.0, 1e-15);
  EXPECT_NEAR(plap::unit_ball_volume(2), std::numbers::pi, 1e-15);
  EXPECT_NEAR(plap::unit_ball_volume(3), 4.0 * std::numbers::pi / 3.0, 1e-14);
}

}  // namespace
