#include "gdp/core.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace {

using gdp::Point;
using gdp::ScatteringMatrix;

constexpr double kPi = std::numbers::pi;

ScatteringMatrix iso2() { return ScatteringMatrix::isotropic(2, 1.0 / (2.0 * kPi)); }

Point pt(double a, double b) {
  Point p(2);
  p << a, b;
  return p;
}

// Random normalized SPD matrix in dimension d.
ScatteringMatrix random_sigma(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd a(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      a(i, j) = g(rng);
    }
  }
  Eigen::MatrixXd s = a * a.transpose() + 0.5 * Eigen::MatrixXd::Identity(d, d);
  return gdp::normalize_scattering(ScatteringMatrix(s));
}

TEST(ScatteringMatrix, RejectsInvalidInput) {
  EXPECT_THROW(ScatteringMatrix(Eigen::MatrixXd(2, 3)), std::invalid_argument);
  Eigen::MatrixXd asym(2, 2);
  asym << 1, 0.5, 0.2, 1;
  EXPECT_THROW(ScatteringMatrix{asym}, std::invalid_argument);
  Eigen::MatrixXd indef(2, 2);
  indef << 1, 2, 2, 1;
  EXPECT_THROW(ScatteringMatrix{indef}, std::invalid_argument);
  Eigen::MatrixXd nan = Eigen::MatrixXd::Identity(2, 2);
  nan(0, 0) = std::nan("");
  EXPECT_THROW(ScatteringMatrix{nan}, std::invalid_argument);
}

TEST(ScatteringMatrix, NormalizationFlag) {
  EXPECT_TRUE(iso2().normalized());
  EXPECT_FALSE(ScatteringMatrix::isotropic(2, 1.0).normalized());
}

TEST(KernelValue, DiagonalIsOneWhenNormalized) {
  std::mt19937_64 rng(3);
  for (int d = 1; d <= 5; ++d) {
    const auto s = random_sigma(d, rng);
    const Point x = Point::Random(d);
    EXPECT_NEAR(gdp::kernel_value(s, x, x), 1.0, 1e-12);
  }
}

TEST(KernelValue, IsotropicClosedForm) {
  // Sigma = I/(2 pi) gives Phi(z) = exp(-pi |z|^2).
  const auto s = iso2();
  EXPECT_NEAR(gdp::kernel_value(s, pt(0.3, -0.4), pt(0, 0)), std::exp(-kPi * 0.25), 1e-14);
}

TEST(KernelValue, IntegratesToOne) {
  // Midpoint quadrature of a non-normalized Gaussian density.
  Eigen::MatrixXd m(2, 2);
  m << 0.7, 0.2, 0.2, 0.4;
  const ScatteringMatrix s(m);
  const double h = 0.02;
  double sum = 0.0;
  const Point origin = pt(0, 0);
  for (double x = -6.0 + h / 2; x < 6.0; x += h) {
    for (double y = -6.0 + h / 2; y < 6.0; y += h) {
      sum += gdp::kernel_value(s, pt(x, y), origin);
    }
  }
  EXPECT_NEAR(sum * h * h, 1.0, 1e-6);
}

TEST(KernelValue, DimensionMismatchThrows) {
  EXPECT_THROW(gdp::kernel_value(iso2(), Point::Zero(3), Point::Zero(2)), std::invalid_argument);
}

TEST(SpectralDensity, MatchesNumericalFourierTransform) {
  Eigen::MatrixXd m(2, 2);
  m << 0.3, 0.1, 0.1, 0.2;
  const ScatteringMatrix s(m);
  const double h = 0.01;
  const Point origin = pt(0, 0);
  for (const auto& w : {pt(0, 0), pt(0.5, 0.0), pt(0.3, -0.7), pt(1.0, 1.0)}) {
    double re = 0.0;
    for (double x = -4.0 + h / 2; x < 4.0; x += h) {
      for (double y = -4.0 + h / 2; y < 4.0; y += h) {
        re += gdp::kernel_value(s, pt(x, y), origin) * std::cos(2 * kPi * (w(0) * x + w(1) * y));
      }
    }
    EXPECT_NEAR(re * h * h, gdp::spectral_density(s, w), 1e-7);
  }
}

TEST(SpectralDensity, BoundedByOne) {
  std::mt19937_64 rng(11);
  const auto s = random_sigma(3, rng);
  for (int i = 0; i < 100; ++i) {
    const double v = gdp::spectral_density(s, Eigen::VectorXd::Random(3) * 3.0);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(NormalizeScattering, FixesDeterminant) {
  std::mt19937_64 rng(5);
  for (int d = 1; d <= 6; ++d) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Random(d, d);
    const ScatteringMatrix s(a * a.transpose() + Eigen::MatrixXd::Identity(d, d));
    const auto n = gdp::normalize_scattering(s);
    EXPECT_TRUE(n.normalized());
    EXPECT_NEAR(n.entries().determinant() * std::pow(2 * kPi, d), 1.0, 1e-9);
    // Same shape: proportional entries.
    const double ratio = n.entries()(0, 0) / s.entries()(0, 0);
    EXPECT_LT((n.entries() - ratio * s.entries()).norm(), 1e-12 * n.entries().norm());
  }
}

TEST(NormalizeScattering, IdempotentOnNormalized) {
  const auto s = iso2();
  EXPECT_EQ(gdp::normalize_scattering(s).entries(), s.entries());
}

TEST(RhoK, SinglePointIsIntensity) {
  const std::vector<Point> one{pt(1.0, 2.0)};
  EXPECT_NEAR(gdp::rho_k(iso2(), one), 1.0, 1e-14);
}

TEST(RhoK, TwoPointFormula) {
  const auto s = iso2();
  const Point x = pt(0.2, 0.1);
  const Point y = pt(-0.3, 0.5);
  const std::vector<Point> pts{x, y};
  const double expected = 1.0 + gdp::truncated_pair_correlation(s, x, y);
  EXPECT_NEAR(gdp::rho_k(s, pts), expected, 1e-14);
  // 1 - exp(-(x-y)^T Sigma^-1 (x-y)) written out.
  EXPECT_NEAR(expected, 1.0 - std::exp(-2 * kPi * (x - y).squaredNorm()), 1e-14);
}

TEST(RhoK, CoincidentPointsVanish) {
  const std::vector<Point> pts{pt(0.5, 0.5), pt(0.5, 0.5), pt(1.0, 0.0)};
  EXPECT_NEAR(gdp::rho_k(iso2(), pts), 0.0, 1e-14);
}

TEST(RhoK, EmptyThrows) {
  EXPECT_THROW(gdp::rho_k(iso2(), std::vector<Point>{}), std::invalid_argument);
}

TEST(RhoK, FischerAndRangeOnRandomTuples) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  const auto s = random_sigma(2, rng);
  for (int t = 0; t < 2000; ++t) {
    std::vector<Point> p(4);
    for (auto& q : p) {
      q = pt(u(rng), u(rng));
    }
    const double r4 = gdp::rho_k(s, p);
    const double a = gdp::rho_k(s, std::vector<Point>{p[0], p[1]});
    const double b = gdp::rho_k(s, std::vector<Point>{p[2], p[3]});
    EXPECT_GE(r4, 0.0);
    EXPECT_LE(r4, 1.0 + 1e-12);
    EXPECT_LE(r4, a * b + 1e-12);
  }
}

TEST(TruncatedPairCorrelation, NonPositiveAndSymmetric) {
  std::mt19937_64 rng(9);
  const auto s = random_sigma(3, rng);
  for (int i = 0; i < 50; ++i) {
    const Point x = Point::Random(3);
    const Point y = Point::Random(3);
    const double v = gdp::truncated_pair_correlation(s, x, y);
    EXPECT_LE(v, 0.0);
    EXPECT_GE(v, -1.0);
    EXPECT_DOUBLE_EQ(v, gdp::truncated_pair_correlation(s, y, x));
    const double k = gdp::kernel_value(s, x, y);
    EXPECT_NEAR(v, -k * k, 1e-15);
  }
  EXPECT_NEAR(gdp::truncated_pair_correlation(s, Point::Ones(3), Point::Ones(3)), -1.0, 1e-12);
}

TEST(SpikedScattering, EigenstructureAndNormalization) {
  for (int d = 2; d <= 5; ++d) {
    Eigen::VectorXd u = Eigen::VectorXd::Random(d).normalized();
    const double lambda = 0.7 * d;
    const auto s = gdp::spiked_scattering({lambda, u}, d);
    EXPECT_TRUE(s.normalized());
    const Eigen::MatrixXd scaled = 2 * kPi * s.entries();
    EXPECT_NEAR(u.dot(scaled * u), 1.0 + lambda, 1e-12);
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(scaled).eigenvalues();
    EXPECT_NEAR(ev(d - 1), 1.0 + lambda, 1e-12);
    for (int i = 0; i < d - 1; ++i) {
      EXPECT_NEAR(ev(i), std::pow(1.0 + lambda, -1.0 / (d - 1)), 1e-12);
    }
  }
}

TEST(SpikedScattering, ZeroSpikeIsIsotropic) {
  Eigen::VectorXd u(2);
  u << 0.6, 0.8;
  const auto s = gdp::spiked_scattering({0.0, u}, 2);
  EXPECT_LT((s.entries() - iso2().entries()).norm(), 1e-15);
}

TEST(SpikedScattering, Errors) {
  Eigen::VectorXd u = Eigen::VectorXd::Unit(2, 0);
  EXPECT_THROW(gdp::spiked_scattering({1.0, Eigen::VectorXd::Unit(1, 0)}, 1), std::invalid_argument);
  EXPECT_THROW(gdp::spiked_scattering({1.0, u}, 3), std::invalid_argument);
  EXPECT_THROW(gdp::spiked_scattering({-0.5, u}, 2), std::invalid_argument);
  EXPECT_THROW(gdp::spiked_scattering({1.0, 2.0 * u}, 2), std::invalid_argument);
}

} // namespace
