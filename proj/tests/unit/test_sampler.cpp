#include "gdp/estimator.hpp"
#include "gdp/sampler.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

namespace {

using gdp::BoxWindow;
using gdp::ScatteringMatrix;

constexpr double kPi = std::numbers::pi;

ScatteringMatrix iso(int d) { return ScatteringMatrix::isotropic(d, 1.0 / (2.0 * kPi)); }

TEST(SpectralBasis, ModesAboveToleranceAndSymmetric) {
  const auto basis = gdp::build_spectral_basis(iso(2), 8.0, 1e-6);
  ASSERT_EQ(basis.modes.size(), basis.eigenvalues.size());
  std::set<std::pair<int, int>> seen;
  for (std::size_t i = 0; i < basis.modes.size(); ++i) {
    const auto& k = basis.modes[i];
    const double expected = std::exp(-kPi * k.cast<double>().squaredNorm() / 64.0);
    EXPECT_NEAR(basis.eigenvalues[i], expected, 1e-15);
    EXPECT_GT(basis.eigenvalues[i], 1e-6);
    seen.insert({k(0), k(1)});
  }
  for (const auto& [a, b] : seen) {
    EXPECT_TRUE(seen.count({-a, -b})) << a << "," << b;
  }
  // Brute-force count over a generous box.
  std::size_t count = 0;
  for (int a = -60; a <= 60; ++a) {
    for (int b = -60; b <= 60; ++b) {
      count += std::exp(-kPi * (a * a + b * b) / 64.0) > 1e-6 ? 1 : 0;
    }
  }
  EXPECT_EQ(basis.modes.size(), count);
}

TEST(SpectralBasis, TraceApproximatesVolume) {
  // With unit intensity the expected torus count is L^d up to truncation.
  const auto basis = gdp::build_spectral_basis(iso(2), 12.0, 1e-9);
  EXPECT_NEAR(basis.trace(), 144.0, 1e-3);
  EXPECT_GT(basis.count_variance(), 0.0);
  EXPECT_LT(basis.count_variance(), basis.trace());
}

TEST(SpectralBasis, Errors) {
  EXPECT_THROW(gdp::build_spectral_basis(iso(2), 10.0, 0.0), std::invalid_argument);
  EXPECT_THROW(gdp::build_spectral_basis(iso(2), 10.0, 1.0), std::invalid_argument);
  EXPECT_THROW(gdp::build_spectral_basis(iso(2), -1.0, 1e-6), std::invalid_argument);
  EXPECT_THROW(gdp::build_spectral_basis(iso(2), 200.0, 1e-6, 1000), std::runtime_error);
}

TEST(SampleGdp, DeterministicPerSeed) {
  const auto a = gdp::sample_gdp(iso(2), BoxWindow{10.0, 2}, 42);
  const auto b = gdp::sample_gdp(iso(2), BoxWindow{10.0, 2}, 42);
  const auto c = gdp::sample_gdp(iso(2), BoxWindow{10.0, 2}, 43);
  EXPECT_EQ(a.points, b.points);
  EXPECT_FALSE(a.points.rows() == c.points.rows() && a.points == c.points);
}

TEST(SampleGdp, PointsInsideBox) {
  for (int d = 1; d <= 3; ++d) {
    const double side = d == 3 ? 5.0 : 10.0;
    const auto p = gdp::sample_gdp(iso(d), BoxWindow{side, d}, 7);
    EXPECT_EQ(p.dim(), d);
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      EXPECT_TRUE(gdp::window_contains(p.window, p.points.row(i).transpose()));
    }
  }
}

TEST(SampleGdp, MeanCountMatchesTrace) {
  const auto basis = gdp::build_spectral_basis(iso(2), 8.0, 1e-6);
  const int reps = 300;
  double sum = 0.0;
  double sum2 = 0.0;
  for (int i = 0; i < reps; ++i) {
    const double n = static_cast<double>(gdp::sample_gdp(basis, 2, gdp::replicate_seed(5, i)).size());
    sum += n;
    sum2 += n * n;
  }
  const double mean = sum / reps;
  const double var = sum2 / reps - mean * mean;
  // Count is a sum of independent Bernoullis: mean = trace, variance = sum l(1-l).
  const double se = std::sqrt(basis.count_variance() / reps);
  EXPECT_NEAR(mean, basis.trace(), 4.0 * se);
  EXPECT_LT(var, basis.trace());
  EXPECT_NEAR(var, basis.count_variance(), 0.35 * basis.count_variance());
}

TEST(SampleGdp, OneDimensionalMinimumSpacing) {
  // Repulsion: close pairs are much rarer than under Poisson.
  const auto basis = gdp::build_spectral_basis(iso(1), 200.0, 1e-6);
  std::size_t close = 0;
  std::size_t total = 0;
  for (int r = 0; r < 20; ++r) {
    auto p = gdp::sample_gdp(basis, 1, gdp::replicate_seed(8, r));
    std::vector<double> xs(p.points.data(), p.points.data() + p.size());
    std::sort(xs.begin(), xs.end());
    for (std::size_t i = 1; i < xs.size(); ++i) {
      close += xs[i] - xs[i - 1] < 0.1 ? 1 : 0;
    }
    total += xs.size();
  }
  // Poisson would give about 1 - exp(-0.1) ~ 9.5% of gaps below 0.1; the DPP
  // pair correlation at 0.1 is 1 - exp(-2 pi 0.01) ~ 0.06.
  EXPECT_LT(static_cast<double>(close) / static_cast<double>(total), 0.01);
}

TEST(SampleGdp, DimensionMismatchThrows) {
  EXPECT_THROW(gdp::sample_gdp(iso(2), BoxWindow{10.0, 3}, 1), std::invalid_argument);
}

TEST(SamplePoisson, CountAndWindow) {
  double sum = 0.0;
  for (int i = 0; i < 200; ++i) {
    const auto p = gdp::sample_poisson(0.5, BoxWindow{10.0, 2}, gdp::replicate_seed(1, i));
    sum += static_cast<double>(p.size());
    for (Eigen::Index j = 0; j < p.size(); ++j) {
      ASSERT_TRUE(gdp::window_contains(p.window, p.points.row(j).transpose()));
    }
  }
  EXPECT_NEAR(sum / 200.0, 50.0, 4.0 * std::sqrt(50.0 / 200.0));
  EXPECT_THROW(gdp::sample_poisson(0.0, BoxWindow{10.0, 2}, 1), std::invalid_argument);
}

TEST(ExtractBall, KeepsClosedBall) {
  gdp::PointPattern p;
  p.window = BoxWindow{10.0, 2};
  p.points.resize(4, 2);
  p.points << 0, 0, 3, 4, 3, 4.0000001, -2, 1;
  const auto ball = gdp::extract_ball(p, 5.0);
  EXPECT_EQ(ball.size(), 3);
  EXPECT_TRUE(std::holds_alternative<gdp::BallWindow>(ball.window));
  EXPECT_DOUBLE_EQ(std::get<gdp::BallWindow>(ball.window).radius, 5.0);
  EXPECT_THROW(gdp::extract_ball(p, 5.1), std::invalid_argument);
  EXPECT_THROW(gdp::extract_ball(ball, 6.0), std::invalid_argument);
  EXPECT_EQ(gdp::extract_ball(ball, 1.0).size(), 1);
}

TEST(Window, VolumeAndContains) {
  EXPECT_DOUBLE_EQ(gdp::window_volume(BoxWindow{3.0, 2}), 9.0);
  EXPECT_NEAR(gdp::window_volume(gdp::BallWindow{2.0, 3}), 32.0 * kPi / 3.0, 1e-12);
  Eigen::Vector2d x(1.5, -1.5);
  EXPECT_TRUE(gdp::window_contains(BoxWindow{3.0, 2}, x));
  EXPECT_FALSE(gdp::window_contains(gdp::BallWindow{2.0, 2}, x));
}

// Brute-force oracle: ordered pair counts per bin with torus distances.
std::vector<double> brute_pcf(const std::vector<gdp::PointPattern>& pats,
                              const std::vector<double>& edges) {
  std::vector<double> counts(edges.size() - 1, 0.0);
  double vol = 0.0;
  for (const auto& p : pats) {
    const double side = std::get<BoxWindow>(p.window).side;
    vol += side * side;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      for (Eigen::Index j = 0; j < p.size(); ++j) {
        if (i == j) {
          continue;
        }
        Eigen::Vector2d delta = p.points.row(i) - p.points.row(j);
        for (int c = 0; c < 2; ++c) {
          delta(c) -= side * std::nearbyint(delta(c) / side);
        }
        const double dist = delta.norm();
        for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
          if (dist >= edges[b] && dist < edges[b + 1]) {
            counts[b] += 1.0;
          }
        }
      }
    }
  }
  for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
    counts[b] /= vol * kPi * (edges[b + 1] * edges[b + 1] - edges[b] * edges[b]);
  }
  return counts;
}

TEST(PairCorrelation, MatchesBruteForce) {
  std::vector<gdp::PointPattern> pats;
  for (int i = 0; i < 3; ++i) {
    pats.push_back(gdp::sample_poisson(1.0, BoxWindow{12.0, 2}, gdp::replicate_seed(3, i)));
  }
  std::vector<double> edges;
  for (int b = 0; b <= 20; ++b) {
    edges.push_back(0.1 * b);
  }
  const auto fast = gdp::empirical_pair_correlation(pats, edges);
  const auto slow = brute_pcf(pats, edges);
  ASSERT_EQ(fast.size(), slow.size());
  for (std::size_t b = 0; b < slow.size(); ++b) {
    EXPECT_NEAR(fast[b].first, 0.5 * (edges[b] + edges[b + 1]), 1e-12);
    EXPECT_NEAR(fast[b].second, slow[b], 1e-12);
  }
}

TEST(PairCorrelation, PoissonIsFlat) {
  std::vector<gdp::PointPattern> pats;
  for (int i = 0; i < 40; ++i) {
    pats.push_back(gdp::sample_poisson(1.0, BoxWindow{20.0, 2}, gdp::replicate_seed(4, i)));
  }
  const auto pcf = gdp::empirical_pair_correlation(pats, {0.5, 1.0, 1.5, 2.0});
  for (const auto& [t, g] : pcf) {
    EXPECT_NEAR(g, 1.0, 0.05) << t;
  }
}

TEST(PairCorrelation, Errors) {
  std::vector<gdp::PointPattern> pats{gdp::sample_poisson(1.0, BoxWindow{4.0, 2}, 1)};
  EXPECT_THROW(gdp::empirical_pair_correlation(pats, {0.0}), std::invalid_argument);
  EXPECT_THROW(gdp::empirical_pair_correlation(pats, {0.0, 1.0, 0.5}), std::invalid_argument);
  EXPECT_THROW(gdp::empirical_pair_correlation(pats, {0.0, 3.0}), std::invalid_argument);
  EXPECT_THROW(gdp::empirical_pair_correlation({}, {0.0, 1.0}), std::invalid_argument);
}

TEST(ReplicateSeed, DistinctAndStable) {
  std::set<std::uint64_t> seeds;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    seeds.insert(gdp::replicate_seed(17, i));
  }
  EXPECT_EQ(seeds.size(), 1000u);
  EXPECT_EQ(gdp::replicate_seed(17, 3), gdp::replicate_seed(17, 3));
  EXPECT_NE(gdp::replicate_seed(17, 3), gdp::replicate_seed(18, 3));
}

} // namespace
