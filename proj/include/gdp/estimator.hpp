#pragma once

#include "gdp/core.hpp"
#include "gdp/sampler.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace gdp {

/// Cut-off and window radius for the scattering-matrix estimator. Unset `r`
/// selects the automatic cut-off; unset `R` uses the pattern's ball radius or
/// the largest ball inscribed in its box.
struct EstimatorConfig {
  std::optional<double> r;
  std::optional<double> R;
  double C0 = 1.0;
};

/// inner: points strictly inside B(R - r). neighbors[i]: sorted indices j != i
/// with |X_i - X_j| < r.
struct NeighborIndex {
  std::vector<Eigen::Index> inner;
  std::vector<std::vector<Eigen::Index>> neighbors;
};

struct EstimateResult {
  Eigen::MatrixXd sigma_hat;
  Eigen::Index N = 0;
  double n = 0.0;
  double r_used = 0.0;
  double R_used = 0.0;
  std::size_t pair_count = 0;
};

double unit_ball_volume(int d);

/// |B(1)| R^d.
double count_expectation(double R, int d);

/// Bernstein bound on P(|N/n - 1| >= eps); not clipped to [0, 1].
double bernstein_tail(double eps, double R, int d);

/// C0 sqrt(d log n); requires n > 1.
double default_cutoff(double n, int d, double C0);

/// Grid-accelerated neighbourhoods over the rows of `points`.
NeighborIndex build_neighborhoods(const Eigen::MatrixXd& points, double r, double R);
NeighborIndex build_neighborhoods(const PointPattern& pattern, double r, double R);

/// O(N^2) reference construction; same output as build_neighborhoods.
NeighborIndex build_neighborhoods_brute(const Eigen::MatrixXd& points, double r, double R);

/// Cut-off actually used for `pattern` under `config` (auto rule when r is unset).
double resolve_cutoff(const PointPattern& pattern, const EstimatorConfig& config);

EstimateResult estimate_scattering(const PointPattern& pattern, const EstimatorConfig& config);

/// Squared-Frobenius bias bound; nullopt when r < sqrt(5 Tr(Sigma) / 2).
std::optional<double> bias_bound(const ScatteringMatrix& sigma, double r);

/// d^2 (C/d)^d r^(2d+4) / n; nullopt when r < sqrt(d).
std::optional<double> variance_bound(double r, int d, double n, double C);

/// d^2 (c sqrt(log n))^(d+1) / sqrt(n); requires n > 1.
double risk_rate(double n, int d, double c);

} // namespace gdp
