#pragma once

#include "gdp/estimator.hpp"
#include "gdp/sampler.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace gdp {

/// reject <=> statistic > threshold, threshold = 1 + t * rate.
struct DetectionResult {
  double statistic = 0.0;
  double threshold = 0.0;
  bool reject = false;
  double t = 0.0;
  double rate = 0.0;
};

/// Leading eigenpair of an estimated scattering matrix. lambda_hat is not clamped.
struct SpikeEstimate {
  Eigen::VectorXd u_hat;
  double lambda_hat = 0.0;
  double gap = 0.0;
};

/// 2 pi times the largest eigenvalue magnitude of the symmetrized input.
double detection_statistic(const Eigen::MatrixXd& sigma_hat);

/// Analytic test with rate d^2 (c sqrt(log n))^(d+1) / sqrt(n).
DetectionResult detection_test(const Eigen::MatrixXd& sigma_hat, double n, int d, double t,
                               double c);

/// Same test with an externally supplied rate.
DetectionResult detection_test_with_rate(const Eigen::MatrixXd& sigma_hat, double rate, double t);

struct CalibrationConfig {
  double delta = 0.05;
  std::size_t replicates = 200;
  std::uint64_t seed = 1;
  EstimatorConfig estimator;
  SamplerOptions sampler;
  /// 0 selects default_thread_count().
  std::size_t threads = 0;
};

/// Null distribution of the statistic for an isotropic GDP observed on B(R)
/// with |B(R)| = n, simulated on the torus of side 2R.
struct NullCalibration {
  std::vector<double> statistics;
  double quantile = 0.0;
  double delta = 0.05;
  double R = 0.0;
  double side = 0.0;
  int dim = 0;
};

/// Smallest order statistic x_(k) with k/M >= p (inverse empirical CDF).
double empirical_quantile(std::vector<double> values, double p);

NullCalibration calibrate_null(double n, int d, const CalibrationConfig& config);

/// Rejects when the statistic exceeds the null 1 - delta quantile. Reported as
/// t = 1 with rate = quantile - 1 so that threshold = 1 + t * rate.
DetectionResult calibrated_test(const Eigen::MatrixXd& sigma_hat, const NullCalibration& null);

/// Leading unit eigenvector with the first nonzero coordinate positive. For a
/// repeated top eigenvalue the vector is the normalized projection of the first
/// standard basis vector with a nonzero projection onto the top eigenspace.
SpikeEstimate estimate_spike(const Eigen::MatrixXd& sigma_hat);

/// sqrt(1 - <u, v>^2); both inputs must be unit vectors to 1e-9.
double sin_angle(const Eigen::VectorXd& u, const Eigen::VectorXd& v);

/// rate / lambda.
double davis_kahan_reference(double rate, double lambda);

} // namespace gdp
