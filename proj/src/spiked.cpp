#include "gdp/spiked.hpp"

#include "gdp/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace gdp {

namespace {

constexpr double kSymmetryTol = 1e-10;
constexpr double kUnitTol = 1e-9;
// Relative spread under which two top eigenvalues are treated as tied.
constexpr double kTieTol = 1e-12;

Eigen::MatrixXd checked_symmetric(const Eigen::MatrixXd& m, const char* what) {
  if (m.rows() == 0 || m.rows() != m.cols()) {
    throw std::invalid_argument(std::string(what) + ": matrix must be square and non-empty");
  }
  if (!m.allFinite()) {
    throw std::invalid_argument(std::string(what) + ": matrix has non-finite entries");
  }
  const double scale = std::max(m.cwiseAbs().maxCoeff(), 1e-300);
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol * scale) {
    throw std::invalid_argument(std::string(what) + ": matrix is not symmetric");
  }
  return 0.5 * (m + m.transpose());
}

} // namespace

double detection_statistic(const Eigen::MatrixXd& sigma_hat) {
  const Eigen::MatrixXd s = checked_symmetric(sigma_hat, "detection_test");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s, Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();
  const double op = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
  return 2.0 * std::numbers::pi * op;
}

DetectionResult detection_test_with_rate(const Eigen::MatrixXd& sigma_hat, double rate, double t) {
  if (!(t > 0.0)) {
    throw std::invalid_argument("detection_test: t must be positive");
  }
  if (!std::isfinite(rate)) {
    throw std::invalid_argument("detection_test: rate must be finite");
  }
  DetectionResult res;
  res.statistic = detection_statistic(sigma_hat);
  res.t = t;
  res.rate = rate;
  res.threshold = 1.0 + t * rate;
  res.reject = res.statistic > res.threshold;
  return res;
}

DetectionResult detection_test(const Eigen::MatrixXd& sigma_hat, double n, int d, double t,
                               double c) {
  if (sigma_hat.rows() != d) {
    throw std::invalid_argument("detection_test: dimension mismatch");
  }
  return detection_test_with_rate(sigma_hat, risk_rate(n, d, c), t);
}

double empirical_quantile(std::vector<double> values, double p) {
  if (values.empty()) {
    throw std::invalid_argument("empirical_quantile: no values");
  }
  if (!(p > 0.0 && p <= 1.0)) {
    throw std::invalid_argument("empirical_quantile: p must lie in (0, 1]");
  }
  std::sort(values.begin(), values.end());
  const auto m = static_cast<double>(values.size());
  // Guard against p * m landing a hair above an integer through rounding.
  auto k = static_cast<std::size_t>(std::ceil(p * m - 1e-9));
  k = std::clamp<std::size_t>(k, 1, values.size());
  return values[k - 1];
}

NullCalibration calibrate_null(double n, int d, const CalibrationConfig& config) {
  if (!(n > 1.0) || d < 1) {
    throw std::invalid_argument("calibrate_null: need n > 1 and d >= 1");
  }
  if (!(config.delta > 0.0 && config.delta < 1.0)) {
    throw std::invalid_argument("calibrate_null: delta must lie in (0, 1)");
  }
  if (config.replicates == 0) {
    throw std::invalid_argument("calibrate_null: need at least one replicate");
  }
  NullCalibration null;
  null.delta = config.delta;
  null.dim = d;
  null.R = std::pow(n / unit_ball_volume(d), 1.0 / d);
  null.side = 2.0 * null.R;

  const auto sigma = ScatteringMatrix::isotropic(d, 1.0 / (2.0 * std::numbers::pi));
  const auto basis = build_spectral_basis(sigma, null.side, config.sampler.tol,
                                          config.sampler.mode_cap);
  EstimatorConfig est = config.estimator;
  est.R = null.R;
  null.statistics.assign(config.replicates, 0.0);
  const std::size_t threads = config.threads ? config.threads : default_thread_count();
  parallel_for(config.replicates, threads, [&](std::size_t i) {
    const auto pattern = sample_gdp(basis, d, replicate_seed(config.seed, i), config.sampler);
    null.statistics[i] = detection_statistic(estimate_scattering(pattern, est).sigma_hat);
  });
  null.quantile = empirical_quantile(null.statistics, 1.0 - config.delta);
  return null;
}

DetectionResult calibrated_test(const Eigen::MatrixXd& sigma_hat, const NullCalibration& null) {
  if (sigma_hat.rows() != null.dim) {
    throw std::invalid_argument("calibrated_test: dimension mismatch");
  }
  DetectionResult res;
  res.statistic = detection_statistic(sigma_hat);
  res.t = 1.0;
  res.rate = null.quantile - 1.0;
  res.threshold = null.quantile;
  res.reject = res.statistic > res.threshold;
  return res;
}

SpikeEstimate estimate_spike(const Eigen::MatrixXd& sigma_hat) {
  const Eigen::MatrixXd s = checked_symmetric(sigma_hat, "estimate_spike");
  const Eigen::Index d = s.rows();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
  if (eig.info() != Eigen::Success) {
    throw std::runtime_error("estimate_spike: eigensolver failed");
  }
  const auto& ev = eig.eigenvalues();
  const auto& vecs = eig.eigenvectors();
  const double top = ev(d - 1);
  const double tie = kTieTol * std::max(ev.cwiseAbs().maxCoeff(), 1e-300);

  Eigen::Index first = d - 1;
  while (first > 0 && top - ev(first - 1) <= tie) {
    --first;
  }
  const auto space = vecs.middleCols(first, d - first);

  Eigen::VectorXd u;
  if (space.cols() == 1) {
    u = space.col(0);
  } else {
    for (Eigen::Index c = 0; c < d; ++c) {
      // Projection of e_c onto the eigenspace.
      Eigen::VectorXd proj = space * space.row(c).transpose();
      if (proj.norm() > 1e-8) {
        u = proj.normalized();
        break;
      }
    }
  }
  for (Eigen::Index c = 0; c < d; ++c) {
    if (std::abs(u(c)) > 1e-14) {
      if (u(c) < 0.0) {
        u = -u;
      }
      break;
    }
  }

  SpikeEstimate res;
  res.u_hat = u;
  res.lambda_hat = 2.0 * std::numbers::pi * top - 1.0;
  res.gap = d > 1 ? std::max(top - ev(d - 2), 0.0) : 0.0;
  return res;
}

double sin_angle(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  if (u.size() != v.size()) {
    throw std::invalid_argument("sin_angle: dimension mismatch");
  }
  if (std::abs(u.norm() - 1.0) > kUnitTol || std::abs(v.norm() - 1.0) > kUnitTol) {
    throw std::invalid_argument("sin_angle: inputs must be unit vectors");
  }
  const double c = std::clamp(u.dot(v), -1.0, 1.0);
  return std::sqrt(std::max(0.0, 1.0 - c * c));
}

double davis_kahan_reference(double rate, double lambda) {
  if (!(lambda > 0.0)) {
    throw std::invalid_argument("davis_kahan_reference: lambda must be positive");
  }
  return rate / lambda;
}

} // namespace gdp
