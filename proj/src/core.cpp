#include "gdp/core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace gdp {

namespace {

constexpr double kSymmetryTol = 1e-12;
constexpr double kConditionFloor = 1e-12;
constexpr double kUnitNormTol = 1e-12;

double log_two_pi() { return std::log(2.0 * std::numbers::pi); }

void check_dim(const ScatteringMatrix& sigma, Eigen::Index n, const char* what) {
  if (n != sigma.dim()) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (expected " +
                                std::to_string(sigma.dim()) + ", got " +
                                std::to_string(n) + ")");
  }
}

// log Phi(x - y) for a (not necessarily normalized) sigma.
double log_kernel(const ScatteringMatrix& sigma, const Eigen::VectorXd& diff) {
  const double d = sigma.dim();
  return -0.5 * sigma.mahalanobis_sq(diff) - 0.5 * sigma.log_det() - 0.5 * d * log_two_pi();
}

} // namespace

ScatteringMatrix::ScatteringMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
  if (entries_.rows() == 0 || entries_.rows() != entries_.cols()) {
    throw std::invalid_argument("scattering matrix must be square and non-empty");
  }
  if (!entries_.allFinite()) {
    throw std::invalid_argument("scattering matrix has non-finite entries");
  }
  const double scale = entries_.cwiseAbs().maxCoeff();
  const double asym = (entries_ - entries_.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTol * std::max(scale, 1e-300)) {
    throw std::invalid_argument("scattering matrix is not symmetric");
  }
  entries_ = 0.5 * (entries_ + entries_.transpose());

  Eigen::LLT<Eigen::MatrixXd> llt(entries_);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("scattering matrix is not positive definite");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(entries_, Eigen::EigenvaluesOnly);
  eigenvalues_ = eig.eigenvalues();
  const double top = eigenvalues_(eigenvalues_.size() - 1);
  if (!(eigenvalues_(0) > kConditionFloor * top)) {
    throw std::invalid_argument("scattering matrix is numerically singular");
  }

  const auto& l = llt.matrixL();
  log_det_ = 2.0 * l.toDenseMatrix().diagonal().array().log().sum();
  inverse_ = llt.solve(Eigen::MatrixXd::Identity(dim(), dim()));
  inverse_ = 0.5 * (inverse_ + inverse_.transpose());

  const double target = -dim() * log_two_pi();
  // Relative tolerance on det, compared in log space: |det/target - 1| ~ |log diff|.
  normalized_ = std::abs(log_det_ - target) <= kNormalizationTol;
}

ScatteringMatrix ScatteringMatrix::isotropic(int dim, double variance) {
  if (dim < 1) {
    throw std::invalid_argument("dimension must be positive");
  }
  return ScatteringMatrix(variance * Eigen::MatrixXd::Identity(dim, dim));
}

double ScatteringMatrix::mahalanobis_sq(const Eigen::Ref<const Eigen::VectorXd>& diff) const {
  return diff.dot(inverse_ * diff);
}

double kernel_value(const ScatteringMatrix& sigma, const Point& x, const Point& y) {
  check_dim(sigma, x.size(), "kernel_value");
  check_dim(sigma, y.size(), "kernel_value");
  return std::exp(log_kernel(sigma, x - y));
}

double spectral_density(const ScatteringMatrix& sigma, const Eigen::VectorXd& omega) {
  check_dim(sigma, omega.size(), "spectral_density");
  const double pi = std::numbers::pi;
  return std::exp(-2.0 * pi * pi * omega.dot(sigma.entries() * omega));
}

ScatteringMatrix normalize_scattering(const ScatteringMatrix& sigma) {
  if (sigma.normalized()) {
    return sigma;
  }
  const double d = sigma.dim();
  const double log_c = (-d * log_two_pi() - sigma.log_det()) / d;
  return ScatteringMatrix(std::exp(log_c) * sigma.entries());
}

double rho_k(const ScatteringMatrix& sigma, std::span<const Point> points) {
  const auto k = static_cast<Eigen::Index>(points.size());
  if (k == 0) {
    throw std::invalid_argument("rho_k needs at least one point");
  }
  for (const auto& p : points) {
    check_dim(sigma, p.size(), "rho_k");
  }
  Eigen::MatrixXd gram(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    gram(i, i) = kernel_value(sigma, points[i], points[i]);
    for (Eigen::Index j = 0; j < i; ++j) {
      gram(i, j) = gram(j, i) = kernel_value(sigma, points[i], points[j]);
    }
  }
  // The kernel matrix is PSD, so the determinant is the product of the LDLT pivots;
  // negative values can only be rounding noise.
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  const double det = ldlt.vectorD().prod();
  return std::max(det, 0.0);
}

double truncated_pair_correlation(const ScatteringMatrix& sigma, const Point& x,
                                  const Point& y) {
  check_dim(sigma, x.size(), "truncated_pair_correlation");
  check_dim(sigma, y.size(), "truncated_pair_correlation");
  return -std::exp(2.0 * log_kernel(sigma, x - y));
}

ScatteringMatrix spiked_scattering(const SpikedParams& params, int dim) {
  if (dim < 2) {
    throw std::invalid_argument("spiked model needs d >= 2");
  }
  if (params.u.size() != dim) {
    throw std::invalid_argument("spike direction has wrong dimension");
  }
  if (std::abs(params.u.norm() - 1.0) > kUnitNormTol) {
    throw std::invalid_argument("spike direction must have unit norm");
  }
  if (!(params.lambda >= 0.0) || !std::isfinite(params.lambda)) {
    throw std::invalid_argument("spike strength must be a finite non-negative number");
  }
  const double top = 1.0 + params.lambda;
  const double rest = std::pow(top, -1.0 / (dim - 1));
  const Eigen::MatrixXd uu = params.u * params.u.transpose();
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(dim, dim);
  Eigen::MatrixXd m = (rest * (eye - uu) + top * uu) / (2.0 * std::numbers::pi);
  return ScatteringMatrix(std::move(m));
}

} // namespace gdp
