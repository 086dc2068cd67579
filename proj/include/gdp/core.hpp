#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace gdp {

using Point = Eigen::VectorXd;

/// Relative tolerance used for the normalized flag.
inline constexpr double kNormalizationTol = 1e-9;

/// Symmetric positive-definite scattering matrix of a Gaussian determinantal
/// process. Immutable; the inverse and log-determinant are cached at
/// construction since kernel evaluation sits in every inner loop.
class ScatteringMatrix {
public:
  /// Throws std::invalid_argument if the matrix is not square, not symmetric
  /// to 1e-12 relative, or not positive definite (smallest eigenvalue must
  /// exceed 1e-12 times the largest).
  explicit ScatteringMatrix(Eigen::MatrixXd entries);

  /// sigma^2 * I_d.
  static ScatteringMatrix isotropic(int dim, double variance);

  int dim() const { return static_cast<int>(entries_.rows()); }
  const Eigen::MatrixXd& entries() const { return entries_; }
  const Eigen::MatrixXd& inverse() const { return inverse_; }
  double log_det() const { return log_det_; }
  double trace() const { return entries_.trace(); }
  /// Largest eigenvalue.
  double op_norm() const { return eigenvalues_(eigenvalues_.size() - 1); }
  /// Ascending.
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }

  /// det = (2*pi)^-d, i.e. unit point density.
  bool normalized() const { return normalized_; }

  /// (x - y)^T Sigma^-1 (x - y).
  double mahalanobis_sq(const Eigen::Ref<const Eigen::VectorXd>& diff) const;

private:
  Eigen::MatrixXd entries_;
  Eigen::MatrixXd inverse_;
  Eigen::VectorXd eigenvalues_;
  double log_det_ = 0.0;
  bool normalized_ = false;
};

/// Strength and direction of a rank-one spike.
struct SpikedParams {
  double lambda = 0.0;
  Eigen::VectorXd u;
};

/// Gaussian density Phi(x - y) with covariance sigma.
double kernel_value(const ScatteringMatrix& sigma, const Point& x, const Point& y);

/// Fourier transform of the kernel profile, exp(-2 pi^2 w^T Sigma w).
double spectral_density(const ScatteringMatrix& sigma, const Eigen::VectorXd& omega);

/// Rescales sigma by a scalar so that det = (2*pi)^-d.
ScatteringMatrix normalize_scattering(const ScatteringMatrix& sigma);

/// k-point correlation det[K(x_i, x_j)].
double rho_k(const ScatteringMatrix& sigma, std::span<const Point> points);

/// rho_2(x, y) - rho_1(x) rho_1(y) = -K(x, y)^2.
double truncated_pair_correlation(const ScatteringMatrix& sigma, const Point& x,
                                  const Point& y);

/// (2 pi) Sigma = (1+lambda)^(-1/(d-1)) (I - u u^T) + (1+lambda) u u^T.
/// Requires d >= 2 and |u| = 1 to 1e-12.
ScatteringMatrix spiked_scattering(const SpikedParams& params, int dim);

} // namespace gdp
