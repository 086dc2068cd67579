#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace gdp {

/// Tabular data, one observation per row. `labels` keeps the raw label strings
/// (empty when the file has no label column); `binary_labels` is filled when a
/// positive label was chosen (1 for that label, 0 otherwise).
struct Dataset {
  Eigen::MatrixXd features;
  std::vector<std::string> feature_names;
  std::vector<std::string> labels;
  std::optional<std::vector<int>> binary_labels;

  Eigen::Index size() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }
};

enum class Method { dpp, pca };

/// Unset r selects all_pairs (r = 1 + max pairwise distance). Unset R scales the
/// pair sum by 1/N; a set R uses 1/|B(R - r)| and requires R > r.
struct DppOptions {
  std::optional<double> r;
  std::optional<double> R;
  bool standardize = false;
};

/// eigvals are descending. For the DPP embedding they are the eigenvalues of
/// the scaled pair-sum term, whose ordering matches the singular values of the
/// estimate (the pair term carries all direction information; the identity
/// term only shifts). `log_identity_coef` is log(|B(1)| r^(d+2)/(d+2)), kept in
/// log form because it overflows for large r and d.
struct ProjectionResult {
  Eigen::MatrixXd coords;
  Eigen::VectorXd eigvals;
  Eigen::MatrixXd eigvecs;
  Method method = Method::dpp;
  double r_used = 0.0;
  double log_identity_coef = 0.0;
  double pair_scale = 0.0;
};

struct RocCurve {
  /// thresholds[0] is +inf (empty selection); the curve passes through (0,0) and (1,1).
  std::vector<double> thresholds;
  std::vector<double> fpr;
  std::vector<double> tpr;
  double auc = 0.0;
};

/// Sum over ordered pairs i != j with |x_i - x_j| < r of (x_i - x_j)(x_i - x_j)^T,
/// accumulated in ascending row order. Infinite r includes every pair.
Eigen::MatrixXd pair_outer_sum(const Eigen::MatrixXd& points, double r);

ProjectionResult dpp_embed(const Dataset& data, int k, const DppOptions& options = {});

ProjectionResult pca_embed(const Dataset& data, int k, bool center = true, bool scale = true);

/// Negated coordinates of one component.
std::vector<double> risk_scores(const Eigen::MatrixXd& coords, int component);

/// Labels are 0/1 with 1 the positive class; higher scores rank as more positive.
RocCurve roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

std::vector<std::pair<int, double>> scree(const Eigen::VectorXd& eigvals);

/// Columns rescaled to zero mean and unit sample standard deviation (N - 1).
Eigen::MatrixXd standardize_columns(const Eigen::MatrixXd& x);

/// Flips each column so its largest-magnitude entry is positive (first index on ties).
void fix_signs(Eigen::MatrixXd& vecs);

} // namespace gdp
