#include "gdp/dimred.hpp"

#include "gdp/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace gdp {

namespace {

void check_k(const Dataset& data, int k, const char* what) {
  if (data.size() < 2) {
    throw std::invalid_argument(std::string(what) + ": need at least two rows");
  }
  if (k < 1 || k > data.dim()) {
    throw std::invalid_argument(std::string(what) + ": k must lie in [1, d]");
  }
  if (!data.features.allFinite()) {
    throw std::invalid_argument(std::string(what) + ": features must be finite");
  }
}

// Eigen-decomposition of a symmetric matrix, descending, with the sign rule applied.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> descending_eigen(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  if (eig.info() != Eigen::Success) {
    throw std::runtime_error("eigendecomposition failed");
  }
  Eigen::VectorXd vals = eig.eigenvalues().reverse();
  Eigen::MatrixXd vecs = eig.eigenvectors().rowwise().reverse();
  fix_signs(vecs);
  return {vals, vecs};
}

double max_pairwise_distance(const Eigen::MatrixXd& x) {
  double best = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < x.rows(); ++j) {
      best = std::max(best, (x.row(i) - x.row(j)).squaredNorm());
    }
  }
  return std::sqrt(best);
}

} // namespace

void fix_signs(Eigen::MatrixXd& vecs) {
  for (Eigen::Index c = 0; c < vecs.cols(); ++c) {
    Eigen::Index arg = 0;
    for (Eigen::Index i = 1; i < vecs.rows(); ++i) {
      if (std::abs(vecs(i, c)) > std::abs(vecs(arg, c))) {
        arg = i;
      }
    }
    if (vecs(arg, c) < 0.0) {
      vecs.col(c) *= -1.0;
    }
  }
}

Eigen::MatrixXd standardize_columns(const Eigen::MatrixXd& x) {
  if (x.rows() < 2) {
    throw std::invalid_argument("standardize: need at least two rows");
  }
  const Eigen::RowVectorXd mean = x.colwise().mean();
  Eigen::MatrixXd z = x.rowwise() - mean;
  const Eigen::RowVectorXd sd =
      (z.colwise().squaredNorm() / static_cast<double>(x.rows() - 1)).cwiseSqrt();
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    if (!(sd(c) > 0.0)) {
      throw std::invalid_argument("standardize: column " + std::to_string(c) +
                                  " has zero variance");
    }
    z.col(c) /= sd(c);
  }
  return z;
}

Eigen::MatrixXd pair_outer_sum(const Eigen::MatrixXd& points, double r) {
  const Eigen::Index n = points.rows();
  const Eigen::Index d = points.cols();
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(d, d);
  const bool all = std::isinf(r);
  const double r2 = r * r;
  Eigen::MatrixXd diff(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    diff = points.rowwise() - points.row(i);
    if (!all) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (!(diff.row(j).squaredNorm() < r2)) {
          diff.row(j).setZero();
        }
      }
    }
    // Row i of diff is zero, so the self term drops out.
    sum.selfadjointView<Eigen::Lower>().rankUpdate(diff.transpose());
  }
  return sum.selfadjointView<Eigen::Lower>();
}

ProjectionResult dpp_embed(const Dataset& data, int k, const DppOptions& options) {
  check_k(data, k, "dpp_embed");
  const Eigen::MatrixXd x = options.standardize ? standardize_columns(data.features)
                                                : data.features;
  const auto d = static_cast<int>(x.cols());

  ProjectionResult res;
  res.method = Method::dpp;
  double r_for_sum = std::numeric_limits<double>::infinity();
  if (options.r) {
    if (!(*options.r > 0.0)) {
      throw std::invalid_argument("dpp_embed: r must be positive");
    }
    res.r_used = *options.r;
    r_for_sum = *options.r;
  } else {
    res.r_used = 1.0 + max_pairwise_distance(x);
  }
  if (options.R) {
    if (!(*options.R > res.r_used)) {
      throw std::invalid_argument("dpp_embed: R must exceed r");
    }
    res.pair_scale = 1.0 / count_expectation(*options.R - res.r_used, d);
  } else {
    res.pair_scale = 1.0 / static_cast<double>(x.rows());
  }
  res.log_identity_coef = std::log(unit_ball_volume(d)) + (d + 2) * std::log(res.r_used) -
                          std::log(static_cast<double>(d + 2));

  const Eigen::MatrixXd term = res.pair_scale * pair_outer_sum(x, r_for_sum);
  auto [vals, vecs] = descending_eigen(term);
  res.eigvals = vals;
  res.eigvecs = vecs.leftCols(k);
  res.coords = x * res.eigvecs;
  return res;
}

ProjectionResult pca_embed(const Dataset& data, int k, bool center, bool scale) {
  check_k(data, k, "pca_embed");
  const Eigen::RowVectorXd mean = data.features.colwise().mean();
  Eigen::MatrixXd z = data.features;
  if (center) {
    z = z.rowwise() - mean;
  }
  if (scale) {
    const Eigen::MatrixXd dev = data.features.rowwise() - mean;
    const Eigen::RowVectorXd sd =
        (dev.colwise().squaredNorm() / static_cast<double>(data.size() - 1)).cwiseSqrt();
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
      if (!(sd(c) > 0.0)) {
        throw std::invalid_argument("pca_embed: column " + std::to_string(c) +
                                    " has zero variance");
      }
      z.col(c) /= sd(c);
    }
  }
  const Eigen::MatrixXd centred = z.rowwise() - z.colwise().mean();
  const Eigen::MatrixXd cov = centred.transpose() * centred / static_cast<double>(z.rows() - 1);

  ProjectionResult res;
  res.method = Method::pca;
  auto [vals, vecs] = descending_eigen(cov);
  res.eigvals = vals;
  res.eigvecs = vecs.leftCols(k);
  res.coords = z * res.eigvecs;
  return res;
}

std::vector<double> risk_scores(const Eigen::MatrixXd& coords, int component) {
  if (component < 0 || component >= coords.cols()) {
    throw std::invalid_argument("risk_scores: component out of range");
  }
  std::vector<double> out(static_cast<std::size_t>(coords.rows()));
  for (Eigen::Index i = 0; i < coords.rows(); ++i) {
    out[static_cast<std::size_t>(i)] = -coords(i, component);
  }
  return out;
}

RocCurve roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("roc_auc: scores and labels differ in length");
  }
  std::size_t pos = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) {
      throw std::invalid_argument("roc_auc: labels must be 0 or 1");
    }
    if (!std::isfinite(scores[i])) {
      throw std::invalid_argument("roc_auc: scores must be finite");
    }
    pos += static_cast<std::size_t>(labels[i]);
  }
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) {
    throw std::invalid_argument("roc_auc: both classes must be present");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve roc;
  roc.thresholds.push_back(std::numeric_limits<double>::infinity());
  roc.fpr.push_back(0.0);
  roc.tpr.push_back(0.0);
  std::size_t tp = 0;
  std::size_t fp = 0;
  double area2 = 0.0; // twice the area in units of (pos * neg)
  for (std::size_t a = 0; a < order.size();) {
    const double s = scores[order[a]];
    std::size_t b = a;
    std::size_t gtp = 0;
    std::size_t gfp = 0;
    while (b < order.size() && scores[order[b]] == s) {
      (labels[order[b]] ? gtp : gfp) += 1;
      ++b;
    }
    // Trapezoid over the tie group: width gfp, heights tp and tp + gtp.
    area2 += static_cast<double>(gfp) * static_cast<double>(2 * tp + gtp);
    tp += gtp;
    fp += gfp;
    roc.thresholds.push_back(s);
    roc.fpr.push_back(static_cast<double>(fp) / static_cast<double>(neg));
    roc.tpr.push_back(static_cast<double>(tp) / static_cast<double>(pos));
    a = b;
  }
  roc.auc = area2 / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
  return roc;
}

std::vector<std::pair<int, double>> scree(const Eigen::VectorXd& eigvals) {
  if (eigvals.size() == 0) {
    throw std::invalid_argument("scree: no eigenvalues");
  }
  std::vector<std::pair<int, double>> out;
  out.reserve(static_cast<std::size_t>(eigvals.size()));
  for (Eigen::Index i = 0; i < eigvals.size(); ++i) {
    out.emplace_back(static_cast<int>(i) + 1, eigvals(i));
  }
  return out;
}

} // namespace gdp
