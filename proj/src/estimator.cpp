#include "gdp/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace gdp {

namespace {

// Largest 3^d neighbour sweep we bother with before falling back to brute force.
constexpr double kMaxGridOffsets = 729.0;

double window_radius_or(const PointPattern& pattern, const std::optional<double>& R) {
  if (const auto* box = std::get_if<BoxWindow>(&pattern.window)) {
    const double inscribed = 0.5 * box->side;
    const double radius = R.value_or(inscribed);
    if (radius > inscribed) {
      throw std::invalid_argument("estimator: B(R) does not fit in the box window");
    }
    return radius;
  }
  const double own = std::get<BallWindow>(pattern.window).radius;
  const double radius = R.value_or(own);
  if (radius > own) {
    throw std::invalid_argument("estimator: B(R) exceeds the pattern's ball window");
  }
  return radius;
}

// Points of the pattern inside B(R), rows in lexicographic order so the result
// does not depend on input order.
Eigen::MatrixXd canonical_points(const PointPattern& pattern, double R) {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < pattern.size(); ++i) {
    if (pattern.points.row(i).norm() <= R) {
      keep.push_back(i);
    }
  }
  const auto& p = pattern.points;
  std::sort(keep.begin(), keep.end(), [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index c = 0; c < p.cols(); ++c) {
      if (p(a, c) != p(b, c)) {
        return p(a, c) < p(b, c);
      }
    }
    return a < b;
  });
  Eigen::MatrixXd out(static_cast<Eigen::Index>(keep.size()), p.cols());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = p.row(keep[i]);
  }
  return out;
}

std::vector<Eigen::Index> inner_set(const Eigen::MatrixXd& points, double r, double R) {
  std::vector<Eigen::Index> inner;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    if (points.row(i).norm() < R - r) {
      inner.push_back(i);
    }
  }
  return inner;
}

EstimateResult estimate_fixed(const Eigen::MatrixXd& points, double r, double R) {
  if (!(r > 0.0)) {
    throw std::invalid_argument("estimator: cut-off r must be positive");
  }
  if (r >= R) {
    throw std::invalid_argument("estimator: cut-off r must be smaller than R");
  }
  const auto d = static_cast<int>(points.cols());
  const auto index = build_neighborhoods(points, r, R);

  Eigen::MatrixXd pair_sum = Eigen::MatrixXd::Zero(d, d);
  std::size_t pairs = 0;
  Eigen::VectorXd diff(d);
  for (Eigen::Index i : index.inner) {
    for (Eigen::Index j : index.neighbors[static_cast<std::size_t>(i)]) {
      diff = points.row(i) - points.row(j);
      pair_sum.selfadjointView<Eigen::Lower>().rankUpdate(diff);
      ++pairs;
    }
  }
  pair_sum = pair_sum.selfadjointView<Eigen::Lower>();

  const double identity_coef = unit_ball_volume(d) * std::pow(r, d + 2) / (d + 2);
  EstimateResult res;
  res.sigma_hat = identity_coef * Eigen::MatrixXd::Identity(d, d) -
                  pair_sum / count_expectation(R - r, d);
  res.N = points.rows();
  res.n = count_expectation(R, d);
  res.r_used = r;
  res.R_used = R;
  res.pair_count = pairs;
  return res;
}

double auto_cutoff(const Eigen::MatrixXd& points, double R, double C0) {
  const auto d = static_cast<int>(points.cols());
  const double n = count_expectation(R, d);
  const double target = default_cutoff(n, d, C0);
  const auto pilot = estimate_fixed(points, 0.25 * R, R);
  const double trace = std::max(pilot.sigma_hat.trace(), 0.0);
  const double lo = std::sqrt(static_cast<double>(d)) * std::max(1.0, std::sqrt(2.5 * trace));
  const double hi = 0.5 * R;
  // The R/2 ceiling is binding when the pilot trace would push the floor past it.
  return std::min(std::max(target, lo), hi);
}

} // namespace

double unit_ball_volume(int d) {
  if (d < 1) {
    throw std::invalid_argument("unit_ball_volume: d must be positive");
  }
  const double half = 0.5 * d;
  return std::exp(half * std::log(std::numbers::pi) - std::lgamma(half + 1.0));
}

double count_expectation(double R, int d) {
  if (!(R >= 0.0)) {
    throw std::invalid_argument("count_expectation: R must be non-negative");
  }
  return unit_ball_volume(d) * std::pow(R, d);
}

double bernstein_tail(double eps, double R, int d) {
  if (!(eps > 0.0) || !(R > 0.0)) {
    throw std::invalid_argument("bernstein_tail: eps and R must be positive");
  }
  return 2.0 * std::exp(-3.0 * eps * eps / (6.0 + 2.0 * eps) * count_expectation(R, d));
}

double default_cutoff(double n, int d, double C0) {
  if (!(n > 1.0)) {
    throw std::invalid_argument("default_cutoff: n must exceed 1");
  }
  if (d < 1 || !(C0 > 0.0)) {
    throw std::invalid_argument("default_cutoff: d and C0 must be positive");
  }
  return C0 * std::sqrt(d * std::log(n));
}

NeighborIndex build_neighborhoods_brute(const Eigen::MatrixXd& points, double r, double R) {
  if (r >= R) {
    throw std::invalid_argument("build_neighborhoods: r must be smaller than R");
  }
  NeighborIndex index;
  index.inner = inner_set(points, r, R);
  const Eigen::Index n = points.rows();
  index.neighbors.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j && (points.row(i) - points.row(j)).norm() < r) {
        index.neighbors[static_cast<std::size_t>(i)].push_back(j);
      }
    }
  }
  return index;
}

NeighborIndex build_neighborhoods(const Eigen::MatrixXd& points, double r, double R) {
  if (r >= R) {
    throw std::invalid_argument("build_neighborhoods: r must be smaller than R");
  }
  if (!(r > 0.0)) {
    throw std::invalid_argument("build_neighborhoods: r must be positive");
  }
  const Eigen::Index n = points.rows();
  const auto d = static_cast<int>(points.cols());
  if (n == 0 || std::pow(3.0, d) > std::min<double>(kMaxGridOffsets, static_cast<double>(n))) {
    return build_neighborhoods_brute(points, r, R);
  }

  NeighborIndex index;
  index.inner = inner_set(points, r, R);
  index.neighbors.resize(static_cast<std::size_t>(n));

  const Eigen::RowVectorXd lo = points.colwise().minCoeff();
  const Eigen::RowVectorXd hi = points.colwise().maxCoeff();
  std::vector<long long> extent(d);
  for (int c = 0; c < d; ++c) {
    extent[c] = static_cast<long long>(std::floor((hi(c) - lo(c)) / r)) + 1;
  }
  auto cell = [&](Eigen::Index i, int c) {
    return std::min(static_cast<long long>(std::floor((points(i, c) - lo(c)) / r)), extent[c] - 1);
  };
  auto flatten = [&](const std::vector<long long>& idx) {
    long long f = 0;
    for (int c = 0; c < d; ++c) {
      f = f * extent[c] + idx[c];
    }
    return f;
  };
  std::unordered_map<long long, std::vector<Eigen::Index>> grid;
  std::vector<long long> idx(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int c = 0; c < d; ++c) {
      idx[c] = cell(i, c);
    }
    grid[flatten(idx)].push_back(i);
  }

  const auto offsets = static_cast<long long>(std::pow(3.0, d));
  std::vector<long long> nb(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int c = 0; c < d; ++c) {
      idx[c] = cell(i, c);
    }
    auto& out = index.neighbors[static_cast<std::size_t>(i)];
    for (long long o = 0; o < offsets; ++o) {
      long long rem = o;
      bool valid = true;
      for (int c = 0; c < d; ++c) {
        nb[c] = idx[c] + rem % 3 - 1;
        rem /= 3;
        valid = valid && nb[c] >= 0 && nb[c] < extent[c];
      }
      if (!valid) {
        continue;
      }
      const auto it = grid.find(flatten(nb));
      if (it == grid.end()) {
        continue;
      }
      for (Eigen::Index j : it->second) {
        if (j != i && (points.row(i) - points.row(j)).norm() < r) {
          out.push_back(j);
        }
      }
    }
    std::sort(out.begin(), out.end());
  }
  return index;
}

NeighborIndex build_neighborhoods(const PointPattern& pattern, double r, double R) {
  return build_neighborhoods(pattern.points, r, R);
}

double resolve_cutoff(const PointPattern& pattern, const EstimatorConfig& config) {
  const double R = window_radius_or(pattern, config.R);
  if (config.r) {
    return *config.r;
  }
  return auto_cutoff(canonical_points(pattern, R), R, config.C0);
}

EstimateResult estimate_scattering(const PointPattern& pattern, const EstimatorConfig& config) {
  const double R = window_radius_or(pattern, config.R);
  const Eigen::MatrixXd points = canonical_points(pattern, R);
  const double r = config.r ? *config.r : auto_cutoff(points, R, config.C0);
  return estimate_fixed(points, r, R);
}

std::optional<double> bias_bound(const ScatteringMatrix& sigma, double r) {
  const double tr = sigma.trace();
  if (r < std::sqrt(2.5 * tr)) {
    return std::nullopt;
  }
  const double op = sigma.op_norm();
  return 9.0 * sigma.dim() * op * op * std::exp((4.0 * tr - 2.0 * r * r) / (3.0 * op));
}

std::optional<double> variance_bound(double r, int d, double n, double C) {
  if (!(n > 0.0) || d < 1) {
    throw std::invalid_argument("variance_bound: n and d must be positive");
  }
  if (r < std::sqrt(static_cast<double>(d))) {
    return std::nullopt;
  }
  const double dd = d;
  return dd * dd * std::pow(C / dd, dd) * std::pow(r, 2.0 * dd + 4.0) / n;
}

double risk_rate(double n, int d, double c) {
  if (!(n > 1.0)) {
    throw std::invalid_argument("risk_rate: n must exceed 1");
  }
  const double dd = d;
  return dd * dd * std::pow(c * std::sqrt(std::log(n)), dd + 1.0) / std::sqrt(n);
}

} // namespace gdp
