#include "gdp/sampler.hpp"

#include "gdp/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace gdp {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Frequencies of the real (cosine/sine) eigenfunctions selected by the Bernoulli step.
struct SelectedMode {
  Eigen::VectorXi k;
  bool cos_on = false;
  bool sin_on = false;
};

// Real orthonormal eigenfunctions on the torus, scaled by L^(d/2) so that the
// constant mode is 1 and the trigonometric ones are sqrt(2) cos / sqrt(2) sin.
class ModeEvaluator {
public:
  ModeEvaluator(const std::vector<SelectedMode>& modes, int dim, double side)
      : dim_(dim), side_(side), kmax_(dim, 0) {
    for (const auto& m : modes) {
      for (int j = 0; j < dim_; ++j) {
        kmax_[j] = std::max(kmax_[j], std::abs(m.k(j)));
      }
    }
    for (const auto& m : modes) {
      const bool zero = m.k.isZero();
      rank_ += zero ? 1 : (m.cos_on ? 1 : 0) + (m.sin_on ? 1 : 0);
      envelope_ += zero ? 1.0 : 2.0;
      kind_.push_back(zero ? kConst : static_cast<unsigned char>((m.cos_on ? kCos : 0) | (m.sin_on ? kSin : 0)));
      for (int j = 0; j < dim_; ++j) {
        offset_.push_back(m.k(j) + kmax_[j]);
      }
    }
    tables_.resize(dim_);
    for (int j = 0; j < dim_; ++j) {
      tables_[j].resize(2 * kmax_[j] + 1);
    }
  }

  Eigen::Index rank() const { return rank_; }
  // sup_x |v(x)|^2.
  double envelope() const { return envelope_; }

  // Writes v(x) into `out` and returns |v(x)|^2.
  double evaluate(const double* x, double* out) {
    for (int j = 0; j < dim_; ++j) {
      auto& table = tables_[j];
      const int kmax = kmax_[j];
      const double theta = kTwoPi * x[j] / side_;
      const std::complex<double> step = std::polar(1.0, theta);
      std::complex<double> z = 1.0;
      table[kmax] = 1.0;
      for (int t = 1; t <= kmax; ++t) {
        // Re-anchor periodically so the recurrence error stays at machine precision.
        z = (t % 16 == 0) ? std::polar(1.0, theta * t) : z * step;
        table[kmax + t] = z;
        table[kmax - t] = std::conj(z);
      }
    }
    double norm2 = 0.0;
    Eigen::Index row = 0;
    const int* off = offset_.data();
    for (unsigned char kind : kind_) {
      if (kind == kConst) {
        out[row++] = 1.0;
        norm2 += 1.0;
        off += dim_;
        continue;
      }
      std::complex<double> z = tables_[0][off[0]];
      for (int j = 1; j < dim_; ++j) {
        z *= tables_[j][off[j]];
      }
      off += dim_;
      if (kind & kCos) {
        const double c = std::numbers::sqrt2 * z.real();
        out[row++] = c;
        norm2 += c * c;
      }
      if (kind & kSin) {
        const double s = std::numbers::sqrt2 * z.imag();
        out[row++] = s;
        norm2 += s * s;
      }
    }
    return norm2;
  }

private:
  static constexpr unsigned char kCos = 1;
  static constexpr unsigned char kSin = 2;
  static constexpr unsigned char kConst = 4;

  int dim_;
  double side_;
  std::vector<int> kmax_;
  std::vector<unsigned char> kind_;
  std::vector<int> offset_;
  std::vector<std::vector<std::complex<double>>> tables_;
  Eigen::Index rank_ = 0;
  double envelope_ = 0.0;
};

bool is_canonical(const Eigen::VectorXi& k) {
  for (Eigen::Index j = 0; j < k.size(); ++j) {
    if (k(j) != 0) {
      return k(j) > 0;
    }
  }
  return true; // zero mode
}

// Sequential sampler for a projection DPP whose kernel is spanned by the
// evaluator's functions. The span of the accepted feature vectors is tracked
// implicitly through Householder reflectors in compact WY form (Q = I - Y T Y^T)
// in the coordinates of an orthonormal `base` of the still-free subspace. Once
// half of a stage's rank is consumed the free subspace is materialised as the
// new base, so per-candidate work shrinks with the remaining rank.
class ProjectionSampler {
public:
  ProjectionSampler(ModeEvaluator& eval, int dim, double side, std::mt19937_64& rng,
                    std::size_t budget)
      : eval_(eval), dim_(dim), side_(side), rng_(rng), budget_(budget), m_(eval.rank()),
        n_(m_) {}

  Eigen::MatrixXd run() {
    Eigen::MatrixXd points(m_, dim_);
    if (m_ == 0) {
      return points;
    }
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double envelope = eval_.envelope();
    Eigen::Index accepted = 0;
    std::size_t since_accept = 0;

    while (accepted < m_) {
      const Eigen::Index remaining = n_ - q_;
      // Acceptance rate among candidates that pass the |v(x)|^2 thinning.
      const double p = static_cast<double>(remaining) / static_cast<double>(m_);
      const auto batch = static_cast<Eigen::Index>(
          std::clamp(std::ceil(kTargetAccepts / p), 32.0, 256.0));

      // Candidates are uniform proposals thinned by |v(x)|^2 / envelope; the
      // survivors are then accepted with probability resid / |v(x)|^2.
      Eigen::MatrixXd cand(dim_, batch);
      Eigen::VectorXd coin(batch);
      Eigen::VectorXd norm2(batch);
      Eigen::MatrixXd features(m_, batch);
      for (Eigen::Index j = 0; j < batch;) {
        if (++since_accept > budget_) {
          throw std::runtime_error("sample_gdp: rejection budget exhausted");
        }
        for (int c = 0; c < dim_; ++c) {
          cand(c, j) = side_ * (unit(rng_) - 0.5);
        }
        const double u = unit(rng_);
        const double nv = eval_.evaluate(&cand(0, j), &features(0, j));
        if (u * envelope < nv) {
          norm2(j) = nv;
          coin(j) = unit(rng_);
          ++j;
        }
      }
      Eigen::MatrixXd g = base_identity_ ? std::move(features) : Eigen::MatrixXd(base_.transpose() * features);
      if (q_ > 0) {
        const auto y = y_.leftCols(q_);
        const Eigen::MatrixXd yg = y.transpose() * g;
        g.noalias() -= y * (t_.topLeftCorner(q_, q_).transpose().triangularView<Eigen::Lower>() * yg);
      }

      const Eigen::Index q_start = q_;
      for (Eigen::Index j = 0; j < batch && accepted < m_; ++j) {
        const Eigen::Index len = n_ - q_;
        const double resid = g.col(j).segment(q_, len).squaredNorm();
        if (!(coin(j) * norm2(j) < resid)) {
          continue;
        }
        points.row(accepted++) = cand.col(j).transpose();
        since_accept = 0;
        push_reflector(g.col(j).segment(q_, len));
        const Eigen::Index rest = batch - j - 1;
        if (rest > 0 && len > 1) {
          auto block = g.block(q_, j + 1, len, rest);
          const auto v = y_.col(q_).segment(q_, len);
          const Eigen::RowVectorXd w = v.transpose() * block;
          block.noalias() -= (tau_[q_] * v) * w;
        }
        ++q_;
      }
      merge_block(q_start);
      if (accepted < m_ && q_ > 0 && q_ >= n_ / 2) {
        rebase();
      }
    }
    return points;
  }

private:
  static constexpr double kTargetAccepts = 16.0;

  void ensure_capacity(Eigen::Index cols) {
    if (y_.cols() >= cols) {
      return;
    }
    const Eigen::Index cap = std::max<Eigen::Index>(cols, std::min<Eigen::Index>(n_, 2 * y_.cols() + 64));
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n_, cap);
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(cap, cap);
    if (q_ > 0) {
      y.leftCols(q_) = y_.leftCols(q_);
      t.topLeftCorner(q_, q_) = t_.topLeftCorner(q_, q_);
    }
    y_.swap(y);
    t_.swap(t);
  }

  // Reflector H = I - tau v v^T with v(0) = 1 mapping z onto a multiple of e_1.
  void push_reflector(const Eigen::Ref<const Eigen::VectorXd>& z) {
    ensure_capacity(q_ + 1);
    auto col = y_.col(q_);
    col.setZero();
    const Eigen::Index len = z.size();
    const double alpha = z(0);
    const double tail = len > 1 ? z.tail(len - 1).squaredNorm() : 0.0;
    double tau = 0.0;
    col(q_) = 1.0;
    if (tail > 0.0) {
      const double norm = std::sqrt(alpha * alpha + tail);
      const double beta = alpha >= 0.0 ? -norm : norm;
      tau = (beta - alpha) / beta;
      col.segment(q_ + 1, len - 1) = z.tail(len - 1) / (alpha - beta);
    }
    if (static_cast<Eigen::Index>(tau_.size()) <= q_) {
      tau_.resize(q_ + 1);
    }
    tau_[q_] = tau;
  }

  // Extends T with the reflectors q_start..q_-1 (forward, column-wise storage).
  void merge_block(Eigen::Index q_start) {
    const Eigen::Index k = q_ - q_start;
    if (k == 0) {
      return;
    }
    const auto y2 = y_.middleCols(q_start, k);
    Eigen::MatrixXd t2 = Eigen::MatrixXd::Zero(k, k);
    const Eigen::MatrixXd y2ty2 = y2.transpose() * y2;
    for (Eigen::Index l = 0; l < k; ++l) {
      const double tau = tau_[q_start + l];
      if (l > 0) {
        const Eigen::VectorXd tz =
            t2.topLeftCorner(l, l).triangularView<Eigen::Upper>() * y2ty2.col(l).head(l);
        t2.col(l).head(l) = -tau * tz;
      }
      t2(l, l) = tau;
    }
    t_.block(q_start, q_start, k, k) = t2;
    if (q_start > 0) {
      const auto y1 = y_.leftCols(q_start);
      const Eigen::MatrixXd y1ty2 = y1.transpose() * y2;
      const Eigen::MatrixXd left =
          t_.topLeftCorner(q_start, q_start).triangularView<Eigen::Upper>() * y1ty2;
      t_.block(0, q_start, q_start, k) = -(left * t2.triangularView<Eigen::Upper>());
    }
  }

  // Replaces the base by the orthonormal complement of the accepted directions.
  void rebase() {
    const Eigen::Index r = n_ - q_;
    const auto y = y_.leftCols(q_);
    // Q E = E - Y T (Y^T E), E selecting the trailing r coordinates.
    Eigen::MatrixXd qe = -(y * (t_.topLeftCorner(q_, q_).triangularView<Eigen::Upper>() *
                                y.bottomRows(r).transpose()));
    qe.bottomRows(r) += Eigen::MatrixXd::Identity(r, r);
    if (base_identity_) {
      base_ = std::move(qe);
      base_identity_ = false;
    } else {
      base_ = base_ * qe;
    }
    n_ = r;
    q_ = 0;
    y_.resize(0, 0);
    t_.resize(0, 0);
    tau_.clear();
  }

  ModeEvaluator& eval_;
  int dim_;
  double side_;
  std::mt19937_64& rng_;
  std::size_t budget_;
  Eigen::Index m_;
  Eigen::Index n_;
  Eigen::Index q_ = 0;
  bool base_identity_ = true;
  Eigen::MatrixXd base_;
  Eigen::MatrixXd y_;
  Eigen::MatrixXd t_;
  std::vector<double> tau_;
};

double wrap(double delta, double side) { return delta - side * std::nearbyint(delta / side); }

} // namespace

int window_dim(const Window& window) {
  return std::visit([](const auto& w) { return w.dim; }, window);
}

double window_volume(const Window& window) {
  if (const auto* box = std::get_if<BoxWindow>(&window)) {
    return std::pow(box->side, box->dim);
  }
  const auto& ball = std::get<BallWindow>(window);
  return count_expectation(ball.radius, ball.dim);
}

bool window_contains(const Window& window, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (const auto* box = std::get_if<BoxWindow>(&window)) {
    return (x.array().abs() <= 0.5 * box->side).all();
  }
  return x.norm() <= std::get<BallWindow>(window).radius;
}

double SpectralBasis::trace() const {
  double s = 0.0;
  for (double l : eigenvalues) {
    s += l;
  }
  return s;
}

double SpectralBasis::count_variance() const {
  double s = 0.0;
  for (double l : eigenvalues) {
    s += l * (1.0 - l);
  }
  return s;
}

SpectralBasis build_spectral_basis(const ScatteringMatrix& sigma, double side, double tol,
                                   std::size_t mode_cap) {
  if (!(tol > 0.0 && tol < 1.0)) {
    throw std::invalid_argument("build_spectral_basis: tol must lie in (0, 1)");
  }
  if (!(side > 0.0) || !std::isfinite(side)) {
    throw std::invalid_argument("build_spectral_basis: side must be positive");
  }
  const int d = sigma.dim();
  const double pi = std::numbers::pi;
  // Phi_hat(w) > tol  <=>  w^T Sigma w < log(1/tol) / (2 pi^2).
  const double qmax = -std::log(tol) / (2.0 * pi * pi);
  std::vector<int> bound(d);
  double box_count = 1.0;
  for (int j = 0; j < d; ++j) {
    bound[j] = static_cast<int>(std::floor(side * std::sqrt(qmax * sigma.inverse()(j, j))));
    box_count *= 2.0 * bound[j] + 1.0;
  }
  if (box_count > 50.0 * static_cast<double>(mode_cap) + 1e6) {
    throw std::runtime_error("build_spectral_basis: mode enumeration exceeds cap; window too large");
  }

  SpectralBasis basis;
  basis.side = side;
  basis.tol = tol;
  Eigen::VectorXi k(d);
  for (int j = 0; j < d; ++j) {
    k(j) = -bound[j];
  }
  Eigen::VectorXd omega(d);
  while (true) {
    omega = k.cast<double>() / side;
    const double lambda = std::exp(-2.0 * pi * pi * omega.dot(sigma.entries() * omega));
    if (lambda > tol) {
      if (basis.modes.size() >= mode_cap) {
        throw std::runtime_error("build_spectral_basis: mode count exceeds cap of " +
                                 std::to_string(mode_cap));
      }
      basis.modes.push_back(k);
      basis.eigenvalues.push_back(lambda);
    }
    int j = d - 1;
    while (j >= 0 && k(j) == bound[j]) {
      k(j) = -bound[j];
      --j;
    }
    if (j < 0) {
      break;
    }
    ++k(j);
  }
  return basis;
}

PointPattern sample_gdp(const SpectralBasis& basis, int dim, std::uint64_t seed,
                        const SamplerOptions& options) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<SelectedMode> selected;
  for (std::size_t i = 0; i < basis.modes.size(); ++i) {
    const auto& k = basis.modes[i];
    if (k.size() != dim) {
      throw std::invalid_argument("sample_gdp: basis dimension mismatch");
    }
    if (!is_canonical(k)) {
      continue; // -k carries the same eigenvalue; the pair yields a cos and a sin function
    }
    const double lambda = basis.eigenvalues[i];
    SelectedMode mode{k};
    if (k.isZero()) {
      mode.cos_on = unit(rng) < lambda;
    } else {
      mode.cos_on = unit(rng) < lambda;
      mode.sin_on = unit(rng) < lambda;
    }
    if (mode.cos_on || mode.sin_on) {
      selected.push_back(std::move(mode));
    }
  }

  ModeEvaluator eval(selected, dim, basis.side);
  ProjectionSampler sampler(eval, dim, basis.side, rng, options.iteration_budget);
  return PointPattern{sampler.run(), BoxWindow{basis.side, dim}};
}

PointPattern sample_gdp(const ScatteringMatrix& sigma, const BoxWindow& window,
                        std::uint64_t seed, const SamplerOptions& options) {
  if (window.dim != sigma.dim()) {
    throw std::invalid_argument("sample_gdp: window dimension does not match sigma");
  }
  const auto basis = build_spectral_basis(sigma, window.side, options.tol, options.mode_cap);
  return sample_gdp(basis, window.dim, seed, options);
}

PointPattern sample_poisson(double intensity, const BoxWindow& window, std::uint64_t seed) {
  if (!(intensity > 0.0) || !std::isfinite(intensity)) {
    throw std::invalid_argument("sample_poisson: intensity must be positive");
  }
  if (!(window.side > 0.0) || window.dim < 1) {
    throw std::invalid_argument("sample_poisson: invalid window");
  }
  std::mt19937_64 rng(seed);
  std::poisson_distribution<long long> count_dist(intensity * std::pow(window.side, window.dim));
  const long long n = count_dist(rng);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::MatrixXd pts(n, window.dim);
  for (long long i = 0; i < n; ++i) {
    for (int j = 0; j < window.dim; ++j) {
      pts(i, j) = window.side * (unit(rng) - 0.5);
    }
  }
  return PointPattern{std::move(pts), window};
}

PointPattern extract_ball(const PointPattern& pattern, double radius) {
  if (!(radius > 0.0)) {
    throw std::invalid_argument("extract_ball: radius must be positive");
  }
  const int d = pattern.dim();
  if (const auto* box = std::get_if<BoxWindow>(&pattern.window)) {
    if (2.0 * radius > box->side) {
      throw std::invalid_argument("extract_ball: ball does not fit in the box (2R > L)");
    }
  } else if (radius > std::get<BallWindow>(pattern.window).radius) {
    throw std::invalid_argument("extract_ball: ball exceeds the pattern's window");
  }
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < pattern.size(); ++i) {
    if (pattern.points.row(i).norm() <= radius) {
      keep.push_back(i);
    }
  }
  Eigen::MatrixXd pts(static_cast<Eigen::Index>(keep.size()), d);
  for (std::size_t i = 0; i < keep.size(); ++i) {
    pts.row(static_cast<Eigen::Index>(i)) = pattern.points.row(keep[i]);
  }
  return PointPattern{std::move(pts), BallWindow{radius, d}};
}

std::vector<std::pair<double, double>>
empirical_pair_correlation(const std::vector<PointPattern>& patterns,
                           const std::vector<double>& bin_edges) {
  if (patterns.empty()) {
    throw std::invalid_argument("empirical_pair_correlation: no patterns");
  }
  if (bin_edges.size() < 2 || bin_edges.front() < 0.0 ||
      !std::is_sorted(bin_edges.begin(), bin_edges.end(), std::less_equal<>{}) ||
      std::adjacent_find(bin_edges.begin(), bin_edges.end()) != bin_edges.end()) {
    throw std::invalid_argument("empirical_pair_correlation: bin edges must be increasing");
  }
  const std::size_t nbins = bin_edges.size() - 1;
  const double rmax = bin_edges.back();
  std::vector<double> counts(nbins, 0.0);
  double expected_scale = 0.0; // sum over patterns of torus volume

  for (const auto& pattern : patterns) {
    const auto* box = std::get_if<BoxWindow>(&pattern.window);
    if (box == nullptr) {
      throw std::invalid_argument("empirical_pair_correlation: patterns must live on a box torus");
    }
    const int d = box->dim;
    const double side = box->side;
    if (2.0 * rmax > side) {
      throw std::invalid_argument("empirical_pair_correlation: largest bin exceeds half the box");
    }
    expected_scale += std::pow(side, d);
    const Eigen::Index n = pattern.size();

    auto add_pair = [&](Eigen::Index i, Eigen::Index j) {
      double dist2 = 0.0;
      for (int c = 0; c < d; ++c) {
        const double delta = wrap(pattern.points(i, c) - pattern.points(j, c), side);
        dist2 += delta * delta;
      }
      const double dist = std::sqrt(dist2);
      if (dist >= rmax || dist < bin_edges.front()) {
        return;
      }
      const auto it = std::upper_bound(bin_edges.begin(), bin_edges.end(), dist);
      counts[static_cast<std::size_t>(it - bin_edges.begin()) - 1] += 1.0;
    };

    const int cells = static_cast<int>(std::floor(side / rmax));
    double total_cells = std::pow(static_cast<double>(cells), d);
    if (cells < 3 || total_cells > 1e7) {
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
          if (i != j) {
            add_pair(i, j);
          }
        }
      }
      continue;
    }
    auto cell_of = [&](Eigen::Index i, int c) {
      const int idx = static_cast<int>(std::floor((pattern.points(i, c) / side + 0.5) * cells));
      return std::clamp(idx, 0, cells - 1);
    };
    auto flat = [&](const std::vector<int>& idx) {
      long long f = 0;
      for (int c = 0; c < d; ++c) {
        f = f * cells + idx[c];
      }
      return f;
    };
    std::unordered_map<long long, std::vector<Eigen::Index>> grid;
    std::vector<int> idx(d);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (int c = 0; c < d; ++c) {
        idx[c] = cell_of(i, c);
      }
      grid[flat(idx)].push_back(i);
    }
    const long long offsets = static_cast<long long>(std::pow(3.0, d));
    std::vector<int> nb(d);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (int c = 0; c < d; ++c) {
        idx[c] = cell_of(i, c);
      }
      for (long long o = 0; o < offsets; ++o) {
        long long rem = o;
        for (int c = 0; c < d; ++c) {
          const int shift = static_cast<int>(rem % 3) - 1;
          rem /= 3;
          nb[c] = (idx[c] + shift + cells) % cells;
        }
        const auto it = grid.find(flat(nb));
        if (it == grid.end()) {
          continue;
        }
        for (Eigen::Index j : it->second) {
          if (j != i) {
            add_pair(i, j);
          }
        }
      }
    }
  }

  const int d = patterns.front().dim();
  std::vector<std::pair<double, double>> out;
  out.reserve(nbins);
  for (std::size_t b = 0; b < nbins; ++b) {
    const double lo = bin_edges[b];
    const double hi = bin_edges[b + 1];
    const double shell = unit_ball_volume(d) * (std::pow(hi, d) - std::pow(lo, d));
    out.emplace_back(0.5 * (lo + hi), counts[b] / (expected_scale * shell));
  }
  return out;
}

std::uint64_t replicate_seed(std::uint64_t base, std::uint64_t index) {
  // splitmix64 of a golden-ratio stride
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

} // namespace gdp
