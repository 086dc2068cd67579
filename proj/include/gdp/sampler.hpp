#pragma once

#include "gdp/core.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <utility>
#include <variant>
#include <vector>

namespace gdp {

/// [-L/2, L/2]^d, treated as a torus while sampling.
struct BoxWindow {
  double side = 1.0;
  int dim = 1;
};

/// Closed Euclidean ball B(R) centred at the origin.
struct BallWindow {
  double radius = 1.0;
  int dim = 1;
};

using Window = std::variant<BoxWindow, BallWindow>;

int window_dim(const Window& window);
double window_volume(const Window& window);
bool window_contains(const Window& window, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Finite point configuration together with its observation window. Points are
/// stored one per row.
struct PointPattern {
  Eigen::MatrixXd points;
  Window window;

  Eigen::Index size() const { return points.rows(); }
  int dim() const { return window_dim(window); }
};

/// Fourier modes k of the torus kernel, with eigenvalues Phi_hat(k / L) above tol.
struct SpectralBasis {
  std::vector<Eigen::VectorXi> modes;
  std::vector<double> eigenvalues;
  double side = 1.0;
  double tol = 1e-6;

  /// Expected number of points on the torus, sum of eigenvalues.
  double trace() const;
  /// Variance of the point count, sum of lambda (1 - lambda).
  double count_variance() const;
};

struct SamplerOptions {
  double tol = 1e-6;
  std::size_t mode_cap = 2'000'000;
  /// Rejection proposals allowed per accepted point.
  std::size_t iteration_budget = 1'000'000;
};

SpectralBasis build_spectral_basis(const ScatteringMatrix& sigma, double side, double tol,
                                   std::size_t mode_cap = SamplerOptions{}.mode_cap);

/// Draws a Gaussian DPP on the torus [-L/2, L/2]^d. The result is a pure
/// function of (sigma, window, seed, options).
PointPattern sample_gdp(const ScatteringMatrix& sigma, const BoxWindow& window,
                        std::uint64_t seed, const SamplerOptions& options = {});

/// Same, reusing a prebuilt basis.
PointPattern sample_gdp(const SpectralBasis& basis, int dim, std::uint64_t seed,
                        const SamplerOptions& options = {});

PointPattern sample_poisson(double intensity, const BoxWindow& window, std::uint64_t seed);

/// Points with |x| <= R. Requires 2R <= L.
PointPattern extract_ball(const PointPattern& pattern, double radius);

/// Radial pair-correlation estimate on the torus: for each bin, observed
/// ordered pair counts divided by the intensity-1 Poisson expectation. Returns
/// (bin centre, estimate) per bin.
std::vector<std::pair<double, double>>
empirical_pair_correlation(const std::vector<PointPattern>& patterns,
                           const std::vector<double>& bin_edges);

/// Seed of the i-th replicate derived from a base seed.
std::uint64_t replicate_seed(std::uint64_t base, std::uint64_t index);

} // namespace gdp
