#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

#include <Eigen/Dense>

#include "semibvm/model.hpp"
#include "semibvm/rng.hpp"

namespace semibvm {

// Nuisance prior: a random polynomial sum_{i<=k} Z_i t^i / i! plus k-fold
// integrated Brownian motion, multiplied by `scale` and observed on a uniform
// grid of `grid_size` points. Setting holder_alpha/holder_bound conditions the
// prior on sup|eta| + [eta]_alpha < M (grid surrogate), sampled by rejection.
struct GpPriorSpec {
  int k = 1;
  std::size_t grid_size = 50;
  double scale = 1.0;
  std::optional<double> holder_alpha;
  std::optional<double> holder_bound;
  std::size_t max_attempts = 100000;

  bool conditioned() const { return holder_bound.has_value(); }
  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

/// Covariance of the k-times integrated Brownian motion started at random:
///   sum_{i=0}^{k} (s t)^i / (i!)^2 + int_0^{min(s,t)} (s-u)^k (t-u)^k / (k!)^2 du,
/// evaluated in closed form. Throws std::domain_error for s or t outside [0,1].
double kibm_kernel(double s, double t, int k);

class PriorCovariance {
 public:
  explicit PriorCovariance(Eigen::MatrixXd matrix);

  const Eigen::MatrixXd& matrix() const { return matrix_; }
  std::size_t size() const { return static_cast<std::size_t>(matrix_.rows()); }

 private:
  Eigen::MatrixXd matrix_;
};

/// scale^2 kibm_kernel(g_i, g_j, k) on the uniform grid.
PriorCovariance prior_covariance(const GpPriorSpec& spec);

// Lower Cholesky factor of A + jitter I. Jitter starts at 1e-12 trace/m and
// grows by 10x up to 1e-6 trace/m; beyond that NumericError is thrown.
struct CholeskyFactor {
  Eigen::MatrixXd lower;
  double jitter = 0.0;
};

CholeskyFactor jittered_cholesky(const Eigen::MatrixXd& a);

// Discretized prior with its factor cached, for repeated path draws.
class GpPrior {
 public:
  explicit GpPrior(GpPriorSpec spec);

  const GpPriorSpec& spec() const { return spec_; }
  const PriorCovariance& covariance() const { return covariance_; }
  const CholeskyFactor& factor() const { return factor_; }

  /// Unconditioned draw L xi.
  NuisanceFunction draw_unconditioned(Rng& rng) const;
  /// Draw honoring the Holder conditioning, if any.
  NuisanceFunction draw(Rng& rng) const;

 private:
  GpPriorSpec spec_;
  PriorCovariance covariance_;
  CholeskyFactor factor_;
};

NuisanceFunction sample_prior_path(const GpPriorSpec& spec, std::uint64_t seed);

/// max_{i != j} |eta(g_i) - eta(g_j)| / |g_i - g_j|^alpha over grid pairs.
double holder_seminorm(const NuisanceFunction& eta, double alpha);

/// sup|eta| + holder_seminorm(eta, alpha) < bound.
bool within_holder_ball(const NuisanceFunction& eta, double alpha, double bound);

}  // namespace semibvm
