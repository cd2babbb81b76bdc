#include "semibvm/gp_prior.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "semibvm/errors.hpp"

namespace semibvm {

void GpPriorSpec::validate() const {
  if (k < 0) throw std::invalid_argument("GpPriorSpec: k must be >= 0");
  if (grid_size < 2) throw std::invalid_argument("GpPriorSpec: grid_size must be >= 2");
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw std::invalid_argument("GpPriorSpec: scale must be positive and finite");
  }
  if (holder_alpha && !(*holder_alpha > 0.5 && *holder_alpha <= 1.0)) {
    throw std::invalid_argument("GpPriorSpec: holder_alpha must lie in (1/2, 1]");
  }
  if (holder_bound) {
    if (!holder_alpha) throw std::invalid_argument("GpPriorSpec: holder_bound needs holder_alpha");
    if (!(*holder_bound > 0.0)) throw std::invalid_argument("GpPriorSpec: holder_bound must be > 0");
  }
  if (max_attempts == 0) throw std::invalid_argument("GpPriorSpec: max_attempts must be >= 1");
}

double kibm_kernel(double s, double t, int k) {
  if (!(s >= 0.0 && s <= 1.0 && t >= 0.0 && t <= 1.0)) {
    throw std::domain_error("kibm_kernel: arguments must lie in [0,1]");
  }
  if (k < 0) throw std::domain_error("kibm_kernel: k must be >= 0");

  // Random polynomial start: sum_i (s t)^i / (i!)^2.
  double poly = 0.0;
  double term = 1.0;
  for (int i = 0; i <= k; ++i) {
    if (i > 0) term *= s * t / (static_cast<double>(i) * static_cast<double>(i));
    poly += term;
  }

  // With a = min, d = max - min and w = a - u:
  //   int_0^a w^k (w + d)^k dw = sum_j C(k,j) d^{k-j} a^{k+j+1} / (k+j+1).
  const double a = std::min(s, t);
  const double d = std::max(s, t) - a;
  double integral = 0.0;
  double binom = 1.0;
  for (int j = 0; j <= k; ++j) {
    if (j > 0) binom *= static_cast<double>(k - j + 1) / static_cast<double>(j);
    integral += binom * std::pow(d, k - j) * std::pow(a, k + j + 1) / static_cast<double>(k + j + 1);
  }
  double factorial = 1.0;
  for (int i = 2; i <= k; ++i) factorial *= static_cast<double>(i);
  return poly + integral / (factorial * factorial);
}

PriorCovariance::PriorCovariance(Eigen::MatrixXd matrix) : matrix_(std::move(matrix)) {
  if (matrix_.rows() != matrix_.cols()) throw std::invalid_argument("PriorCovariance: not square");
}

PriorCovariance prior_covariance(const GpPriorSpec& spec) {
  spec.validate();
  const auto m = static_cast<Eigen::Index>(spec.grid_size);
  const double last = static_cast<double>(spec.grid_size - 1);
  const double s2 = spec.scale * spec.scale;
  Eigen::MatrixXd c(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double value =
          s2 * kibm_kernel(static_cast<double>(i) / last, static_cast<double>(j) / last, spec.k);
      c(i, j) = value;
      c(j, i) = value;
    }
  }
  if (!c.allFinite()) throw NumericError("prior_covariance: non-finite entries (scale too large)");
  return PriorCovariance(std::move(c));
}

CholeskyFactor jittered_cholesky(const Eigen::MatrixXd& a) {
  const auto m = a.rows();
  if (!a.allFinite()) throw NumericError("jittered_cholesky: non-finite matrix");
  const double base = a.trace() / static_cast<double>(m);
  for (double rel = 1e-12; rel <= 1e-6 * (1.0 + 1e-9); rel *= 10.0) {
    const double jitter = rel * base;
    Eigen::MatrixXd shifted = a;
    shifted.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    if (llt.info() == Eigen::Success) {
      Eigen::MatrixXd lower = llt.matrixL();
      return {std::move(lower), jitter};
    }
  }
  std::ostringstream msg;
  msg << "jittered_cholesky: matrix of size " << m
      << " is not positive definite even with jitter 1e-6 trace/m";
  throw NumericError(msg.str());
}

GpPrior::GpPrior(GpPriorSpec spec)
    : spec_(std::move(spec)),
      covariance_(prior_covariance(spec_)),
      factor_(jittered_cholesky(covariance_.matrix())) {}

NuisanceFunction GpPrior::draw_unconditioned(Rng& rng) const {
  const auto m = static_cast<Eigen::Index>(spec_.grid_size);
  Eigen::VectorXd xi(m);
  for (Eigen::Index i = 0; i < m; ++i) xi[i] = rng.normal();
  const Eigen::VectorXd path = factor_.lower * xi;
  return NuisanceFunction(std::vector<double>(path.data(), path.data() + m));
}

NuisanceFunction GpPrior::draw(Rng& rng) const {
  if (!spec_.conditioned()) return draw_unconditioned(rng);
  for (std::size_t attempt = 0; attempt < spec_.max_attempts; ++attempt) {
    NuisanceFunction path = draw_unconditioned(rng);
    if (within_holder_ball(path, *spec_.holder_alpha, *spec_.holder_bound)) return path;
  }
  std::ostringstream msg;
  msg << "sample_prior_path: no path with sup + Holder(" << *spec_.holder_alpha
      << ") seminorm below " << *spec_.holder_bound << " in " << spec_.max_attempts
      << " attempts";
  throw NumericError(msg.str());
}

NuisanceFunction sample_prior_path(const GpPriorSpec& spec, std::uint64_t seed) {
  GpPrior prior(spec);
  Rng rng(seed);
  return prior.draw(rng);
}

double holder_seminorm(const NuisanceFunction& eta, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::domain_error("holder_seminorm: alpha in (0,1]");
  const auto values = eta.values();
  const std::size_t m = values.size();
  const double step = 1.0 / static_cast<double>(m - 1);
  double best = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const double dist = std::pow(static_cast<double>(j - i) * step, alpha);
      best = std::max(best, std::abs(values[j] - values[i]) / dist);
    }
  }
  return best;
}

bool within_holder_ball(const NuisanceFunction& eta, double alpha, double bound) {
  return eta.sup_norm() + holder_seminorm(eta, alpha) < bound;
}

}  // namespace semibvm
