#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>

#include <Eigen/Dense>

#include "semibvm/gp_prior.hpp"
#include "semibvm/model.hpp"
#include "semibvm/rng.hpp"
#include "semibvm/stats.hpp"

namespace semibvm {

/// theta_prior_var value selecting the flat (improper) prior on theta.
inline constexpr double kFlatThetaPrior = std::numeric_limits<double>::infinity();
inline constexpr double kDefaultThetaPriorVar = 10.0;

// The partial linear model written as a Bayesian linear model in whitened
// nuisance coordinates. With K + jitter = L L^T and eta = L z, z ~ N(0, I),
// the data satisfy y = theta u + B z + e where B = W L and W holds the
// linear-interpolation weights of the v_i onto the prior grid.
class WhitenedDesign {
 public:
  WhitenedDesign(const Dataset& ds, const GpPrior& prior);

  const Eigen::VectorXd& u() const { return u_; }
  const Eigen::VectorXd& y() const { return y_; }
  const Eigen::MatrixXd& basis() const { return basis_; }
  const Eigen::MatrixXd& factor() const { return factor_; }
  std::size_t observations() const { return static_cast<std::size_t>(y_.size()); }
  std::size_t grid_size() const { return static_cast<std::size_t>(factor_.rows()); }

 private:
  Eigen::VectorXd u_;
  Eigen::VectorXd y_;
  Eigen::MatrixXd basis_;
  Eigen::MatrixXd factor_;
};

// Exact posterior of (theta, eta(g_0), ..., eta(g_{m-1})); coordinate 0 is theta.
class JointGaussianPosterior {
 public:
  JointGaussianPosterior(Eigen::VectorXd whitened_mean, Eigen::LLT<Eigen::MatrixXd> precision,
                         Eigen::MatrixXd nuisance_factor);

  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& covariance() const { return covariance_; }
  std::size_t grid_size() const { return static_cast<std::size_t>(mean_.size() - 1); }

  /// One exact joint draw (theta, eta-values).
  Eigen::VectorXd sample(Rng& rng) const;

 private:
  Eigen::VectorXd whitened_mean_;
  Eigen::LLT<Eigen::MatrixXd> precision_;
  Eigen::MatrixXd nuisance_factor_;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd covariance_;
};

struct MarginalThetaPosterior {
  double mean;
  double variance;

  double sd() const;
};

struct Interval {
  double lower;
  double upper;

  bool contains(double x) const { return lower <= x && x <= upper; }
};

// Blocked Gibbs draws; row t of `draws` is (theta, eta-values) after sweep t.
struct GibbsChain {
  Eigen::MatrixXd draws;
  std::size_t iterations = 0;
  std::size_t burn_in = 0;
  std::uint64_t seed = 0;

  /// theta draws after burn-in.
  std::vector<double> theta_draws() const;
};

/// Throws std::invalid_argument for theta_prior_var <= 0, or for the flat
/// prior combined with data that do not identify theta.
JointGaussianPosterior conjugate_joint_posterior(const Dataset& ds, const GpPriorSpec& spec,
                                                 double theta_prior_var = kDefaultThetaPriorVar);

MarginalThetaPosterior marginal_theta(const JointGaussianPosterior& jp);

GibbsChain gibbs_chain(const Dataset& ds, const GpPriorSpec& spec, double theta_prior_var,
                       std::size_t iterations, std::size_t burn_in, std::uint64_t seed);

/// Equal-tailed interval mean +- z_{(1+level)/2} sd.
Interval credible_interval(const MarginalThetaPosterior& mp, double level);

/// Posterior probability of |sqrt(n)(theta - theta0)| <= M_n.
double posterior_mass_h_ball(const MarginalThetaPosterior& mp, double theta0, double M_n,
                             std::size_t n);

/// Settings for the Hellinger evaluations inside conditional_nuisance_mass.
inline constexpr std::size_t kHellingerCovariateDraws = 2000;

/// Fraction of draws from the exact posterior of eta given theta = theta_fixed
/// whose Hellinger distance d_H(eta, eta*(theta_fixed)) is at least rho.
double conditional_nuisance_mass(const Dataset& ds, const GpPriorSpec& spec, double theta_fixed,
                                 const ModelPoint& truth, const CovariateLaw& law, double rho,
                                 std::size_t draws, std::uint64_t seed);

// Theta marginal under the Holder-conditioned prior, estimated by keeping
// the exact joint posterior draws whose eta satisfies the conditioning event.
// Conditioning the prior on an event multiplies the posterior by its
// indicator, so the accepted draws are exact draws of the conditioned posterior.
struct ConditionedThetaEstimate {
  McEstimate mean;
  double variance = 0.0;
  std::size_t accepted = 0;
  std::size_t draws = 0;
};

ConditionedThetaEstimate conditioned_prior_theta_marginal(const Dataset& ds,
                                                          const GpPriorSpec& spec,
                                                          double theta_prior_var,
                                                          std::size_t draws, std::uint64_t seed);

}  // namespace semibvm
