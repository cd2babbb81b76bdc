#include "semibvm/posterior.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "semibvm/asymptotics.hpp"
#include "semibvm/errors.hpp"

namespace semibvm {

namespace {

void check_theta_prior_var(double theta_prior_var) {
  if (!(theta_prior_var > 0.0)) {
    throw std::invalid_argument("theta_prior_var must be positive (or kFlatThetaPrior)");
  }
}

double theta_prior_precision(double theta_prior_var) {
  return std::isinf(theta_prior_var) ? 0.0 : 1.0 / theta_prior_var;
}

Eigen::LLT<Eigen::MatrixXd> factor_precision(const Eigen::MatrixXd& precision, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << what << ": posterior precision of size " << precision.rows()
        << " is not positive definite";
    throw NumericError(msg.str());
  }
  return llt;
}

Eigen::VectorXd standard_normals(Rng& rng, Eigen::Index size) {
  Eigen::VectorXd xi(size);
  for (Eigen::Index i = 0; i < size; ++i) xi[i] = rng.normal();
  return xi;
}

// Exact Gaussian law of the whitened nuisance z given theta:
// precision I + B^T B, mean precision^{-1} B^T (y - theta u).
class NuisanceConditional {
 public:
  explicit NuisanceConditional(const WhitenedDesign& design)
      : llt_(factor_precision(
            Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(design.grid_size()),
                                      static_cast<Eigen::Index>(design.grid_size())) +
                design.basis().transpose() * design.basis(),
            "nuisance conditional")),
        bty_(design.basis().transpose() * design.y()),
        btu_(design.basis().transpose() * design.u()) {}

  Eigen::VectorXd mean(double theta) const { return llt_.solve(bty_ - theta * btu_); }

  Eigen::VectorXd draw(double theta, Rng& rng) const {
    const Eigen::VectorXd xi = standard_normals(rng, bty_.size());
    return mean(theta) + llt_.matrixU().solve(xi);
  }

  const Eigen::VectorXd& btu() const { return btu_; }

 private:
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd bty_;
  Eigen::VectorXd btu_;
};

}  // namespace

WhitenedDesign::WhitenedDesign(const Dataset& ds, const GpPrior& prior)
    : u_(ds.u), y_(ds.y), factor_(prior.factor().lower) {
  ds.validate();
  const std::size_t m = prior.spec().grid_size;
  const auto n = static_cast<Eigen::Index>(ds.size());
  basis_.resize(n, static_cast<Eigen::Index>(m));
  for (Eigen::Index i = 0; i < n; ++i) {
    const GridLocation loc = locate_on_grid(ds.v[i], m);
    const auto j = static_cast<Eigen::Index>(loc.index);
    basis_.row(i) = (1.0 - loc.weight) * factor_.row(j) + loc.weight * factor_.row(j + 1);
  }
}

JointGaussianPosterior::JointGaussianPosterior(Eigen::VectorXd whitened_mean,
                                               Eigen::LLT<Eigen::MatrixXd> precision,
                                               Eigen::MatrixXd nuisance_factor)
    : whitened_mean_(std::move(whitened_mean)),
      precision_(std::move(precision)),
      nuisance_factor_(std::move(nuisance_factor)) {
  const Eigen::Index d = whitened_mean_.size();
  const Eigen::Index m = d - 1;
  Eigen::MatrixXd transform = Eigen::MatrixXd::Zero(d, d);
  transform(0, 0) = 1.0;
  transform.bottomRightCorner(m, m) = nuisance_factor_;

  mean_ = transform * whitened_mean_;
  const Eigen::MatrixXd whitened_cov = precision_.solve(Eigen::MatrixXd::Identity(d, d));
  covariance_ = transform * whitened_cov * transform.transpose();
  covariance_ = 0.5 * (covariance_ + covariance_.transpose()).eval();
}

Eigen::VectorXd JointGaussianPosterior::sample(Rng& rng) const {
  const Eigen::Index d = whitened_mean_.size();
  const Eigen::VectorXd w = whitened_mean_ + precision_.matrixU().solve(standard_normals(rng, d));
  Eigen::VectorXd out(d);
  out[0] = w[0];
  out.tail(d - 1) = nuisance_factor_ * w.tail(d - 1);
  return out;
}

double MarginalThetaPosterior::sd() const { return std::sqrt(variance); }

std::vector<double> GibbsChain::theta_draws() const {
  std::vector<double> out;
  out.reserve(iterations - burn_in);
  for (std::size_t t = burn_in; t < iterations; ++t) {
    out.push_back(draws(static_cast<Eigen::Index>(t), 0));
  }
  return out;
}

JointGaussianPosterior conjugate_joint_posterior(const Dataset& ds, const GpPriorSpec& spec,
                                                 double theta_prior_var) {
  check_theta_prior_var(theta_prior_var);
  const GpPrior prior(spec);
  const WhitenedDesign design(ds, prior);

  const auto m = static_cast<Eigen::Index>(spec.grid_size);
  const auto n = static_cast<Eigen::Index>(ds.size());
  Eigen::MatrixXd x(n, m + 1);
  x.col(0) = design.u();
  x.rightCols(m) = design.basis();

  Eigen::MatrixXd precision = x.transpose() * x;
  precision(0, 0) += theta_prior_precision(theta_prior_var);
  precision.bottomRightCorner(m, m).diagonal().array() += 1.0;
  if (precision(0, 0) <= 0.0) {
    throw std::invalid_argument(
        "conjugate_joint_posterior: flat theta prior needs data with nonzero u");
  }

  auto llt = factor_precision(precision, "conjugate_joint_posterior");
  Eigen::VectorXd whitened_mean = llt.solve(x.transpose() * design.y());
  return JointGaussianPosterior(std::move(whitened_mean), std::move(llt), design.factor());
}

MarginalThetaPosterior marginal_theta(const JointGaussianPosterior& jp) {
  return {jp.mean()[0], jp.covariance()(0, 0)};
}

GibbsChain gibbs_chain(const Dataset& ds, const GpPriorSpec& spec, double theta_prior_var,
                       std::size_t iterations, std::size_t burn_in, std::uint64_t seed) {
  if (!(iterations > burn_in)) throw std::invalid_argument("gibbs_chain: need iterations > burn_in");
  check_theta_prior_var(theta_prior_var);
  const GpPrior prior(spec);
  const WhitenedDesign design(ds, prior);
  const NuisanceConditional nuisance(design);

  const double uty = design.u().dot(design.y());
  const double theta_precision = theta_prior_precision(theta_prior_var) + design.u().squaredNorm();
  if (!(theta_precision > 0.0)) {
    throw std::invalid_argument("gibbs_chain: flat theta prior needs data with nonzero u");
  }
  const double theta_sd = 1.0 / std::sqrt(theta_precision);

  const auto m = static_cast<Eigen::Index>(spec.grid_size);
  GibbsChain chain;
  chain.iterations = iterations;
  chain.burn_in = burn_in;
  chain.seed = seed;
  chain.draws.resize(static_cast<Eigen::Index>(iterations), m + 1);

  Rng rng(seed);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(m);
  for (std::size_t t = 0; t < iterations; ++t) {
    // theta | z: u^T (y - B z) = u^T y - (B^T u)^T z.
    const double theta_mean = (uty - nuisance.btu().dot(z)) / theta_precision;
    const double theta = theta_mean + theta_sd * rng.normal();
    z = nuisance.draw(theta, rng);

    const auto row = static_cast<Eigen::Index>(t);
    chain.draws(row, 0) = theta;
    chain.draws.row(row).tail(m) = (design.factor() * z).transpose();
  }
  return chain;
}

Interval credible_interval(const MarginalThetaPosterior& mp, double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw std::invalid_argument("credible_interval: level must lie in (0,1)");
  }
  const double half = normal_quantile(0.5 * (1.0 + level)) * mp.sd();
  return {mp.mean - half, mp.mean + half};
}

double posterior_mass_h_ball(const MarginalThetaPosterior& mp, double theta0, double M_n,
                             std::size_t n) {
  if (!(M_n >= 0.0)) throw std::invalid_argument("posterior_mass_h_ball: M_n must be >= 0");
  if (n == 0) throw std::invalid_argument("posterior_mass_h_ball: n must be >= 1");
  if (std::isinf(M_n)) return 1.0;
  const double radius = M_n / std::sqrt(static_cast<double>(n));
  const double sd = mp.sd();
  return normal_cdf((theta0 + radius - mp.mean) / sd) - normal_cdf((theta0 - radius - mp.mean) / sd);
}

double conditional_nuisance_mass(const Dataset& ds, const GpPriorSpec& spec, double theta_fixed,
                                 const ModelPoint& truth, const CovariateLaw& law, double rho,
                                 std::size_t draws, std::uint64_t seed) {
  if (!(rho > 0.0)) throw std::invalid_argument("conditional_nuisance_mass: rho must be > 0");
  if (draws == 0) throw std::invalid_argument("conditional_nuisance_mass: draws must be >= 1");
  const GpPrior prior(spec);
  const WhitenedDesign design(ds, prior);
  const NuisanceConditional nuisance(design);

  Rng rng(seed);
  const CovariateSample covariates =
      CovariateSample::draw(law, kHellingerCovariateDraws, rng.split());
  const ModelPoint center{truth.theta, least_favorable_eta(theta_fixed, truth, law)};

  std::size_t outside = 0;
  for (std::size_t d = 0; d < draws; ++d) {
    const Eigen::VectorXd eta = design.factor() * nuisance.draw(theta_fixed, rng);
    const ModelPoint point{truth.theta,
                           NuisanceFunction(std::vector<double>(eta.data(), eta.data() + eta.size()))};
    if (hellinger_distance(point, center, covariates).distance >= rho) ++outside;
  }
  return static_cast<double>(outside) / static_cast<double>(draws);
}

ConditionedThetaEstimate conditioned_prior_theta_marginal(const Dataset& ds,
                                                          const GpPriorSpec& spec,
                                                          double theta_prior_var,
                                                          std::size_t draws, std::uint64_t seed) {
  if (!spec.conditioned()) {
    throw std::invalid_argument("conditioned_prior_theta_marginal: spec has no Holder bound");
  }
  const JointGaussianPosterior jp = conjugate_joint_posterior(ds, spec, theta_prior_var);
  const auto m = static_cast<Eigen::Index>(spec.grid_size);
  Rng rng(seed);
  std::vector<double> accepted;
  for (std::size_t d = 0; d < draws; ++d) {
    const Eigen::VectorXd x = jp.sample(rng);
    NuisanceFunction eta(std::vector<double>(x.data() + 1, x.data() + 1 + m));
    if (within_holder_ball(eta, *spec.holder_alpha, *spec.holder_bound)) accepted.push_back(x[0]);
  }
  if (accepted.size() < 2) {
    throw NumericError("conditioned_prior_theta_marginal: fewer than two posterior draws satisfy "
                       "the Holder conditioning");
  }
  ConditionedThetaEstimate out;
  out.mean = mean_estimate(accepted);
  out.variance = sample_variance(accepted);
  out.accepted = accepted.size();
  out.draws = draws;
  return out;
}

}  // namespace semibvm
