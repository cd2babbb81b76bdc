#include "semibvm/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>

#include "semibvm/errors.hpp"

namespace semibvm {

double delta_n(const Dataset& ds, const CovariateLaw& law, const ModelPoint& truth) {
  if (!ds.noise) throw std::invalid_argument("delta_n: dataset carries no noise record");
  if (ds.size() == 0) throw std::invalid_argument("delta_n: empty dataset");
  const double info = law.efficient_information();
  (void)truth;  // the stored noise already equals y - theta0 u - eta0(v)
  double score_sum = 0.0;
  for (Eigen::Index i = 0; i < ds.y.size(); ++i) {
    score_sum += (*ds.noise)[i] * (ds.u[i] - law.cond_mean(ds.v[i]));
  }
  return score_sum / (info * std::sqrt(static_cast<double>(ds.size())));
}

double tv_normals(double m1, double v1, double m2, double v2) {
  if (!(v1 > 0.0) || !(v2 > 0.0)) throw std::invalid_argument("tv_normals: variances must be > 0");
  if (std::abs(v1 - v2) <= 1e-14 * std::max(v1, v2)) {
    const double sd = std::sqrt(0.5 * (v1 + v2));
    return std::clamp(2.0 * normal_cdf(std::abs(m1 - m2) / (2.0 * sd)) - 1.0, 0.0, 1.0);
  }
  // The densities cross where (x-m1)^2/v1 - (x-m2)^2/v2 + log(v1/v2) = 0; the
  // narrower law dominates between the two roots.
  const double a = 1.0 / v1 - 1.0 / v2;
  const double b = -2.0 * (m1 / v1 - m2 / v2);
  const double c = m1 * m1 / v1 - m2 * m2 / v2 + std::log(v1 / v2);
  const double disc = std::max(b * b - 4.0 * a * c, 0.0);
  const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
  double lo = q / a;
  double hi = c / q;
  if (lo > hi) std::swap(lo, hi);

  const double s1 = std::sqrt(v1);
  const double s2 = std::sqrt(v2);
  auto mass = [](double mean, double sd, double x0, double x1) {
    // Upper-tail form keeps precision when both points sit right of the mean.
    const double z0 = (x0 - mean) / sd;
    const double z1 = (x1 - mean) / sd;
    if (z0 > 0.0) return normal_cdf(-z0) - normal_cdf(-z1);
    return normal_cdf(z1) - normal_cdf(z0);
  };
  const double diff = mass(m1, s1, lo, hi) - mass(m2, s2, lo, hi);
  return std::clamp(std::abs(diff), 0.0, 1.0);
}

BvmDiagnostics bvm_gap(const MarginalThetaPosterior& mp, double delta, double info, std::size_t n,
                       double theta0) {
  if (!(info > 0.0)) throw std::invalid_argument("bvm_gap: info must be > 0");
  if (n == 0) throw std::invalid_argument("bvm_gap: n must be >= 1");
  const double root_n = std::sqrt(static_cast<double>(n));
  BvmDiagnostics d;
  d.n = n;
  d.delta_n = delta;
  d.info_tilde = info;
  d.localized_post_mean = root_n * (mp.mean - theta0);
  d.localized_post_var = static_cast<double>(n) * mp.variance;
  d.tv_gap = tv_normals(d.localized_post_mean, d.localized_post_var, delta, 1.0 / info);
  return d;
}

CovariateSample CovariateSample::draw(const CovariateLaw& law, std::size_t count,
                                      std::uint64_t seed) {
  Rng rng(seed);
  CovariateSample s;
  s.u.reserve(count);
  s.v.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const Covariate x = law.draw(rng);
    s.u.push_back(x.u);
    s.v.push_back(x.v);
  }
  return s;
}

McEstimate kl_divergence(const ModelPoint& p, const ModelPoint& truth,
                         const CovariateSample& sample) {
  std::vector<double> terms(sample.size());
  const double dtheta = p.theta - truth.theta;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double shift = dtheta * sample.u[i] + p.eta(sample.v[i]) - truth.eta(sample.v[i]);
    terms[i] = 0.5 * shift * shift;
  }
  return mean_estimate(terms);
}

McEstimate kl_divergence(const ModelPoint& p, const ModelPoint& truth, const CovariateLaw& law,
                         std::size_t mc_draws, std::uint64_t seed) {
  if (mc_draws == 0) throw std::invalid_argument("kl_divergence: mc_draws must be >= 1");
  return kl_divergence(p, truth, CovariateSample::draw(law, mc_draws, seed));
}

NuisanceFunction least_favorable_eta(double theta, const ModelPoint& truth,
                                     const CovariateLaw& law) {
  const double dtheta = theta - truth.theta;
  std::vector<double> values(truth.eta.values().begin(), truth.eta.values().end());
  for (std::size_t j = 0; j < values.size(); ++j) {
    values[j] -= dtheta * law.cond_mean(truth.eta.grid_point(j));
  }
  return NuisanceFunction(std::move(values));
}

double misspecified_theta_star(const NuisanceFunction& eta, const ModelPoint& truth,
                               const CovariateLaw& law) {
  // eta - eta0 is linear between consecutive knots of the two grids.
  std::vector<double> knots;
  knots.reserve(eta.grid_size() + truth.eta.grid_size());
  for (std::size_t j = 0; j < eta.grid_size(); ++j) knots.push_back(eta.grid_point(j));
  for (std::size_t j = 0; j < truth.eta.grid_size(); ++j) knots.push_back(truth.eta.grid_point(j));
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

  auto integrand = [&](double v) { return law.cond_mean(v) * (eta(v) - truth.eta(v)); };
  double cross = 0.0;
  for (std::size_t j = 0; j + 1 < knots.size(); ++j) {
    cross += boost::math::quadrature::gauss<double, 10>::integrate(integrand, knots[j],
                                                                   knots[j + 1]);
  }
  // E[U (eta - eta0)(V)] = E[m(V) (eta - eta0)(V)], and E U^2 = 1.
  return truth.theta - cross / law.second_moment();
}

double lan_remainder(const Dataset& ds, double h, const NuisanceFunction& zeta,
                     const ModelPoint& truth, const CovariateLaw& law) {
  if (ds.size() == 0) throw std::invalid_argument("lan_remainder: empty dataset");
  const double n = static_cast<double>(ds.size());
  const double t = h / std::sqrt(n);
  double log_ratio = 0.0;
  double score_sum = 0.0;
  for (Eigen::Index i = 0; i < ds.y.size(); ++i) {
    const double u = ds.u[i];
    const double v = ds.v[i];
    const double y = ds.y[i];
    const double m = law.cond_mean(v);
    const double base_nuisance = truth.eta(v) + zeta(v);
    // Perturbed point: (theta0 + t, eta*(theta0 + t) + zeta) with eta* = eta0 - (theta - theta0) m.
    const double r_perturbed = y - (truth.theta + t) * u - (base_nuisance - t * m);
    const double r_base = y - truth.theta * u - base_nuisance;
    log_ratio += -0.5 * r_perturbed * r_perturbed + 0.5 * r_base * r_base;
    score_sum += r_base * (u - m);
  }
  const double expansion =
      t * score_sum - 0.5 * h * h * law.efficient_information();
  return log_ratio - expansion;
}

HellingerEstimate hellinger_distance(const ModelPoint& p1, const ModelPoint& p2,
                                     const CovariateSample& sample) {
  std::vector<double> affinity(sample.size());
  const double dtheta = p1.theta - p2.theta;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double shift = dtheta * sample.u[i] + p1.eta(sample.v[i]) - p2.eta(sample.v[i]);
    affinity[i] = std::exp(-shift * shift / 8.0);
  }
  const McEstimate a = mean_estimate(affinity);
  HellingerEstimate out;
  out.squared = {1.0 - a.value, a.std_error};
  out.distance = std::sqrt(std::max(0.0, out.squared.value));
  return out;
}

HellingerEstimate hellinger_distance(const ModelPoint& p1, const ModelPoint& p2,
                                     const CovariateLaw& law, std::size_t mc_draws,
                                     std::uint64_t seed) {
  if (mc_draws == 0) throw std::invalid_argument("hellinger_distance: mc_draws must be >= 1");
  return hellinger_distance(p1, p2, CovariateSample::draw(law, mc_draws, seed));
}

KlNeighborhoodStats kl_neighborhood_stats(const NuisanceFunction& eta, const ModelPoint& truth,
                                          const CovariateLaw& law, std::size_t mc_draws,
                                          std::uint64_t seed) {
  if (mc_draws == 0) throw std::invalid_argument("kl_neighborhood_stats: mc_draws must be >= 1");
  Rng rng(seed);
  const ModelPoint p{truth.theta, eta};
  std::vector<double> neg_log(mc_draws);
  std::vector<double> squared(mc_draws);
  for (std::size_t i = 0; i < mc_draws; ++i) {
    const Covariate x = law.draw(rng);
    const double e = rng.normal();
    const Observation obs{x.u, x.v, truth.theta * x.u + truth.eta(x.v) + e};
    const double lr = log_density_ratio(obs, p, truth);
    neg_log[i] = -lr;
    squared[i] = lr * lr;
  }
  return {mean_estimate(neg_log), mean_estimate(squared)};
}

LanCoefficients integral_lan_coefficients(const Dataset& ds, const GpPriorSpec& spec,
                                          double theta0) {
  if (ds.size() == 0) throw std::invalid_argument("integral_lan_coefficients: empty dataset");
  const GpPrior prior(spec);
  const WhitenedDesign design(ds, prior);
  const Eigen::MatrixXd& b = design.basis();
  const auto m = b.cols();

  // Marginal covariance of y given theta is B B^T + I; apply its inverse by Woodbury.
  Eigen::MatrixXd inner = Eigen::MatrixXd::Identity(m, m) + b.transpose() * b;
  Eigen::LLT<Eigen::MatrixXd> llt(inner);
  if (llt.info() != Eigen::Success) {
    throw NumericError("integral_lan_coefficients: I + B^T B is not positive definite");
  }
  auto apply_inverse = [&](const Eigen::VectorXd& a) -> Eigen::VectorXd {
    return a - b * llt.solve(b.transpose() * a);
  };

  const double n = static_cast<double>(ds.size());
  const Eigen::VectorXd resid = design.y() - theta0 * design.u();
  const Eigen::VectorXd sigma_inv_u = apply_inverse(design.u());
  LanCoefficients c;
  c.linear = sigma_inv_u.dot(resid) / std::sqrt(n);
  c.quadratic = -sigma_inv_u.dot(design.u()) / (2.0 * n);
  return c;
}

namespace {

double plug_in_h(const std::vector<double>& resid, const std::vector<double>& w, double clamp) {
  double ew = 0.0;
  double ww = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    ew += resid[i] * w[i];
    ww += w[i] * w[i];
  }
  if (ww <= 0.0) return 0.0;
  const double h = std::sqrt(static_cast<double>(w.size())) * ew / ww;
  return std::clamp(h, -clamp, clamp);
}

}  // namespace

DominationEstimate estimate_Un(const CovariateLaw& law, const ModelPoint& truth,
                               const std::vector<NuisanceFunction>& zeta_set, double rho,
                               LocalParameter h, std::size_t n, std::size_t mc_reps,
                               std::uint64_t seed) {
  if (zeta_set.empty()) throw std::invalid_argument("estimate_Un: empty zeta set");
  if (mc_reps == 0) throw std::invalid_argument("estimate_Un: mc_reps must be >= 1");
  if (n == 0) throw std::invalid_argument("estimate_Un: n must be >= 1");

  Rng master(seed);
  const CovariateSample probe = CovariateSample::draw(law, kHellingerCovariateDraws, master.split());

  const double root_n = std::sqrt(static_cast<double>(n));
  DominationEstimate out;
  out.value = -std::numeric_limits<double>::infinity();
  for (std::size_t z = 0; z < zeta_set.size(); ++z) {
    const NuisanceFunction& zeta = zeta_set[z];
    // r_H(zeta, 0) = H(Q_{theta0,zeta}, Q_{theta0,0}) depends on zeta(V) only.
    const double r_h = hellinger_distance({truth.theta, zeta},
                                          {truth.theta, NuisanceFunction::zero(2)}, probe)
                           .distance;
    if (!(r_h < rho)) {
      std::ostringstream msg;
      msg << "estimate_Un: probe " << z << " has r_H(zeta, 0) = " << r_h << " >= rho = " << rho;
      throw std::invalid_argument(msg.str());
    }

    Rng rng(master.split());
    std::vector<double> ratios(mc_reps);
    std::vector<double> u(n), v(n), resid(n), w(n);
    for (std::size_t r = 0; r < mc_reps; ++r) {
      // One sample of size n from Q_{theta0, zeta}.
      for (std::size_t i = 0; i < n; ++i) {
        const Covariate x = law.draw(rng);
        u[i] = x.u;
        v[i] = x.v;
        resid[i] = rng.normal();
        w[i] = x.u - law.cond_mean(x.v);
      }
      const double local = std::holds_alternative<double>(h)
                               ? std::get<double>(h)
                               : plug_in_h(resid, w, std::get<PlugInDirection>(h).clamp);
      const double t = local / root_n;
      double log_ratio = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double m = law.cond_mean(v[i]);
        const double nuisance = truth.eta(v[i]) + zeta(v[i]);
        const double y = truth.theta * u[i] + nuisance + resid[i];
        const double r_shift = y - (truth.theta + t) * u[i] - (nuisance - t * m);
        log_ratio += -0.5 * r_shift * r_shift + 0.5 * resid[i] * resid[i];
      }
      ratios[r] = std::exp(log_ratio);
    }
    const McEstimate est = mean_estimate(ratios);
    out.per_zeta.push_back(est);
    out.value = std::max(out.value, est.value);
  }
  return out;
}

}  // namespace semibvm
