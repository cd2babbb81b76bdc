#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "semibvm/asymptotics.hpp"
#include "semibvm/posterior.hpp"

namespace semibvm {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

ModelPoint default_truth() {
  return {1.0, NuisanceFunction::tabulate(1001, [](double v) { return 0.5 * std::sin(kTwoPi * v); })};
}

Dataset manual_dataset(std::vector<double> u, std::vector<double> e) {
  const auto n = static_cast<Eigen::Index>(u.size());
  Dataset ds{Eigen::Map<Eigen::VectorXd>(u.data(), n), Eigen::VectorXd::LinSpaced(n, 0.1, 0.9),
             Eigen::Map<Eigen::VectorXd>(e.data(), n), Eigen::Map<Eigen::VectorXd>(e.data(), n)};
  return ds;
}

TEST(DeltaN, Examples) {
  const CovariateLaw law = make_covariate_law(1.0);  // m == 0, I = 1
  const ModelPoint truth{0.0, NuisanceFunction::zero(2)};
  EXPECT_EQ(delta_n(manual_dataset({0.3, -1.2, 0.5}, {0.0, 0.0, 0.0}), law, truth), 0.0);
  EXPECT_EQ(delta_n(manual_dataset({1, 1, 1, 1}, {1, -1, 1, -1}), law, truth), 0.0);
  EXPECT_NEAR(delta_n(manual_dataset({1, 1}, {1, 1}), law, truth), std::sqrt(2.0), 1e-15);

  Dataset no_noise = manual_dataset({1, 1}, {1, 1});
  no_noise.noise.reset();
  EXPECT_THROW(delta_n(no_noise, law, truth), std::invalid_argument);
}

TEST(DeltaN, UsesEfficientScore) {
  const CovariateLaw law = make_covariate_law(0.8);
  const ModelPoint truth = default_truth();
  const Dataset ds = sample_dataset(law, truth, 500, 4);
  double sum = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) sum += efficient_score(ds.observation(i), law, truth);
  EXPECT_NEAR(delta_n(ds, law, truth), sum / (0.64 * std::sqrt(500.0)), 1e-10);
}

TEST(TvNormals, Examples) {
  EXPECT_EQ(tv_normals(0.3, 2.0, 0.3, 2.0), 0.0);
  const double closed = 2.0 * oracle::normal_cdf(0.5) - 1.0;
  EXPECT_NEAR(closed, 0.382925, 1e-6);
  EXPECT_NEAR(oracle::tv_by_quadrature(0.0, 1.0, 1.0, 1.0), closed, 1e-9);
  EXPECT_NEAR(tv_normals(0.0, 1.0, 1.0, 1.0), closed, 1e-12);
  EXPECT_EQ(tv_normals(0.0, 1.0, 1.0, 1.0), tv_normals(1.0, 1.0, 0.0, 1.0));
  EXPECT_THROW(tv_normals(0.0, 0.0, 1.0, 1.0), std::invalid_argument);
  EXPECT_THROW(tv_normals(0.0, 1.0, 1.0, -1.0), std::invalid_argument);
}

TEST(TvNormals, UnequalVariancesMatchQuadrature) {
  Rng rng(31);
  for (int trial = 0; trial < 60; ++trial) {
    const double m1 = 2.0 * rng.normal();
    const double m2 = 2.0 * rng.normal();
    const double v1 = std::exp(1.5 * rng.normal());
    const double v2 = std::exp(1.5 * rng.normal());
    const double tv = tv_normals(m1, v1, m2, v2);
    EXPECT_NEAR(tv, oracle::tv_by_quadrature(m1, v1, m2, v2), 1e-8);
    EXPECT_NEAR(tv, tv_normals(m2, v2, m1, v1), 1e-14);
    EXPECT_GE(tv, 0.0);
    EXPECT_LE(tv, 1.0);
  }
  // Same mean, different spread, and nearly equal variances.
  EXPECT_NEAR(tv_normals(0.0, 1.0, 0.0, 4.0), oracle::tv_by_quadrature(0.0, 1.0, 0.0, 4.0), 1e-8);
  EXPECT_NEAR(tv_normals(0.2, 1.0, 0.0, 1.0 + 1e-9),
              oracle::tv_by_quadrature(0.2, 1.0, 0.0, 1.0 + 1e-9), 1e-8);
}

TEST(TvNormals, TriangleInequality) {
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    double m[3], v[3];
    for (int i = 0; i < 3; ++i) {
      m[i] = rng.normal();
      v[i] = std::exp(rng.normal());
    }
    EXPECT_LE(tv_normals(m[0], v[0], m[2], v[2]),
              tv_normals(m[0], v[0], m[1], v[1]) + tv_normals(m[1], v[1], m[2], v[2]) + 1e-6);
  }
}

TEST(BvmGap, ZeroAtLimitAndInvariantUnderLocalization) {
  const std::size_t n = 400;
  const double theta0 = 1.0;
  const double info = 0.64;
  const double delta = 0.7;
  const MarginalThetaPosterior at_limit{theta0 + delta / 20.0, 1.0 / (info * 400.0)};
  EXPECT_NEAR(bvm_gap(at_limit, delta, info, n, theta0).tv_gap, 0.0, 1e-7);

  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const MarginalThetaPosterior mp{theta0 + 0.1 * rng.normal(), 0.004 * std::exp(rng.normal())};
    const double d = rng.normal();
    const BvmDiagnostics g = bvm_gap(mp, d, info, n, theta0);
    const double unlocalized = tv_normals(mp.mean, mp.variance, theta0 + d / std::sqrt(400.0),
                                          1.0 / (400.0 * info));
    EXPECT_NEAR(g.tv_gap, unlocalized, 1e-9);
    EXPECT_EQ(g.n, n);
    EXPECT_NEAR(g.localized_post_mean, 20.0 * (mp.mean - theta0), 1e-12);
    EXPECT_NEAR(g.localized_post_var, 400.0 * mp.variance, 1e-12);
  }
  EXPECT_THROW(bvm_gap(at_limit, delta, 0.0, n, theta0), std::invalid_argument);
}

TEST(KlDivergence, Examples) {
  const CovariateLaw law = make_covariate_law(0.8);
  const ModelPoint truth = default_truth();
  const McEstimate zero = kl_divergence(truth, truth, law, 1000, 1);
  EXPECT_EQ(zero.value, 0.0);

  const McEstimate shifted = kl_divergence({truth.theta + 0.5, truth.eta}, truth, law, 100000, 2);
  EXPECT_NEAR(shifted.value, 0.125, 3.0 * shifted.std_error);
}

TEST(KlDivergence, AgreesWithDirectLogRatioUnderSimulatedData) {
  const CovariateLaw law = make_covariate_law(0.8);
  const ModelPoint truth = default_truth();
  const ModelPoint p{0.7, NuisanceFunction::tabulate(30, [](double v) { return 0.3 - v; })};
  const McEstimate kl = kl_divergence(p, truth, law, 100000, 5);
  const Dataset ds = sample_dataset(law, truth, 100000, 6);
  std::vector<double> neg_log(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Observation x = ds.observation(i);
    neg_log[i] = -(oracle::normal_log_pdf(x.y, p.theta * x.u + p.eta(x.v), 1.0) -
                   oracle::normal_log_pdf(x.y, truth.theta * x.u + truth.eta(x.v), 1.0));
  }
  const McEstimate direct = mean_estimate(neg_log);
  const double combined = std::hypot(kl.std_error, direct.std_error);
  EXPECT_NEAR(kl.value, direct.value, 4.0 * combined);
  EXPECT_GE(kl.value, -3.0 * kl.std_error);
}

TEST(LeastFavorableEta, ClosedFormCases) {
  const ModelPoint truth = default_truth();
  EXPECT_EQ(least_favorable_eta(truth.theta, truth, make_covariate_law(0.8)), truth.eta);
  const CovariateLaw independent = make_covariate_law(1.0);
  EXPECT_EQ(least_favorable_eta(3.0, truth, independent), truth.eta);
  const CovariateLaw law = make_covariate_law(0.8);
  const NuisanceFunction star = least_favorable_eta(1.4, truth, law);
  for (double v : {0.0, 0.1, 0.5, 0.93}) {
    EXPECT_NEAR(star(v), truth.eta(v) - 0.4 * law.cond_mean(v), 1e-5);
  }
}

TEST(LeastFavorableEta, MinimizesKlAgainstPerturbations) {
  const CovariateLaw law = make_covariate_law(0.8);
  const ModelPoint truth = default_truth();
  const CovariateSample sample = CovariateSample::draw(law, 20000, 12);
  for (double dtheta : {-0.5, 0.3}) {
    const double theta = truth.theta + dtheta;
    const NuisanceFunction star = least_favorable_eta(theta, truth, law);
    const McEstimate at_star = kl_divergence({theta, star}, truth, sample);
    // KL at the least-favorable point equals (theta - theta0)^2 I / 2.
    EXPECT_NEAR(at_star.value, 0.5 * dtheta * dtheta * 0.64, 3.0 * at_star.std_error);
    for (double c : {-0.2, -0.05, 0.05, 0.2}) {
      for (const auto& direction :
           {NuisanceFunction::tabulate(1001, [](double v) { return std::cos(kTwoPi * v); }),
            NuisanceFunction::tabulate(1001, [](double v) { return std::sin(kTwoPi * v); }),
            NuisanceFunction::tabulate(1001, [](double) { return 1.0; })}) {
        const McEstimate perturbed = kl_divergence({theta, star + c * direction}, truth, sample);
        EXPECT_GE(perturbed.value, at_star.value - 2e-3) << dtheta << " " << c;
      }
    }
  }
}

TEST(MisspecifiedThetaStar, ClosedFormCases) {
  const CovariateLaw law = make_covariate_law(0.8);
  const ModelPoint truth = default_truth();
  EXPECT_NEAR(misspecified_theta_star(truth.eta, truth, law), truth.theta, 1e-15);
  const NuisanceFunction shifted =
      truth.eta + NuisanceFunction::tabulate(1001, [](double) { return 0.7; });
  EXPECT_NEAR(misspecified_theta_star(shifted, truth, law), truth.theta, 1e-12);
  // eta - eta0 = b cos(2 pi v): E[m (eta - eta0)] = a b / 2.
  const NuisanceFunction aligned = NuisanceFunction::tabulate(
      2001, [&](double v) { return truth.eta(v) + 0.4 * std::cos(kTwoPi * v); });
  EXPECT_NEAR(misspecified_theta_star(aligned, truth, law),
              truth.theta - 0.5 * law.cond_mean_amplitude() * 0.4, 1e-5);
}

TEST(MisspecifiedThetaStar, MatchesQuadratureAndBruteForceMinimization) {
  const CovariateLaw law = make_covariate_law(0.8);
  const ModelPoint truth = default_truth();
  const NuisanceFunction eta =
      NuisanceFunction::tabulate(40, [](double v) { return 0.2 + std::sin(3.0 * v) - v * v; });
  const double star = misspecified_theta_star(eta, truth, law);
  double cross = 0.0;
  for (int piece = 0; piece < 39; ++piece) {
    cross += oracle::integrate([&](double v) { return law.cond_mean(v) * (eta(v) - truth.eta(v)); },
                               piece / 39.0, (piece + 1) / 39.0);
  }
  EXPECT_NEAR(star, truth.theta - cross, 1e-6);

  const CovariateSample sample = CovariateSample::draw(law, 50000, 3);
  double best_theta = 0.0;
  double best_kl = INFINITY;
  const double step = 0.01;
  for (double theta = truth.theta - 1.0; theta <= truth.theta + 1.0; theta += step) {
    const double kl = kl_divergence({theta, eta}, truth, sample).value;
    if (kl < best_kl) {
      best_kl = kl;
      best_theta = theta;
    }
  }
  EXPECT_NEAR(best_theta, star, step);
}

TEST(LanRemainder, VanishesAtZeroAndMatchesAlgebraicIdentity) {
  const CovariateLaw law = make_covariate_law(0.8);
  const ModelPoint truth = default_truth();
  const Dataset ds = sample_dataset(law, truth, 300, 19);
  const NuisanceFunction zeta = NuisanceFunction::tabulate(25, [](double v) { return 0.1 * v; });
  EXPECT_EQ(lan_remainder(ds, 0.0, zeta, truth, law), 0.0);
  const double pn_w2 = empirical_information(ds, law);
  for (double h : {-2.0, -0.5, 1.0, 3.0}) {
    // Direct evaluation gives -(h^2/2)(P_n - P)(U - E[U|V])^2.
    EXPECT_NEAR(lan_remainder(ds, h, zeta, truth, law), -0.5 * h * h * (pn_w2 - 0.64), 1e-10);
  }
}

TEST(LanRemainder, ShrinksWithSampleSize) {
  const CovariateLaw law = make_covariate_law(0.8);
  const ModelPoint truth = default_truth();
  const NuisanceFunction zeta = NuisanceFunction::zero(2);
  std::vector<double> medians;
  for (std::size_t n : {100u, 400u, 1600u}) {
    std::vector<double> abs_rem;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      abs_rem.push_back(std::abs(lan_remainder(sample_dataset(law, truth, n, 500 + seed), 1.0, zeta,
                                               truth, law)));
    }
    medians.push_back(median(abs_rem));
  }
  EXPECT_GT(medians[0], medians[1]);
  EXPECT_GT(medians[1], medians[2]);
}

TEST(Hellinger, Examples) {
  const CovariateLaw law = make_covariate_law(0.8);
  const ModelPoint truth = default_truth();
  EXPECT_EQ(hellinger_distance(truth, truth, law, 500, 1).distance, 0.0);
  const double c = 0.6;
  const ModelPoint shifted{truth.theta,
                           truth.eta + NuisanceFunction::tabulate(1001, [&](double) { return c; })};
  const HellingerEstimate h = hellinger_distance(shifted, truth, law, 500, 1);
  EXPECT_NEAR(h.distance, std::sqrt(1.0 - std::exp(-c * c / 8.0)), 1e-12);
}

TEST(Hellinger, ThetaShiftBound) {
  const CovariateLaw law = make_covariate_law(0.8);
  const ModelPoint truth = default_truth();
  const double big_m = 2.0;
  for (double n : {10.0, 100.0}) {
    const ModelPoint moved{truth.theta + big_m / std::sqrt(n), truth.eta};
    const HellingerEstimate h = hellinger_distance(moved, truth, law, 100000, 9);
    const double bound = big_m * big_m / (2.0 * n) * law.second_moment() +
                         std::pow(big_m, 3) / (6.0 * n * n) * law.fourth_moment();
    EXPECT_LE(h.squared.value, bound + 4.0 * h.squared.std_error);
  }
}

TEST(Hellinger, BoundedByKl) {
  const CovariateLaw law = make_covariate_law(0.8);
  const ModelPoint truth = default_truth();
  GpPriorSpec spec;
  spec.grid_size = 30;
  spec.scale = 0.5;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ModelPoint p{truth.theta, sample_prior_path(spec, seed)};
    const CovariateSample sample = CovariateSample::draw(law, 20000, seed + 50);
    const HellingerEstimate h = hellinger_distance(p, truth, sample);
    const McEstimate kl = kl_divergence(p, truth, sample);
    EXPECT_LE(h.squared.value,
              kl.value + 4.0 * std::hypot(h.squared.std_error, kl.std_error));
  }
}

TEST(KlNeighborhoodStats, ZeroAtTruthAndMatchesQuadrature) {
  const CovariateLaw law = make_covariate_law(0.8);
  const ModelPoint truth = default_truth();
  const KlNeighborhoodStats at_truth = kl_neighborhood_stats(truth.eta, truth, law, 1000, 1);
  EXPECT_EQ(at_truth.kl.value, 0.0);
  EXPECT_EQ(at_truth.second_moment.value, 0.0);
  EXPECT_TRUE(at_truth.member(0.01));

  const NuisanceFunction eta =
      NuisanceFunction::tabulate(50, [](double v) { return 0.4 * std::cos(3.0 * v) - 0.1; });
  const KlNeighborhoodStats s = kl_neighborhood_stats(eta, truth, law, 100000, 2);
  double quad = 0.0;
  for (int piece = 0; piece < 49; ++piece) {
    quad += oracle::integrate([&](double v) { return std::pow(eta(v) - truth.eta(v), 2); },
                              piece / 49.0, (piece + 1) / 49.0);
  }
  EXPECT_NEAR(s.kl.value, 0.5 * quad, 3.0 * s.kl.std_error);
}

TEST(KlNeighborhoodStats, BoundedBySupNorm) {
  const CovariateLaw law = make_covariate_law(0.8);
  const ModelPoint truth = default_truth();
  GpPriorSpec spec;
  spec.grid_size = 40;
  spec.scale = 0.3;
  const double class_bound = 1.0;  // sup-norm bound D of the nuisance class
  int checked = 0;
  for (std::uint64_t seed = 0; checked < 10; ++seed) {
    const NuisanceFunction eta = sample_prior_path(spec, seed);
    if (eta.sup_norm() >= class_bound) continue;
    ++checked;
    const double sup = sup_distance(eta, truth.eta);
    const KlNeighborhoodStats s = kl_neighborhood_stats(eta, truth, law, 50000, seed);
    const double bound = (0.5 + class_bound * class_bound) * sup * sup;
    EXPECT_LE(s.kl.value, bound + 4.0 * s.kl.std_error);
    EXPECT_LE(s.second_moment.value, bound + 4.0 * s.second_moment.std_error);
  }
}

TEST(IntegralLan, QuadraticFormAndSign) {
  const CovariateLaw law = make_covariate_law(0.8);
  const Dataset ds = sample_dataset(law, default_truth(), 200, 3);
  GpPriorSpec spec;
  spec.scale = 5.0;
  const LanCoefficients c = integral_lan_coefficients(ds, spec, 1.0);
  EXPECT_EQ(c.log_ratio(0.0), 0.0);
  EXPECT_LE(c.quadratic, 0.0);
  EXPECT_THROW(integral_lan_coefficients(sample_dataset(law, default_truth(), 0, 3), spec, 1.0),
               std::invalid_argument);
}

TEST(IntegralLan, MatchesDenseMarginalLikelihood) {
  // Independent route: build Sigma = W C W^T + I densely and solve directly.
  const CovariateLaw law = make_covariate_law(0.8);
  const Dataset ds = sample_dataset(law, default_truth(), 60, 8);
  GpPriorSpec spec;
  spec.grid_size = 20;
  spec.scale = 2.0;
  const Eigen::MatrixXd c = prior_covariance(spec).matrix();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(60, 20);
  for (Eigen::Index i = 0; i < 60; ++i) {
    const double pos = ds.v[i] * 19.0;
    const auto j = std::min<Eigen::Index>(static_cast<Eigen::Index>(pos), 18);
    w(i, j) = 1.0 - (pos - j);
    w(i, j + 1) = pos - j;
  }
  const Eigen::MatrixXd sigma = w * c * w.transpose() + Eigen::MatrixXd::Identity(60, 60);
  const Eigen::VectorXd si_u = sigma.ldlt().solve(ds.u);
  const double linear = si_u.dot(ds.y - 1.0 * ds.u) / std::sqrt(60.0);
  const double quadratic = -si_u.dot(ds.u) / 120.0;
  const LanCoefficients got = integral_lan_coefficients(ds, spec, 1.0);
  EXPECT_NEAR(got.linear, linear, 1e-8);
  EXPECT_NEAR(got.quadratic, quadratic, 1e-8);
}

TEST(EstimateUn, NormalizationForFixedH) {
  const CovariateLaw law = make_covariate_law(0.8);
  const ModelPoint truth = default_truth();
  const std::vector<NuisanceFunction> probes{
      NuisanceFunction::zero(2),
      NuisanceFunction::tabulate(20, [](double v) { return 0.2 * v; })};
  const DominationEstimate est = estimate_Un(law, truth, probes, 0.3, 1.0, 20, 5000, 4);
  ASSERT_EQ(est.per_zeta.size(), 2u);
  for (const McEstimate& e : est.per_zeta) EXPECT_NEAR(e.value, 1.0, 4.0 * e.std_error);
  EXPECT_EQ(est.value, std::max(est.per_zeta[0].value, est.per_zeta[1].value));

  const DominationEstimate single =
      estimate_Un(law, truth, {NuisanceFunction::zero(2)}, 0.3, 1.0, 20, 5000, 4);
  ASSERT_EQ(single.per_zeta.size(), 1u);
  EXPECT_EQ(single.value, single.per_zeta[0].value);
}

TEST(EstimateUn, PlugInDirectionIsFinite) {
  const CovariateLaw law = make_covariate_law(0.8);
  const ModelPoint truth = default_truth();
  const DominationEstimate est = estimate_Un(law, truth, {NuisanceFunction::zero(2)}, 0.3,
                                             PlugInDirection{2.0}, 50, 4000, 6);
  EXPECT_TRUE(std::isfinite(est.value));
  EXPECT_GT(est.per_zeta[0].std_error, 0.0);
  EXPECT_TRUE(std::isfinite(est.per_zeta[0].std_error));
}

TEST(EstimateUn, Preconditions) {
  const CovariateLaw law = make_covariate_law(0.8);
  const ModelPoint truth = default_truth();
  EXPECT_THROW(estimate_Un(law, truth, {}, 0.3, 1.0, 20, 10, 1), std::invalid_argument);
  const NuisanceFunction far = NuisanceFunction::tabulate(5, [](double) { return 3.0; });
  EXPECT_THROW(estimate_Un(law, truth, {far}, 0.3, 1.0, 20, 10, 1), std::invalid_argument);
}

}  // namespace
}  // namespace semibvm
