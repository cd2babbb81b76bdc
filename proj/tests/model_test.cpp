#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "semibvm/model.hpp"
#include "semibvm/stats.hpp"

namespace semibvm {
namespace {

ModelPoint default_truth() {
  return {1.0, NuisanceFunction::tabulate(1001, [](double v) {
            return 0.5 * std::sin(2.0 * std::numbers::pi * v);
          })};
}

TEST(CovariateLaw, IndependentCaseHasZeroConditionalMean) {
  const CovariateLaw law = make_covariate_law(1.0);
  EXPECT_EQ(law.cond_mean_amplitude(), 0.0);
  EXPECT_EQ(law.cond_mean(0.3), 0.0);
  EXPECT_EQ(efficient_information(law), 1.0);
}

TEST(CovariateLaw, RejectsDegenerateAndUnstandardizableResidualSd) {
  EXPECT_THROW(make_covariate_law(0.0), std::invalid_argument);
  EXPECT_THROW(make_covariate_law(-0.2), std::invalid_argument);
  EXPECT_THROW(make_covariate_law(1.01), std::invalid_argument);
  EXPECT_THROW(make_covariate_law(std::nan("")), std::invalid_argument);
}

TEST(CovariateLaw, AmplitudeStandardizesSecondMoment) {
  const CovariateLaw law = make_covariate_law(0.8);
  EXPECT_DOUBLE_EQ(law.cond_mean_amplitude(), std::sqrt(0.72));
  EXPECT_DOUBLE_EQ(efficient_information(law), 0.64);

  Rng rng(11);
  std::vector<double> u2(100000);
  for (double& x : u2) {
    const double u = law.draw(rng).u;
    x = u * u;
  }
  const McEstimate m = mean_estimate(u2);
  EXPECT_NEAR(m.value, 1.0, 3.0 * m.std_error);
}

TEST(CovariateLaw, MomentsStandardizedAcrossResidualSd) {
  for (double sd : {0.3, 0.5, 0.8, 0.95, 1.0}) {
    const CovariateLaw law = make_covariate_law(sd);
    Rng rng(static_cast<std::uint64_t>(sd * 1000));
    std::vector<double> u(100000), u2(100000), u4(100000);
    for (std::size_t i = 0; i < u.size(); ++i) {
      u[i] = law.draw(rng).u;
      u2[i] = u[i] * u[i];
      u4[i] = u2[i] * u2[i];
    }
    const McEstimate m1 = mean_estimate(u);
    const McEstimate m2 = mean_estimate(u2);
    const McEstimate m4 = mean_estimate(u4);
    EXPECT_NEAR(m1.value, 0.0, 4.0 * m1.std_error) << "sd=" << sd;
    EXPECT_NEAR(m2.value, 1.0, 4.0 * m2.std_error) << "sd=" << sd;
    EXPECT_NEAR(m4.value, law.fourth_moment(), 4.0 * m4.std_error) << "sd=" << sd;
  }
}

TEST(CovariateLaw, AbsConditionalMeanByQuadrature) {
  const CovariateLaw law = make_covariate_law(0.6);
  const double quad = oracle::integrate([&](double v) { return std::abs(law.cond_mean(v)); }, 0.0,
                                        0.25) +
                      oracle::integrate([&](double v) { return std::abs(law.cond_mean(v)); }, 0.25,
                                        0.75) +
                      oracle::integrate([&](double v) { return std::abs(law.cond_mean(v)); }, 0.75,
                                        1.0);
  EXPECT_NEAR(law.abs_cond_mean_expectation(), quad, 1e-12);
}

TEST(NuisanceFunction, GridPointsReturnStoredValuesExactly) {
  std::vector<double> values;
  Rng rng(3);
  for (int j = 0; j < 50; ++j) values.push_back(rng.normal());
  const NuisanceFunction f(values);
  for (std::size_t j = 0; j < values.size(); ++j) {
    EXPECT_EQ(f(static_cast<double>(j) / 49.0), values[j]) << j;
    EXPECT_EQ(f(f.grid_point(j)), values[j]) << j;
  }
}

TEST(NuisanceFunction, InterpolatesLinearly) {
  const NuisanceFunction f({0.0, 2.0, -2.0});
  EXPECT_DOUBLE_EQ(f(0.25), 1.0);
  EXPECT_DOUBLE_EQ(f(0.75), 0.0);
  EXPECT_DOUBLE_EQ(f.sup_norm(), 2.0);
  const NuisanceFunction line = NuisanceFunction::tabulate(11, [](double v) { return 3.0 * v - 1.0; });
  for (double v : {0.0, 0.013, 0.5, 0.77, 0.999, 1.0}) EXPECT_NEAR(line(v), 3.0 * v - 1.0, 1e-14);
}

TEST(NuisanceFunction, RejectsBadInput) {
  EXPECT_THROW(NuisanceFunction({1.0}), std::invalid_argument);
  EXPECT_THROW(NuisanceFunction({1.0, std::nan("")}), std::invalid_argument);
  EXPECT_THROW(NuisanceFunction({1.0, INFINITY}), std::invalid_argument);
  EXPECT_THROW(NuisanceFunction::zero(3) + NuisanceFunction::zero(4), std::invalid_argument);
}

TEST(NuisanceFunction, SupDistanceAcrossGrids) {
  const NuisanceFunction coarse({0.0, 1.0});
  const NuisanceFunction fine = NuisanceFunction::tabulate(5, [](double v) { return v * v; });
  // |v - v^2| peaks at 1/4, attained at the fine knot v = 1/2.
  EXPECT_DOUBLE_EQ(sup_distance(coarse, fine), 0.25);
}

TEST(SampleDataset, EmptyAndDeterministic) {
  const CovariateLaw law = make_covariate_law(0.8);
  const ModelPoint truth = default_truth();
  const Dataset empty = sample_dataset(law, truth, 0, 5);
  EXPECT_EQ(empty.size(), 0u);
  EXPECT_NO_THROW(empty.validate());

  const Dataset a = sample_dataset(law, truth, 300, 42);
  const Dataset b = sample_dataset(law, truth, 300, 42);
  EXPECT_EQ(a.u, b.u);
  EXPECT_EQ(a.v, b.v);
  EXPECT_EQ(a.y, b.y);
  EXPECT_EQ(*a.noise, *b.noise);
  const Dataset c = sample_dataset(law, truth, 300, 43);
  EXPECT_NE(a.y, c.y);
}

TEST(SampleDataset, MomentsAndRegressionEquation) {
  const CovariateLaw law = make_covariate_law(0.8);
  const ModelPoint truth = default_truth();
  const Dataset ds = sample_dataset(law, truth, 100000, 7);
  ds.validate();
  EXPECT_NEAR(ds.u.mean(), 0.0, 0.02);
  EXPECT_NEAR(ds.u.squaredNorm() / 1e5, 1.0, 0.02);
  for (std::size_t i = 0; i < 100; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    EXPECT_NEAR(ds.y[k], truth.theta * ds.u[k] + truth.eta(ds.v[k]) + (*ds.noise)[k], 1e-12);
  }
}

TEST(Dataset, ValidateRejectsInconsistentData) {
  Dataset ds{Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(3), {}};
  EXPECT_THROW(ds.validate(), std::invalid_argument);
  ds.v = Eigen::VectorXd::Constant(3, 1.5);
  EXPECT_THROW(ds.validate(), std::invalid_argument);
}

TEST(LogDensityRatio, ZeroAtSamePoint) {
  const ModelPoint p = default_truth();
  EXPECT_EQ(log_density_ratio({0.3, 0.4, 1.7}, p, p), 0.0);
}

TEST(LogDensityRatio, ZeroReferenceResidual) {
  const ModelPoint ref = default_truth();
  const ModelPoint p{0.4, NuisanceFunction::tabulate(21, [](double v) { return v; })};
  const double u = -0.7;
  const double v = 0.33;
  const double y = ref.theta * u + ref.eta(v);
  const double d = (ref.theta - p.theta) * u + (ref.eta(v) - p.eta(v));
  EXPECT_NEAR(log_density_ratio({u, v, y}, p, ref), -0.5 * d * d, 1e-14);
}

TEST(LogDensityRatio, MatchesDirectGaussianDensitiesAndIsAntisymmetric) {
  Rng rng(99);
  const ModelPoint a = default_truth();
  const ModelPoint b{-0.3, NuisanceFunction::tabulate(37, [](double v) { return std::cos(5 * v); })};
  for (int trial = 0; trial < 200; ++trial) {
    const Observation x{2.0 * rng.normal(), rng.uniform(), 3.0 * rng.normal()};
    const double direct = oracle::normal_log_pdf(x.y, a.theta * x.u + a.eta(x.v), 1.0) -
                          oracle::normal_log_pdf(x.y, b.theta * x.u + b.eta(x.v), 1.0);
    EXPECT_NEAR(log_density_ratio(x, a, b), direct, 1e-12);
    EXPECT_EQ(log_density_ratio(x, a, b), -log_density_ratio(x, b, a));
  }
}

TEST(EfficientScore, Examples) {
  const CovariateLaw law = make_covariate_law(0.8);
  const ModelPoint truth = default_truth();
  const double v = 0.2;
  // Zero residual.
  EXPECT_NEAR(efficient_score({0.9, v, truth.theta * 0.9 + truth.eta(v)}, law, truth), 0.0, 1e-15);
  // u equal to m(v).
  const double u = law.cond_mean(v);
  EXPECT_EQ(efficient_score({u, v, 5.0}, law, truth), 0.0);
  // e = 2, u - m(v) = 0.5.
  const double u2 = law.cond_mean(v) + 0.5;
  const double y = truth.theta * u2 + truth.eta(v) + 2.0;
  EXPECT_NEAR(efficient_score({u2, v, y}, law, truth), 1.0, 1e-12);
}

TEST(EfficientScore, MeanZeroAndVarianceEqualsInformation) {
  const CovariateLaw law = make_covariate_law(0.8);
  const ModelPoint truth = default_truth();
  const Dataset ds = sample_dataset(law, truth, 100000, 2024);
  std::vector<double> score(ds.size()), score2(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    score[i] = efficient_score(ds.observation(i), law, truth);
    score2[i] = score[i] * score[i];
  }
  const McEstimate m = mean_estimate(score);
  const McEstimate m2 = mean_estimate(score2);
  EXPECT_NEAR(m.value, 0.0, 3.0 * m.std_error);
  EXPECT_NEAR(m2.value, 0.64, 3.0 * m2.std_error);
}

TEST(EfficientInformation, EmpiricalWithinCltWidth) {
  const CovariateLaw law = make_covariate_law(0.8);
  const Dataset ds = sample_dataset(law, default_truth(), 10000, 5);
  // W = sigma_w Z, so sd(W^2) = sqrt(2) sigma_w^2.
  const double width = 3.0 * std::sqrt(2.0) * 0.64 / std::sqrt(1e4);
  EXPECT_NEAR(empirical_information(ds, law), 0.64, width);
  EXPECT_THROW(empirical_information(sample_dataset(law, default_truth(), 0, 1), law),
               std::invalid_argument);
}

}  // namespace
}  // namespace semibvm
