#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "semibvm/rng.hpp"

namespace semibvm {

struct Covariate {
  double u;
  double v;
};

// Law of (U, V): V ~ Uniform[0,1], U = a cos(2 pi V) + sigma_w Z with Z
// standard normal. Standardized so that E U = 0 and E U^2 = 1, which pins
// a = sqrt(2 (1 - sigma_w^2)).
class CovariateLaw {
 public:
  double cond_mean_amplitude() const { return amplitude_; }
  double residual_sd() const { return residual_sd_; }

  /// m(v) = E[U | V = v].
  double cond_mean(double v) const;

  /// P(U - E[U|V])^2 = sigma_w^2.
  double efficient_information() const { return residual_sd_ * residual_sd_; }
  double second_moment() const { return 1.0; }
  double fourth_moment() const;
  /// E|m(V)| = 2a / pi.
  double abs_cond_mean_expectation() const;

  Covariate draw(Rng& rng) const;

 private:
  friend CovariateLaw make_covariate_law(double residual_sd);
  CovariateLaw(double amplitude, double residual_sd)
      : amplitude_(amplitude), residual_sd_(residual_sd) {}

  double amplitude_;
  double residual_sd_;
};

/// Throws std::invalid_argument unless residual_sd is in (0, 1].
CovariateLaw make_covariate_law(double residual_sd);

/// Position of a point of [0,1] on a uniform grid: value = (1-w) f[j] + w f[j+1].
struct GridLocation {
  std::size_t index;
  double weight;
};

GridLocation locate_on_grid(double v, std::size_t grid_size);

// A real function on [0,1] stored by its values at j/(m-1), j = 0..m-1, and
// evaluated by linear interpolation.
class NuisanceFunction {
 public:
  explicit NuisanceFunction(std::vector<double> values);

  static NuisanceFunction zero(std::size_t grid_size);
  static NuisanceFunction tabulate(std::size_t grid_size,
                                   const std::function<double(double)>& f);

  std::size_t grid_size() const { return values_.size(); }
  double grid_point(std::size_t j) const;
  std::span<const double> values() const { return values_; }

  double operator()(double v) const;

  double sup_norm() const;

  NuisanceFunction& operator+=(const NuisanceFunction& other);
  NuisanceFunction& operator-=(const NuisanceFunction& other);
  NuisanceFunction& operator*=(double c);

  friend bool operator==(const NuisanceFunction&, const NuisanceFunction&) = default;

 private:
  std::vector<double> values_;
};

// Arithmetic requires equal grid sizes.
NuisanceFunction operator+(NuisanceFunction a, const NuisanceFunction& b);
NuisanceFunction operator-(NuisanceFunction a, const NuisanceFunction& b);
NuisanceFunction operator*(double c, NuisanceFunction f);

/// sup over v in [0,1] of |f(v) - g(v)|; grids may differ.
double sup_distance(const NuisanceFunction& f, const NuisanceFunction& g);

/// A parameter value (theta, eta); the noise standard deviation is fixed at 1.
struct ModelPoint {
  static constexpr double noise_sd = 1.0;

  double theta;
  NuisanceFunction eta;
};

struct Observation {
  double u;
  double v;
  double y;
};

// n triplets (U_i, V_i, Y_i). When produced by simulation, `noise` holds the
// realized errors e_i = Y_i - theta0 U_i - eta0(V_i).
struct Dataset {
  Eigen::VectorXd u;
  Eigen::VectorXd v;
  Eigen::VectorXd y;
  std::optional<Eigen::VectorXd> noise;

  std::size_t size() const { return static_cast<std::size_t>(y.size()); }
  Observation observation(std::size_t i) const;
  /// Throws std::invalid_argument on inconsistent lengths or v outside [0,1].
  void validate() const;
};

Dataset sample_dataset(const CovariateLaw& law, const ModelPoint& truth, std::size_t n,
                       std::uint64_t seed);

/// log p(x) - log p_ref(x) for the unit-variance Gaussian regression model.
double log_density_ratio(const Observation& x, const ModelPoint& p, const ModelPoint& ref);

/// (y - theta0 u - eta0(v)) (u - m(v)).
double efficient_score(const Observation& x, const CovariateLaw& law, const ModelPoint& truth);

inline double efficient_information(const CovariateLaw& law) {
  return law.efficient_information();
}

/// (1/n) sum (u_i - m(v_i))^2; throws on an empty dataset.
double empirical_information(const Dataset& ds, const CovariateLaw& law);

}  // namespace semibvm
