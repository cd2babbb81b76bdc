#include "semibvm/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace semibvm {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

double CovariateLaw::cond_mean(double v) const {
  return amplitude_ * std::cos(kTwoPi * v);
}

double CovariateLaw::fourth_moment() const {
  // E cos^2 = 1/2, E cos^4 = 3/8, E Z^4 = 3.
  const double a2 = amplitude_ * amplitude_;
  const double s2 = residual_sd_ * residual_sd_;
  return 0.375 * a2 * a2 + 3.0 * a2 * s2 + 3.0 * s2 * s2;
}

double CovariateLaw::abs_cond_mean_expectation() const {
  return 2.0 * amplitude_ / std::numbers::pi;
}

Covariate CovariateLaw::draw(Rng& rng) const {
  const double v = rng.uniform();
  const double z = rng.normal();
  return {cond_mean(v) + residual_sd_ * z, v};
}

CovariateLaw make_covariate_law(double residual_sd) {
  if (!(residual_sd > 0.0)) {
    throw std::invalid_argument("make_covariate_law: residual_sd must be positive "
                                "(zero efficient information)");
  }
  if (residual_sd > 1.0) {
    throw std::invalid_argument("make_covariate_law: residual_sd > 1 cannot satisfy E U^2 = 1");
  }
  return CovariateLaw(std::sqrt(2.0 * (1.0 - residual_sd * residual_sd)), residual_sd);
}

GridLocation locate_on_grid(double v, std::size_t grid_size) {
  const double last = static_cast<double>(grid_size - 1);
  const double pos = std::clamp(v, 0.0, 1.0) * last;
  // Snap to a grid point when v is exactly (in floating point) j/(m-1).
  const double nearest = std::round(pos);
  if (nearest / last == v) {
    const auto j = static_cast<std::size_t>(nearest);
    if (j == grid_size - 1) return {j - 1, 1.0};
    return {j, 0.0};
  }
  auto j = static_cast<std::size_t>(std::floor(pos));
  if (j >= grid_size - 1) j = grid_size - 2;
  return {j, pos - static_cast<double>(j)};
}

NuisanceFunction::NuisanceFunction(std::vector<double> values) : values_(std::move(values)) {
  if (values_.size() < 2) {
    throw std::invalid_argument("NuisanceFunction: grid needs at least two points");
  }
  for (double x : values_) {
    if (!std::isfinite(x)) throw std::invalid_argument("NuisanceFunction: non-finite value");
  }
}

NuisanceFunction NuisanceFunction::zero(std::size_t grid_size) {
  return NuisanceFunction(std::vector<double>(grid_size, 0.0));
}

NuisanceFunction NuisanceFunction::tabulate(std::size_t grid_size,
                                            const std::function<double(double)>& f) {
  if (grid_size < 2) throw std::invalid_argument("NuisanceFunction: grid needs at least two points");
  std::vector<double> values(grid_size);
  for (std::size_t j = 0; j < grid_size; ++j) {
    values[j] = f(static_cast<double>(j) / static_cast<double>(grid_size - 1));
  }
  return NuisanceFunction(std::move(values));
}

double NuisanceFunction::grid_point(std::size_t j) const {
  return static_cast<double>(j) / static_cast<double>(values_.size() - 1);
}

double NuisanceFunction::operator()(double v) const {
  const GridLocation loc = locate_on_grid(v, values_.size());
  if (loc.weight == 0.0) return values_[loc.index];
  if (loc.weight == 1.0) return values_[loc.index + 1];
  return (1.0 - loc.weight) * values_[loc.index] + loc.weight * values_[loc.index + 1];
}

double NuisanceFunction::sup_norm() const {
  double s = 0.0;
  for (double x : values_) s = std::max(s, std::abs(x));
  return s;
}

namespace {
void require_same_grid(const NuisanceFunction& a, const NuisanceFunction& b) {
  if (a.grid_size() != b.grid_size()) {
    throw std::invalid_argument("NuisanceFunction: grid sizes differ (" +
                                std::to_string(a.grid_size()) + " vs " +
                                std::to_string(b.grid_size()) + ")");
  }
}
}  // namespace

NuisanceFunction& NuisanceFunction::operator+=(const NuisanceFunction& other) {
  require_same_grid(*this, other);
  for (std::size_t j = 0; j < values_.size(); ++j) values_[j] += other.values_[j];
  return *this;
}

NuisanceFunction& NuisanceFunction::operator-=(const NuisanceFunction& other) {
  require_same_grid(*this, other);
  for (std::size_t j = 0; j < values_.size(); ++j) values_[j] -= other.values_[j];
  return *this;
}

NuisanceFunction& NuisanceFunction::operator*=(double c) {
  for (double& x : values_) x *= c;
  return *this;
}

NuisanceFunction operator+(NuisanceFunction a, const NuisanceFunction& b) { return a += b; }
NuisanceFunction operator-(NuisanceFunction a, const NuisanceFunction& b) { return a -= b; }
NuisanceFunction operator*(double c, NuisanceFunction f) { return f *= c; }

double sup_distance(const NuisanceFunction& f, const NuisanceFunction& g) {
  // Both are piecewise linear, so the supremum is attained at a knot of one of them.
  double s = 0.0;
  for (std::size_t j = 0; j < f.grid_size(); ++j) {
    const double t = f.grid_point(j);
    s = std::max(s, std::abs(f.values()[j] - g(t)));
  }
  for (std::size_t j = 0; j < g.grid_size(); ++j) {
    const double t = g.grid_point(j);
    s = std::max(s, std::abs(f(t) - g.values()[j]));
  }
  return s;
}

Observation Dataset::observation(std::size_t i) const {
  const auto k = static_cast<Eigen::Index>(i);
  return {u[k], v[k], y[k]};
}

void Dataset::validate() const {
  if (u.size() != y.size() || v.size() != y.size()) {
    throw std::invalid_argument("Dataset: u, v, y lengths differ");
  }
  if (noise && noise->size() != y.size()) {
    throw std::invalid_argument("Dataset: noise length differs from n");
  }
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!(v[i] >= 0.0 && v[i] <= 1.0)) throw std::invalid_argument("Dataset: v outside [0,1]");
  }
}

Dataset sample_dataset(const CovariateLaw& law, const ModelPoint& truth, std::size_t n,
                       std::uint64_t seed) {
  Rng rng(seed);
  const auto size = static_cast<Eigen::Index>(n);
  Dataset ds{Eigen::VectorXd(size), Eigen::VectorXd(size), Eigen::VectorXd(size),
             Eigen::VectorXd(size)};
  for (Eigen::Index i = 0; i < size; ++i) {
    const Covariate x = law.draw(rng);
    const double e = ModelPoint::noise_sd * rng.normal();
    ds.u[i] = x.u;
    ds.v[i] = x.v;
    ds.y[i] = truth.theta * x.u + truth.eta(x.v) + e;
    (*ds.noise)[i] = e;
  }
  return ds;
}

double log_density_ratio(const Observation& x, const ModelPoint& p, const ModelPoint& ref) {
  const double r = x.y - p.theta * x.u - p.eta(x.v);
  const double r_ref = x.y - ref.theta * x.u - ref.eta(x.v);
  return -0.5 * r * r + 0.5 * r_ref * r_ref;
}

double efficient_score(const Observation& x, const CovariateLaw& law, const ModelPoint& truth) {
  const double e = x.y - truth.theta * x.u - truth.eta(x.v);
  return e * (x.u - law.cond_mean(x.v));
}

double empirical_information(const Dataset& ds, const CovariateLaw& law) {
  if (ds.size() == 0) throw std::invalid_argument("empirical_information: empty dataset");
  double s = 0.0;
  for (Eigen::Index i = 0; i < ds.u.size(); ++i) {
    const double w = ds.u[i] - law.cond_mean(ds.v[i]);
    s += w * w;
  }
  return s / static_cast<double>(ds.size());
}

}  // namespace semibvm
