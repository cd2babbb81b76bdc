#pragma once

#include <cstddef>
#include <cstdint>
#include <variant>
#include <vector>

#include "semibvm/gp_prior.hpp"
#include "semibvm/model.hpp"
#include "semibvm/posterior.hpp"
#include "semibvm/stats.hpp"

namespace semibvm {

/// Localized posterior against its efficient normal limit, for one (n, seed).
struct BvmDiagnostics {
  std::size_t n = 0;
  double delta_n = 0.0;
  double info_tilde = 0.0;
  double localized_post_mean = 0.0;  // sqrt(n) (mean - theta0)
  double localized_post_var = 0.0;   // n variance
  double tv_gap = 0.0;

  friend bool operator==(const BvmDiagnostics&, const BvmDiagnostics&) = default;
};

// log s_n(h)/s_n(0) = linear h + quadratic h^2.
struct LanCoefficients {
  double linear = 0.0;
  double quadratic = 0.0;

  double log_ratio(double h) const { return linear * h + quadratic * h * h; }
};

/// I^{-1} n^{-1/2} sum e_i (u_i - m(v_i)) from the stored noise; throws
/// std::invalid_argument when the dataset carries no noise or is empty.
double delta_n(const Dataset& ds, const CovariateLaw& law, const ModelPoint& truth);

/// Total variation distance between N(m1, v1) and N(m2, v2).
double tv_normals(double m1, double v1, double m2, double v2);

BvmDiagnostics bvm_gap(const MarginalThetaPosterior& mp, double delta, double info, std::size_t n,
                       double theta0);

// Fixed Monte-Carlo sample of covariates shared by several expectations.
struct CovariateSample {
  std::vector<double> u;
  std::vector<double> v;

  static CovariateSample draw(const CovariateLaw& law, std::size_t count, std::uint64_t seed);
  std::size_t size() const { return v.size(); }
};

/// KL(P_truth || P_p) = (1/2) E((theta - theta0) U + (eta - eta0)(V))^2, by MC over covariates.
McEstimate kl_divergence(const ModelPoint& p, const ModelPoint& truth, const CovariateLaw& law,
                         std::size_t mc_draws, std::uint64_t seed);
McEstimate kl_divergence(const ModelPoint& p, const ModelPoint& truth,
                         const CovariateSample& sample);

/// eta*(theta) = eta0 - (theta - theta0) m, tabulated on eta0's grid.
NuisanceFunction least_favorable_eta(double theta, const ModelPoint& truth,
                                     const CovariateLaw& law);

/// theta0 - E[m(V) (eta - eta0)(V)], by Gauss-Legendre quadrature over V.
double misspecified_theta_star(const NuisanceFunction& eta, const ModelPoint& truth,
                               const CovariateLaw& law);

/// Log-likelihood ratio along the zeta-translated least-favorable submodel at
/// theta0 + h/sqrt(n), minus its LAN expansion h n^{-1/2} sum g_zeta - h^2 I / 2.
double lan_remainder(const Dataset& ds, double h, const NuisanceFunction& zeta,
                     const ModelPoint& truth, const CovariateLaw& law);

struct HellingerEstimate {
  double distance = 0.0;
  McEstimate squared;
};

/// H^2 = 1 - E exp(-Delta^2 / 8), Delta = (theta1 - theta2) U + (eta1 - eta2)(V).
HellingerEstimate hellinger_distance(const ModelPoint& p1, const ModelPoint& p2,
                                     const CovariateLaw& law, std::size_t mc_draws,
                                     std::uint64_t seed);
HellingerEstimate hellinger_distance(const ModelPoint& p1, const ModelPoint& p2,
                                     const CovariateSample& sample);

/// Moments of log(p_{theta0,eta}/p_{theta0,eta0}) under the truth: the KL
/// divergence and the second moment used in K(rho) membership.
struct KlNeighborhoodStats {
  McEstimate kl;
  McEstimate second_moment;

  bool member(double rho) const {
    return kl.value <= rho * rho && second_moment.value <= rho * rho;
  }
};

KlNeighborhoodStats kl_neighborhood_stats(const NuisanceFunction& eta, const ModelPoint& truth,
                                          const CovariateLaw& law, std::size_t mc_draws,
                                          std::uint64_t seed);

LanCoefficients integral_lan_coefficients(const Dataset& ds, const GpPriorSpec& spec,
                                          double theta0);

// Local parameter for the domination diagnostic: either a fixed h, or the
// least-squares direction sqrt(n) sum e W / sum W^2 computed from each
// simulated sample and clamped to [-clamp, clamp].
struct PlugInDirection {
  double clamp = 2.0;
};
using LocalParameter = std::variant<double, PlugInDirection>;

struct DominationEstimate {
  double value = 0.0;                  // max over the probe set
  std::vector<McEstimate> per_zeta;
};

/// MC estimate of sup_zeta Q^n_{theta0,zeta} prod q_{theta_n(h),zeta}/q_{theta0,zeta}
/// over a finite probe set. Throws std::invalid_argument for an empty set or a
/// probe with r_H(zeta, 0) >= rho.
DominationEstimate estimate_Un(const CovariateLaw& law, const ModelPoint& truth,
                               const std::vector<NuisanceFunction>& zeta_set, double rho,
                               LocalParameter h, std::size_t n, std::size_t mc_reps,
                               std::uint64_t seed);

}  // namespace semibvm
