#pragma once

#include "srtest/montecarlo.hpp"
#include "srtest/sample.hpp"
#include "srtest/scenario.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>

namespace srtest {

struct PowerParams {
  Index n1 = 0;
  Index n2 = 0;
  Index p = 0;
  double kappa = 0.5;       // n1 / (n1 + n2)
  double c0 = 0.0;          // E ||D^{-1/2}(X_ij - X_ik)||^{-1}
  double delta_quad = 0.0;  // (theta1 - theta2)^T D^{-1} (theta1 - theta2)
  double trace_r2 = 0.0;
  double eps_norm2 = 0.0;   // E ||eps||^2, PA formula only
  double alpha = 0.05;

  /// Throws InvalidInput on out-of-range fields. eps_norm2 is checked by the PA formula.
  void validate() const;
};

/// Phi(-z_alpha + 2 c0^2 p n kappa(1-kappa) delta_quad / sqrt(2 tr R^2)), n = n1 + n2.
double theoretical_power_sr(const PowerParams& params);

/// Phi(-z_alpha + n p kappa(1-kappa) delta_quad / (E||eps||^2 sqrt(2 tr R^2))).
double theoretical_power_pa(const PowerParams& params);

/// Monte Carlo c0 from pairs of independent standardized draws. Needs reps >= 1000.
McEstimate estimate_c0(const ScenarioSampler& sampler, std::size_t reps, std::uint64_t seed,
                       int threads = 1);

/// Monte Carlo E||eps||^2 with eps = Sigma^{-1/2}(X - mu); Sigma is the scatter for
/// elliptical specs and the covariance for moving-average specs.
McEstimate estimate_eps_norm2(const ScenarioSampler& sampler, std::size_t reps,
                              std::uint64_t seed, int threads = 1);

/// Closed-form E||eps||^2 = p E(s^2) for elliptical specs with radial mixing
/// variable s; empty for moving-average specs.
std::optional<double> exact_eps_norm2(const ScenarioSpec& spec);

struct AreEstimate {
  double are = 0.0;
  double std_error = 0.0;  // delta method; from c0 alone when E||eps||^2 is exact
  double c0 = 0.0;
  double eps_norm2 = 0.0;
  std::size_t draws = 0;
};

/// 2 c0^2 E||eps||^2. c0 is always estimated by Monte Carlo; E||eps||^2 uses the
/// closed form when one exists (its sample mean has infinite variance for t with
/// nu <= 4) and otherwise joins c0 in one joint run. Needs reps >= 10^4.
AreEstimate estimate_are(const ScenarioSampler& sampler, std::size_t reps, std::uint64_t seed,
                         int threads = 1);

/// E||E(U(v1 - v2) | v1)||^2 by nested Monte Carlo on standardized draws. Each outer
/// term subtracts the inner sampling variance sum_j s_j^2 / inner_reps. Needs both
/// counts >= 100.
McEstimate estimate_tau_f(const ScenarioSampler& sampler, std::size_t outer_reps,
                          std::size_t inner_reps, std::uint64_t seed, int threads = 1);

/// Shape correlation R of a scenario: the correlation spec for elliptical families,
/// diag(Lambda)^{-1/2} Lambda diag(Lambda)^{-1/2} for moving-average ones.
Eigen::MatrixXd scenario_shape(const ScenarioSpec& spec);

/// Diagonal D in the metric of c0: scatter scales for elliptical families,
/// diag(Lambda) for moving-average ones.
Eigen::VectorXd scenario_diag(const ScenarioSpec& spec);

struct ScenarioPower {
  PowerParams params;
  McEstimate c0;
  McEstimate eps_norm2;
  double beta_sr = 0.0;
  double beta_pa = 0.0;
};

/// Both power formulas for a null scenario, a mean difference and sample sizes,
/// with c0 estimated by Monte Carlo and E||eps||^2 as in estimate_are.
ScenarioPower scenario_power(const ScenarioSpec& spec, Index n1, Index n2,
                             const Eigen::VectorXd& delta, double alpha, std::size_t reps,
                             std::uint64_t seed, int threads = 1);

}  // namespace srtest
