#pragma once

#include "srtest/rng.hpp"
#include "srtest/sample.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <variant>
#include <vector>

namespace srtest {

struct CorrelationSpec {
  enum class Kind { identity, ar1 };
  Kind kind = Kind::identity;
  double rho = 0.0;
  Index p = 1;

  static CorrelationSpec identity(Index p) { return {Kind::identity, 0.0, p}; }
  static CorrelationSpec ar1(double rho, Index p) { return {Kind::ar1, rho, p}; }
};

/// Dense correlation matrix; ar1 entries are rho^{|j-k|}.
Eigen::MatrixXd build_correlation(const CorrelationSpec& spec);

/// Sum of squared entries, i.e. tr(R^2) for symmetric R.
double trace_r2_exact(const Eigen::MatrixXd& r);

struct NormalFamily {};
struct StudentTFamily {
  double nu = 3.0;
};
/// gamma N(mu, R) + (1 - gamma) N(mu, inflation R).
struct MixtureNormalFamily {
  double gamma = 0.8;
  double inflation = 9.0;
};

enum class Innovation {
  normal,
  gamma_half,      // first p/2 innovations (Gamma(8,1) - 8)/sqrt(8), the rest N(0,1)
  t3,
  normal_mixture,  // 0.8 N(0,1) + 0.2 N(0,9)
};

/// X_k = ||rho||^{-1} (rho_1 Z_k + ... + rho_T Z_{k+T-1}) + mu_k.
struct MovingAverageFamily {
  Innovation innovation = Innovation::normal;
  std::vector<double> coeffs;  // rho_1..rho_T
};

using Family = std::variant<NormalFamily, StudentTFamily, MixtureNormalFamily, MovingAverageFamily>;

enum class ScaleKind { unit, half_3_half_1, chi2_2_random };

/// Variance scales d_j^2. chi2_2_random draws from chi^2_2 once with `seed`.
Eigen::VectorXd make_variance_scales(ScaleKind kind, Index p, std::uint64_t seed = 0);

/// T coefficients from Uniform(2,3), fixed by `seed`.
std::vector<double> draw_ma_coefficients(Index order, std::uint64_t seed);

struct ScenarioSpec {
  Family family = NormalFamily{};
  CorrelationSpec correlation;   // elliptical families only
  Eigen::VectorXd variance_scales;  // d_j^2 of the scatter diagonal; elliptical only
  Eigen::VectorXd mean;          // length p

  Index p() const noexcept { return mean.size(); }
  bool elliptical() const noexcept { return !std::holds_alternative<MovingAverageFamily>(family); }

  /// Zero mean, unit scales.
  static ScenarioSpec elliptical_spec(Family family, CorrelationSpec correlation);
  static ScenarioSpec moving_average(Innovation innovation, std::vector<double> coeffs, Index p);
};

/// Covariance matrix Lambda of one observation.
Eigen::MatrixXd scenario_covariance(const ScenarioSpec& spec);

/// Prepared sampler: validates the spec and factors R once.
class ScenarioSampler {
 public:
  /// `root` may carry a precomputed symmetric square root of the correlation.
  explicit ScenarioSampler(ScenarioSpec spec,
                           std::shared_ptr<const Eigen::MatrixXd> root = nullptr);

  const ScenarioSpec& spec() const noexcept { return spec_; }
  const std::shared_ptr<const Eigen::MatrixXd>& root() const noexcept { return root_; }

  /// n i.i.d. rows; bitwise reproducible for a given seed.
  SampleMatrix sample(Index n, std::uint64_t seed) const;

  /// Spherical innovation eps with X = mu + D^{1/2} R^{1/2} eps (elliptical only).
  Eigen::VectorXd draw_innovation(Engine& eng) const;
  /// Maps an innovation to D^{-1/2}(X - mu) = R^{1/2} eps.
  Eigen::VectorXd correlate(const Eigen::VectorXd& eps) const;
  /// One draw of D^{-1/2}(X - mu). For moving-average specs D = diag(Lambda).
  Eigen::VectorXd draw_standardized(Engine& eng) const;

 private:
  void fill_row(Engine& eng, double* out) const;

  ScenarioSpec spec_;
  std::shared_ptr<const Eigen::MatrixXd> root_;  // null for identity correlation
  Eigen::VectorXd sqrt_scales_;
  Eigen::VectorXd ma_weights_;    // normalized coefficients
  double ma_sd_ = 1.0;            // sqrt of innovation variance
};

/// Symmetric eigendecomposition root of R; throws GeneratorError unless R is
/// positive definite.
std::shared_ptr<const Eigen::MatrixXd> correlation_root(const CorrelationSpec& spec);

SampleMatrix sample_scenario(const ScenarioSpec& spec, Index n, std::uint64_t seed);

struct ShiftSpec {
  enum class Normalization { scaled, raw };
  double sparsity = 0.5;  // fraction of coordinates left unshifted
  double eta = 0.5;
  Normalization normalization = Normalization::scaled;
};

/// Mean difference with the first p - k coordinates equal to a and the rest zero,
/// k = round(sparsity p). `trace_term` is tr(R^2) for scaled normalization
/// (sum_{nonzero} a^2 / d_j = eta sqrt(trace_term)) and tr(L1^2) + tr(L2^2) for raw
/// ((p - k) a^2 = eta sqrt(trace_term)).
Eigen::VectorXd build_shift(const ShiftSpec& spec, Index p, const Eigen::VectorXd& variance_scales,
                            double trace_term);

}  // namespace srtest
