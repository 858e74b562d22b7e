#include "srtest/theory.hpp"

#include "srtest/errors.hpp"
#include "srtest/signs.hpp"
#include "srtest/special.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

namespace srtest {

void PowerParams::validate() const {
  if (n1 < 2 || n2 < 2) throw InvalidInput("power: sample sizes must be at least 2");
  if (p < 1) throw InvalidInput("power: dimension must be positive");
  if (!(kappa > 0.0 && kappa < 1.0)) throw InvalidInput("power: kappa must lie in (0,1)");
  if (!(c0 > 0.0) || !std::isfinite(c0)) throw InvalidInput("power: c0 must be positive");
  if (!(delta_quad >= 0.0) || !std::isfinite(delta_quad))
    throw InvalidInput("power: delta_quad must be non-negative");
  if (!(trace_r2 > 0.0) || !std::isfinite(trace_r2))
    throw InvalidInput("power: trace_r2 must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("power: alpha must lie in (0,1)");
}

double theoretical_power_sr(const PowerParams& q) {
  q.validate();
  const double n = static_cast<double>(q.n1 + q.n2);
  const double drift = 2.0 * q.c0 * q.c0 * static_cast<double>(q.p) * n * q.kappa *
                       (1.0 - q.kappa) * q.delta_quad / std::sqrt(2.0 * q.trace_r2);
  return normal_cdf(-normal_upper_quantile(q.alpha) + drift);
}

double theoretical_power_pa(const PowerParams& q) {
  q.validate();
  if (!(q.eps_norm2 > 0.0) || !std::isfinite(q.eps_norm2))
    throw InvalidInput("power: eps_norm2 must be positive");
  const double n = static_cast<double>(q.n1 + q.n2);
  const double drift = n * static_cast<double>(q.p) * q.kappa * (1.0 - q.kappa) * q.delta_quad /
                       (q.eps_norm2 * std::sqrt(2.0 * q.trace_r2));
  return normal_cdf(-normal_upper_quantile(q.alpha) + drift);
}

Eigen::MatrixXd scenario_shape(const ScenarioSpec& spec) {
  if (spec.elliptical()) return build_correlation(spec.correlation);
  const Eigen::MatrixXd cov = scenario_covariance(spec);
  const Eigen::VectorXd s = cov.diagonal().cwiseSqrt().cwiseInverse();
  return s.asDiagonal() * cov * s.asDiagonal();
}

Eigen::VectorXd scenario_diag(const ScenarioSpec& spec) {
  if (spec.elliptical()) return spec.variance_scales;
  return scenario_covariance(spec).diagonal();
}

namespace {

void require_reps(std::size_t reps, std::size_t minimum, const char* what) {
  if (reps < minimum)
    throw InvalidInput(std::string(what) + " needs at least " + std::to_string(minimum) +
                       " Monte Carlo draws");
}

// Draws (standardized v, innovation eps) pairs with v = D^{-1/2}(X - mu) and
// eps = R^{-1/2} v.
class InnovationSource {
 public:
  explicit InnovationSource(const ScenarioSampler& sampler) : sampler_(sampler) {
    if (sampler.spec().elliptical()) return;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(scenario_shape(sampler.spec()));
    if (eig.info() != Eigen::Success || !(eig.eigenvalues().minCoeff() > 0.0))
      throw GeneratorError("moving-average covariance is not positive definite");
    const Eigen::MatrixXd& v = eig.eigenvectors();
    inv_root_ = std::make_shared<Eigen::MatrixXd>(
        v * eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() * v.transpose());
  }

  void draw(Engine& eng, Eigen::VectorXd& v, Eigen::VectorXd& eps) const {
    if (!inv_root_) {
      eps = sampler_.draw_innovation(eng);
      v = sampler_.correlate(eps);
    } else {
      v = sampler_.draw_standardized(eng);
      eps = *inv_root_ * v;
    }
  }

 private:
  const ScenarioSampler& sampler_;
  std::shared_ptr<Eigen::MatrixXd> inv_root_;
};

}  // namespace

McEstimate estimate_c0(const ScenarioSampler& sampler, std::size_t reps, std::uint64_t seed,
                       int threads) {
  require_reps(reps, 1000, "estimate_c0");
  return monte_carlo_mean(reps, seed, threads, [&](Engine& eng) {
    const Eigen::VectorXd a = sampler.draw_standardized(eng);
    const Eigen::VectorXd b = sampler.draw_standardized(eng);
    return 1.0 / (a - b).norm();
  });
}

McEstimate estimate_eps_norm2(const ScenarioSampler& sampler, std::size_t reps,
                              std::uint64_t seed, int threads) {
  require_reps(reps, 1000, "estimate_eps_norm2");
  const InnovationSource source(sampler);
  return monte_carlo_mean(reps, seed, threads, [&](Engine& eng) {
    Eigen::VectorXd v, eps;
    source.draw(eng, v, eps);
    return eps.squaredNorm();
  });
}

std::optional<double> exact_eps_norm2(const ScenarioSpec& spec) {
  const double p = static_cast<double>(spec.p());
  if (std::holds_alternative<NormalFamily>(spec.family)) return p;
  if (const auto* t = std::get_if<StudentTFamily>(&spec.family)) return p * t->nu / (t->nu - 2.0);
  if (const auto* m = std::get_if<MixtureNormalFamily>(&spec.family))
    return p * (m->gamma + (1.0 - m->gamma) * m->inflation);
  return std::nullopt;
}

AreEstimate estimate_are(const ScenarioSampler& sampler, std::size_t reps, std::uint64_t seed,
                         int threads) {
  require_reps(reps, 10000, "estimate_are");
  if (const auto exact = exact_eps_norm2(sampler.spec())) {
    const McEstimate c0 = estimate_c0(sampler, reps, seed, threads);
    const double are = 2.0 * c0.mean * c0.mean * *exact;
    return {are, 4.0 * c0.mean * *exact * c0.std_error, c0.mean, *exact, c0.draws};
  }
  const InnovationSource source(sampler);
  const auto acc = monte_carlo_moments<2>(reps, seed, threads, [&](Engine& eng) {
    Eigen::VectorXd v1, e1, v2, e2;
    source.draw(eng, v1, e1);
    source.draw(eng, v2, e2);
    return std::array<double, 2>{1.0 / (v1 - v2).norm(),
                                 0.5 * (e1.squaredNorm() + e2.squaredNorm())};
  });
  const double a = acc.mean[0];
  const double b = acc.mean[1];
  // Gradient of 2 a^2 b.
  const double ga = 4.0 * a * b;
  const double gb = 2.0 * a * a;
  const double var = ga * ga * acc.mean_covariance(0, 0) + 2.0 * ga * gb * acc.mean_covariance(0, 1) +
                     gb * gb * acc.mean_covariance(1, 1);
  return {2.0 * a * a * b, std::sqrt(std::max(var, 0.0)), a, b, acc.count};
}

McEstimate estimate_tau_f(const ScenarioSampler& sampler, std::size_t outer_reps,
                          std::size_t inner_reps, std::uint64_t seed, int threads) {
  require_reps(outer_reps, 100, "estimate_tau_f (outer)");
  require_reps(inner_reps, 100, "estimate_tau_f (inner)");
  const Index p = sampler.spec().p();
  const double m = static_cast<double>(inner_reps);
  return monte_carlo_mean(outer_reps, seed, threads, [&](Engine& eng) {
    const Eigen::VectorXd v1 = sampler.draw_standardized(eng);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd sum_sq = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd u(p);
    for (std::size_t k = 0; k < inner_reps; ++k) {
      const Eigen::VectorXd v2 = sampler.draw_standardized(eng);
      detail::sign_of_difference(v1.data(), v2.data(), u.data(), p);
      sum += u;
      sum_sq += u.cwiseAbs2();
    }
    const Eigen::VectorXd mean = sum / m;
    const double inner_var = (sum_sq.sum() - m * mean.squaredNorm()) / (m - 1.0);
    return mean.squaredNorm() - inner_var / m;
  });
}

ScenarioPower scenario_power(const ScenarioSpec& spec, Index n1, Index n2,
                             const Eigen::VectorXd& delta, double alpha, std::size_t reps,
                             std::uint64_t seed, int threads) {
  if (delta.size() != spec.p()) throw DimensionMismatch("shift length differs from p");
  const ScenarioSampler sampler(spec);
  ScenarioPower out;
  out.c0 = estimate_c0(sampler, reps, derive_seed(seed, {1}), threads);
  if (const auto exact = exact_eps_norm2(spec)) out.eps_norm2 = {*exact, 0.0, 0};
  else out.eps_norm2 = estimate_eps_norm2(sampler, reps, derive_seed(seed, {2}), threads);

  PowerParams& q = out.params;
  q.n1 = n1;
  q.n2 = n2;
  q.p = spec.p();
  q.kappa = static_cast<double>(n1) / static_cast<double>(n1 + n2);
  q.c0 = out.c0.mean;
  q.delta_quad = delta.cwiseAbs2().cwiseQuotient(scenario_diag(spec)).sum();
  q.trace_r2 = trace_r2_exact(scenario_shape(spec));
  q.eps_norm2 = out.eps_norm2.mean;
  q.alpha = alpha;
  out.beta_sr = theoretical_power_sr(q);
  out.beta_pa = theoretical_power_pa(q);
  return out;
}

}  // namespace srtest
