#include "srtest/scenario.hpp"

#include "srtest/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>
#include <string>

namespace srtest {

Eigen::MatrixXd build_correlation(const CorrelationSpec& spec) {
  if (spec.p < 1) throw InvalidInput("correlation dimension must be positive");
  if (spec.kind == CorrelationSpec::Kind::identity) return Eigen::MatrixXd::Identity(spec.p, spec.p);
  if (!(std::abs(spec.rho) < 1.0)) throw InvalidInput("ar1 rho must lie in (-1,1)");
  Eigen::MatrixXd r(spec.p, spec.p);
  for (Index j = 0; j < spec.p; ++j)
    for (Index k = 0; k < spec.p; ++k)
      r(j, k) = std::pow(spec.rho, static_cast<double>(std::abs(j - k)));
  return r;
}

double trace_r2_exact(const Eigen::MatrixXd& r) {
  if (r.rows() != r.cols()) throw InvalidInput("trace_r2_exact: matrix must be square");
  return r.squaredNorm();
}

Eigen::VectorXd make_variance_scales(ScaleKind kind, Index p, std::uint64_t seed) {
  Eigen::VectorXd d = Eigen::VectorXd::Ones(p);
  switch (kind) {
    case ScaleKind::unit:
      break;
    case ScaleKind::half_3_half_1:
      d.head(p / 2).setConstant(3.0);
      break;
    case ScaleKind::chi2_2_random: {
      Engine eng = make_engine(seed);
      std::chi_squared_distribution<double> chi2(2.0);
      for (Index j = 0; j < p; ++j) {
        do d[j] = chi2(eng);
        while (d[j] <= 0.0);
      }
      break;
    }
  }
  return d;
}

std::vector<double> draw_ma_coefficients(Index order, std::uint64_t seed) {
  if (order < 1) throw InvalidInput("moving-average order must be positive");
  Engine eng = make_engine(seed);
  std::uniform_real_distribution<double> unif(2.0, 3.0);
  std::vector<double> c(static_cast<std::size_t>(order));
  for (auto& v : c) v = unif(eng);
  return c;
}

ScenarioSpec ScenarioSpec::elliptical_spec(Family family, CorrelationSpec correlation) {
  ScenarioSpec s;
  s.family = std::move(family);
  s.correlation = correlation;
  s.variance_scales = Eigen::VectorXd::Ones(correlation.p);
  s.mean = Eigen::VectorXd::Zero(correlation.p);
  return s;
}

ScenarioSpec ScenarioSpec::moving_average(Innovation innovation, std::vector<double> coeffs,
                                          Index p) {
  ScenarioSpec s;
  s.family = MovingAverageFamily{innovation, std::move(coeffs)};
  s.correlation = CorrelationSpec::identity(p);
  s.variance_scales = Eigen::VectorXd::Ones(p);
  s.mean = Eigen::VectorXd::Zero(p);
  return s;
}

namespace {

double innovation_variance(Innovation innovation) {
  switch (innovation) {
    case Innovation::normal:
    case Innovation::gamma_half:
      return 1.0;
    case Innovation::t3:
      return 3.0;
    case Innovation::normal_mixture:
      return 0.8 + 0.2 * 9.0;
  }
  return 1.0;
}

void validate_spec(const ScenarioSpec& spec) {
  const Index p = spec.p();
  if (p < 1) throw InvalidInput("scenario mean must have at least one entry");
  if (!spec.mean.allFinite()) throw InvalidInput("scenario mean must be finite");
  if (const auto* ma = std::get_if<MovingAverageFamily>(&spec.family)) {
    if (ma->coeffs.empty()) throw InvalidInput("moving-average coefficients are empty");
    for (double c : ma->coeffs)
      if (!(c > 0.0) || !std::isfinite(c))
        throw InvalidInput("moving-average coefficients must be positive");
    return;
  }
  if (spec.correlation.p != p) throw DimensionMismatch("correlation dimension differs from mean");
  if (spec.variance_scales.size() != p)
    throw DimensionMismatch("variance scales length differs from mean");
  if (!spec.variance_scales.allFinite() || (spec.variance_scales.array() <= 0.0).any())
    throw InvalidInput("variance scales must be positive");
  if (const auto* t = std::get_if<StudentTFamily>(&spec.family); t && !(t->nu >= 3.0))
    throw InvalidInput("student-t degrees of freedom must be at least 3");
  if (const auto* m = std::get_if<MixtureNormalFamily>(&spec.family);
      m && !(m->gamma > 0.0 && m->gamma < 1.0 && m->inflation > 1.0))
    throw InvalidInput("mixture needs gamma in (0,1) and inflation > 1");
}

}  // namespace

Eigen::MatrixXd scenario_covariance(const ScenarioSpec& spec) {
  validate_spec(spec);
  const Index p = spec.p();
  if (const auto* ma = std::get_if<MovingAverageFamily>(&spec.family)) {
    const Eigen::Map<const Eigen::VectorXd> c(ma->coeffs.data(),
                                              static_cast<Index>(ma->coeffs.size()));
    const Eigen::VectorXd w = c / c.norm();
    const Index order = w.size();
    const double var = innovation_variance(ma->innovation);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(p, p);
    for (Index j = 0; j < p; ++j)
      for (Index k = 0; k < p; ++k) {
        const Index h = std::abs(j - k);
        if (h >= order) continue;
        cov(j, k) = var * w.head(order - h).dot(w.tail(order - h));
      }
    return cov;
  }
  double factor = 1.0;
  if (const auto* t = std::get_if<StudentTFamily>(&spec.family)) {
    factor = t->nu / (t->nu - 2.0);
  } else if (const auto* m = std::get_if<MixtureNormalFamily>(&spec.family)) {
    factor = m->gamma + (1.0 - m->gamma) * m->inflation;
  }
  const Eigen::VectorXd s = spec.variance_scales.cwiseSqrt();
  return factor * s.asDiagonal() * build_correlation(spec.correlation) * s.asDiagonal();
}

std::shared_ptr<const Eigen::MatrixXd> correlation_root(const CorrelationSpec& spec) {
  if (spec.kind == CorrelationSpec::Kind::identity) return nullptr;
  const Eigen::MatrixXd r = build_correlation(spec);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(r);
  if (eig.info() != Eigen::Success) throw GeneratorError("correlation eigendecomposition failed");
  if (!(eig.eigenvalues().minCoeff() > 0.0))
    throw GeneratorError("correlation matrix is not positive definite");
  const Eigen::MatrixXd& v = eig.eigenvectors();
  return std::make_shared<const Eigen::MatrixXd>(
      v * eig.eigenvalues().cwiseSqrt().asDiagonal() * v.transpose());
}

ScenarioSampler::ScenarioSampler(ScenarioSpec spec, std::shared_ptr<const Eigen::MatrixXd> root)
    : spec_(std::move(spec)) {
  validate_spec(spec_);
  if (const auto* ma = std::get_if<MovingAverageFamily>(&spec_.family)) {
    const Eigen::Map<const Eigen::VectorXd> c(ma->coeffs.data(),
                                              static_cast<Index>(ma->coeffs.size()));
    ma_weights_ = c / c.norm();
    ma_sd_ = std::sqrt(innovation_variance(ma->innovation));
    return;
  }
  sqrt_scales_ = spec_.variance_scales.cwiseSqrt();
  if (spec_.correlation.kind == CorrelationSpec::Kind::identity) return;
  if (root) {
    if (root->rows() != spec_.p() || root->cols() != spec_.p())
      throw DimensionMismatch("precomputed correlation root has the wrong size");
    root_ = std::move(root);
  } else {
    root_ = correlation_root(spec_.correlation);
  }
}

Eigen::VectorXd ScenarioSampler::draw_innovation(Engine& eng) const {
  if (!spec_.elliptical()) throw InvalidInput("innovations are defined for elliptical scenarios only");
  const Index p = spec_.p();
  std::normal_distribution<double> normal;
  Eigen::VectorXd eps(p);
  for (Index j = 0; j < p; ++j) eps[j] = normal(eng);
  double radial = 1.0;
  if (const auto* t = std::get_if<StudentTFamily>(&spec_.family)) {
    std::chi_squared_distribution<double> chi2(t->nu);
    double w = 0.0;
    do w = chi2(eng);
    while (w <= 0.0);
    radial = std::sqrt(t->nu / w);
  } else if (const auto* m = std::get_if<MixtureNormalFamily>(&spec_.family)) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    if (unif(eng) >= m->gamma) radial = std::sqrt(m->inflation);
  }
  return eps * radial;
}

Eigen::VectorXd ScenarioSampler::correlate(const Eigen::VectorXd& eps) const {
  if (!root_) return eps;
  return *root_ * eps;
}

void ScenarioSampler::fill_row(Engine& eng, double* out) const {
  const Index p = spec_.p();
  const auto& ma = std::get<MovingAverageFamily>(spec_.family);
  const Index order = ma_weights_.size();
  const Index len = p + order - 1;
  Eigen::VectorXd z(len);
  std::normal_distribution<double> normal;
  switch (ma.innovation) {
    case Innovation::normal:
      for (Index k = 0; k < len; ++k) z[k] = normal(eng);
      break;
    case Innovation::gamma_half: {
      std::gamma_distribution<double> gamma(8.0, 1.0);
      const double sd = std::sqrt(8.0);
      for (Index k = 0; k < len; ++k) z[k] = k < p / 2 ? (gamma(eng) - 8.0) / sd : normal(eng);
      break;
    }
    case Innovation::t3: {
      std::student_t_distribution<double> t(3.0);
      for (Index k = 0; k < len; ++k) z[k] = t(eng);
      break;
    }
    case Innovation::normal_mixture: {
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      for (Index k = 0; k < len; ++k) {
        const double sd = unif(eng) < 0.8 ? 1.0 : 3.0;
        z[k] = sd * normal(eng);
      }
      break;
    }
  }
  for (Index k = 0; k < p; ++k) out[k] = ma_weights_.dot(z.segment(k, order));
}

SampleMatrix ScenarioSampler::sample(Index n, std::uint64_t seed) const {
  if (n < 2) throw InvalidInput("sample size must be at least 2");
  const Index p = spec_.p();
  Engine eng = make_engine(seed);
  RowMatrix x(n, p);
  if (!spec_.elliptical()) {
    for (Index i = 0; i < n; ++i) fill_row(eng, x.row(i).data());
  } else {
    for (Index i = 0; i < n; ++i) x.row(i) = draw_innovation(eng).transpose();
    // Rows are eps_i^T; eps_i^T R^{1/2} = (R^{1/2} eps_i)^T since the root is symmetric.
    if (root_) x = (x * *root_).eval();
    x = x * sqrt_scales_.asDiagonal();
  }
  x.rowwise() += spec_.mean.transpose();
  return SampleMatrix(std::move(x));
}

Eigen::VectorXd ScenarioSampler::draw_standardized(Engine& eng) const {
  if (spec_.elliptical()) return correlate(draw_innovation(eng));
  Eigen::VectorXd x(spec_.p());
  fill_row(eng, x.data());
  return x / ma_sd_;
}

SampleMatrix sample_scenario(const ScenarioSpec& spec, Index n, std::uint64_t seed) {
  return ScenarioSampler(spec).sample(n, seed);
}

Eigen::VectorXd build_shift(const ShiftSpec& spec, Index p, const Eigen::VectorXd& variance_scales,
                            double trace_term) {
  if (p < 1) throw InvalidInput("shift dimension must be positive");
  if (!(spec.sparsity >= 0.0 && spec.sparsity <= 1.0))
    throw InvalidInput("shift sparsity must lie in [0,1]");
  if (!(spec.eta >= 0.0) || !std::isfinite(spec.eta))
    throw InvalidInput("shift eta must be non-negative");
  const Index zeros = std::lround(spec.sparsity * static_cast<double>(p));
  const Index nonzero = p - zeros;
  if (nonzero < 1) throw InvalidInput("shift has no nonzero coordinates");

  Eigen::VectorXd delta = Eigen::VectorXd::Zero(p);
  if (spec.eta == 0.0) return delta;
  if (!(trace_term > 0.0)) throw InvalidInput("shift trace term must be positive");
  const double target = spec.eta * std::sqrt(trace_term);
  double a = 0.0;
  if (spec.normalization == ShiftSpec::Normalization::scaled) {
    if (variance_scales.size() != p) throw DimensionMismatch("variance scales length differs from p");
    if ((variance_scales.array() <= 0.0).any()) throw InvalidInput("variance scales must be positive");
    a = std::sqrt(target / variance_scales.head(nonzero).cwiseInverse().sum());
  } else {
    a = std::sqrt(target / static_cast<double>(nonzero));
  }
  delta.head(nonzero).setConstant(a);
  return delta;
}

}  // namespace srtest
