#include "srtest/signs.hpp"

#include "srtest/errors.hpp"

#include <cmath>
#include <random>
#include <string>

namespace srtest {

Eigen::VectorXd spatial_sign(const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (!x.allFinite()) throw InvalidInput("spatial_sign: non-finite input");
  Eigen::VectorXd out(x.size());
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(x.size());
  detail::sign_of_difference(x.data(), zero.data(), out.data(), x.size());
  return out;
}

Eigen::VectorXd spatial_rank(const SampleMatrix& sample, Index j, const DiagScale& scale) {
  if (j < 0 || j >= sample.n()) throw InvalidInput("spatial_rank: row index out of range");
  const RowMatrix y = scaled_rows(sample, scale);
  const Index p = sample.p();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd buf(p);
  for (Index k = 0; k < sample.n(); ++k) {
    detail::sign_of_difference(y.row(j).data(), y.row(k).data(), buf.data(), p);
    sum += buf;
  }
  return sum / static_cast<double>(sample.n());
}

RowMatrix spatial_ranks(const RowMatrix& y) {
  const Index n = y.rows();
  const Index p = y.cols();
  RowMatrix ranks = RowMatrix::Zero(n, p);
  Eigen::VectorXd buf(p);
  for (Index i = 0; i < n; ++i) {
    for (Index k = i + 1; k < n; ++k) {
      detail::sign_of_difference(y.row(i).data(), y.row(k).data(), buf.data(), p);
      ranks.row(i) += buf.transpose();
      ranks.row(k) -= buf.transpose();
    }
  }
  ranks /= static_cast<double>(n);
  return ranks;
}

namespace {

Eigen::VectorXd normalize_trace(const Eigen::VectorXd& d) {
  const double p = static_cast<double>(d.size());
  return (d * p) / d.sum();
}

}  // namespace

ScaleFit estimate_diag_scale(const SampleMatrix& sample, const FixedPointConfig& cfg,
                             const DiagScale* start) {
  cfg.validate();
  const Index n = sample.n();
  const Index p = sample.p();
  if (n < 3) throw DegenerateInput("scale estimation needs at least 3 rows");

  const RowMatrix& x = sample.data();
  const Eigen::RowVectorXd mean = x.colwise().mean();
  Eigen::VectorXd variances(p);
  for (Index j = 0; j < p; ++j) {
    if (x.col(j).maxCoeff() == x.col(j).minCoeff())
      throw DegenerateInput("column " + std::to_string(j) + " has zero spread");
    variances[j] = (x.col(j).array() - mean[j]).square().sum() / static_cast<double>(n - 1);
  }

  if (start && start->size() != p) throw DimensionMismatch("starting scale length differs from p");
  Eigen::VectorXd d = start                                         ? start->values()
                      : cfg.init == ScaleInit::sample_variance ? normalize_trace(variances)
                                                               : Eigen::VectorXd::Ones(p);

  // Signs ignore a common factor, so the centred data are rescaled to unit max for
  // safe squaring. Squared pair differences are fixed across iterations; each
  // iteration then needs one product for the distances and one for the ranks.
  RowMatrix z = x.rowwise() - mean;
  const double big = z.cwiseAbs().maxCoeff();
  z /= big;
  const Index pairs = n * (n - 1) / 2;
  RowMatrix sq(pairs, p);
  {
    Index k = 0;
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j, ++k) sq.row(k) = (z.row(i) - z.row(j)).array().square();
  }
  Eigen::MatrixXd c(n, n);
  double residual = 0.0;
  for (int iter = 1; iter <= cfg.max_iter; ++iter) {
    const Eigen::VectorXd dist2 = sq * d.cwiseInverse();
    c.setZero();
    Index k = 0;
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j, ++k)
        if (dist2[k] > 0.0) c(i, j) = c(j, i) = 1.0 / std::sqrt(dist2[k]);
    // Row i of the unscaled ranks is sum_k c_ik (z_i - z_k).
    const RowMatrix ranks = c.rowwise().sum().asDiagonal() * z - c * z;
    const Eigen::VectorXd m = (ranks.array().square().colwise().mean().transpose() /
                               (d.array() * static_cast<double>(n * n)))
                                  .matrix();
    const double m_bar = m.mean();
    if (!(m_bar > 0.0)) throw DegenerateInput("all spatial ranks vanish");
    residual = ((m.array() - m_bar).abs() / m_bar).maxCoeff();

    const Eigen::VectorXd next = normalize_trace(d.cwiseProduct(m));
    const double change = ((next - d).array().abs() / d.array()).maxCoeff();
    if (change < cfg.tol && residual < cfg.tol) return {DiagScale(d), iter, residual};
    d = next;
  }
  throw ConvergenceError("diagonal scale recursion did not converge in " +
                             std::to_string(cfg.max_iter) + " iterations (residual " +
                             std::to_string(residual) + ")",
                         std::vector<double>(d.data(), d.data() + d.size()), residual,
                         cfg.max_iter);
}

SignBlock::SignBlock(Index rows_a, Index rows_b, RowMatrix signs)
    : rows_a_(rows_a), rows_b_(rows_b), signs_(std::move(signs)) {
  if (signs_.rows() != rows_a_ * rows_b_) throw DimensionMismatch("sign block shape");
}

SignBlock pairwise_sign_block(const SampleMatrix& a, const SampleMatrix& b,
                              const DiagScale& scale, int threads) {
  if (a.p() != b.p()) throw DimensionMismatch("pairwise_sign_block: samples differ in p");
  const RowMatrix ya = scaled_rows(a, scale);
  const RowMatrix yb = scaled_rows(b, scale);
  const Index na = a.n();
  const Index nb = b.n();
  const Index p = a.p();
  RowMatrix signs(na * nb, p);
  parallel_for(static_cast<std::size_t>(na), threads, [&](std::size_t ii) {
    const auto i = static_cast<Index>(ii);
    for (Index s = 0; s < nb; ++s)
      detail::sign_of_difference(ya.row(i).data(), yb.row(s).data(),
                                 signs.row(i * nb + s).data(), p);
  });
  return SignBlock(na, nb, std::move(signs));
}

namespace {

void require_symmetric(const Eigen::MatrixXd& m, const char* who) {
  if (m.rows() != m.cols() || m.rows() < 1)
    throw InvalidInput(std::string(who) + ": matrix must be square");
  if (!m.allFinite()) throw InvalidInput(std::string(who) + ": non-finite matrix");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw InvalidInput(std::string(who) + ": matrix must be symmetric");
}

}  // namespace

double sphere_quadform_moment2(const Eigen::MatrixXd& m) {
  require_symmetric(m, "sphere_quadform_moment2");
  const double p = static_cast<double>(m.rows());
  const double tr = m.trace();
  const double tr_sq = (m * m).trace();
  return (tr * tr + 2.0 * tr_sq) / (p * p + 2.0 * p);
}

double sphere_bilinear_moment4(const Eigen::MatrixXd& m) {
  require_symmetric(m, "sphere_bilinear_moment4");
  const double p = static_cast<double>(m.rows());
  const Eigen::MatrixXd m2 = m * m;
  const double tr2 = m2.trace();
  const double tr4 = (m2 * m2).trace();
  return 3.0 * (tr2 * tr2 + 2.0 * tr4) / (p * p * (p + 2.0) * (p + 2.0));
}

Eigen::VectorXd uniform_sphere(Index p, Engine& eng) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd z(p);
  double ss = 0.0;
  do {
    for (Index j = 0; j < p; ++j) z[j] = normal(eng);
    ss = z.squaredNorm();
  } while (ss == 0.0);
  return z / std::sqrt(ss);
}

McEstimate sphere_quadform_moment2_mc(const Eigen::MatrixXd& m, std::size_t draws,
                                      std::uint64_t seed, int threads) {
  require_symmetric(m, "sphere_quadform_moment2_mc");
  return monte_carlo_mean(draws, seed, threads, [&](Engine& eng) {
    const Eigen::VectorXd u = uniform_sphere(m.rows(), eng);
    const double q = u.dot(m * u);
    return q * q;
  });
}

McEstimate sphere_bilinear_moment4_mc(const Eigen::MatrixXd& m, std::size_t draws,
                                      std::uint64_t seed, int threads) {
  require_symmetric(m, "sphere_bilinear_moment4_mc");
  return monte_carlo_mean(draws, seed, threads, [&](Engine& eng) {
    const Eigen::VectorXd u1 = uniform_sphere(m.rows(), eng);
    const Eigen::VectorXd u2 = uniform_sphere(m.rows(), eng);
    const double b = u1.dot(m * u2);
    return b * b * b * b;
  });
}

}  // namespace srtest
