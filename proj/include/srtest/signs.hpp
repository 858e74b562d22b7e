#pragma once

#include "srtest/montecarlo.hpp"
#include "srtest/rng.hpp"
#include "srtest/sample.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace srtest {

/// U(x) = x/||x|| for x != 0, the zero vector otherwise.
Eigen::VectorXd spatial_sign(const Eigen::Ref<const Eigen::VectorXd>& x);

/// Within-sample spatial rank of row j (0-based):
/// (1/n) sum_k U(D^{-1/2}(X_j - X_k)), the k = j term included as zero.
Eigen::VectorXd spatial_rank(const SampleMatrix& sample, Index j, const DiagScale& scale);

/// Spatial ranks of every row of an already-scaled sample, one per row.
RowMatrix spatial_ranks(const RowMatrix& scaled);

struct ScaleFit {
  DiagScale scale;
  int iterations = 0;
  // max_j |m_j - mean(m)| / mean(m) with m = diag((1/n) sum_j R_j R_j^T) at `scale`.
  double residual = 0.0;
};

/// Diagonal scale D solving diag{(1/n) sum_j R(D^{-1/2}X_j) R(D^{-1/2}X_j)^T} ∝ I by the
/// recursion D <- D^{1/2} diag{...} D^{1/2}, D <- p D / tr(D).
///
/// Iterates until both the relative change between successive iterates and the
/// fixed-point residual fall below cfg.tol, and returns the iterate at which the
/// residual was verified.
///
/// `start`, when given, replaces cfg.init as the first iterate (used to warm-start
/// leave-out refits from the full-sample fit).
///
/// Throws DegenerateInput when n < 3 or a column has zero spread, and
/// ConvergenceError (carrying the last iterate) after cfg.max_iter steps.
ScaleFit estimate_diag_scale(const SampleMatrix& sample, const FixedPointConfig& cfg = {},
                             const DiagScale* start = nullptr);

/// All n_A × n_B sign vectors U(D^{-1/2}(A_i - B_s)), stored row (i * n_B + s).
class SignBlock {
 public:
  SignBlock(Index rows_a, Index rows_b, RowMatrix signs);

  Index rows_a() const noexcept { return rows_a_; }
  Index rows_b() const noexcept { return rows_b_; }
  Index p() const noexcept { return signs_.cols(); }
  auto sign(Index i, Index s) const { return signs_.row(i * rows_b_ + s); }
  const RowMatrix& matrix() const noexcept { return signs_; }

 private:
  Index rows_a_;
  Index rows_b_;
  RowMatrix signs_;
};

/// Each entry is computed independently, so the block is bitwise identical
/// for any thread count.
SignBlock pairwise_sign_block(const SampleMatrix& a, const SampleMatrix& b,
                              const DiagScale& scale, int threads = 1);

/// E(u^T M u)^2 for u uniform on the unit sphere in R^p:
/// {tr^2(M) + 2 tr(M^2)} / (p^2 + 2p).
double sphere_quadform_moment2(const Eigen::MatrixXd& m);

/// E(u1^T M u2)^4 for independent uniform u1, u2:
/// 3 {tr^2(M^2) + 2 tr(M^4)} / {p^2 (p+2)^2}.
double sphere_bilinear_moment4(const Eigen::MatrixXd& m);

/// z/||z|| with z standard normal.
Eigen::VectorXd uniform_sphere(Index p, Engine& eng);

McEstimate sphere_quadform_moment2_mc(const Eigen::MatrixXd& m, std::size_t draws,
                                      std::uint64_t seed, int threads = 1);
McEstimate sphere_bilinear_moment4_mc(const Eigen::MatrixXd& m, std::size_t draws,
                                      std::uint64_t seed, int threads = 1);

namespace detail {

/// out = U(a - b) over p entries; returns ||a - b||.
inline double sign_of_difference(const double* a, const double* b, double* out, Index p) {
  double ss = 0.0;
  for (Index j = 0; j < p; ++j) {
    out[j] = a[j] - b[j];
    ss += out[j] * out[j];
  }
  if (ss == 0.0 || !std::isfinite(ss)) {
    // Squares under- or overflowed; rescale by the largest magnitude first.
    double big = 0.0;
    for (Index j = 0; j < p; ++j) big = std::max(big, std::abs(out[j]));
    if (big == 0.0) return 0.0;
    ss = 0.0;
    for (Index j = 0; j < p; ++j) ss += (out[j] / big) * (out[j] / big);
    const double norm = big * std::sqrt(ss);
    for (Index j = 0; j < p; ++j) out[j] = (out[j] / big) / std::sqrt(ss);
    return norm;
  }
  const double norm = std::sqrt(ss);
  for (Index j = 0; j < p; ++j) out[j] /= norm;
  return norm;
}

}  // namespace detail

}  // namespace srtest
