#pragma once

#include <Eigen/Dense>

#include <vector>

namespace srtest {

using Index = Eigen::Index;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// n×p block of observations; rows are subjects, columns are variables.
/// Construction rejects n < 2, p < 1 and non-finite entries.
class SampleMatrix {
 public:
  explicit SampleMatrix(RowMatrix data);
  static SampleMatrix from_rows(const std::vector<std::vector<double>>& rows);

  Index n() const noexcept { return data_.rows(); }
  Index p() const noexcept { return data_.cols(); }
  const RowMatrix& data() const noexcept { return data_; }
  auto row(Index i) const { return data_.row(i); }

  /// Copy with the listed rows removed (leave-out subsamples).
  SampleMatrix without_rows(const std::vector<Index>& drop) const;

 private:
  RowMatrix data_;
};

/// Positive diagonal scale d_1..d_p (variance scales) normalized to sum p.
class DiagScale {
 public:
  /// Validates positivity and trace = p within 1e-10 relative.
  explicit DiagScale(Eigen::VectorXd d);

  static DiagScale unit(Index p);
  /// Rescales an arbitrary positive vector to trace p.
  static DiagScale normalized(Eigen::VectorXd d);
  /// (n1/n) d1 + (n2/n) d2 with both parts at unit geometric mean, then trace p.
  /// A column rescaling multiplies both parts by one common factor, so the pooled
  /// scale stays equivariant.
  static DiagScale pooled(const DiagScale& d1, Index n1, const DiagScale& d2, Index n2);

  Index size() const noexcept { return d_.size(); }
  const Eigen::VectorXd& values() const noexcept { return d_; }
  double operator[](Index j) const { return d_[j]; }
  Eigen::VectorXd inv_sqrt() const { return d_.array().rsqrt().matrix(); }

 private:
  Eigen::VectorXd d_;
};

/// d divided by its geometric mean (product of entries 1).
Eigen::VectorXd unit_geometric_mean(const Eigen::VectorXd& d);

enum class ScaleInit { sample_variance, unit };

struct FixedPointConfig {
  double tol = 1e-8;
  int max_iter = 100;
  ScaleInit init = ScaleInit::sample_variance;

  void validate() const;
};

/// Rows of the sample multiplied componentwise by d^{-1/2}.
RowMatrix scaled_rows(const SampleMatrix& x, const DiagScale& scale);

}  // namespace srtest
