#include "srtest/sample.hpp"

#include "srtest/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace srtest {

SampleMatrix::SampleMatrix(RowMatrix data) : data_(std::move(data)) {
  if (data_.rows() < 2) throw InvalidInput("sample needs at least 2 rows");
  if (data_.cols() < 1) throw InvalidInput("sample needs at least 1 column");
  if (!data_.allFinite()) throw InvalidInput("sample contains non-finite entries");
}

SampleMatrix SampleMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw InvalidInput("sample has no rows");
  const auto p = static_cast<Index>(rows.front().size());
  RowMatrix m(static_cast<Index>(rows.size()), p);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (static_cast<Index>(rows[i].size()) != p)
      throw DimensionMismatch("row " + std::to_string(i) + " has " +
                              std::to_string(rows[i].size()) + " entries, expected " +
                              std::to_string(p));
    for (Index j = 0; j < p; ++j) m(static_cast<Index>(i), j) = rows[i][j];
  }
  return SampleMatrix(std::move(m));
}

SampleMatrix SampleMatrix::without_rows(const std::vector<Index>& drop) const {
  RowMatrix out(n() - static_cast<Index>(drop.size()), p());
  Index r = 0;
  for (Index i = 0; i < n(); ++i) {
    if (std::find(drop.begin(), drop.end(), i) != drop.end()) continue;
    out.row(r++) = data_.row(i);
  }
  return SampleMatrix(std::move(out));
}

DiagScale::DiagScale(Eigen::VectorXd d) : d_(std::move(d)) {
  if (d_.size() < 1) throw InvalidInput("scale must have at least one entry");
  if (!d_.allFinite() || (d_.array() <= 0.0).any())
    throw InvalidInput("scale entries must be finite and strictly positive");
  const double p = static_cast<double>(d_.size());
  if (std::abs(d_.sum() - p) > 1e-10 * p)
    throw InvalidInput("scale trace " + std::to_string(d_.sum()) + " differs from p");
}

DiagScale DiagScale::unit(Index p) { return DiagScale(Eigen::VectorXd::Ones(p)); }

DiagScale DiagScale::normalized(Eigen::VectorXd d) {
  if (!d.allFinite() || (d.array() <= 0.0).any())
    throw InvalidInput("scale entries must be finite and strictly positive");
  d *= static_cast<double>(d.size()) / d.sum();
  return DiagScale(std::move(d));
}

Eigen::VectorXd unit_geometric_mean(const Eigen::VectorXd& d) {
  return d / std::exp(d.array().log().mean());
}

DiagScale DiagScale::pooled(const DiagScale& d1, Index n1, const DiagScale& d2, Index n2) {
  if (d1.size() != d2.size()) throw DimensionMismatch("pooled scales differ in length");
  const double n = static_cast<double>(n1 + n2);
  Eigen::VectorXd d = (static_cast<double>(n1) / n) * unit_geometric_mean(d1.values()) +
                      (static_cast<double>(n2) / n) * unit_geometric_mean(d2.values());
  return normalized(std::move(d));
}

void FixedPointConfig::validate() const {
  if (!(tol > 0.0)) throw InvalidInput("fixed-point tol must be positive");
  if (max_iter < 1) throw InvalidInput("fixed-point max_iter must be at least 1");
}

RowMatrix scaled_rows(const SampleMatrix& x, const DiagScale& scale) {
  if (x.p() != scale.size()) throw DimensionMismatch("scale length differs from sample p");
  return x.data() * scale.inv_sqrt().asDiagonal();
}

}  // namespace srtest
