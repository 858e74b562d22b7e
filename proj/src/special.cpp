#include "srtest/special.hpp"

#include "srtest/errors.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include <cmath>

namespace srtest {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_upper_tail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

double normal_upper_quantile(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("alpha must lie in (0,1)");
  return boost::math::quantile(boost::math::complement(boost::math::normal_distribution<>(), alpha));
}

double chi2_upper_tail(double x, double df) {
  if (!(df > 0.0)) throw InvalidInput("chi-square degrees of freedom must be positive");
  if (x <= 0.0) return 1.0;
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<>(df), x));
}

}  // namespace srtest
