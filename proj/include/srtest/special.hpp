#pragma once

namespace srtest {

double normal_cdf(double z);
/// 1 - Phi(z), accurate in the far upper tail.
double normal_upper_tail(double z);
/// Upper-alpha quantile z_alpha with 1 - Phi(z_alpha) = alpha.
double normal_upper_quantile(double alpha);
/// P(chi^2_df > x).
double chi2_upper_tail(double x, double df);

}  // namespace srtest
