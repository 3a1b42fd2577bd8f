#pragma once

namespace rmst::stats {

double normal_cdf(double x);
double normal_quantile(double p);
double student_t_cdf(double x, double df);
double student_t_quantile(double p, double df);

/// Two-sided p-value for a z statistic under the standard normal.
double two_sided_p(double z);

/// Two-sided p-value under Student's t with df degrees of freedom.
double two_sided_p_t(double z, double df);

}  // namespace rmst::stats
