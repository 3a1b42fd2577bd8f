#include "rmst/stats.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace rmst::stats {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
    static const boost::math::normal_distribution<double> dist;
    return boost::math::quantile(dist, p);
}

double student_t_cdf(double x, double df) {
    boost::math::students_t_distribution<double> dist(df);
    return boost::math::cdf(dist, x);
}

double student_t_quantile(double p, double df) {
    boost::math::students_t_distribution<double> dist(df);
    return boost::math::quantile(dist, p);
}

double two_sided_p(double z) {
    return std::min(1.0, 2.0 * normal_cdf(-std::fabs(z)));
}

double two_sided_p_t(double z, double df) {
    return std::min(1.0, 2.0 * student_t_cdf(-std::fabs(z), df));
}

}  // namespace rmst::stats
