#include "rmst/rng.hpp"

#include "rmst/stats.hpp"

namespace rmst {

double RngStream::normal(double mean, double sd) {
    return mean + sd * stats::normal_quantile(uniform());
}

}  // namespace rmst
