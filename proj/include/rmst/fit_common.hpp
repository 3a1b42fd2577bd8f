#pragma once

#include <Eigen/Dense>

#include "rmst/types.hpp"

namespace rmst::detail {

/// Weighted estimating-equation fit shared by the pseudo-value and IPCW
/// regressions: solves sum_i w_i (y_i - g^-1(b'z_i)) d/db g^-1(b'z_i) = 0.
/// Identity link uses the closed form; log link uses damped Newton with step
/// halving (sup-norm tolerance 1e-10, at most 100 iterations). Covariance is
/// the fixed-weight sandwich; Wald statistics use the normal reference.
RegressionFit fit_estimating_equation(const Eigen::VectorXd& y, const Eigen::MatrixXd& design,
                                      const Eigen::VectorXd& weights, Link link);

/// Fill wald_z / p_values / ci_low / ci_high from coefficients + covariance.
void fill_wald(RegressionFit& fit);

}  // namespace rmst::detail
