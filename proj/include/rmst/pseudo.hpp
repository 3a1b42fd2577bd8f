#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rmst/types.hpp"

namespace rmst {

/// Leave-one-out pseudo-survival-times computed on the pooled sample:
/// pv_i = n * mu(tau) - (n-1) * mu_without_i(tau). Values may be negative or
/// exceed tau; no clipping. mean(values) equals pooled_rmst exactly.
struct PseudoValueSet {
    std::vector<double> values;
    double tau = 0.0;
    double pooled_rmst = 0.0;
};

/// OpenMP-parallel over leave-one-out indices when available.
PseudoValueSet pseudo_values(std::span<const SurvivalSample> samples, double tau);

/// Serial reference implementation; bit-identical to pseudo_values.
PseudoValueSet pseudo_values_serial(std::span<const SurvivalSample> samples, double tau);

/// Estimating-equation fit of the pseudo-values on a design matrix (one row
/// per sample, first column constant). Identity link solves the closed form
/// (ordinary least squares); log link runs damped Newton with step halving
/// until the estimating-function sup-norm drops below 1e-10 (at most 100
/// iterations). Covariance is the sandwich estimator.
RegressionFit fit_pseudo_gee(const PseudoValueSet& pv, const Eigen::MatrixXd& design,
                             Link link = Link::identity);

/// Sandwich covariance around an estimating-equation solution:
///   (sum D_i D_i^T)^-1 (sum U_i U_i^T) (sum D_i D_i^T)^-1
/// with one row per subject in both matrices: D_i the mean-function gradient
/// and U_i the estimating contribution at the solution. The response-variance
/// scale factors of the usual presentation cancel algebraically and are not
/// carried.
Eigen::MatrixXd sandwich_variance(const Eigen::MatrixXd& gradients,
                                  const Eigen::MatrixXd& contributions);

/// CSV schema `id,time,event,group,pseudo_value`.
void write_pseudo_csv(std::ostream& out, std::span<const SurvivalSample> samples,
                      const PseudoValueSet& pv);

}  // namespace rmst
