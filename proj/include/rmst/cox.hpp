#pragma once

#include <span>

#include <Eigen/Dense>

#include "rmst/types.hpp"

namespace rmst {

/// Cox proportional-hazards fit by Newton-Raphson on the Breslow
/// partial likelihood. The design has one row per sample and no intercept
/// (absorbed by the baseline hazard). Covariates are centred internally for
/// stability; estimates are reported on the original scale. Convergence:
/// score sup-norm < 1e-9 or relative log-likelihood change < 1e-10.
/// Monotone likelihood (separation) surfaces as converged == false.
CoxFit fit_coxph(std::span<const SurvivalSample> samples, const Eigen::MatrixXd& design);

}  // namespace rmst
