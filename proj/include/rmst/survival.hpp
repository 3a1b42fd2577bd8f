#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "rmst/types.hpp"

namespace rmst {

/// Kaplan-Meier product-limit estimator. Risk set at t counts every subject
/// with time >= t, so events and censorings tied at t are both at risk for
/// the jump at t (events before censorings). Throws on empty input or a
/// negative time; an all-censored input yields a constant-1 curve with the
/// all_censored flag set.
StepFunction km_fit(std::span<const SurvivalSample> samples);

/// Reverse Kaplan-Meier: event indicators flipped, estimating the censoring
/// survival function G. Identical tie handling, so censoring_km(data) equals
/// km_fit on indicator-flipped data exactly.
StepFunction censoring_km(std::span<const SurvivalSample> samples);

/// Restricted mean survival time: the exact step-function integral of S over
/// [0, tau], with the Greenwood-weighted variance
///   sum_{t_j <= tau} [int_{t_j}^{tau} S]^2 * d_j / (Y_j (Y_j - d_j)).
/// Requires 0 < tau <= the largest observed time behind the fit.
RmstEstimate rmst(const StepFunction& surv, double tau);

/// Unadjusted two-group RMST difference test (treatment minus control).
/// Each group is fitted separately; se = sqrt(var_t + var_c); two-sided p
/// under the chosen reference (student_t uses df = n_t + n_c - 2).
DiffTestResult rmst_diff_test(std::span<const SurvivalSample> samples, double tau,
                              Reference reference = Reference::normal);

struct CurvePoint {
    double time;
    double survival;
};

/// Plot points for a fitted curve: (0, 1) plus one row per jump.
std::vector<CurvePoint> export_curve(const StepFunction& surv);

/// CSV schema `time,survival`, header row, full decimal precision.
void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve);

}  // namespace rmst
