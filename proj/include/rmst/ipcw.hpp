#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rmst/types.hpp"

namespace rmst {

/// Which subjects count as complete (weighted) observations of min(T, tau).
///
/// event_or_end_at_tau: the event was observed, or follow-up ended exactly at
/// tau (administrative cutoff). A subject censored strictly after tau is left
/// out of the weighted fit. This matches the behaviour of the widely deployed
/// reference implementation and is the default.
///
/// event_or_reach_tau: any follow-up reaching tau counts as complete
/// (min(T, tau) = tau is observed whenever follow-up reaches tau).
enum class CompletionRule { event_or_end_at_tau, event_or_reach_tau };

/// Censoring-survival scope: one curve pooled across arms, or one per arm.
enum class GhatScope { pooled, per_arm };

struct IpcwOptions {
    CompletionRule completion = CompletionRule::event_or_end_at_tau;
    GhatScope scope = GhatScope::pooled;
};

/// Inverse-probability-of-censoring weights. Complete subjects carry
/// 1 / G(x_i) with x_i = min(time_i, tau) and G the censoring-survival
/// Kaplan-Meier whose events are censorings strictly before tau (follow-up
/// reaching tau enters G as censored at the observed time). Incomplete
/// subjects carry weight zero.
struct IpcwWeights {
    std::vector<double> weights;
    std::vector<double> x;        // min(time, tau)
    std::vector<char> complete;   // selection indicator
    double tau = 0.0;
    StepFunction g_hat;           // pooled scope; per-arm curves in g_hat_arm
    StepFunction g_hat_arm[2];    // indexed by Arm when scope == per_arm
};

IpcwWeights ipcw_weights(std::span<const SurvivalSample> samples, double tau,
                         const IpcwOptions& options = {});

/// Weighted estimating-equation fit of x_i = min(time_i, tau) on the design
/// (one row per sample; incomplete subjects drop out through zero weight).
/// Identity link is the weighted-least-squares closed form; log link is
/// damped Newton. Covariance treats the weights as fixed (see ipcw_variance).
RegressionFit fit_ipcw(std::span<const SurvivalSample> samples, const Eigen::MatrixXd& design,
                       double tau, Link link = Link::identity,
                       const IpcwOptions& options = {});

/// Fixed-weight sandwich covariance: bread sum w_i g_i g_i^T, meat from the
/// per-subject weighted contributions at the solution.
Eigen::MatrixXd ipcw_variance(const Eigen::VectorXd& y, const Eigen::MatrixXd& design,
                              const Eigen::VectorXd& weights, const Eigen::VectorXd& beta,
                              Link link);

/// CSV schema `id,x,selected,weight`.
void write_weights_csv(std::ostream& out, std::span<const SurvivalSample> samples,
                       const IpcwWeights& w);

}  // namespace rmst
