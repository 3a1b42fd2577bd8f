#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rmst {

enum class Arm { control = 0, treatment = 1 };

inline const char* arm_name(Arm a) {
    return a == Arm::treatment ? "treatment" : "control";
}

/// One subject: follow-up time, event indicator (true = event observed,
/// false = right-censored), arm, and a fixed-length covariate vector.
struct SurvivalSample {
    std::string id;
    double time = 0.0;
    bool event = false;
    Arm group = Arm::control;
    std::vector<double> covariates;
};

/// Right-continuous piecewise-constant survival estimate. The curve is 1
/// before the first jump; evaluation at t returns the value at the largest
/// jump time <= t.
struct StepFunction {
    std::vector<double> jump_times;      // strictly increasing
    std::vector<double> values;          // S(t) just after each jump
    std::vector<int> at_risk;            // Y_j, risk-set size at each jump
    std::vector<int> n_events;           // d_j, events at each jump
    std::vector<double> variance_terms;  // Greenwood increments d/(Y(Y-d))
    int n = 0;                           // subjects behind the fit
    double max_observed_time = 0.0;
    bool all_censored = false;           // no events anywhere in the input

    double operator()(double t) const {
        double s = 1.0;
        for (std::size_t j = 0; j < jump_times.size() && jump_times[j] <= t; ++j)
            s = values[j];
        return s;
    }

    /// S(t-): value just before t.
    double left_limit(double t) const {
        double s = 1.0;
        for (std::size_t j = 0; j < jump_times.size() && jump_times[j] < t; ++j)
            s = values[j];
        return s;
    }
};

struct RmstEstimate {
    double estimate = 0.0;
    double variance = 0.0;
    double tau = 0.0;
    int n = 0;
};

enum class Reference { normal, student_t };

struct DiffTestResult {
    double diff = 0.0;  // treatment minus control
    double se = 0.0;
    double z = 0.0;
    double p_value = 1.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double tau = 0.0;
    RmstEstimate treatment;
    RmstEstimate control;
};

enum class Link { identity, log };

inline const char* link_name(Link l) { return l == Link::identity ? "identity" : "log"; }

/// Estimating-equation regression result. The design matrix carries an
/// explicit constant column, so coefficients[0] is the intercept.
struct RegressionFit {
    Link link = Link::identity;
    Eigen::VectorXd coefficients;
    Eigen::MatrixXd covariance;
    Eigen::VectorXd wald_z;
    Eigen::VectorXd p_values;
    Eigen::VectorXd ci_low;
    Eigen::VectorXd ci_high;
    int n_iterations = 0;
    bool converged = true;
    bool nonpositive_response = false;  // log link: some response <= 0 (enters linearly)
    std::string diagnostics;
};

/// Cox partial-likelihood fit; no intercept (absorbed by the baseline hazard).
struct CoxFit {
    Eigen::VectorXd coefficients;
    Eigen::MatrixXd covariance;  // inverse observed information
    Eigen::VectorXd wald_z;
    Eigen::VectorXd p_values;
    double log_partial_likelihood = 0.0;
    int n_iterations = 0;
    bool converged = true;
    std::string diagnostics;
};

}  // namespace rmst
