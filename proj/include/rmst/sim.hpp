#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rmst/rng.hpp"
#include "rmst/types.hpp"

namespace rmst {

enum class Family { ph, cp };

inline const char* family_name(Family f) { return f == Family::ph ? "PH" : "CP"; }

/// One simulation scenario. PH family: log T = b0 + b1 x1 + b2 x2 + log(eps).
/// CP family adds b3 * x1 * x3 with x3 = a when x2 <= change_point, else b.
/// x1 is the arm indicator, x2 ~ Normal(per-arm mean, x2_variance), eps is
/// Weibull(shape, scale). Censoring is exponential per arm, calibrated so
/// that P(C < min(T, tau)) hits the per-arm target.
struct ScenarioConfig {
    std::string name;
    Family family = Family::ph;
    double tau = 0.0;
    double beta0 = 0.0;
    double beta1 = 0.0;
    double beta2 = 0.0;
    double beta3 = 0.0;  // CP only
    double x2_mean_treatment = 50.0;
    double x2_mean_control = 50.0;
    double x2_variance = 20.0;
    double a = 0.0;  // CP only
    double b = 0.0;  // CP only
    double change_point = 50.0;
    double censor_target_treatment = 0.0;
    double censor_target_control = 0.0;
    double weibull_shape = 1.0;
    double weibull_scale = 1.0;
};

/// The 16 built-in scenarios (PH-S1..PH-S8, CP-S1..CP-S8).
const std::vector<ScenarioConfig>& builtin_scenarios();

/// Parse the scenario config format: one `key: value` per line, documents
/// separated by lines containing only `---`, `#` comments allowed. Field
/// names are exactly the ScenarioConfig member names.
std::vector<ScenarioConfig> parse_scenarios(std::istream& in);
void print_scenario(std::ostream& out, const ScenarioConfig& cfg);

/// Exponential censoring rate for one arm, found by bisection on a fixed
/// 200,000-draw Monte-Carlo estimate of P(C < min(T, tau)) (tolerance 0.005,
/// fixed calibration seed, common random numbers across bisection steps).
/// A zero target yields rate 0, meaning no random censoring. Results are
/// cached per (config, arm).
double calibrate_censoring(const ScenarioConfig& cfg, Arm arm);

/// Draw one subject's (x2, T, C) given the arm. Draw order per subject is
/// fixed: x2 normal, then Weibull epsilon, then the censoring exponential
/// (always drawn, to keep streams aligned whatever the censoring rate).
struct SubjectDraw {
    double x2;
    double t;
    double c;  // +inf when the arm's censoring rate is 0
};
SubjectDraw draw_subject(const ScenarioConfig& cfg, Arm arm, double censor_rate,
                         RngStream& stream);

/// Deterministic dataset for one replicate: the first n/2 subjects are the
/// treatment arm. Covariate vector per sample is {x2}. The stream for
/// replicate r of scenario s at size n is seed-derived as
/// mix(mix(mix(seed ^ fnv(s.name)) ^ n) ^ r), so any replicate can be
/// regenerated in isolation.
std::vector<SurvivalSample> generate_dataset(const ScenarioConfig& cfg, int n,
                                             RngStream stream);
RngStream replicate_stream(std::uint64_t seed, const ScenarioConfig& cfg, int n,
                           int replicate);

enum class Method { naive, andersen, tian, cox };
inline const char* method_name(Method m) {
    switch (m) {
        case Method::naive: return "naive";
        case Method::andersen: return "andersen";
        case Method::tian: return "tian";
        default: return "cox";
    }
}

struct PowerRow {
    std::string scenario;
    int n = 0;
    Method method = Method::naive;
    int reps = 0;
    int rejections = 0;
    int failures = 0;  // errored or non-converged replicates (counted as non-rejection)
    double rejection_rate = 0.0;
    double mc_se = 0.0;
};

struct PowerTable {
    std::vector<PowerRow> rows;
};

/// CSV schema `scenario,n,method,reps,rejections,rate,mc_se,failures`.
void write_power_csv(std::ostream& out, const PowerTable& table);
void write_power_json(std::ostream& out, const PowerTable& table);

struct PowerStudyOptions {
    std::vector<int> n_grid;
    int reps = 10000;
    double alpha = 0.05;
    std::uint64_t seed = 1;
    int threads = 0;  // 0 = library default
    /// Regression model for the adjusted methods; the group-effect test is
    /// the Wald p-value of the arm coefficient in [1, x1, x2] (Cox: [x1, x2]).
    Link link = Link::log;
    /// Progress callback (replicates completed so far); may be empty.
    void (*progress)(const char* scenario, int n, int done, int reps) = nullptr;
};

/// Monte-Carlo rejection rates of the four methods over all (scenario, n)
/// cells. Replicates are independent work items on seed-derived streams, so
/// the result is bit-identical for any thread count.
PowerTable run_power_study(const std::vector<ScenarioConfig>& cfgs,
                           const PowerStudyOptions& options);

}  // namespace rmst
