#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "rmst/rng.hpp"
#include "rmst/types.hpp"

namespace testutil {

inline rmst::SurvivalSample sample(double time, bool event,
                                   rmst::Arm group = rmst::Arm::control,
                                   std::vector<double> covs = {}) {
    rmst::SurvivalSample s;
    s.id = "s" + std::to_string(static_cast<long long>(time * 1000));
    s.time = time;
    s.event = event;
    s.group = group;
    s.covariates = std::move(covs);
    return s;
}

/// The twelve-subject worked example (time in weeks, age covariate).
/// Treatment: 20c, 40e, 60c, 80e, 100c, 100c; control: 20e, 30c, 40e, 50e,
/// 80c, 100c.
inline std::vector<rmst::SurvivalSample> example_trial() {
    using rmst::Arm;
    struct Row {
        int id;
        double t;
        bool ev;
        Arm g;
        double age;
    };
    const Row rows[] = {
        {1, 20, false, Arm::treatment, 60},  {2, 40, true, Arm::treatment, 80},
        {3, 60, false, Arm::treatment, 70},  {4, 80, true, Arm::treatment, 70},
        {5, 100, false, Arm::treatment, 60}, {6, 100, false, Arm::treatment, 60},
        {7, 20, true, Arm::control, 70},     {8, 30, false, Arm::control, 60},
        {9, 40, true, Arm::control, 60},     {10, 50, true, Arm::control, 80},
        {11, 80, false, Arm::control, 70},   {12, 100, false, Arm::control, 60},
    };
    std::vector<rmst::SurvivalSample> out;
    for (const auto& r : rows) {
        auto s = sample(r.t, r.ev, r.g, {r.age});
        s.id = std::to_string(r.id);
        out.push_back(std::move(s));
    }
    return out;
}

/// Random censored dataset with integer-ish times (ties likely).
inline std::vector<rmst::SurvivalSample> random_dataset(rmst::RngStream& rng, int n,
                                                        bool with_covariate = false) {
    std::vector<rmst::SurvivalSample> out;
    for (int i = 0; i < n; ++i) {
        const double t = 1.0 + std::floor(rng.uniform() * 8.0);
        const bool ev = rng.uniform() < 0.7;
        const rmst::Arm g = rng.uniform() < 0.5 ? rmst::Arm::treatment : rmst::Arm::control;
        std::vector<double> covs;
        if (with_covariate) covs.push_back(rng.normal(50.0, 5.0));
        auto s = sample(t, ev, g, covs);
        s.id = std::to_string(i + 1);
        out.push_back(std::move(s));
    }
    return out;
}

inline std::string data_path(const std::string& name) {
    return std::string(RMST_TEST_DATA_DIR) + "/" + name;
}

inline bool near(double a, double b, double tol) { return std::fabs(a - b) <= tol; }

}  // namespace testutil
