#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "helpers.hpp"
#include "rmst/survival.hpp"

using namespace rmst;
using testutil::sample;

TEST_CASE("km on all-event times is the empirical survival") {
    std::vector<SurvivalSample> d = {sample(1, true), sample(2, true), sample(3, true)};
    const StepFunction f = km_fit(d);
    REQUIRE(f.jump_times.size() == 3);
    CHECK(f(0.5) == doctest::Approx(1.0));
    CHECK(f(1.0) == doctest::Approx(2.0 / 3.0));
    CHECK(f(2.5) == doctest::Approx(1.0 / 3.0));
    CHECK(f(3.0) == doctest::Approx(0.0));
    CHECK(f.left_limit(1.0) == doctest::Approx(1.0));
    CHECK(f.left_limit(3.0) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("km with a single censored subject is constant 1") {
    std::vector<SurvivalSample> d = {sample(5, false)};
    const StepFunction f = km_fit(d);
    CHECK(f.jump_times.empty());
    CHECK(f.all_censored);
    CHECK(f(4.0) == doctest::Approx(1.0));
}

TEST_CASE("km errors") {
    CHECK_THROWS(km_fit(std::vector<SurvivalSample>{}));
    std::vector<SurvivalSample> neg = {sample(-1, true)};
    CHECK_THROWS(km_fit(neg));
}

TEST_CASE("km on the example treatment arm") {
    std::vector<SurvivalSample> d;
    for (const auto& s : testutil::example_trial())
        if (s.group == Arm::treatment) d.push_back(s);
    const StepFunction f = km_fit(d);
    REQUIRE(f.jump_times.size() == 2);
    CHECK(f.jump_times[0] == 40);
    CHECK(f.jump_times[1] == 80);
    CHECK(f.at_risk[0] == 5);
    CHECK(f.at_risk[1] == 3);
    CHECK(f.values[0] == doctest::Approx(0.8));
    CHECK(f.values[1] == doctest::Approx(8.0 / 15.0));
}

TEST_CASE("tied events and censorings: censored subjects stay in the risk set") {
    // events at 2 (x2) plus a censoring at 2: risk set at 2 is all 4 subjects
    std::vector<SurvivalSample> d = {sample(2, true), sample(2, true), sample(2, false),
                                     sample(5, false)};
    const StepFunction f = km_fit(d);
    REQUIRE(f.jump_times.size() == 1);
    CHECK(f.at_risk[0] == 4);
    CHECK(f.values[0] == doctest::Approx(0.5));
}

TEST_CASE("censoring_km equals km_fit on flipped indicators") {
    RngStream rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        auto d = testutil::random_dataset(rng, 2 + static_cast<int>(rng.uniform() * 10));
        auto flipped = d;
        for (auto& s : flipped) s.event = !s.event;
        const StepFunction a = censoring_km(d);
        const StepFunction b = km_fit(flipped);
        REQUIRE(a.jump_times == b.jump_times);
        REQUIRE(a.values == b.values);
        REQUIRE(a.at_risk == b.at_risk);
    }
}

TEST_CASE("censoring_km trivials") {
    std::vector<SurvivalSample> no_cens = {sample(1, true), sample(2, true)};
    CHECK(censoring_km(no_cens).all_censored);
    CHECK(censoring_km(no_cens)(10.0) == doctest::Approx(1.0));

    std::vector<SurvivalSample> all_cens = {sample(1, false), sample(2, false),
                                            sample(3, false)};
    const StepFunction g = censoring_km(all_cens);
    REQUIRE(g.jump_times.size() == 3);
    CHECK(g.values[0] == doctest::Approx(2.0 / 3.0));
    CHECK(g.values[2] == doctest::Approx(0.0));
}

TEST_CASE("pooled example-arm censoring curve") {
    // hand-enumerated reverse KM over the pooled 12 subjects: censorings at
    // 20, 30, 60, 80 and 100 with risk sets 12, 10, 6, 5, 3
    const auto d = testutil::example_trial();
    const StepFunction g = censoring_km(d);
    REQUIRE(g.jump_times.size() == 5);
    CHECK(g(20) == doctest::Approx(11.0 / 12.0));
    CHECK(g(30) == doctest::Approx(11.0 / 12.0 * 9.0 / 10.0));
    CHECK(g(60) == doctest::Approx(0.825 * 5.0 / 6.0));
    CHECK(g(80) == doctest::Approx(0.6875 * 0.8));
    CHECK(g(100) == doctest::Approx(0.0));
    CHECK(g.left_limit(100) == doctest::Approx(0.55));
}

TEST_CASE("rmst of the empirical three-point curve") {
    std::vector<SurvivalSample> d = {sample(1, true), sample(2, true), sample(3, true)};
    const StepFunction f = km_fit(d);
    const RmstEstimate r = rmst(f, 3.0);
    CHECK(r.estimate == doctest::Approx(2.0));
    CHECK(r.variance == doctest::Approx(2.0 / 9.0));
    CHECK(rmst(f, 1e-9).estimate == doctest::Approx(0.0).epsilon(1e-6));
    CHECK_THROWS(rmst(f, 0.0));
    CHECK_THROWS(rmst(f, -1.0));
    CHECK_THROWS_WITH(rmst(f, 3.5), doctest::Contains("tau exceeds observable range"));
}

TEST_CASE("pooled example rmst at the cutoff") {
    const auto d = testutil::example_trial();
    const RmstEstimate r = rmst(km_fit(d), 100.0);
    CHECK(r.estimate == doctest::Approx(73.5740740741).epsilon(1e-9));
}

TEST_CASE("rmst monotone in tau and bounded by tau") {
    RngStream rng(23);
    for (int trial = 0; trial < 30; ++trial) {
        auto d = testutil::random_dataset(rng, 12);
        const StepFunction f = km_fit(d);
        double prev = 0.0;
        for (double tau = 0.25; tau <= f.max_observed_time; tau += 0.25) {
            const RmstEstimate r = rmst(f, tau);
            CHECK(r.estimate >= prev - 1e-12);
            CHECK(r.estimate <= tau + 1e-12);
            CHECK(r.variance >= 0.0);
            prev = r.estimate;
        }
    }
}

TEST_CASE("rmst variance is zero without jumps in (0, tau]") {
    std::vector<SurvivalSample> d = {sample(1, false), sample(5, true)};
    const RmstEstimate r = rmst(km_fit(d), 0.5);
    CHECK(r.estimate == doctest::Approx(0.5));
    CHECK(r.variance == doctest::Approx(0.0));
}

TEST_CASE("diff test on identical groups") {
    std::vector<SurvivalSample> d;
    for (const double t : {1.0, 2.0, 3.0, 4.0}) {
        d.push_back(sample(t, true, Arm::treatment));
        d.push_back(sample(t, true, Arm::control));
    }
    const DiffTestResult r = rmst_diff_test(d, 4.0);
    CHECK(r.diff == doctest::Approx(0.0));
    CHECK(r.p_value == doctest::Approx(1.0));
    CHECK(r.ci_low <= r.diff);
    CHECK(r.ci_high >= r.diff);
}

TEST_CASE("diff test names the group without events") {
    std::vector<SurvivalSample> d = {sample(1, true, Arm::treatment),
                                     sample(2, true, Arm::treatment),
                                     sample(1, false, Arm::control),
                                     sample(2, false, Arm::control)};
    CHECK_THROWS_WITH(rmst_diff_test(d, 2.0), doctest::Contains("control"));
}

TEST_CASE("diff test student-t reference widens the interval") {
    const auto d = testutil::example_trial();
    const DiffTestResult n = rmst_diff_test(d, 100.0, Reference::normal);
    const DiffTestResult t = rmst_diff_test(d, 100.0, Reference::student_t);
    CHECK(n.z == doctest::Approx(t.z));
    CHECK(t.p_value > n.p_value);
    CHECK(t.ci_high - t.ci_low > n.ci_high - n.ci_low);
}

TEST_CASE("export_curve") {
    std::vector<SurvivalSample> one = {sample(5, false)};
    const auto constant = export_curve(km_fit(one));
    REQUIRE(constant.size() == 1);
    CHECK(constant[0].time == 0.0);
    CHECK(constant[0].survival == 1.0);

    std::vector<SurvivalSample> d = {sample(1, true), sample(2, true), sample(3, true)};
    const auto pts = export_curve(km_fit(d));
    REQUIRE(pts.size() == 4);
    CHECK(pts[1].time == 1.0);
    CHECK(pts[1].survival == doctest::Approx(2.0 / 3.0));
    CHECK(pts[3].survival == doctest::Approx(0.0));

    std::ostringstream os;
    write_curve_csv(os, pts);
    CHECK(os.str().substr(0, 14) == "time,survival\n");

    std::vector<SurvivalSample> arm;
    for (const auto& s : testutil::example_trial())
        if (s.group == Arm::treatment) arm.push_back(s);
    const StepFunction f = km_fit(arm);
    const auto rows = export_curve(f);
    REQUIRE(rows.size() == f.jump_times.size() + 1);
    for (std::size_t j = 0; j < f.jump_times.size(); ++j) {
        CHECK(rows[j + 1].time == f.jump_times[j]);
        CHECK(rows[j + 1].survival == f.values[j]);
    }
}
