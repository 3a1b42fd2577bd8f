#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "helpers.hpp"
#include "rmst/ipcw.hpp"
#include "rmst/pseudo.hpp"
#include "rmst/survival.hpp"

using namespace rmst;
using testutil::sample;

namespace {

Eigen::MatrixXd design_group_only(const std::vector<SurvivalSample>& d) {
    Eigen::MatrixXd z(d.size(), 2);
    for (std::size_t i = 0; i < d.size(); ++i) {
        z(i, 0) = 1.0;
        z(i, 1) = d[i].group == Arm::treatment ? 1.0 : 0.0;
    }
    return z;
}

Eigen::MatrixXd design_group_age(const std::vector<SurvivalSample>& d) {
    Eigen::MatrixXd z(d.size(), 3);
    for (std::size_t i = 0; i < d.size(); ++i) {
        z(i, 0) = 1.0;
        z(i, 1) = d[i].group == Arm::treatment ? 1.0 : 0.0;
        z(i, 2) = d[i].covariates[0];
    }
    return z;
}

}  // namespace

TEST_CASE("pseudo-values of the worked example match the printed column") {
    const auto d = testutil::example_trial();
    const PseudoValueSet pv = pseudo_values(d, 100.0);
    const double expected[12] = {78.4, 30.4, 100.4, 75.4, 106.6, 106.6,
                                 20.0, 78.4, 30.4,  42.9, 106.6, 106.6};
    for (int i = 0; i < 12; ++i) CHECK(testutil::near(pv.values[i], expected[i], 0.05));
}

TEST_CASE("pseudo-values without censoring are the restricted times") {
    std::vector<SurvivalSample> d = {sample(1, true), sample(2, true), sample(3, true),
                                     sample(4, true)};
    const PseudoValueSet pv = pseudo_values(d, 4.0);
    for (int i = 0; i < 4; ++i)
        CHECK(pv.values[i] == doctest::Approx(static_cast<double>(i + 1)).epsilon(1e-12));
}

TEST_CASE("jackknife mean identity") {
    RngStream rng(31);
    int tested = 0;
    while (tested < 40) {
        auto d = testutil::random_dataset(rng, 4 + static_cast<int>(rng.uniform() * 10));
        const double tau = 0.5 + rng.uniform() * 2.0;
        try {
            const PseudoValueSet pv = pseudo_values(d, tau);
            double mean = 0.0;
            for (const double v : pv.values) mean += v;
            mean /= static_cast<double>(pv.values.size());
            CHECK(mean == doctest::Approx(pv.pooled_rmst).epsilon(1e-9));
            ++tested;
        } catch (const std::exception&) {
            // some draws cannot support the tau; skip them
        }
    }
}

TEST_CASE("pseudo-value error paths") {
    // removing the only event leaves a subsample without events
    std::vector<SurvivalSample> one_event = {sample(1, true), sample(2, false),
                                             sample(3, false)};
    CHECK_THROWS_WITH(pseudo_values(one_event, 2.0), doctest::Contains("without events"));

    // removing the unique longest subject makes tau unobservable
    std::vector<SurvivalSample> short_tail = {sample(1, true), sample(2, true),
                                              sample(5, true)};
    short_tail[2].id = "long";
    CHECK_THROWS_WITH(pseudo_values(short_tail, 4.0), doctest::Contains("long"));
}

TEST_CASE("serial and parallel pseudo-values agree bitwise") {
    RngStream rng(37);
    auto d = testutil::random_dataset(rng, 200);
    const PseudoValueSet a = pseudo_values(d, 3.0);
    const PseudoValueSet b = pseudo_values_serial(d, 3.0);
    REQUIRE(a.values.size() == b.values.size());
    for (std::size_t i = 0; i < a.values.size(); ++i) CHECK(a.values[i] == b.values[i]);
}

TEST_CASE("worked-example regressions (pseudo-value route)") {
    const auto d = testutil::example_trial();
    const PseudoValueSet pv = pseudo_values(d, 100.0);

    const RegressionFit fit2 = fit_pseudo_gee(pv, design_group_only(d));
    CHECK(testutil::near(fit2.coefficients[1], 18.8, 0.05));

    const RegressionFit fit3 = fit_pseudo_gee(pv, design_group_age(d));
    CHECK(testutil::near(fit3.coefficients[1], 18.8, 0.05));
    CHECK(testutil::near(fit3.coefficients[2], -2.1, 0.05));

    // variant with the age of subject 8 moved from 60 to 70
    auto d8 = d;
    d8[7].covariates[0] = 70;
    const RegressionFit fit8 = fit_pseudo_gee(pv, design_group_age(d8));
    CHECK(testutil::near(fit8.coefficients[1], 15.4, 0.05));
    CHECK(testutil::near(fit8.coefficients[2], -2.0, 0.05));
}

TEST_CASE("rank-deficient design is rejected") {
    const auto d = testutil::example_trial();
    const PseudoValueSet pv = pseudo_values(d, 100.0);
    Eigen::MatrixXd z(12, 2);
    z.col(0).setOnes();
    z.col(1).setOnes();
    CHECK_THROWS_WITH(fit_pseudo_gee(pv, z), doctest::Contains("rank-deficient"));
}

TEST_CASE("identity fit shifts only the intercept under response translation") {
    const auto d = testutil::example_trial();
    PseudoValueSet pv = pseudo_values(d, 100.0);
    const RegressionFit base = fit_pseudo_gee(pv, design_group_age(d));
    PseudoValueSet shifted = pv;
    for (auto& v : shifted.values) v += 17.0;
    const RegressionFit moved = fit_pseudo_gee(shifted, design_group_age(d));
    CHECK(moved.coefficients[0] == doctest::Approx(base.coefficients[0] + 17.0).epsilon(1e-8));
    CHECK(moved.coefficients[1] == doctest::Approx(base.coefficients[1]).epsilon(1e-8));
    CHECK(moved.coefficients[2] == doctest::Approx(base.coefficients[2]).epsilon(1e-8));
}

TEST_CASE("identity-link covariance scales quadratically") {
    const auto d = testutil::example_trial();
    const PseudoValueSet pv = pseudo_values(d, 100.0);
    const RegressionFit base = fit_pseudo_gee(pv, design_group_only(d));
    PseudoValueSet scaled = pv;
    for (auto& v : scaled.values) v *= 3.0;
    const RegressionFit big = fit_pseudo_gee(scaled, design_group_only(d));
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            CHECK(big.covariance(i, j) ==
                  doctest::Approx(9.0 * base.covariance(i, j)).epsilon(1e-9));
}

TEST_CASE("sandwich scale factors cancel") {
    const auto d = testutil::example_trial();
    const PseudoValueSet pv = pseudo_values(d, 100.0);
    const Eigen::MatrixXd z = design_group_age(d);
    const RegressionFit fit = fit_pseudo_gee(pv, z);

    // recompute with an explicit response-variance scale carried through the
    // information (1/v^2) and the score variance (1/v^4)
    double vhat2 = 0.0, mean = 0.0;
    for (const double v : pv.values) mean += v;
    mean /= 12.0;
    for (const double v : pv.values) vhat2 += (v - mean) * (v - mean);
    vhat2 /= 11.0;

    const Eigen::MatrixXd info = z.transpose() * z / vhat2;
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(3, 3);
    for (int i = 0; i < 12; ++i) {
        const double r = pv.values[i] - z.row(i) * fit.coefficients;
        meat += (r * r / (vhat2 * vhat2)) * (z.row(i).transpose() * z.row(i));
    }
    const Eigen::MatrixXd v = info.inverse() * meat * info.inverse();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(v(i, j) == doctest::Approx(fit.covariance(i, j)).epsilon(1e-9));
}

TEST_CASE("sandwich matches the homoskedastic covariance in Monte-Carlo mean") {
    RngStream rng(101);
    const int n = 40, reps = 1500;
    Eigen::MatrixXd z(n, 2);
    for (int i = 0; i < n; ++i) {
        z(i, 0) = 1.0;
        z(i, 1) = rng.normal(0.0, 1.0);
    }
    const double sigma = 0.7;
    const Eigen::MatrixXd target = sigma * sigma * (z.transpose() * z).inverse();
    Eigen::MatrixXd mean_v = Eigen::MatrixXd::Zero(2, 2);
    for (int r = 0; r < reps; ++r) {
        PseudoValueSet pv;
        pv.tau = 1.0;
        for (int i = 0; i < n; ++i) pv.values.push_back(1.0 + rng.normal(0.0, sigma));
        mean_v += fit_pseudo_gee(pv, z).covariance;
    }
    mean_v /= reps;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            CHECK(testutil::near(mean_v(i, j), target(i, j),
                                 0.08 * std::abs(target(i, i)) + 1e-6));
}

TEST_CASE("ipcw weights on the worked example") {
    const auto d = testutil::example_trial();
    const IpcwWeights w = ipcw_weights(d, 100.0);
    // events at 20/40/40/50 carry 1/G at their own time; events at 80 carry
    // 1/G(80) including the censoring tied at 80; the three subjects whose
    // follow-up ends exactly at the cutoff carry 1/G(80) as well
    CHECK(w.weights[6] == doctest::Approx(12.0 / 11.0));          // event at 20
    CHECK(w.weights[1] == doctest::Approx(1.0 / 0.825));          // event at 40
    CHECK(w.weights[8] == doctest::Approx(1.0 / 0.825));          // event at 40
    CHECK(w.weights[9] == doctest::Approx(1.0 / 0.825));          // event at 50
    CHECK(w.weights[3] == doctest::Approx(1.0 / 0.55));           // event at 80
    for (const int i : {4, 5, 11}) CHECK(w.weights[i] == doctest::Approx(1.0 / 0.55));
    for (const int i : {0, 2, 7, 10}) CHECK(w.weights[i] == 0.0);
    double mass = 0.0;
    for (const double x : w.weights) mass += x;
    CHECK(mass == doctest::Approx(12.0).epsilon(1e-9));
}

TEST_CASE("ipcw weight trivials") {
    std::vector<SurvivalSample> no_cens = {sample(1, true), sample(2, true),
                                           sample(3, true)};
    for (const double v : ipcw_weights(no_cens, 3.0).weights)
        CHECK(v == doctest::Approx(1.0));

    std::vector<SurvivalSample> d = {sample(1, false), sample(2, true), sample(3, true)};
    const IpcwWeights w = ipcw_weights(d, 2.5);
    CHECK(w.weights[0] == 0.0);
    CHECK(w.complete[0] == 0);
}

TEST_CASE("completion rules differ only beyond the restriction time") {
    std::vector<SurvivalSample> d = {sample(1, true), sample(2, false), sample(3, true),
                                     sample(4, false)};
    IpcwOptions at_tau;  // default
    IpcwOptions reach;
    reach.completion = CompletionRule::event_or_reach_tau;
    const IpcwWeights a = ipcw_weights(d, 3.5, at_tau);
    const IpcwWeights b = ipcw_weights(d, 3.5, reach);
    CHECK(a.complete[3] == 0);  // censored at 4 > tau: out under the default
    CHECK(b.complete[3] == 1);  // counted complete when any follow-up reaches tau
    CHECK(a.complete[1] == 0);
    CHECK(b.complete[1] == 0);
}

TEST_CASE("worked-example regressions (ipcw route)") {
    const auto d = testutil::example_trial();
    const RegressionFit fit2 = fit_ipcw(d, design_group_only(d), 100.0);
    CHECK(testutil::near(fit2.coefficients[1], 25.0, 0.05));

    const RegressionFit fit3 = fit_ipcw(d, design_group_age(d), 100.0);
    CHECK(testutil::near(fit3.coefficients[1], 24.5, 0.05));
    CHECK(testutil::near(fit3.coefficients[2], -2.3, 0.05));

    // variant with control ages swapped at subjects 7/8 (70->60, 60->70)
    auto d6 = d;
    d6[6].covariates[0] = 60;
    d6[7].covariates[0] = 70;
    const RegressionFit fit6 = fit_ipcw(d6, design_group_age(d6), 100.0);
    CHECK(testutil::near(fit6.coefficients[1], 28.1, 0.05));
    CHECK(testutil::near(fit6.coefficients[2], -1.7, 0.05));
}

TEST_CASE("group-only ipcw fit equals the weighted group-mean difference") {
    RngStream rng(53);
    for (int trial = 0; trial < 20; ++trial) {
        auto d = testutil::random_dataset(rng, 30);
        const double tau = 3.0;
        const IpcwWeights w = ipcw_weights(d, tau);
        double sw[2] = {0, 0}, swx[2] = {0, 0};
        bool both = true;
        for (std::size_t i = 0; i < d.size(); ++i) {
            const int g = d[i].group == Arm::treatment ? 1 : 0;
            sw[g] += w.weights[i];
            swx[g] += w.weights[i] * w.x[i];
        }
        if (sw[0] <= 0 || sw[1] <= 0) both = false;
        if (!both) continue;
        const RegressionFit fit = fit_ipcw(d, design_group_only(d), tau);
        CHECK(fit.coefficients[1] ==
              doctest::Approx(swx[1] / sw[1] - swx[0] / sw[0]).epsilon(1e-9));
    }
}

TEST_CASE("no-censoring equivalence: pseudo, ipcw, and least squares") {
    RngStream rng(59);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<SurvivalSample> d;
        const int n = 14;
        for (int i = 0; i < n; ++i) {
            auto s = sample(0.5 + rng.uniform() * 6.0, true,
                            rng.uniform() < 0.5 ? Arm::treatment : Arm::control,
                            {rng.normal(50, 6)});
            s.id = std::to_string(i);
            d.push_back(std::move(s));
        }
        const double tau = 3.0;
        const Eigen::MatrixXd z = design_group_age(d);

        const RegressionFit a = fit_pseudo_gee(pseudo_values(d, tau), z);
        const RegressionFit b = fit_ipcw(d, z, tau);
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) y[i] = std::min(d[i].time, tau);
        const Eigen::VectorXd ols = (z.transpose() * z).ldlt().solve(z.transpose() * y);
        for (int k = 0; k < 3; ++k) {
            CHECK(a.coefficients[k] == doctest::Approx(ols[k]).epsilon(1e-8));
            CHECK(b.coefficients[k] == doctest::Approx(ols[k]).epsilon(1e-8));
        }
    }
}

TEST_CASE("ipcw requires enough complete subjects") {
    std::vector<SurvivalSample> d = {sample(1, true), sample(2, false), sample(3, false),
                                     sample(4, false)};
    Eigen::MatrixXd z(4, 2);
    z.col(0).setOnes();
    for (int i = 0; i < 4; ++i) z(i, 1) = i;
    CHECK_THROWS_WITH(fit_ipcw(d, z, 3.5), doctest::Contains("fewer complete subjects"));
}

TEST_CASE("log link solves the estimating equation") {
    RngStream rng(61);
    std::vector<SurvivalSample> d;
    for (int i = 0; i < 30; ++i) {
        auto s = sample(0.2 + rng.uniform() * 5.0, true,
                        rng.uniform() < 0.5 ? Arm::treatment : Arm::control,
                        {rng.normal(0, 1)});
        s.id = std::to_string(i);
        d.push_back(std::move(s));
    }
    const double tau = 4.0;
    const PseudoValueSet pv = pseudo_values(d, tau);
    const Eigen::MatrixXd z = design_group_age(d);
    const RegressionFit fit = fit_pseudo_gee(pv, z, Link::log);
    REQUIRE(fit.converged);
    Eigen::VectorXd u = Eigen::VectorXd::Zero(3);
    for (int i = 0; i < 30; ++i) {
        const double m = std::exp(z.row(i) * fit.coefficients);
        u += (pv.values[i] - m) * m * z.row(i).transpose();
    }
    CHECK(u.lpNorm<Eigen::Infinity>() < 1e-9);

    const RegressionFit wfit = fit_ipcw(d, z, tau, Link::log);
    REQUIRE(wfit.converged);
}

TEST_CASE("pseudo-value export schema") {
    const auto d = testutil::example_trial();
    const PseudoValueSet pv = pseudo_values(d, 100.0);
    std::ostringstream os;
    write_pseudo_csv(os, d, pv);
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "id,time,event,group,pseudo_value");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 12);
}
