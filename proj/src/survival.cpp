#include "rmst/survival.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "rmst/stats.hpp"

namespace rmst {

namespace {

StepFunction product_limit(std::span<const SurvivalSample> samples, bool flip_events) {
    if (samples.empty()) throw std::invalid_argument("km_fit: empty input");
    const std::size_t n = samples.size();

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return samples[a].time < samples[b].time;
    });

    StepFunction f;
    f.n = static_cast<int>(n);
    f.max_observed_time = samples[order.back()].time;
    if (samples[order.front()].time < 0.0)
        throw std::invalid_argument("km_fit: negative time");

    double s = 1.0;
    std::size_t i = 0;
    while (i < n) {
        const double t = samples[order[i]].time;
        int d = 0;
        std::size_t j = i;
        while (j < n && samples[order[j]].time == t) {
            const bool ev = samples[order[j]].event != flip_events;
            if (ev) ++d;
            ++j;
        }
        if (d > 0) {
            const int y = static_cast<int>(n - i);
            s *= 1.0 - static_cast<double>(d) / y;
            f.jump_times.push_back(t);
            f.values.push_back(s);
            f.at_risk.push_back(y);
            f.n_events.push_back(d);
            f.variance_terms.push_back(
                y > d ? static_cast<double>(d) / (static_cast<double>(y) * (y - d)) : 0.0);
        }
        i = j;
    }
    f.all_censored = f.jump_times.empty();
    return f;
}

}  // namespace

StepFunction km_fit(std::span<const SurvivalSample> samples) {
    return product_limit(samples, false);
}

StepFunction censoring_km(std::span<const SurvivalSample> samples) {
    return product_limit(samples, true);
}

RmstEstimate rmst(const StepFunction& surv, double tau) {
    if (tau <= 0.0) throw std::domain_error("rmst: tau must be positive");
    if (tau > surv.max_observed_time)
        throw std::domain_error("rmst: tau exceeds observable range");

    RmstEstimate out;
    out.tau = tau;
    out.n = surv.n;

    double area = 0.0;
    double prev_t = 0.0, prev_s = 1.0;
    const std::size_t k = surv.jump_times.size();
    for (std::size_t j = 0; j < k && surv.jump_times[j] < tau; ++j) {
        area += (surv.jump_times[j] - prev_t) * prev_s;
        prev_t = surv.jump_times[j];
        prev_s = surv.values[j];
    }
    area += (tau - prev_t) * prev_s;
    out.estimate = area;

    // tail areas int_{t_j}^{tau} S(u) du via a reverse sweep
    double var = 0.0;
    double tail = 0.0;
    double next_t = tau;
    for (std::size_t r = k; r-- > 0;) {
        if (surv.jump_times[r] > tau) continue;
        tail += (next_t - surv.jump_times[r]) * surv.values[r];
        next_t = surv.jump_times[r];
        var += tail * tail * surv.variance_terms[r];
    }
    out.variance = var;
    return out;
}

DiffTestResult rmst_diff_test(std::span<const SurvivalSample> samples, double tau,
                              Reference reference) {
    std::vector<SurvivalSample> trt, ctl;
    for (const auto& s : samples)
        (s.group == Arm::treatment ? trt : ctl).push_back(s);
    if (trt.empty() || ctl.empty())
        throw std::invalid_argument("rmst_diff_test: both groups must be present");
    for (const auto* g : {&trt, &ctl}) {
        const bool any_event =
            std::any_of(g->begin(), g->end(), [](const SurvivalSample& s) { return s.event; });
        if (!any_event)
            throw std::invalid_argument(std::string("rmst_diff_test: no events in ") +
                                        (g == &trt ? "treatment" : "control") + " group");
    }

    DiffTestResult r;
    r.tau = tau;
    r.treatment = rmst(km_fit(trt), tau);
    r.control = rmst(km_fit(ctl), tau);
    r.diff = r.treatment.estimate - r.control.estimate;
    r.se = std::sqrt(r.treatment.variance + r.control.variance);
    r.z = r.diff / r.se;
    const double df = static_cast<double>(trt.size() + ctl.size() - 2);
    const double q = reference == Reference::normal
                         ? stats::normal_quantile(0.975)
                         : stats::student_t_quantile(0.975, df);
    r.p_value = reference == Reference::normal ? stats::two_sided_p(r.z)
                                               : stats::two_sided_p_t(r.z, df);
    r.ci_low = r.diff - q * r.se;
    r.ci_high = r.diff + q * r.se;
    return r;
}

std::vector<CurvePoint> export_curve(const StepFunction& surv) {
    std::vector<CurvePoint> pts;
    pts.reserve(surv.jump_times.size() + 1);
    pts.push_back({0.0, 1.0});
    for (std::size_t j = 0; j < surv.jump_times.size(); ++j)
        pts.push_back({surv.jump_times[j], surv.values[j]});
    return pts;
}

void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve) {
    out << "time,survival\n";
    char buf[64];
    for (const auto& p : curve) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", p.time, p.survival);
        out << buf;
    }
}

}  // namespace rmst
