#include "rmst/pseudo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "rmst/fit_common.hpp"
#include "rmst/survival.hpp"

namespace rmst {

namespace {

// RMST of the sorted sample with one index skipped, in O(n).
double loo_rmst(const std::vector<double>& times, const std::vector<unsigned char>& events,
                std::size_t skip, double tau) {
    const std::size_t n = times.size();
    double area = 0.0, prev_t = 0.0, s = 1.0;
    std::size_t i = 0;
    int at_risk = static_cast<int>(n) - 1;
    bool done = false;
    while (i < n && !done) {
        if (i == skip) {
            ++i;
            continue;
        }
        const double t = times[i];
        int d = 0, m = 0;
        for (std::size_t j = i; j < n && times[j] == t; ++j) {
            if (j == skip) continue;
            if (events[j]) ++d;
            ++m;
        }
        while (i < n && times[i] == t) ++i;
        if (d > 0) {
            if (t >= tau) {
                done = true;
            } else {
                area += (t - prev_t) * s;
                s *= 1.0 - static_cast<double>(d) / at_risk;
                prev_t = t;
            }
        }
        at_risk -= m;
    }
    area += (tau - prev_t) * s;
    return area;
}

struct SortedSample {
    std::vector<double> times;
    std::vector<unsigned char> events;
    std::vector<std::size_t> original;  // position in the input span
};

SortedSample sort_by_time(std::span<const SurvivalSample> samples) {
    const std::size_t n = samples.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return samples[a].time < samples[b].time; });
    SortedSample s;
    s.times.resize(n);
    s.events.resize(n);
    s.original = order;
    for (std::size_t k = 0; k < n; ++k) {
        s.times[k] = samples[order[k]].time;
        s.events[k] = samples[order[k]].event ? 1 : 0;
    }
    return s;
}

template <bool Parallel>
PseudoValueSet pseudo_values_impl(std::span<const SurvivalSample> samples, double tau) {
    const std::size_t n = samples.size();
    if (n < 2) throw std::invalid_argument("pseudo_values: need at least two subjects");

    const auto sorted = sort_by_time(samples);
    const auto pooled = km_fit(samples);
    const double mu = rmst(pooled, tau).estimate;

    const int total_events =
        std::accumulate(sorted.events.begin(), sorted.events.end(), 0,
                        [](int acc, unsigned char e) { return acc + (e ? 1 : 0); });

    // Per-subsample preconditions: events remain, and tau stays observable.
    for (std::size_t k = 0; k < n; ++k) {
        if (total_events - (sorted.events[k] ? 1 : 0) == 0)
            throw std::invalid_argument(
                "pseudo_values: leave-one-out subsample without events (subject " +
                samples[sorted.original[k]].id + ")");
        const double submax = (k == n - 1) ? sorted.times[n - 2] : sorted.times[n - 1];
        if (tau > submax)
            throw std::domain_error(
                "pseudo_values: tau unobservable when leaving out subject " +
                samples[sorted.original[k]].id);
    }

    std::vector<double> pv(n);
    const auto body = [&](std::size_t k) {
        const double mi = loo_rmst(sorted.times, sorted.events, k, tau);
        pv[sorted.original[k]] =
            static_cast<double>(n) * mu - static_cast<double>(n - 1) * mi;
    };
    if constexpr (Parallel) {
#pragma omp parallel for schedule(static)
        for (long k = 0; k < static_cast<long>(n); ++k) body(static_cast<std::size_t>(k));
    } else {
        for (std::size_t k = 0; k < n; ++k) body(k);
    }

    PseudoValueSet out;
    out.values = std::move(pv);
    out.tau = tau;
    out.pooled_rmst = mu;
    return out;
}

}  // namespace

PseudoValueSet pseudo_values(std::span<const SurvivalSample> samples, double tau) {
    return pseudo_values_impl<true>(samples, tau);
}

PseudoValueSet pseudo_values_serial(std::span<const SurvivalSample> samples, double tau) {
    return pseudo_values_impl<false>(samples, tau);
}

Eigen::MatrixXd sandwich_variance(const Eigen::MatrixXd& gradients,
                                  const Eigen::MatrixXd& contributions) {
    const Eigen::MatrixXd bread = gradients.transpose() * gradients;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(bread);
    if (!lu.isInvertible())
        throw std::runtime_error("sandwich_variance: singular information matrix");
    const Eigen::MatrixXd bread_inv = lu.inverse();
    const Eigen::MatrixXd meat = contributions.transpose() * contributions;
    return bread_inv * meat * bread_inv;
}

RegressionFit fit_pseudo_gee(const PseudoValueSet& pv, const Eigen::MatrixXd& design,
                             Link link) {
    const Eigen::Index n = design.rows();
    if (n != static_cast<Eigen::Index>(pv.values.size()))
        throw std::invalid_argument("fit_pseudo_gee: design rows != pseudo-value count");
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y[i] = pv.values[static_cast<std::size_t>(i)];
    return detail::fit_estimating_equation(y, design, Eigen::VectorXd::Ones(n), link);
}

void write_pseudo_csv(std::ostream& out, std::span<const SurvivalSample> samples,
                      const PseudoValueSet& pv) {
    out << "id,time,event,group,pseudo_value\n";
    char buf[64];
    for (std::size_t i = 0; i < samples.size(); ++i) {
        out << samples[i].id << ',';
        std::snprintf(buf, sizeof buf, "%.17g", samples[i].time);
        out << buf << ',' << (samples[i].event ? 1 : 0) << ','
            << arm_name(samples[i].group) << ',';
        std::snprintf(buf, sizeof buf, "%.17g", pv.values[i]);
        out << buf << '\n';
    }
}

}  // namespace rmst
