#include "rmst/ipcw.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "rmst/fit_common.hpp"
#include "rmst/pseudo.hpp"
#include "rmst/survival.hpp"

namespace rmst {

namespace {

bool is_complete(const SurvivalSample& s, double tau, CompletionRule rule) {
    if (s.event) return true;
    return rule == CompletionRule::event_or_end_at_tau ? s.time == tau : s.time >= tau;
}

// G events are censorings strictly before tau; everything else (events, and
// follow-up reaching tau) enters as censored at the observed time.
StepFunction censoring_survival(std::span<const SurvivalSample> samples, double tau) {
    std::vector<SurvivalSample> relabeled(samples.begin(), samples.end());
    for (auto& s : relabeled) s.event = !s.event && s.time < tau;
    return km_fit(relabeled);
}

}  // namespace

IpcwWeights ipcw_weights(std::span<const SurvivalSample> samples, double tau,
                         const IpcwOptions& options) {
    if (samples.empty()) throw std::invalid_argument("ipcw_weights: empty input");
    const std::size_t n = samples.size();

    IpcwWeights out;
    out.tau = tau;
    out.weights.assign(n, 0.0);
    out.x.resize(n);
    out.complete.assign(n, 0);

    if (options.scope == GhatScope::pooled) {
        out.g_hat = censoring_survival(samples, tau);
    } else {
        std::vector<SurvivalSample> arm[2];
        for (const auto& s : samples) arm[static_cast<int>(s.group)].push_back(s);
        for (int a = 0; a < 2; ++a)
            if (!arm[a].empty()) out.g_hat_arm[a] = censoring_survival(arm[a], tau);
    }

    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = samples[i];
        out.x[i] = std::min(s.time, tau);
        if (!is_complete(s, tau, options.completion)) continue;
        out.complete[i] = 1;
        const StepFunction& g = options.scope == GhatScope::pooled
                                    ? out.g_hat
                                    : out.g_hat_arm[static_cast<int>(s.group)];
        const double gx = g(out.x[i]);
        if (gx <= 0.0)
            throw std::runtime_error("ipcw_weights: censoring support exhausted (subject " +
                                     s.id + ")");
        out.weights[i] = 1.0 / gx;
    }
    return out;
}

Eigen::MatrixXd ipcw_variance(const Eigen::VectorXd& y, const Eigen::MatrixXd& design,
                              const Eigen::VectorXd& weights, const Eigen::VectorXd& beta,
                              Link link) {
    const Eigen::Index n = design.rows();
    const Eigen::Index p = design.cols();
    Eigen::MatrixXd grads(n, p);
    Eigen::MatrixXd contribs(n, p);
    const Eigen::VectorXd eta = design * beta;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double m = link == Link::identity ? eta[i] : std::exp(eta[i]);
        const Eigen::RowVectorXd g = (link == Link::identity ? 1.0 : m) * design.row(i);
        grads.row(i) = std::sqrt(weights[i]) * g;
        contribs.row(i) = weights[i] * (y[i] - m) * g;
    }
    return sandwich_variance(grads, contribs);
}

RegressionFit fit_ipcw(std::span<const SurvivalSample> samples, const Eigen::MatrixXd& design,
                       double tau, Link link, const IpcwOptions& options) {
    const Eigen::Index n = design.rows();
    if (n != static_cast<Eigen::Index>(samples.size()))
        throw std::invalid_argument("fit_ipcw: design rows != sample count");

    const IpcwWeights w = ipcw_weights(samples, tau, options);
    const long n_complete =
        std::count(w.complete.begin(), w.complete.end(), static_cast<char>(1));
    if (n_complete < design.cols())
        throw std::invalid_argument("fit_ipcw: fewer complete subjects than design columns");

    Eigen::VectorXd y(n);
    Eigen::VectorXd wt(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        y[i] = w.x[static_cast<std::size_t>(i)];
        wt[i] = w.weights[static_cast<std::size_t>(i)];
    }
    return detail::fit_estimating_equation(y, design, wt, link);
}

void write_weights_csv(std::ostream& out, std::span<const SurvivalSample> samples,
                       const IpcwWeights& w) {
    out << "id,x,selected,weight\n";
    char buf[64];
    for (std::size_t i = 0; i < samples.size(); ++i) {
        out << samples[i].id << ',';
        std::snprintf(buf, sizeof buf, "%.17g", w.x[i]);
        out << buf << ',' << (w.complete[i] ? 1 : 0) << ',';
        std::snprintf(buf, sizeof buf, "%.17g", w.weights[i]);
        out << buf << '\n';
    }
}

}  // namespace rmst
