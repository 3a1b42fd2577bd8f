#include "rmst/cox.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "rmst/stats.hpp"

namespace rmst {

namespace {

struct PartialLikelihood {
    double loglik = 0.0;
    Eigen::VectorXd score;
    Eigen::MatrixXd info;
};

// One sweep over times in decreasing order; the risk set grows as the sweep
// descends. Breslow handling: all deaths at a tied time share the risk-set
// sums, which include everybody observed at that time.
PartialLikelihood evaluate(const std::vector<double>& time, const std::vector<char>& event,
                           const Eigen::MatrixXd& z, const Eigen::VectorXd& beta) {
    const std::size_t n = time.size();
    const Eigen::Index p = z.cols();
    PartialLikelihood out;
    out.score = Eigen::VectorXd::Zero(p);
    out.info = Eigen::MatrixXd::Zero(p, p);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return time[a] > time[b]; });

    double s0 = 0.0;
    Eigen::VectorXd s1 = Eigen::VectorXd::Zero(p);
    Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(p, p);

    std::size_t i = 0;
    while (i < n) {
        const double t = time[order[i]];
        std::size_t j = i;
        while (j < n && time[order[j]] == t) {
            const std::size_t k = order[j];
            const double r = std::exp(z.row(k) * beta);
            s0 += r;
            s1 += r * z.row(k).transpose();
            s2 += r * (z.row(k).transpose() * z.row(k));
            ++j;
        }
        for (std::size_t m = i; m < j; ++m) {
            const std::size_t k = order[m];
            if (!event[k]) continue;
            out.loglik += z.row(k) * beta - std::log(s0);
            out.score += z.row(k).transpose() - s1 / s0;
            out.info += s2 / s0 - (s1 / s0) * (s1 / s0).transpose();
        }
        i = j;
    }
    return out;
}

}  // namespace

CoxFit fit_coxph(std::span<const SurvivalSample> samples, const Eigen::MatrixXd& design) {
    const std::size_t n = samples.size();
    if (n == 0) throw std::invalid_argument("fit_coxph: empty input");
    if (design.rows() != static_cast<Eigen::Index>(n))
        throw std::invalid_argument("fit_coxph: design rows != sample count");

    std::vector<double> time(n);
    std::vector<char> event(n);
    int n_events = 0;
    for (std::size_t i = 0; i < n; ++i) {
        time[i] = samples[i].time;
        event[i] = samples[i].event ? 1 : 0;
        n_events += event[i];
    }
    if (n_events == 0) throw std::invalid_argument("fit_coxph: no events");

    const Eigen::Index p = design.cols();
    CoxFit fit;
    if (p == 0) {
        fit.coefficients.resize(0);
        fit.covariance.resize(0, 0);
        fit.wald_z.resize(0);
        fit.p_values.resize(0);
        fit.log_partial_likelihood =
            evaluate(time, event, Eigen::MatrixXd::Zero(n, 0), Eigen::VectorXd::Zero(0)).loglik;
        return fit;
    }

    const Eigen::RowVectorXd centre = design.colwise().mean();
    const Eigen::MatrixXd zc = design.rowwise() - centre;

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    PartialLikelihood cur = evaluate(time, event, zc, beta);
    constexpr double kScoreTol = 1e-9;
    constexpr double kRelTol = 1e-10;
    constexpr int kMaxIter = 60;
    int iter = 0;
    bool converged = cur.score.lpNorm<Eigen::Infinity>() < kScoreTol;
    while (!converged && iter < kMaxIter) {
        Eigen::LDLT<Eigen::MatrixXd> ldlt(cur.info);
        if (ldlt.info() != Eigen::Success) break;
        const Eigen::VectorXd step = ldlt.solve(cur.score);
        if (!step.allFinite()) break;
        double alpha = 1.0;
        Eigen::VectorXd next_beta = beta + step;
        PartialLikelihood next = evaluate(time, event, zc, next_beta);
        while (next.loglik < cur.loglik && alpha > 1e-10) {
            alpha *= 0.5;
            next_beta = beta + alpha * step;
            next = evaluate(time, event, zc, next_beta);
        }
        const double rel_change =
            std::fabs(next.loglik - cur.loglik) / (std::fabs(cur.loglik) + 1.0);
        beta = next_beta;
        cur = next;
        ++iter;
        converged =
            cur.score.lpNorm<Eigen::Infinity>() < kScoreTol || rel_change < kRelTol;
    }

    fit.n_iterations = iter;
    // A stall of the log likelihood with a score that is still large means the
    // likelihood is monotone in some direction (separation), not a solution.
    fit.converged =
        converged && beta.allFinite() && cur.score.lpNorm<Eigen::Infinity>() < 1e-6;
    if (!fit.converged) fit.diagnostics = "possible monotone likelihood (separation)";
    fit.coefficients = beta;
    fit.log_partial_likelihood = cur.loglik;

    Eigen::FullPivLU<Eigen::MatrixXd> lu(cur.info);
    if (lu.isInvertible()) {
        fit.covariance = lu.inverse();
    } else {
        fit.covariance = Eigen::MatrixXd::Constant(p, p, std::nan(""));
        fit.converged = false;
        fit.diagnostics = "singular observed information";
    }

    fit.wald_z.resize(p);
    fit.p_values.resize(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        const double se = std::sqrt(std::max(0.0, fit.covariance(j, j)));
        fit.wald_z[j] = se > 0.0 ? beta[j] / se : 0.0;
        fit.p_values[j] = se > 0.0 ? stats::two_sided_p(fit.wald_z[j]) : 1.0;
    }
    return fit;
}

}  // namespace rmst
