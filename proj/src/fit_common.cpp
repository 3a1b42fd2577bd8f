#include "rmst/fit_common.hpp"

#include <cmath>
#include <stdexcept>

#include "rmst/pseudo.hpp"
#include "rmst/stats.hpp"

namespace rmst::detail {

namespace {

Eigen::VectorXd sup_norm_newton_log_link(const Eigen::VectorXd& y,
                                         const Eigen::MatrixXd& z,
                                         const Eigen::VectorXd& w, RegressionFit& fit) {
    const Eigen::Index p = z.cols();

    // Start at the weighted least-squares fit of log-clamped responses.
    const double ymax = y.maxCoeff();
    if (ymax <= 0.0) {
        fit.converged = false;
        fit.diagnostics = "log link: no positive response";
        return Eigen::VectorXd::Zero(p);
    }
    const double floor = 1e-3 * ymax;
    Eigen::VectorXd logy(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) logy[i] = std::log(std::max(y[i], floor));
    const Eigen::MatrixXd zw = w.cwiseSqrt().asDiagonal() * z;
    Eigen::VectorXd beta =
        (zw.transpose() * zw).ldlt().solve(zw.transpose() * (w.cwiseSqrt().asDiagonal() * logy));

    const auto score = [&](const Eigen::VectorXd& b) {
        const Eigen::VectorXd eta = z * b;
        Eigen::VectorXd u = Eigen::VectorXd::Zero(p);
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            const double m = std::exp(eta[i]);
            u += w[i] * (y[i] - m) * m * z.row(i).transpose();
        }
        return u;
    };

    constexpr double kTol = 1e-10;
    constexpr int kMaxIter = 100;
    Eigen::VectorXd u = score(beta);
    double unorm = u.lpNorm<Eigen::Infinity>();
    int iter = 0;
    while (unorm >= kTol && iter < kMaxIter) {
        const Eigen::VectorXd eta = z * beta;
        Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(p, p);
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            const double m = std::exp(eta[i]);
            jac += w[i] * (y[i] * m - 2.0 * m * m) * (z.row(i).transpose() * z.row(i));
        }
        Eigen::VectorXd step = jac.fullPivLu().solve(-u);
        if (!step.allFinite()) break;
        double alpha = 1.0;
        Eigen::VectorXd next = beta + step;
        Eigen::VectorXd unext = score(next);
        while (unext.lpNorm<Eigen::Infinity>() >= unorm && alpha > 1e-8) {
            alpha *= 0.5;
            next = beta + alpha * step;
            unext = score(next);
        }
        if (unext.lpNorm<Eigen::Infinity>() >= unorm) break;  // no descent direction left
        beta = next;
        u = unext;
        unorm = u.lpNorm<Eigen::Infinity>();
        ++iter;
    }
    fit.n_iterations = iter;
    fit.converged = unorm < kTol;
    if (!fit.converged)
        fit.diagnostics = "log link: estimating-function sup-norm " + std::to_string(unorm);
    return beta;
}

}  // namespace

void fill_wald(RegressionFit& fit) {
    const Eigen::Index p = fit.coefficients.size();
    fit.wald_z.resize(p);
    fit.p_values.resize(p);
    fit.ci_low.resize(p);
    fit.ci_high.resize(p);
    const double q = stats::normal_quantile(0.975);
    for (Eigen::Index j = 0; j < p; ++j) {
        const double se = std::sqrt(std::max(0.0, fit.covariance(j, j)));
        fit.wald_z[j] = se > 0.0 ? fit.coefficients[j] / se : 0.0;
        fit.p_values[j] = se > 0.0 ? stats::two_sided_p(fit.wald_z[j]) : 1.0;
        fit.ci_low[j] = fit.coefficients[j] - q * se;
        fit.ci_high[j] = fit.coefficients[j] + q * se;
    }
}

RegressionFit fit_estimating_equation(const Eigen::VectorXd& y, const Eigen::MatrixXd& design,
                                      const Eigen::VectorXd& weights, Link link) {
    const Eigen::Index n = design.rows();
    const Eigen::Index p = design.cols();
    if (y.size() != n || weights.size() != n)
        throw std::invalid_argument("fit: inconsistent row counts");

    const Eigen::VectorXd sw = weights.cwiseSqrt();
    const Eigen::MatrixXd zw = sw.asDiagonal() * design;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(zw);
    if (qr.rank() < p) throw std::invalid_argument("fit: design matrix is rank-deficient");

    RegressionFit fit;
    fit.link = link;

    if (link == Link::identity) {
        fit.coefficients = qr.solve(sw.asDiagonal() * y);
        fit.n_iterations = 0;
        fit.converged = true;
    } else {
        fit.coefficients = sup_norm_newton_log_link(y, design, weights, fit);
        for (Eigen::Index i = 0; i < n; ++i)
            if (weights[i] > 0.0 && y[i] <= 0.0) fit.nonpositive_response = true;
    }

    // Sandwich covariance: gradients d m/d beta and weighted contributions.
    Eigen::MatrixXd grads(n, p);
    Eigen::MatrixXd contribs(n, p);
    const Eigen::VectorXd eta = design * fit.coefficients;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double m = link == Link::identity ? eta[i] : std::exp(eta[i]);
        const Eigen::RowVectorXd g =
            (link == Link::identity ? 1.0 : m) * design.row(i);
        grads.row(i) = sw[i] * g;
        contribs.row(i) = weights[i] * (y[i] - m) * g;
    }
    fit.covariance = sandwich_variance(grads, contribs);
    fill_wald(fit);
    return fit;
}

}  // namespace rmst::detail
