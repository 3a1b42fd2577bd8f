#include "rmst/report.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include <json.hpp>

#include "rmst/cox.hpp"
#include "rmst/pseudo.hpp"
#include "rmst/survival.hpp"

namespace rmst {

Eigen::MatrixXd build_design(const Dataset& data) {
    const Eigen::Index n = static_cast<Eigen::Index>(data.samples.size());
    const Eigen::Index q = static_cast<Eigen::Index>(data.covariate_names.size());
    Eigen::MatrixXd z(n, 2 + q);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& s = data.samples[static_cast<std::size_t>(i)];
        z(i, 0) = 1.0;
        z(i, 1) = s.group == Arm::treatment ? 1.0 : 0.0;
        for (Eigen::Index c = 0; c < q; ++c)
            z(i, 2 + c) = s.covariates[static_cast<std::size_t>(c)];
    }
    return z;
}

AnalysisReport analyze(const Dataset& data, const AnalysisOptions& opt) {
    AnalysisReport rep;
    rep.tau = opt.tau;
    rep.link = opt.link;
    rep.n = static_cast<int>(data.samples.size());
    for (const auto& s : data.samples) {
        auto& arm = s.group == Arm::treatment ? rep.treatment : rep.control;
        ++arm.n;
        if (s.event) ++arm.events;
    }
    for (auto* arm : {&rep.treatment, &rep.control})
        arm->censor_fraction =
            arm->n > 0 ? static_cast<double>(arm->n - arm->events) / arm->n : 0.0;

    rep.term_names.push_back("intercept");
    rep.term_names.push_back("group");
    for (const auto& c : data.covariate_names) rep.term_names.push_back(c);

    const Eigen::MatrixXd design = build_design(data);

    if (opt.run_naive) {
        try {
            rep.naive = rmst_diff_test(data.samples, opt.tau, opt.reference);
        } catch (const std::exception& e) {
            rep.naive_error = e.what();
        }
    }
    if (opt.run_andersen) {
        try {
            const PseudoValueSet pv = pseudo_values(data.samples, opt.tau);
            rep.andersen = fit_pseudo_gee(pv, design, opt.link);
        } catch (const std::exception& e) {
            rep.andersen_error = e.what();
        }
    }
    if (opt.run_tian) {
        try {
            rep.tian = fit_ipcw(data.samples, design, opt.tau, opt.link, opt.ipcw);
        } catch (const std::exception& e) {
            rep.tian_error = e.what();
        }
    }
    if (opt.run_cox) {
        try {
            rep.cox = fit_coxph(data.samples, design.rightCols(design.cols() - 1));
        } catch (const std::exception& e) {
            rep.cox_error = e.what();
        }
    }
    return rep;
}

namespace {

nlohmann::ordered_json fit_json(const RegressionFit& fit,
                                const std::vector<std::string>& terms) {
    nlohmann::ordered_json coef = nlohmann::ordered_json::array();
    for (Eigen::Index j = 0; j < fit.coefficients.size(); ++j) {
        coef.push_back({{"term", terms[static_cast<std::size_t>(j)]},
                        {"estimate", fit.coefficients[j]},
                        {"se", std::sqrt(std::max(0.0, fit.covariance(j, j)))},
                        {"z", fit.wald_z[j]},
                        {"p", fit.p_values[j]},
                        {"ci_low", fit.ci_low[j]},
                        {"ci_high", fit.ci_high[j]}});
    }
    return {{"link", link_name(fit.link)},
            {"converged", fit.converged},
            {"n_iterations", fit.n_iterations},
            {"coefficients", coef}};
}

std::string pct(double fraction, int num, int den) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f%% (%d/%d)", 100.0 * fraction, num, den);
    return buf;
}

// 4 significant digits for the human-readable table
std::string sig4(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

}  // namespace

std::string report_json(const AnalysisReport& rep) {
    nlohmann::ordered_json j;
    j["tau"] = rep.tau;
    j["link"] = link_name(rep.link);
    j["n"] = rep.n;
    j["summary"] = {
        {"treatment",
         {{"n", rep.treatment.n},
          {"events", rep.treatment.events},
          {"censoring",
           pct(rep.treatment.censor_fraction, rep.treatment.n - rep.treatment.events,
               rep.treatment.n)}}},
        {"control",
         {{"n", rep.control.n},
          {"events", rep.control.events},
          {"censoring", pct(rep.control.censor_fraction, rep.control.n - rep.control.events,
                            rep.control.n)}}}};

    if (rep.naive) {
        const auto& d = *rep.naive;
        j["naive"] = {{"treatment_rmst", d.treatment.estimate},
                      {"treatment_se", std::sqrt(d.treatment.variance)},
                      {"control_rmst", d.control.estimate},
                      {"control_se", std::sqrt(d.control.variance)},
                      {"diff", d.diff},
                      {"se", d.se},
                      {"z", d.z},
                      {"p", d.p_value},
                      {"ci_low", d.ci_low},
                      {"ci_high", d.ci_high}};
    } else if (!rep.naive_error.empty()) {
        j["naive"] = {{"error", rep.naive_error}};
    }

    if (rep.andersen) j["andersen"] = fit_json(*rep.andersen, rep.term_names);
    else if (!rep.andersen_error.empty()) j["andersen"] = {{"error", rep.andersen_error}};
    if (rep.tian) j["tian"] = fit_json(*rep.tian, rep.term_names);
    else if (!rep.tian_error.empty()) j["tian"] = {{"error", rep.tian_error}};

    if (rep.cox) {
        nlohmann::ordered_json coef = nlohmann::ordered_json::array();
        for (Eigen::Index k = 0; k < rep.cox->coefficients.size(); ++k) {
            coef.push_back({{"term", rep.term_names[static_cast<std::size_t>(k) + 1]},
                            {"estimate", rep.cox->coefficients[k]},
                            {"se", std::sqrt(std::max(0.0, rep.cox->covariance(k, k)))},
                            {"z", rep.cox->wald_z[k]},
                            {"p", rep.cox->p_values[k]}});
        }
        j["cox"] = {{"converged", rep.cox->converged},
                    {"log_partial_likelihood", rep.cox->log_partial_likelihood},
                    {"coefficients", coef}};
    } else if (!rep.cox_error.empty()) {
        j["cox"] = {{"error", rep.cox_error}};
    }
    return j.dump(2) + "\n";
}

namespace {

void print_fit(std::ostream& out, const char* title, const RegressionFit& fit,
               const std::vector<std::string>& terms) {
    out << title << " (link=" << link_name(fit.link)
        << (fit.converged ? "" : ", NOT CONVERGED") << ")\n";
    for (Eigen::Index k = 0; k < fit.coefficients.size(); ++k) {
        const double se = std::sqrt(std::max(0.0, fit.covariance(k, k)));
        out << "  " << terms[static_cast<std::size_t>(k)] << ": " << sig4(fit.coefficients[k])
            << " +- " << sig4(se) << " [" << sig4(fit.ci_low[k]) << ", " << sig4(fit.ci_high[k])
            << "] (" << sig4(fit.p_values[k]) << ")\n";
    }
}

}  // namespace

void print_report(std::ostream& out, const AnalysisReport& rep) {
    out << "n = " << rep.n << ", tau = " << sig4(rep.tau) << "\n";
    out << "treatment: n = " << rep.treatment.n << ", events = " << rep.treatment.events
        << ", censoring = "
        << pct(rep.treatment.censor_fraction, rep.treatment.n - rep.treatment.events,
               rep.treatment.n)
        << "\n";
    out << "control:   n = " << rep.control.n << ", events = " << rep.control.events
        << ", censoring = "
        << pct(rep.control.censor_fraction, rep.control.n - rep.control.events, rep.control.n)
        << "\n";

    if (rep.naive) {
        const auto& d = *rep.naive;
        out << "naive RMST\n";
        out << "  treatment: " << sig4(d.treatment.estimate) << " +- "
            << sig4(std::sqrt(d.treatment.variance)) << "\n";
        out << "  control:   " << sig4(d.control.estimate) << " +- "
            << sig4(std::sqrt(d.control.variance)) << "\n";
        out << "  diff: " << sig4(d.diff) << " +- " << sig4(d.se) << " [" << sig4(d.ci_low)
            << ", " << sig4(d.ci_high) << "] (" << sig4(d.p_value) << ")\n";
    } else if (!rep.naive_error.empty()) {
        out << "naive RMST: error: " << rep.naive_error << "\n";
    }

    if (rep.andersen) print_fit(out, "andersen", *rep.andersen, rep.term_names);
    else if (!rep.andersen_error.empty())
        out << "andersen: error: " << rep.andersen_error << "\n";
    if (rep.tian) print_fit(out, "tian", *rep.tian, rep.term_names);
    else if (!rep.tian_error.empty()) out << "tian: error: " << rep.tian_error << "\n";

    if (rep.cox) {
        out << "cox" << (rep.cox->converged ? "" : " (NOT CONVERGED)") << "\n";
        for (Eigen::Index k = 0; k < rep.cox->coefficients.size(); ++k) {
            const double se = std::sqrt(std::max(0.0, rep.cox->covariance(k, k)));
            out << "  " << rep.term_names[static_cast<std::size_t>(k) + 1] << ": "
                << sig4(rep.cox->coefficients[k]) << " +- " << sig4(se) << " ("
                << sig4(rep.cox->p_values[k]) << ")\n";
        }
    } else if (!rep.cox_error.empty()) {
        out << "cox: error: " << rep.cox_error << "\n";
    }
}

}  // namespace rmst
