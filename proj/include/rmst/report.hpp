#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rmst/dataset.hpp"
#include "rmst/ipcw.hpp"
#include "rmst/types.hpp"

namespace rmst {

struct ArmSummary {
    int n = 0;
    int events = 0;
    double censor_fraction = 0.0;
};

struct AnalysisOptions {
    double tau = 0.0;
    Link link = Link::identity;
    Reference reference = Reference::normal;
    bool run_naive = true;
    bool run_andersen = true;
    bool run_tian = true;
    bool run_cox = false;
    IpcwOptions ipcw;
};

/// All selected methods fitted on one shared design [1, group, covariates]
/// (Cox drops the constant column). Per-method failures land in the error
/// strings instead of aborting the report.
struct AnalysisReport {
    double tau = 0.0;
    Link link = Link::identity;
    int n = 0;
    ArmSummary treatment;
    ArmSummary control;
    std::vector<std::string> term_names;  // intercept, group, covariates...

    std::optional<DiffTestResult> naive;
    std::optional<RegressionFit> andersen;
    std::optional<RegressionFit> tian;
    std::optional<CoxFit> cox;
    std::string naive_error, andersen_error, tian_error, cox_error;
};

AnalysisReport analyze(const Dataset& data, const AnalysisOptions& options);

/// Deterministic JSON (stable field order, full precision).
std::string report_json(const AnalysisReport& report);

/// Human-readable `estimate +- SE [CI] (p)` layout, 4 significant digits.
void print_report(std::ostream& out, const AnalysisReport& report);

/// Design matrix used by analyze: constant column, group indicator, then the
/// dataset covariates in order.
Eigen::MatrixXd build_design(const Dataset& data);

}  // namespace rmst
