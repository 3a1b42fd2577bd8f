#include "rmst/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <json.hpp>

#include "rmst/cox.hpp"
#include "rmst/ipcw.hpp"
#include "rmst/pseudo.hpp"
#include "rmst/survival.hpp"

namespace rmst {

namespace {

ScenarioConfig make_ph(std::string name, double b1, double mean_t, double mean_c,
                       double cens_t, double cens_c) {
    ScenarioConfig s;
    s.name = std::move(name);
    s.family = Family::ph;
    s.tau = 0.2;
    s.beta0 = 2.0;
    s.beta1 = b1;
    s.beta2 = -0.1;
    s.x2_mean_treatment = mean_t;
    s.x2_mean_control = mean_c;
    s.censor_target_treatment = cens_t;
    s.censor_target_control = cens_c;
    return s;
}

ScenarioConfig make_cp(std::string name, double tau, double b0, double b3, double mean_t,
                       double mean_c, double cens_t, double cens_c) {
    ScenarioConfig s;
    s.name = std::move(name);
    s.family = Family::cp;
    s.tau = tau;
    s.beta0 = b0;
    s.beta1 = -0.5;
    s.beta2 = -0.1;
    s.beta3 = b3;
    s.a = 1.0;
    s.b = -0.5;
    s.x2_mean_treatment = mean_t;
    s.x2_mean_control = mean_c;
    s.censor_target_treatment = cens_t;
    s.censor_target_control = cens_c;
    return s;
}

std::string content_key(const ScenarioConfig& c, Arm arm) {
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "%d|%.17g|%.17g|%.17g|%.17g|%.17g|%.17g|%.17g|%.17g|%.17g|%.17g|%.17g|"
                  "%.17g|%.17g|%.17g|%.17g|%d",
                  static_cast<int>(c.family), c.tau, c.beta0, c.beta1, c.beta2, c.beta3,
                  c.x2_mean_treatment, c.x2_mean_control, c.x2_variance, c.a, c.b,
                  c.change_point, c.censor_target_treatment, c.censor_target_control,
                  c.weibull_shape, c.weibull_scale, static_cast<int>(arm));
    return buf;
}

double log_time_scale(const ScenarioConfig& cfg, Arm arm, double x2) {
    double eta = cfg.beta0 + cfg.beta2 * x2;
    if (arm == Arm::treatment) {
        eta += cfg.beta1;
        if (cfg.family == Family::cp) {
            const double x3 = x2 <= cfg.change_point ? cfg.a : cfg.b;
            eta += cfg.beta3 * x3;
        }
    }
    return eta;
}

}  // namespace

const std::vector<ScenarioConfig>& builtin_scenarios() {
    static const std::vector<ScenarioConfig> table = {
        make_ph("PH-S1", 0.0, 50, 50, 0.1, 0.1),
        make_ph("PH-S2", 0.0, 50, 50, 0.4, 0.1),
        make_ph("PH-S3", 0.2, 50, 50, 0.1, 0.1),
        make_ph("PH-S4", 0.2, 50, 50, 0.4, 0.1),
        make_ph("PH-S5", 0.0, 48, 52, 0.1, 0.1),
        make_ph("PH-S6", 0.0, 48, 52, 0.4, 0.1),
        make_ph("PH-S7", 0.2, 48, 52, 0.1, 0.1),
        make_ph("PH-S8", 0.2, 48, 52, 0.4, 0.1),
        make_cp("CP-S1", 0.5, 2.0, 2.0, 50, 50, 0.1, 0.1),
        make_cp("CP-S2", 0.5, 2.0, 2.0, 50, 50, 0.4, 0.1),
        make_cp("CP-S3", 0.5, 2.0, 2.0, 48, 52, 0.1, 0.1),
        make_cp("CP-S4", 0.5, 2.0, 2.0, 48, 52, 0.4, 0.1),
        make_cp("CP-S5", 0.6, 4.0, 3.0, 50, 50, 0.1, 0.1),
        make_cp("CP-S6", 0.6, 4.0, 3.0, 50, 50, 0.4, 0.1),
        make_cp("CP-S7", 0.6, 4.0, 3.0, 48, 52, 0.1, 0.1),
        make_cp("CP-S8", 0.6, 4.0, 3.0, 48, 52, 0.4, 0.1),
    };
    return table;
}

void print_scenario(std::ostream& out, const ScenarioConfig& c) {
    char buf[64];
    const auto field = [&](const char* key, double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << key << ": " << buf << '\n';
    };
    out << "name: " << c.name << '\n';
    out << "family: " << family_name(c.family) << '\n';
    field("tau", c.tau);
    field("beta0", c.beta0);
    field("beta1", c.beta1);
    field("beta2", c.beta2);
    if (c.family == Family::cp) {
        field("beta3", c.beta3);
        field("a", c.a);
        field("b", c.b);
        field("change_point", c.change_point);
    }
    field("x2_mean_treatment", c.x2_mean_treatment);
    field("x2_mean_control", c.x2_mean_control);
    field("x2_variance", c.x2_variance);
    field("censor_target_treatment", c.censor_target_treatment);
    field("censor_target_control", c.censor_target_control);
    field("weibull_shape", c.weibull_shape);
    field("weibull_scale", c.weibull_scale);
}

std::vector<ScenarioConfig> parse_scenarios(std::istream& in) {
    std::vector<ScenarioConfig> out;
    ScenarioConfig cur;
    bool any_field = false;
    int line_no = 0;

    const auto flush = [&]() {
        if (!any_field) return;
        if (cur.name.empty())
            throw std::runtime_error("scenario config: document without a name");
        if (cur.tau <= 0.0)
            throw std::runtime_error("scenario config: " + cur.name + ": tau must be > 0");
        if (cur.censor_target_treatment >= 1.0 || cur.censor_target_control >= 1.0)
            throw std::runtime_error("scenario config: " + cur.name +
                                     ": censoring targets must be < 1");
        out.push_back(cur);
        cur = ScenarioConfig{};
        any_field = false;
    };

    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        while (!line.empty() && (line.back() == ' ' || line.back() == '\r' || line.back() == '\t'))
            line.pop_back();
        std::size_t start = line.find_first_not_of(" \t");
        if (start == std::string::npos) continue;
        if (line.compare(start, 3, "---") == 0) {
            flush();
            continue;
        }
        const auto colon = line.find(':', start);
        if (colon == std::string::npos)
            throw std::runtime_error("scenario config line " + std::to_string(line_no) +
                                     ": expected `key: value`");
        std::string key = line.substr(start, colon - start);
        while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
        std::string value = line.substr(colon + 1);
        const auto vstart = value.find_first_not_of(" \t");
        value = vstart == std::string::npos ? std::string{} : value.substr(vstart);

        const auto num = [&]() {
            try {
                std::size_t used = 0;
                const double v = std::stod(value, &used);
                if (used != value.size()) throw std::invalid_argument(value);
                return v;
            } catch (const std::exception&) {
                throw std::runtime_error("scenario config line " + std::to_string(line_no) +
                                         ": bad number `" + value + "` for " + key);
            }
        };

        any_field = true;
        if (key == "name") cur.name = value;
        else if (key == "family") {
            if (value == "PH") cur.family = Family::ph;
            else if (value == "CP") cur.family = Family::cp;
            else
                throw std::runtime_error("scenario config line " + std::to_string(line_no) +
                                         ": family must be PH or CP");
        }
        else if (key == "tau") cur.tau = num();
        else if (key == "beta0") cur.beta0 = num();
        else if (key == "beta1") cur.beta1 = num();
        else if (key == "beta2") cur.beta2 = num();
        else if (key == "beta3") cur.beta3 = num();
        else if (key == "a") cur.a = num();
        else if (key == "b") cur.b = num();
        else if (key == "change_point") cur.change_point = num();
        else if (key == "x2_mean_treatment") cur.x2_mean_treatment = num();
        else if (key == "x2_mean_control") cur.x2_mean_control = num();
        else if (key == "x2_variance") cur.x2_variance = num();
        else if (key == "censor_target_treatment") cur.censor_target_treatment = num();
        else if (key == "censor_target_control") cur.censor_target_control = num();
        else if (key == "weibull_shape") cur.weibull_shape = num();
        else if (key == "weibull_scale") cur.weibull_scale = num();
        else
            throw std::runtime_error("scenario config line " + std::to_string(line_no) +
                                     ": unknown field `" + key + "`");
    }
    flush();
    return out;
}

SubjectDraw draw_subject(const ScenarioConfig& cfg, Arm arm, double censor_rate,
                         RngStream& stream) {
    SubjectDraw d;
    const double mean =
        arm == Arm::treatment ? cfg.x2_mean_treatment : cfg.x2_mean_control;
    d.x2 = stream.normal(mean, std::sqrt(cfg.x2_variance));
    const double eps = stream.weibull(cfg.weibull_shape, cfg.weibull_scale);
    d.t = std::exp(log_time_scale(cfg, arm, d.x2)) * eps;
    const double u = stream.uniform();
    d.c = censor_rate > 0.0 ? -std::log(u) / censor_rate
                            : std::numeric_limits<double>::infinity();
    return d;
}

double calibrate_censoring(const ScenarioConfig& cfg, Arm arm) {
    const double target = arm == Arm::treatment ? cfg.censor_target_treatment
                                                : cfg.censor_target_control;
    if (target <= 0.0) return 0.0;

    static std::map<std::string, double> cache;
    static std::mutex cache_mutex;
    const std::string key = content_key(cfg, arm);
    {
        std::lock_guard<std::mutex> lock(cache_mutex);
        const auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }

    // Common random numbers: censored at rate L iff e_i < L * min(T_i, tau).
    constexpr int kDraws = 200000;
    constexpr std::uint64_t kCalibrationSeed = 0xca11b7a7e5eedULL;
    RngStream stream = RngStream(kCalibrationSeed).derive(fnv1a(key));
    std::vector<double> lm(kDraws);  // min(T, tau)
    std::vector<double> le(kDraws);  // unit-exponential draws
    for (int i = 0; i < kDraws; ++i) {
        SubjectDraw d = draw_subject(cfg, arm, 0.0, stream);
        lm[i] = std::min(d.t, cfg.tau);
        le[i] = -std::log(stream.uniform());
    }
    const auto frac_censored = [&](double rate) {
        int c = 0;
        for (int i = 0; i < kDraws; ++i) c += le[i] < rate * lm[i];
        return static_cast<double>(c) / kDraws;
    };

    double lo = 0.0, hi = 1.0;
    while (frac_censored(hi) < target) {
        hi *= 4.0;
        if (hi > 1e15)
            throw std::runtime_error("calibrate_censoring: target unreachable for " + cfg.name);
    }
    constexpr double kTol = 0.005;
    double mid = hi;
    for (int it = 0; it < 200; ++it) {
        mid = 0.5 * (lo + hi);
        const double f = frac_censored(mid);
        if (std::fabs(f - target) <= kTol) break;
        (f < target ? lo : hi) = mid;
    }

    std::lock_guard<std::mutex> lock(cache_mutex);
    cache.emplace(key, mid);
    return mid;
}

RngStream replicate_stream(std::uint64_t seed, const ScenarioConfig& cfg, int n,
                           int replicate) {
    return RngStream(seed)
        .derive(fnv1a(cfg.name))
        .derive(static_cast<std::uint64_t>(n))
        .derive(static_cast<std::uint64_t>(replicate));
}

std::vector<SurvivalSample> generate_dataset(const ScenarioConfig& cfg, int n,
                                             RngStream stream) {
    if (n < 2 || n % 2 != 0)
        throw std::invalid_argument("generate_dataset: n must be even and >= 2");
    const double rate_t = calibrate_censoring(cfg, Arm::treatment);
    const double rate_c = calibrate_censoring(cfg, Arm::control);

    std::vector<SurvivalSample> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const Arm arm = i < n / 2 ? Arm::treatment : Arm::control;
        const SubjectDraw d =
            draw_subject(cfg, arm, arm == Arm::treatment ? rate_t : rate_c, stream);
        auto& s = out[static_cast<std::size_t>(i)];
        s.id = std::to_string(i + 1);
        s.time = std::min(d.t, d.c);
        s.event = d.t <= d.c;
        s.group = arm;
        s.covariates = {d.x2};
    }
    return out;
}

namespace {

struct CellCounts {
    int rejections[4] = {0, 0, 0, 0};
    int failures[4] = {0, 0, 0, 0};

    CellCounts& operator+=(const CellCounts& o) {
        for (int m = 0; m < 4; ++m) {
            rejections[m] += o.rejections[m];
            failures[m] += o.failures[m];
        }
        return *this;
    }
};

CellCounts run_replicate(const ScenarioConfig& cfg, int n, int rep,
                         const PowerStudyOptions& opts) {
    CellCounts c;
    const auto samples = generate_dataset(cfg, n, replicate_stream(opts.seed, cfg, n, rep));

    Eigen::MatrixXd design(n, 3);
    Eigen::MatrixXd cox_design(n, 2);
    for (int i = 0; i < n; ++i) {
        const double x1 =
            samples[static_cast<std::size_t>(i)].group == Arm::treatment ? 1.0 : 0.0;
        const double x2 = samples[static_cast<std::size_t>(i)].covariates[0];
        design(i, 0) = 1.0;
        design(i, 1) = x1;
        design(i, 2) = x2;
        cox_design(i, 0) = x1;
        cox_design(i, 1) = x2;
    }

    const auto tally = [&](Method m, bool ok, double p) {
        const int idx = static_cast<int>(m);
        if (!ok) {
            ++c.failures[idx];
            return;
        }
        if (p < opts.alpha) ++c.rejections[idx];
    };

    try {
        const DiffTestResult r = rmst_diff_test(samples, cfg.tau, Reference::normal);
        tally(Method::naive, true, r.p_value);
    } catch (const std::exception&) {
        tally(Method::naive, false, 1.0);
    }

    try {
        const PseudoValueSet pv = pseudo_values_serial(samples, cfg.tau);
        const RegressionFit fit = fit_pseudo_gee(pv, design, opts.link);
        tally(Method::andersen, fit.converged, fit.converged ? fit.p_values[1] : 1.0);
    } catch (const std::exception&) {
        tally(Method::andersen, false, 1.0);
    }

    try {
        const RegressionFit fit = fit_ipcw(samples, design, cfg.tau, opts.link);
        tally(Method::tian, fit.converged, fit.converged ? fit.p_values[1] : 1.0);
    } catch (const std::exception&) {
        tally(Method::tian, false, 1.0);
    }

    try {
        const CoxFit fit = fit_coxph(samples, cox_design);
        tally(Method::cox, fit.converged, fit.converged ? fit.p_values[0] : 1.0);
    } catch (const std::exception&) {
        tally(Method::cox, false, 1.0);
    }
    return c;
}

}  // namespace

PowerTable run_power_study(const std::vector<ScenarioConfig>& cfgs,
                           const PowerStudyOptions& opts) {
    if (opts.reps < 1) throw std::invalid_argument("run_power_study: reps must be >= 1");
    if (!(opts.alpha > 0.0 && opts.alpha < 1.0))
        throw std::invalid_argument("run_power_study: alpha must be in (0, 1)");

    PowerTable table;
    for (const auto& cfg : cfgs) {
        // Calibrate once, before the parallel region.
        calibrate_censoring(cfg, Arm::treatment);
        calibrate_censoring(cfg, Arm::control);
        for (const int n : opts.n_grid) {
            CellCounts total;
#ifdef _OPENMP
            const int nthreads = opts.threads > 0 ? opts.threads : omp_get_max_threads();
#pragma omp parallel num_threads(nthreads)
            {
                CellCounts local;
#pragma omp for schedule(dynamic, 16) nowait
                for (int rep = 0; rep < opts.reps; ++rep)
                    local += run_replicate(cfg, n, rep, opts);
#pragma omp critical
                total += local;
            }
#else
            for (int rep = 0; rep < opts.reps; ++rep)
                total += run_replicate(cfg, n, rep, opts);
#endif
            for (int m = 0; m < 4; ++m) {
                PowerRow row;
                row.scenario = cfg.name;
                row.n = n;
                row.method = static_cast<Method>(m);
                row.reps = opts.reps;
                row.rejections = total.rejections[m];
                row.failures = total.failures[m];
                row.rejection_rate =
                    static_cast<double>(row.rejections) / static_cast<double>(row.reps);
                row.mc_se = std::sqrt(row.rejection_rate * (1.0 - row.rejection_rate) /
                                      static_cast<double>(row.reps));
                table.rows.push_back(std::move(row));
            }
            if (opts.progress) opts.progress(cfg.name.c_str(), n, opts.reps, opts.reps);
        }
    }
    return table;
}

void write_power_csv(std::ostream& out, const PowerTable& table) {
    out << "scenario,n,method,reps,rejections,rate,mc_se,failures\n";
    char buf[128];
    for (const auto& r : table.rows) {
        std::snprintf(buf, sizeof buf, "%s,%d,%s,%d,%d,%.10g,%.10g,%d\n", r.scenario.c_str(),
                      r.n, method_name(r.method), r.reps, r.rejections, r.rejection_rate,
                      r.mc_se, r.failures);
        out << buf;
    }
}

void write_power_json(std::ostream& out, const PowerTable& table) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& r : table.rows) {
        rows.push_back({{"scenario", r.scenario},
                        {"n", r.n},
                        {"method", method_name(r.method)},
                        {"reps", r.reps},
                        {"rejections", r.rejections},
                        {"rate", r.rejection_rate},
                        {"mc_se", r.mc_se},
                        {"failures", r.failures}});
    }
    out << rows.dump(2) << '\n';
}

}  // namespace rmst
