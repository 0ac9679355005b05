#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "econfit/error.hpp"
#include "econfit/fitness.hpp"
#include "econfit/growth_panel.hpp"
#include "econfit/ingest.hpp"

namespace econfit {

// ---------------------------------------------------------------------------
// Fitness series
// ---------------------------------------------------------------------------

struct FitnessYearEntry {
    double fitness = 0.0;
    std::size_t rank = 0;
    double norm_rank = 0.0;
};

// year -> country -> fitness and rank for that year.
using FitnessSeries = std::map<int, std::map<std::string, FitnessYearEntry>>;

inline std::map<std::string, FitnessYearEntry> fitness_series_entry(
    const FitnessResult& res) {
    std::map<std::string, FitnessYearEntry> out;
    for (const auto& rc : rank_countries(res)) {
        out[rc.country] = FitnessYearEntry{rc.fitness, rc.rank, rc.norm_rank};
    }
    return out;
}

inline std::map<std::string, FitnessYearEntry> fitness_series_entry(
    const std::vector<RankedCountry>& ranked) {
    std::map<std::string, FitnessYearEntry> out;
    for (const auto& rc : ranked) {
        out[rc.country] = FitnessYearEntry{rc.fitness, rc.rank, rc.norm_rank};
    }
    return out;
}

// Builds the per-year fitness ranking from the optional fitness column of a
// macro panel. Years without any fitness values are absent from the result.
inline FitnessSeries fitness_series_from_macro(const MacroPanel& macro) {
    std::map<int, std::vector<std::pair<std::string, double>>> by_year;
    for (const auto& row : macro.rows()) {
        if (row.fitness && *row.fitness > 0.0) {
            by_year[row.year].emplace_back(row.country, *row.fitness);
        }
    }
    FitnessSeries series;
    for (auto& [year, entries] : by_year) {
        std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) {
                return a.second > b.second;
            }
            return a.first < b.first;
        });
        const std::size_t n = entries.size();
        auto& year_map = series[year];
        for (std::size_t pos = 0; pos < n; ++pos) {
            double norm = n == 1 ? 1.0
                                 : static_cast<double>(n - (pos + 1)) /
                                       static_cast<double>(n - 1);
            year_map[entries[pos].first] =
                FitnessYearEntry{entries[pos].second, pos + 1, norm};
        }
    }
    return series;
}

// ---------------------------------------------------------------------------
// Growth panel construction
// ---------------------------------------------------------------------------

// Which fitness quantity enters the regression as "Fitness Rank".
enum class FitnessVariant { norm_rank, raw_rank, log_fitness };

inline const char* to_string(FitnessVariant v) {
    switch (v) {
        case FitnessVariant::norm_rank: return "norm_rank";
        case FitnessVariant::raw_rank: return "raw_rank";
        case FitnessVariant::log_fitness: return "log_fitness";
    }
    return "unknown";
}

struct PanelOptions {
    int dt = 5;     // growth horizon in years
    int lag = 5;    // regressor lag in years
    int stride = 1; // 1 = rolling windows; dt = non-overlapping
    FitnessVariant variant = FitnessVariant::norm_rank;
};

struct PanelBuildResult {
    GrowthPanel panel;
    std::map<std::string, std::size_t> attrition; // reason -> dropped rows
};

// Builds country-year observations: growth = (ln GDPpc_{t+dt} - ln GDPpc_t)/dt,
// regressors at t - lag, listwise deletion throughout. Base years are aligned
// to the panel's first year modulo stride.
inline PanelBuildResult build_growth_panel(const MacroPanel& macro,
                                           const FitnessSeries& fitness,
                                           const PanelOptions& opts = {}) {
    if (opts.dt < 1) {
        throw validation_error("build_growth_panel: dt must be >= 1");
    }
    if (opts.lag < 0) {
        throw validation_error("build_growth_panel: lag must be >= 0");
    }
    if (opts.stride < 1) {
        throw validation_error("build_growth_panel: stride must be >= 1");
    }
    if (macro.empty()) {
        throw data_error("build_growth_panel: empty macro panel");
    }
    const int first_year = macro.year_range().first;

    PanelBuildResult result;
    std::vector<GrowthObs> obs;
    auto drop = [&result](const char* reason) { ++result.attrition[reason]; };

    for (const auto& row : macro.rows()) {
        const int t = row.year;
        if ((t - first_year) % opts.stride != 0) {
            continue; // window sampling, not attrition
        }
        if (!row.gdp_pc) {
            drop("missing_gdp_at_t");
            continue;
        }
        const MacroRow* horizon = macro.find(row.country, t + opts.dt);
        if (horizon == nullptr || !horizon->gdp_pc) {
            drop("missing_gdp_at_horizon");
            continue;
        }
        const MacroRow* lagged = macro.find(row.country, t - opts.lag);
        if (lagged == nullptr) {
            drop("missing_row_at_lag");
            continue;
        }
        auto positive = [](const std::optional<double>& v) {
            return v.has_value() && *v > 0.0;
        };
        if (!positive(lagged->gdp_pc)) {
            drop("unusable_gdp_pc_at_lag");
            continue;
        }
        if (!positive(lagged->k_emp)) {
            drop("unusable_k_emp_at_lag");
            continue;
        }
        if (!positive(lagged->emp)) {
            drop("unusable_emp_at_lag");
            continue;
        }
        if (!positive(lagged->pop)) {
            drop("unusable_pop_at_lag");
            continue;
        }
        if (!positive(lagged->tfp)) {
            drop("unusable_tfp_at_lag");
            continue;
        }
        if (!lagged->life_exp) {
            drop("unusable_life_exp_at_lag");
            continue;
        }
        if (!positive(lagged->school)) {
            drop("unusable_school_at_lag");
            continue;
        }
        auto year_it = fitness.find(t - opts.lag);
        const FitnessYearEntry* entry = nullptr;
        if (year_it != fitness.end()) {
            auto country_it = year_it->second.find(row.country);
            if (country_it != year_it->second.end()) {
                entry = &country_it->second;
            }
        }
        if (entry == nullptr || !(entry->fitness > 0.0)) {
            drop("missing_fitness_at_lag");
            continue;
        }

        GrowthObs o;
        o.country = row.country;
        o.year = t;
        o.growth = (std::log(*horizon->gdp_pc) - std::log(*row.gdp_pc)) /
                   static_cast<double>(opts.dt);
        o.log_gdp_pc = std::log(*lagged->gdp_pc);
        o.log_k_emp = std::log(*lagged->k_emp);
        o.log_emp = std::log(*lagged->emp);
        o.log_tfp_gdp = std::log(*lagged->tfp / (*lagged->gdp_pc * *lagged->pop));
        o.log_inv_life_exp = -std::log(*lagged->life_exp);
        o.log_school = std::log(*lagged->school);
        o.fitness = entry->fitness;
        o.log_fitness = std::log(entry->fitness);
        switch (opts.variant) {
            case FitnessVariant::norm_rank:
                o.fitness_rank = entry->norm_rank;
                break;
            case FitnessVariant::raw_rank:
                o.fitness_rank = static_cast<double>(entry->rank);
                break;
            case FitnessVariant::log_fitness:
                o.fitness_rank = o.log_fitness;
                break;
        }
        obs.push_back(std::move(o));
    }
    if (obs.empty()) {
        std::string detail;
        for (const auto& [reason, count] : result.attrition) {
            detail += " " + reason + "=" + std::to_string(count);
        }
        throw data_error("build_growth_panel: no usable observations; attrition:" +
                         detail);
    }
    result.panel = GrowthPanel(std::move(obs));
    return result;
}

// ---------------------------------------------------------------------------
// OLS with HC1 robust standard errors, optional country fixed effects
// ---------------------------------------------------------------------------

namespace detail {

// Regressor columns in the order of the published table: constant first,
// fitness rank last.
inline std::vector<std::string> regressor_names(bool include_fitness) {
    std::vector<std::string> names = {"log_gdp_pc",       "log_k_emp", "log_emp",
                                      "log_tfp_gdp",      "log_inv_life_exp",
                                      "log_school"};
    if (include_fitness) {
        names.emplace_back("fitness_rank");
    }
    return names;
}

} // namespace detail

struct WithinData {
    std::vector<std::string> columns;   // regressor names (no constant)
    Eigen::MatrixXd design;             // demeaned regressors
    Eigen::VectorXd response;           // demeaned growth
    std::vector<std::size_t> group_of_row;
    std::vector<std::string> group_labels;
    std::size_t singletons_dropped = 0; // countries with one observation
};

// Subtracts country means from every regressor and from the response.
// Countries with a single observation demean to zero rows and are dropped.
inline WithinData within_transform(const GrowthPanel& panel,
                                   bool include_fitness = true) {
    WithinData out;
    out.columns = detail::regressor_names(include_fitness);
    std::map<std::string, std::vector<std::size_t>> groups;
    const auto& obs = panel.observations();
    for (std::size_t i = 0; i < obs.size(); ++i) {
        groups[obs[i].country].push_back(i);
    }
    std::vector<std::vector<double>> columns;
    for (const auto& name : out.columns) {
        columns.push_back(panel.column(name));
    }
    std::vector<double> response = panel.column("growth");

    std::size_t kept_rows = 0;
    for (const auto& [country, rows] : groups) {
        if (rows.size() < 2) {
            ++out.singletons_dropped;
        } else {
            kept_rows += rows.size();
        }
    }
    if (kept_rows == 0) {
        throw data_error("within_transform: every country has a single observation");
    }
    out.design.resize(static_cast<Eigen::Index>(kept_rows),
                      static_cast<Eigen::Index>(out.columns.size()));
    out.response.resize(static_cast<Eigen::Index>(kept_rows));
    out.group_of_row.reserve(kept_rows);

    Eigen::Index r = 0;
    for (const auto& [country, rows] : groups) {
        if (rows.size() < 2) {
            continue;
        }
        const std::size_t group_ix = out.group_labels.size();
        out.group_labels.push_back(country);
        const double inv_n = 1.0 / static_cast<double>(rows.size());
        std::vector<double> col_means(out.columns.size(), 0.0);
        double resp_mean = 0.0;
        for (std::size_t i : rows) {
            for (std::size_t j = 0; j < out.columns.size(); ++j) {
                col_means[j] += columns[j][i];
            }
            resp_mean += response[i];
        }
        for (double& m : col_means) {
            m *= inv_n;
        }
        resp_mean *= inv_n;
        for (std::size_t i : rows) {
            for (std::size_t j = 0; j < out.columns.size(); ++j) {
                out.design(r, static_cast<Eigen::Index>(j)) =
                    columns[j][i] - col_means[j];
            }
            out.response(r) = response[i] - resp_mean;
            out.group_of_row.push_back(group_ix);
            ++r;
        }
    }
    return out;
}

struct Coefficient {
    std::string name;
    double estimate = 0.0;
    double std_error = 0.0;
};

struct RegressionResult {
    std::vector<Coefficient> coefficients;
    std::size_t n_obs = 0;
    std::size_t n_countries = 0;
    bool fixed_effects = false;
    bool with_fitness = true;
    double r_squared = 0.0;
    std::size_t singletons_dropped = 0;
};

struct RegressionOptions {
    bool include_fitness = true;
    bool fixed_effects = false;
};

namespace detail {

struct DesignData {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    std::vector<std::string> names;
};

inline DesignData pooled_design(const GrowthPanel& panel, bool include_fitness) {
    DesignData d;
    auto regs = regressor_names(include_fitness);
    d.names.emplace_back("const");
    d.names.insert(d.names.end(), regs.begin(), regs.end());
    const auto n = static_cast<Eigen::Index>(panel.size());
    d.X.resize(n, static_cast<Eigen::Index>(d.names.size()));
    d.X.col(0).setOnes();
    for (std::size_t j = 0; j < regs.size(); ++j) {
        auto col = panel.column(regs[j]);
        for (Eigen::Index i = 0; i < n; ++i) {
            d.X(i, static_cast<Eigen::Index>(j + 1)) = col[static_cast<std::size_t>(i)];
        }
    }
    auto growth = panel.column("growth");
    d.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        d.y(i) = growth[static_cast<std::size_t>(i)];
    }
    return d;
}

} // namespace detail

// OLS point estimates with HC1 sandwich standard errors:
//   V = n/(n-k) (X'X)^-1 X' diag(e^2) X (X'X)^-1.
// With fixed effects the regression runs on within-demeaned data, the
// constant is dropped, and the absorbed country means count toward k.
inline RegressionResult ols_robust(const GrowthPanel& panel,
                                   const RegressionOptions& opts = {}) {
    detail::DesignData d;
    RegressionResult result;
    result.fixed_effects = opts.fixed_effects;
    result.with_fitness = opts.include_fitness;
    std::size_t absorbed = 0;
    if (opts.fixed_effects) {
        WithinData w = within_transform(panel, opts.include_fitness);
        d.X = std::move(w.design);
        d.y = std::move(w.response);
        d.names = w.columns;
        absorbed = w.group_labels.size();
        result.n_countries = w.group_labels.size();
        result.singletons_dropped = w.singletons_dropped;
    } else {
        d = detail::pooled_design(panel, opts.include_fitness);
        result.n_countries = panel.countries().size();
    }

    const auto n = static_cast<std::size_t>(d.X.rows());
    const auto p = static_cast<std::size_t>(d.X.cols());
    const std::size_t k_dof = p + absorbed;
    if (n <= k_dof) {
        throw data_error("ols_robust: " + std::to_string(n) +
                         " observations cannot identify " + std::to_string(k_dof) +
                         " parameters");
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(d.X);
    if (static_cast<std::size_t>(qr.rank()) < p) {
        const auto& perm = qr.colsPermutation().indices();
        std::string collinear;
        for (Eigen::Index i = qr.rank(); i < static_cast<Eigen::Index>(p); ++i) {
            if (!collinear.empty()) {
                collinear += ", ";
            }
            collinear += d.names[static_cast<std::size_t>(perm[i])];
        }
        throw numerical_error("ols_robust: rank-deficient design; collinear columns: " +
                              collinear);
    }
    Eigen::VectorXd beta = qr.solve(d.y);
    Eigen::VectorXd resid = d.y - d.X * beta;

    Eigen::MatrixXd xtx = d.X.transpose() * d.X;
    Eigen::MatrixXd xtx_inv = xtx.ldlt().solve(
        Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(p),
                                  static_cast<Eigen::Index>(p)));
    Eigen::MatrixXd meat = d.X.transpose() * resid.array().square().matrix().asDiagonal() * d.X;
    const double scale = static_cast<double>(n) / static_cast<double>(n - k_dof);
    Eigen::MatrixXd vcov = scale * xtx_inv * meat * xtx_inv;

    result.n_obs = n;
    result.coefficients.resize(p);
    for (std::size_t j = 0; j < p; ++j) {
        result.coefficients[j].name = d.names[j];
        result.coefficients[j].estimate = beta(static_cast<Eigen::Index>(j));
        result.coefficients[j].std_error =
            std::sqrt(std::max(0.0, vcov(static_cast<Eigen::Index>(j),
                                         static_cast<Eigen::Index>(j))));
    }

    double ssr = resid.squaredNorm();
    double sst = 0.0;
    if (opts.fixed_effects) {
        sst = d.y.squaredNorm(); // response already demeaned
    } else {
        double mean = d.y.mean();
        sst = (d.y.array() - mean).square().sum();
    }
    result.r_squared = sst > 0.0 ? 1.0 - ssr / sst : 1.0;
    return result;
}

inline nlohmann::json regression_report_json(const RegressionResult& res) {
    nlohmann::json coefficients = nlohmann::json::array();
    for (const auto& c : res.coefficients) {
        coefficients.push_back({{"name", c.name},
                                {"estimate", c.estimate},
                                {"std_error", c.std_error}});
    }
    return nlohmann::json{{"coefficients", std::move(coefficients)},
                          {"n_obs", res.n_obs},
                          {"n_countries", res.n_countries},
                          {"r_squared", res.r_squared},
                          {"fixed_effects", res.fixed_effects},
                          {"with_fitness", res.with_fitness},
                          {"robust", "hc1"},
                          {"singletons_dropped", res.singletons_dropped}};
}

// Aligned three-column table in the layout of the published results.
inline std::string regression_report_text(const RegressionResult& res) {
    std::size_t name_width = std::string("Variable").size();
    for (const auto& c : res.coefficients) {
        name_width = std::max(name_width, c.name.size());
    }
    std::ostringstream os;
    os << std::left << std::setw(static_cast<int>(name_width)) << "Variable"
       << " | " << std::setw(12) << "Coefficient"
       << " | " << "Std. Error" << '\n';
    os << std::string(name_width + 28, '-') << '\n';
    os << std::setprecision(4);
    for (const auto& c : res.coefficients) {
        os << std::left << std::setw(static_cast<int>(name_width)) << c.name << " | "
           << std::setw(12) << c.estimate << " | " << c.std_error << '\n';
    }
    os << "n_obs=" << res.n_obs << " n_countries=" << res.n_countries
       << " R2=" << res.r_squared << (res.fixed_effects ? " (fixed effects)" : "")
       << '\n';
    return os.str();
}

} // namespace econfit
