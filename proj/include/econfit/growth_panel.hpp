#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "econfit/csv.hpp"
#include "econfit/error.hpp"

namespace econfit {

// One country-year observation of the growth panel: annualized log GDP-per-
// capita growth over the horizon, regressors measured at t - lag, and the
// fitness regressor. No missing values by construction (listwise deletion
// happens at build time).
struct GrowthObs {
    std::string country;
    int year = 0; // base year t
    double growth = 0.0;
    double log_gdp_pc = 0.0;
    double log_k_emp = 0.0;
    double log_emp = 0.0;
    double log_tfp_gdp = 0.0;
    double log_inv_life_exp = 0.0;
    double log_school = 0.0;
    double fitness = 0.0;      // raw fitness at t - lag
    double log_fitness = 0.0;
    double fitness_rank = 0.0; // selected fitness regressor variant
};

namespace detail {

struct GrowthColumn {
    const char* name;
    double GrowthObs::* member;
};

inline const std::vector<GrowthColumn>& growth_columns() {
    static const std::vector<GrowthColumn> columns = {
        {"growth", &GrowthObs::growth},
        {"log_gdp_pc", &GrowthObs::log_gdp_pc},
        {"log_k_emp", &GrowthObs::log_k_emp},
        {"log_emp", &GrowthObs::log_emp},
        {"log_tfp_gdp", &GrowthObs::log_tfp_gdp},
        {"log_inv_life_exp", &GrowthObs::log_inv_life_exp},
        {"log_school", &GrowthObs::log_school},
        {"fitness", &GrowthObs::fitness},
        {"log_fitness", &GrowthObs::log_fitness},
        {"fitness_rank", &GrowthObs::fitness_rank},
    };
    return columns;
}

} // namespace detail

class GrowthPanel {
public:
    GrowthPanel() = default;
    explicit GrowthPanel(std::vector<GrowthObs> obs) : obs_(std::move(obs)) {}

    const std::vector<GrowthObs>& observations() const { return obs_; }
    std::size_t size() const { return obs_.size(); }
    bool empty() const { return obs_.empty(); }

    static std::vector<std::string> numeric_column_names() {
        std::vector<std::string> names;
        for (const auto& col : detail::growth_columns()) {
            names.emplace_back(col.name);
        }
        return names;
    }

    // Values of a named numeric column; throws on unknown names.
    std::vector<double> column(const std::string& name) const {
        for (const auto& col : detail::growth_columns()) {
            if (name == col.name) {
                std::vector<double> out(obs_.size());
                for (std::size_t i = 0; i < obs_.size(); ++i) {
                    out[i] = obs_[i].*(col.member);
                }
                return out;
            }
        }
        throw validation_error("growth panel: unknown column '" + name + "'");
    }

    static bool has_column(const std::string& name) {
        for (const auto& col : detail::growth_columns()) {
            if (name == col.name) {
                return true;
            }
        }
        return false;
    }

    std::vector<std::string> countries() const {
        std::vector<std::string> out;
        for (const auto& o : obs_) {
            if (std::find(out.begin(), out.end(), o.country) == out.end()) {
                out.push_back(o.country);
            }
        }
        return out;
    }

private:
    std::vector<GrowthObs> obs_;
};

inline void write_growth_panel_csv(const GrowthPanel& panel, std::ostream& os) {
    std::vector<std::string> header = {"country", "year"};
    for (const auto& col : detail::growth_columns()) {
        header.emplace_back(col.name);
    }
    csv::write_row(os, header);
    std::vector<std::string> row;
    for (const auto& o : panel.observations()) {
        row.clear();
        row.push_back(o.country);
        row.push_back(std::to_string(o.year));
        for (const auto& col : detail::growth_columns()) {
            row.push_back(csv::format_double(o.*(col.member)));
        }
        csv::write_row(os, row);
    }
}

inline GrowthPanel read_growth_panel_csv(std::istream& is) {
    std::string line;
    if (!csv::read_line(is, line)) {
        throw data_error("growth csv: empty stream");
    }
    auto header = csv::split(line);
    std::size_t country_ix = csv::require_column(header, "country", "growth csv");
    std::size_t year_ix = csv::require_column(header, "year", "growth csv");
    std::vector<std::size_t> column_ix;
    for (const auto& col : detail::growth_columns()) {
        column_ix.push_back(csv::require_column(header, col.name, "growth csv"));
    }
    std::vector<GrowthObs> obs;
    std::size_t line_no = 1;
    while (csv::read_line(is, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        auto cells = csv::split(line);
        if (cells.size() != header.size()) {
            throw data_error("growth csv: ragged row at line " + std::to_string(line_no));
        }
        GrowthObs o;
        o.country = cells[country_ix];
        long long year = 0;
        if (!csv::parse_int(cells[year_ix], year)) {
            throw data_error("growth csv: bad year at line " + std::to_string(line_no));
        }
        o.year = static_cast<int>(year);
        const auto& columns = detail::growth_columns();
        for (std::size_t i = 0; i < columns.size(); ++i) {
            double v = 0.0;
            if (!csv::parse_double(cells[column_ix[i]], v) || !std::isfinite(v)) {
                throw data_error("growth csv: non-numeric cell in column " +
                                 std::string(columns[i].name) + " at line " +
                                 std::to_string(line_no));
            }
            o.*(columns[i].member) = v;
        }
        obs.push_back(std::move(o));
    }
    return GrowthPanel(std::move(obs));
}

} // namespace econfit
