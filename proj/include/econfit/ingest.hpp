#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "econfit/csv.hpp"
#include "econfit/error.hpp"
#include "econfit/matrix.hpp"

namespace econfit {

// ---------------------------------------------------------------------------
// Trade flows
// ---------------------------------------------------------------------------

struct TradeFlow {
    int year = 0;
    std::string exporter;
    std::string product;
    double value = 0.0; // current USD, nonnegative
};

// Maps column names in a concrete file onto the canonical trade fields and
// bounds the accepted year range. Extra columns in the file are ignored.
struct TradeSchema {
    std::string year_col = "year";
    std::string exporter_col = "exporter";
    std::string product_col = "product";
    std::string value_col = "value";
    int min_year = 1;
    int max_year = 9999;
};

struct RowRejection {
    std::size_t line = 0; // 1-based physical line in the file
    std::string reason;
};

struct TradeParseResult {
    std::vector<TradeFlow> flows;
    std::vector<RowRejection> rejections;
    std::size_t data_rows = 0;
};

// Every data row becomes exactly one flow or one rejection; input order is
// preserved. A missing mapped column in the header is fatal.
inline TradeParseResult parse_trade_flows(std::istream& is,
                                          const TradeSchema& schema = {}) {
    TradeParseResult result;
    std::string line;
    if (!csv::read_line(is, line)) {
        throw data_error("trade csv: empty stream, expected header row");
    }
    auto header = csv::split(line);
    std::size_t year_ix = csv::require_column(header, schema.year_col, "trade csv");
    std::size_t exporter_ix =
        csv::require_column(header, schema.exporter_col, "trade csv");
    std::size_t product_ix =
        csv::require_column(header, schema.product_col, "trade csv");
    std::size_t value_ix = csv::require_column(header, schema.value_col, "trade csv");

    std::size_t line_no = 1;
    while (csv::read_line(is, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        ++result.data_rows;
        auto fields = csv::split(line);
        if (fields.size() != header.size()) {
            result.rejections.push_back(
                {line_no, "field count " + std::to_string(fields.size()) +
                              " does not match header width " +
                              std::to_string(header.size())});
            continue;
        }
        long long year = 0;
        if (!csv::parse_int(fields[year_ix], year)) {
            result.rejections.push_back(
                {line_no, "unparseable year '" + fields[year_ix] + "'"});
            continue;
        }
        if (year < schema.min_year || year > schema.max_year) {
            result.rejections.push_back(
                {line_no, "year " + std::to_string(year) + " outside configured range [" +
                              std::to_string(schema.min_year) + ", " +
                              std::to_string(schema.max_year) + "]"});
            continue;
        }
        double value = 0.0;
        if (!csv::parse_double(fields[value_ix], value) || !std::isfinite(value)) {
            result.rejections.push_back(
                {line_no, "unparseable value '" + fields[value_ix] + "'"});
            continue;
        }
        if (value < 0.0) {
            result.rejections.push_back(
                {line_no, "value " + fields[value_ix] + " violates nonnegativity"});
            continue;
        }
        if (fields[exporter_ix].empty() || fields[product_ix].empty()) {
            result.rejections.push_back({line_no, "empty exporter or product code"});
            continue;
        }
        result.flows.push_back(TradeFlow{static_cast<int>(year), fields[exporter_ix],
                                         fields[product_ix], value});
    }
    return result;
}

// Aggregates flows for one year into a country x product matrix. Labels are
// sorted lexicographically so the result is reproducible regardless of input
// order.
inline ExportMatrix build_export_matrix(const std::vector<TradeFlow>& flows,
                                        int year) {
    std::map<std::string, std::size_t> country_ix;
    std::map<std::string, std::size_t> product_ix;
    for (const auto& f : flows) {
        if (f.year != year) {
            continue;
        }
        country_ix.emplace(f.exporter, 0);
        product_ix.emplace(f.product, 0);
    }
    if (country_ix.empty()) {
        throw data_error("build_export_matrix: no flows for year " +
                         std::to_string(year));
    }
    std::vector<std::string> countries;
    countries.reserve(country_ix.size());
    for (auto& [label, ix] : country_ix) {
        ix = countries.size();
        countries.push_back(label);
    }
    std::vector<std::string> products;
    products.reserve(product_ix.size());
    for (auto& [label, ix] : product_ix) {
        ix = products.size();
        products.push_back(label);
    }
    std::vector<double> values(countries.size() * products.size(), 0.0);
    for (const auto& f : flows) {
        if (f.year != year) {
            continue;
        }
        values[country_ix[f.exporter] * products.size() + product_ix[f.product]] +=
            f.value;
    }
    return ExportMatrix(year, std::move(countries), std::move(products),
                        std::move(values));
}

// ---------------------------------------------------------------------------
// Macroeconomic panel
// ---------------------------------------------------------------------------

struct MacroRow {
    std::string country;
    int year = 0;
    std::optional<double> gdp_pc;    // constant USD per person, > 0
    std::optional<double> k_emp;     // capital intensity
    std::optional<double> emp;       // employment count
    std::optional<double> pop;       // population count
    std::optional<double> tfp;       // TFP index
    std::optional<double> life_exp;  // years, in (0, 120)
    std::optional<double> school;    // human-capital index
    std::optional<double> fitness;   // optional externally supplied fitness
};

struct MacroSchema {
    std::string country_col = "country";
    std::string year_col = "year";
    std::string gdp_pc_col = "gdp_pc";
    std::string k_emp_col = "k_emp";
    std::string emp_col = "emp";
    std::string pop_col = "pop";
    std::string tfp_col = "tfp";
    std::string life_exp_col = "life_exp";
    std::string school_col = "school";
    std::string fitness_col = "fitness"; // column may be absent
};

// Immutable after construction; rows sorted by (country, year).
class MacroPanel {
public:
    MacroPanel() = default;

    explicit MacroPanel(std::vector<MacroRow> rows) : rows_(std::move(rows)) {
        std::sort(rows_.begin(), rows_.end(), [](const MacroRow& a, const MacroRow& b) {
            return std::tie(a.country, a.year) < std::tie(b.country, b.year);
        });
        for (std::size_t i = 1; i < rows_.size(); ++i) {
            if (rows_[i].country == rows_[i - 1].country &&
                rows_[i].year == rows_[i - 1].year) {
                throw data_error("macro panel: duplicate key (" + rows_[i].country +
                                 ", " + std::to_string(rows_[i].year) + ")");
            }
        }
    }

    const std::vector<MacroRow>& rows() const { return rows_; }
    bool empty() const { return rows_.empty(); }

    const MacroRow* find(const std::string& country, int year) const {
        MacroRow probe;
        probe.country = country;
        probe.year = year;
        auto it = std::lower_bound(
            rows_.begin(), rows_.end(), probe,
            [](const MacroRow& a, const MacroRow& b) {
                return std::tie(a.country, a.year) < std::tie(b.country, b.year);
            });
        if (it != rows_.end() && it->country == country && it->year == year) {
            return &*it;
        }
        return nullptr;
    }

    std::vector<std::string> countries() const {
        std::vector<std::string> out;
        for (const auto& r : rows_) {
            if (out.empty() || out.back() != r.country) {
                out.push_back(r.country);
            }
        }
        return out;
    }

    std::pair<int, int> year_range() const {
        if (rows_.empty()) {
            throw data_error("macro panel: empty");
        }
        int lo = rows_.front().year;
        int hi = lo;
        for (const auto& r : rows_) {
            lo = std::min(lo, r.year);
            hi = std::max(hi, r.year);
        }
        return {lo, hi};
    }

private:
    std::vector<MacroRow> rows_;
};

struct MacroParseResult {
    MacroPanel panel;
    std::vector<RowRejection> rejections;
    std::size_t data_rows = 0;
};

namespace detail {

// Missing markers: empty cell, NA, NaN, . (case-insensitive for letters).
inline bool is_missing_cell(const std::string& s) {
    if (s.empty() || s == ".") {
        return true;
    }
    std::string lower;
    lower.reserve(s.size());
    for (char ch : s) {
        lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
    return lower == "na" || lower == "nan" || lower == "null";
}

// Parses one numeric cell; returns false on a malformed (non-missing,
// non-numeric) cell.
inline bool parse_macro_cell(const std::string& s, std::optional<double>& out) {
    if (is_missing_cell(s)) {
        out.reset();
        return true;
    }
    double v = 0.0;
    if (!csv::parse_double(s, v) || !std::isfinite(v)) {
        return false;
    }
    out = v;
    return true;
}

} // namespace detail

// Rows with malformed cells or violated invariants become rejections; a
// duplicate (country, year) key is fatal.
inline MacroParseResult parse_macro_panel(std::istream& is,
                                          const MacroSchema& schema = {}) {
    std::string line;
    if (!csv::read_line(is, line)) {
        throw data_error("panel csv: empty stream, expected header row");
    }
    auto header = csv::split(line);
    std::size_t country_ix = csv::require_column(header, schema.country_col, "panel csv");
    std::size_t year_ix = csv::require_column(header, schema.year_col, "panel csv");

    auto optional_column = [&](const std::string& name) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) {
                return i;
            }
        }
        return std::nullopt;
    };
    struct NumericField {
        std::optional<double> MacroRow::* member;
        std::optional<std::size_t> column;
        const char* name;
    };
    std::vector<NumericField> fields = {
        {&MacroRow::gdp_pc, optional_column(schema.gdp_pc_col), "gdp_pc"},
        {&MacroRow::k_emp, optional_column(schema.k_emp_col), "k_emp"},
        {&MacroRow::emp, optional_column(schema.emp_col), "emp"},
        {&MacroRow::pop, optional_column(schema.pop_col), "pop"},
        {&MacroRow::tfp, optional_column(schema.tfp_col), "tfp"},
        {&MacroRow::life_exp, optional_column(schema.life_exp_col), "life_exp"},
        {&MacroRow::school, optional_column(schema.school_col), "school"},
        {&MacroRow::fitness, optional_column(schema.fitness_col), "fitness"},
    };

    MacroParseResult result;
    std::vector<MacroRow> rows;
    std::size_t line_no = 1;
    while (csv::read_line(is, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        ++result.data_rows;
        auto cells = csv::split(line);
        if (cells.size() != header.size()) {
            result.rejections.push_back(
                {line_no, "field count does not match header width"});
            continue;
        }
        MacroRow row;
        row.country = cells[country_ix];
        long long year = 0;
        if (row.country.empty()) {
            result.rejections.push_back({line_no, "empty country code"});
            continue;
        }
        if (!csv::parse_int(cells[year_ix], year)) {
            result.rejections.push_back(
                {line_no, "unparseable year '" + cells[year_ix] + "'"});
            continue;
        }
        row.year = static_cast<int>(year);
        bool rejected = false;
        for (const auto& field : fields) {
            if (!field.column) {
                continue;
            }
            if (!detail::parse_macro_cell(cells[*field.column], row.*(field.member))) {
                result.rejections.push_back(
                    {line_no, std::string("non-numeric cell '") +
                                  cells[*field.column] + "' in column " + field.name});
                rejected = true;
                break;
            }
        }
        if (rejected) {
            continue;
        }
        if (row.gdp_pc && *row.gdp_pc <= 0.0) {
            result.rejections.push_back({line_no, "gdp_pc must be > 0 where present"});
            continue;
        }
        if (row.life_exp && (*row.life_exp <= 0.0 || *row.life_exp >= 120.0)) {
            result.rejections.push_back({line_no, "life_exp outside (0, 120)"});
            continue;
        }
        rows.push_back(std::move(row));
    }
    result.panel = MacroPanel(std::move(rows)); // throws on duplicate keys
    return result;
}

inline void write_macro_panel_csv(const MacroPanel& panel, std::ostream& os) {
    csv::write_row(os, {"country", "year", "gdp_pc", "k_emp", "emp", "pop", "tfp",
                        "life_exp", "school", "fitness"});
    auto cell = [](const std::optional<double>& v) {
        return v ? csv::format_double(*v) : std::string("NA");
    };
    for (const auto& r : panel.rows()) {
        csv::write_row(os, {r.country, std::to_string(r.year), cell(r.gdp_pc),
                            cell(r.k_emp), cell(r.emp), cell(r.pop), cell(r.tfp),
                            cell(r.life_exp), cell(r.school), cell(r.fitness)});
    }
}

} // namespace econfit
