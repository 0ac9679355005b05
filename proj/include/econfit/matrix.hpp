#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "econfit/csv.hpp"
#include "econfit/error.hpp"

namespace econfit {

// Dense year-stamped matrix with country row labels and product column labels.
// Row-major storage. Labels are opaque strings; ordering is whatever the
// producer fixed (parsers and builders sort lexicographically).
template <typename T, typename Tag>
class LabeledMatrix {
public:
    LabeledMatrix() = default;

    LabeledMatrix(int year, std::vector<std::string> countries,
                  std::vector<std::string> products, std::vector<T> values)
        : year_(year),
          countries_(std::move(countries)),
          products_(std::move(products)),
          values_(std::move(values)) {
        if (values_.size() != countries_.size() * products_.size()) {
            throw data_error("matrix: value count does not match label dimensions");
        }
        require_unique(countries_, "country");
        require_unique(products_, "product");
    }

    int year() const { return year_; }
    std::size_t rows() const { return countries_.size(); }
    std::size_t cols() const { return products_.size(); }
    const std::vector<std::string>& countries() const { return countries_; }
    const std::vector<std::string>& products() const { return products_; }
    const std::vector<T>& values() const { return values_; }

    T operator()(std::size_t c, std::size_t p) const {
        return values_[c * products_.size() + p];
    }
    T& operator()(std::size_t c, std::size_t p) {
        return values_[c * products_.size() + p];
    }

    double row_sum(std::size_t c) const {
        double s = 0.0;
        for (std::size_t p = 0; p < cols(); ++p) {
            s += static_cast<double>((*this)(c, p));
        }
        return s;
    }

    double col_sum(std::size_t p) const {
        double s = 0.0;
        for (std::size_t c = 0; c < rows(); ++c) {
            s += static_cast<double>((*this)(c, p));
        }
        return s;
    }

    double total() const {
        double s = 0.0;
        for (T v : values_) {
            s += static_cast<double>(v);
        }
        return s;
    }

    // Reordered copy: row_order/col_order list source indices in output order.
    LabeledMatrix reordered(const std::vector<std::size_t>& row_order,
                            const std::vector<std::size_t>& col_order) const {
        if (row_order.size() != rows() || col_order.size() != cols()) {
            throw validation_error("matrix: permutation size mismatch");
        }
        std::vector<std::string> new_countries(rows());
        std::vector<std::string> new_products(cols());
        std::vector<T> new_values(values_.size());
        for (std::size_t i = 0; i < rows(); ++i) {
            new_countries[i] = countries_[row_order[i]];
        }
        for (std::size_t j = 0; j < cols(); ++j) {
            new_products[j] = products_[col_order[j]];
        }
        for (std::size_t i = 0; i < rows(); ++i) {
            for (std::size_t j = 0; j < cols(); ++j) {
                new_values[i * cols() + j] = (*this)(row_order[i], col_order[j]);
            }
        }
        return LabeledMatrix(year_, std::move(new_countries), std::move(new_products),
                             std::move(new_values));
    }

private:
    static void require_unique(const std::vector<std::string>& labels,
                               const char* kind) {
        std::unordered_set<std::string> seen;
        for (const auto& label : labels) {
            if (label.empty()) {
                throw data_error(std::string("matrix: empty ") + kind + " label");
            }
            if (!seen.insert(label).second) {
                throw data_error(std::string("matrix: duplicate ") + kind +
                                 " label '" + label + "'");
            }
        }
    }

    int year_ = 0;
    std::vector<std::string> countries_;
    std::vector<std::string> products_;
    std::vector<T> values_;
};

struct ExportTag {};
struct RcaTag {};
struct BinaryTag {};

using ExportMatrix = LabeledMatrix<double, ExportTag>;
using RcaMatrix = LabeledMatrix<double, RcaTag>;
using BinaryMatrix = LabeledMatrix<std::uint8_t, BinaryTag>;

// Canonical matrix CSV layout:
//   year,<year>
//   country,<product>,<product>,...
//   <country>,<value>,<value>,...
// Real matrices use shortest round-trip doubles, binary matrices integer 0/1.

namespace detail {

inline std::string format_cell(double v) { return csv::format_double(v); }
inline std::string format_cell(std::uint8_t v) { return v ? "1" : "0"; }

} // namespace detail

template <typename T, typename Tag>
void write_matrix_csv(const LabeledMatrix<T, Tag>& m, std::ostream& os) {
    csv::write_row(os, {"year", std::to_string(m.year())});
    std::vector<std::string> header;
    header.reserve(m.cols() + 1);
    header.emplace_back("country");
    for (const auto& p : m.products()) {
        header.push_back(p);
    }
    csv::write_row(os, header);
    std::vector<std::string> row;
    for (std::size_t c = 0; c < m.rows(); ++c) {
        row.clear();
        row.push_back(m.countries()[c]);
        for (std::size_t p = 0; p < m.cols(); ++p) {
            row.push_back(detail::format_cell(m(c, p)));
        }
        csv::write_row(os, row);
    }
}

namespace detail {

struct RawMatrixCsv {
    int year = 0;
    std::vector<std::string> countries;
    std::vector<std::string> products;
    std::vector<std::string> cells;
};

inline RawMatrixCsv read_matrix_csv_raw(std::istream& is, const char* kind) {
    RawMatrixCsv raw;
    std::string line;
    if (!csv::read_line(is, line)) {
        throw data_error(std::string(kind) + ": empty file");
    }
    auto year_row = csv::split(line);
    long long year = 0;
    if (year_row.size() != 2 || year_row[0] != "year" ||
        !csv::parse_int(year_row[1], year)) {
        throw data_error(std::string(kind) + ": first row must be 'year,<year>'");
    }
    raw.year = static_cast<int>(year);
    if (!csv::read_line(is, line)) {
        throw data_error(std::string(kind) + ": missing header row");
    }
    auto header = csv::split(line);
    if (header.empty() || header[0] != "country") {
        throw data_error(std::string(kind) +
                         ": second row must start with 'country'");
    }
    raw.products.assign(header.begin() + 1, header.end());
    std::size_t row_no = 2;
    while (csv::read_line(is, line)) {
        ++row_no;
        if (line.empty()) {
            continue;
        }
        auto fields = csv::split(line);
        if (fields.size() != raw.products.size() + 1) {
            throw data_error(std::string(kind) + ": row " + std::to_string(row_no) +
                             " has " + std::to_string(fields.size()) +
                             " fields, expected " +
                             std::to_string(raw.products.size() + 1));
        }
        raw.countries.push_back(fields[0]);
        for (std::size_t i = 1; i < fields.size(); ++i) {
            raw.cells.push_back(std::move(fields[i]));
        }
    }
    if (raw.countries.empty() || raw.products.empty()) {
        throw data_error(std::string(kind) + ": no data rows or no products");
    }
    return raw;
}

} // namespace detail

template <typename Tag>
LabeledMatrix<double, Tag> read_real_matrix_csv(std::istream& is, const char* kind,
                                                bool require_nonneg = true) {
    auto raw = detail::read_matrix_csv_raw(is, kind);
    std::vector<double> values(raw.cells.size());
    for (std::size_t i = 0; i < raw.cells.size(); ++i) {
        double v = 0.0;
        if (!csv::parse_double(raw.cells[i], v) || !std::isfinite(v)) {
            throw data_error(std::string(kind) + ": non-numeric cell '" +
                             raw.cells[i] + "'");
        }
        if (require_nonneg && v < 0.0) {
            throw data_error(std::string(kind) + ": negative cell " +
                             raw.cells[i]);
        }
        values[i] = v;
    }
    return LabeledMatrix<double, Tag>(raw.year, std::move(raw.countries),
                                      std::move(raw.products), std::move(values));
}

inline BinaryMatrix read_binary_matrix_csv(std::istream& is,
                                           const char* kind = "binary matrix") {
    auto raw = detail::read_matrix_csv_raw(is, kind);
    std::vector<std::uint8_t> values(raw.cells.size());
    for (std::size_t i = 0; i < raw.cells.size(); ++i) {
        if (raw.cells[i] == "0") {
            values[i] = 0;
        } else if (raw.cells[i] == "1") {
            values[i] = 1;
        } else {
            throw data_error(std::string(kind) + ": cell '" + raw.cells[i] +
                             "' is not 0 or 1");
        }
    }
    return BinaryMatrix(raw.year, std::move(raw.countries), std::move(raw.products),
                        std::move(values));
}

inline ExportMatrix read_export_matrix_csv(std::istream& is) {
    return read_real_matrix_csv<ExportTag>(is, "export matrix");
}

inline RcaMatrix read_rca_matrix_csv(std::istream& is) {
    return read_real_matrix_csv<RcaTag>(is, "rca matrix");
}

} // namespace econfit
