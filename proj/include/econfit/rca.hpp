#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "econfit/error.hpp"
#include "econfit/matrix.hpp"

namespace econfit {

// Balassa revealed comparative advantage:
//   RCA_cp = (X_cp / sum_p' X_cp') / (sum_c' X_c'p / sum_c'p' X_c'p')
// Cells with X_cp = 0 are 0, which also resolves the 0/0 case of a country
// with zero total exports; such rows fall out at the pruning stage.
inline RcaMatrix compute_rca(const ExportMatrix& x) {
    const std::size_t nc = x.rows();
    const std::size_t np = x.cols();
    std::vector<double> row_totals(nc, 0.0);
    std::vector<double> col_totals(np, 0.0);
    double grand_total = 0.0;
    for (std::size_t c = 0; c < nc; ++c) {
        for (std::size_t p = 0; p < np; ++p) {
            double v = x(c, p);
            row_totals[c] += v;
            col_totals[p] += v;
            grand_total += v;
        }
    }
    if (grand_total <= 0.0) {
        throw numerical_error("compute_rca: all-zero export matrix");
    }
    std::vector<double> values(nc * np, 0.0);
    for (std::size_t c = 0; c < nc; ++c) {
        if (row_totals[c] == 0.0) {
            continue;
        }
        for (std::size_t p = 0; p < np; ++p) {
            double v = x(c, p);
            if (v == 0.0) {
                continue;
            }
            double country_share = v / row_totals[c];
            double world_share = col_totals[p] / grand_total;
            values[c * np + p] = country_share / world_share;
        }
    }
    return RcaMatrix(x.year(), x.countries(), x.products(), std::move(values));
}

// Threshold into the binary export matrix; the boundary value maps to 1.
inline BinaryMatrix binarize(const RcaMatrix& r, double threshold = 1.0) {
    if (!(threshold > 0.0)) {
        throw validation_error("binarize: threshold must be > 0");
    }
    std::vector<std::uint8_t> values(r.rows() * r.cols(), 0);
    for (std::size_t i = 0; i < values.size(); ++i) {
        values[i] = r.values()[i] >= threshold ? 1 : 0;
    }
    return BinaryMatrix(r.year(), r.countries(), r.products(), std::move(values));
}

struct PruneReport {
    std::vector<std::string> removed_countries;
    std::vector<std::string> removed_products;
    std::size_t passes = 0;

    bool empty() const {
        return removed_countries.empty() && removed_products.empty();
    }
};

// Removes all-zero rows and columns until none remain. The fitness iteration
// is undefined on them (a zero row has no basket, a zero column no exporter).
inline std::pair<BinaryMatrix, PruneReport> prune(const BinaryMatrix& m) {
    std::vector<std::uint8_t> row_keep(m.rows(), 1);
    std::vector<std::uint8_t> col_keep(m.cols(), 1);
    PruneReport report;
    bool changed = true;
    while (changed) {
        changed = false;
        ++report.passes;
        for (std::size_t c = 0; c < m.rows(); ++c) {
            if (!row_keep[c]) {
                continue;
            }
            bool any = false;
            for (std::size_t p = 0; p < m.cols(); ++p) {
                if (col_keep[p] && m(c, p)) {
                    any = true;
                    break;
                }
            }
            if (!any) {
                row_keep[c] = 0;
                report.removed_countries.push_back(m.countries()[c]);
                changed = true;
            }
        }
        for (std::size_t p = 0; p < m.cols(); ++p) {
            if (!col_keep[p]) {
                continue;
            }
            bool any = false;
            for (std::size_t c = 0; c < m.rows(); ++c) {
                if (row_keep[c] && m(c, p)) {
                    any = true;
                    break;
                }
            }
            if (!any) {
                col_keep[p] = 0;
                report.removed_products.push_back(m.products()[p]);
                changed = true;
            }
        }
    }
    std::vector<std::string> countries;
    std::vector<std::string> products;
    for (std::size_t c = 0; c < m.rows(); ++c) {
        if (row_keep[c]) {
            countries.push_back(m.countries()[c]);
        }
    }
    for (std::size_t p = 0; p < m.cols(); ++p) {
        if (col_keep[p]) {
            products.push_back(m.products()[p]);
        }
    }
    if (countries.empty() || products.empty()) {
        throw data_error("prune: matrix is empty after pruning");
    }
    std::vector<std::uint8_t> values;
    values.reserve(countries.size() * products.size());
    for (std::size_t c = 0; c < m.rows(); ++c) {
        if (!row_keep[c]) {
            continue;
        }
        for (std::size_t p = 0; p < m.cols(); ++p) {
            if (col_keep[p]) {
                values.push_back(m(c, p));
            }
        }
    }
    BinaryMatrix pruned(m.year(), std::move(countries), std::move(products),
                        std::move(values));
    return {std::move(pruned), std::move(report)};
}

inline bool is_pruned(const BinaryMatrix& m) {
    for (std::size_t c = 0; c < m.rows(); ++c) {
        if (m.row_sum(c) == 0.0) {
            return false;
        }
    }
    for (std::size_t p = 0; p < m.cols(); ++p) {
        if (m.col_sum(p) == 0.0) {
            return false;
        }
    }
    return true;
}

} // namespace econfit
