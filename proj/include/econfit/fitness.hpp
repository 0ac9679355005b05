#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "econfit/csv.hpp"
#include "econfit/error.hpp"
#include "econfit/hash.hpp"
#include "econfit/matrix.hpp"
#include "econfit/rca.hpp"

namespace econfit {

enum class ConvergedBy { value, rank, max_iterations };

inline const char* to_string(ConvergedBy c) {
    switch (c) {
        case ConvergedBy::value: return "value";
        case ConvergedBy::rank: return "rank";
        case ConvergedBy::max_iterations: return "max_iterations";
    }
    return "unknown";
}

enum class InitialQ {
    ones,       // Q_p^(0) = 1 for all p
    one_over_p, // Q_p^(0) = 1/P; identical fixed point, exposed for checks
    custom,     // user-supplied strictly positive vector
};

struct FitnessConfig {
    std::size_t max_iterations = 1000;
    double value_tolerance = 1e-9;       // max relative change per sweep, F and Q
    std::size_t rank_stability_window = 10; // 0 disables the rank criterion
    InitialQ initial_q_mode = InitialQ::ones;
    std::vector<double> initial_q;       // used when initial_q_mode == custom
    bool synchronous_q_update = false;   // previous-sweep F in the Q update
};

struct SweepDiagnostics {
    double max_rel_change_f = 0.0;
    double max_rel_change_q = 0.0;
    std::uint64_t rank_hash = 0;
    std::size_t floor_events = 0;
};

struct FitnessResult {
    std::vector<std::string> countries;
    std::vector<std::string> products;
    std::vector<double> fitness;    // mean-normalized F_c
    std::vector<double> complexity; // mean-normalized Q_p
    std::size_t iterations_run = 0;
    ConvergedBy converged_by = ConvergedBy::max_iterations;
    std::vector<SweepDiagnostics> sweeps;
    std::size_t floor_events_total = 0;
};

namespace detail {

// Fitness values below this are clamped before taking reciprocals in the Q
// update; on slowly decaying matrices F can underflow long before the ranks
// settle.
inline constexpr double k_fitness_floor = 1e-300;

inline void normalize_to_mean_one(std::vector<double>& v) {
    double mean = std::accumulate(v.begin(), v.end(), 0.0) /
                  static_cast<double>(v.size());
    for (double& x : v) {
        x /= mean;
    }
}

// Descending order with index tiebreak; stable across relabelings with the
// label comparator variant below.
inline std::vector<std::size_t> order_desc(const std::vector<double>& values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (values[a] != values[b]) {
            return values[a] > values[b];
        }
        return a < b;
    });
    return order;
}

inline std::vector<std::size_t> order_desc_by_label(
    const std::vector<double>& values, const std::vector<std::string>& labels) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (values[a] != values[b]) {
            return values[a] > values[b];
        }
        return labels[a] < labels[b];
    });
    return order;
}

inline std::uint64_t rank_order_hash(const std::vector<double>& f,
                                     const std::vector<double>& q) {
    Fnv1a64 h;
    for (std::size_t ix : order_desc(f)) {
        h.update_u64(ix);
    }
    h.update_u64(~std::uint64_t{0}); // separator between the two orders
    for (std::size_t ix : order_desc(q)) {
        h.update_u64(ix);
    }
    return h.digest();
}

} // namespace detail

// One sweep of the coupled update:
//   F~_c = sum_p M_cp Q_p            (previous sweep's Q)
//   F_c  = F~_c / <F~>_c
//   Q~_p = 1 / sum_c M_cp (1 / F_c)  (this sweep's F; synchronous variant
//                                     uses the previous F instead)
//   Q_p  = Q~_p / <Q~>_p
// Both returned vectors are mean-normalized.
inline std::pair<std::vector<double>, std::vector<double>> iterate_once(
    const BinaryMatrix& m, const std::vector<double>& f,
    const std::vector<double>& q, bool synchronous_q_update = false,
    std::size_t* floor_events = nullptr) {
    const std::size_t nc = m.rows();
    const std::size_t np = m.cols();
    if (f.size() != nc || q.size() != np) {
        throw validation_error("iterate_once: vector dimensions do not match matrix");
    }
    for (double v : f) {
        if (!(v > 0.0)) {
            throw validation_error("iterate_once: fitness vector must be strictly positive");
        }
    }
    for (double v : q) {
        if (!(v > 0.0)) {
            throw validation_error("iterate_once: complexity vector must be strictly positive");
        }
    }

    std::vector<double> f_new(nc, 0.0);
    for (std::size_t c = 0; c < nc; ++c) {
        double s = 0.0;
        for (std::size_t p = 0; p < np; ++p) {
            if (m(c, p)) {
                s += q[p];
            }
        }
        if (s == 0.0) {
            throw numerical_error("iterate_once: unpruned matrix (all-zero row '" +
                                  m.countries()[c] + "')");
        }
        f_new[c] = s;
    }
    detail::normalize_to_mean_one(f_new);

    const std::vector<double>& f_src = synchronous_q_update ? f : f_new;
    std::size_t floored = 0;
    std::vector<double> inv_f(nc);
    for (std::size_t c = 0; c < nc; ++c) {
        double v = f_src[c];
        if (v < detail::k_fitness_floor) {
            v = detail::k_fitness_floor;
            ++floored;
        }
        inv_f[c] = 1.0 / v;
    }
    std::vector<double> q_new(np, 0.0);
    for (std::size_t p = 0; p < np; ++p) {
        double denom = 0.0;
        for (std::size_t c = 0; c < nc; ++c) {
            if (m(c, p)) {
                denom += inv_f[c];
            }
        }
        if (denom == 0.0) {
            throw numerical_error("iterate_once: unpruned matrix (all-zero column '" +
                                  m.products()[p] + "')");
        }
        q_new[p] = 1.0 / denom;
    }
    detail::normalize_to_mean_one(q_new);

    if (floor_events != nullptr) {
        *floor_events += floored;
    }
    return {std::move(f_new), std::move(q_new)};
}

// Iterates to the fixed point. Stops on the first of: value tolerance met on
// both F and Q, rank order of F and Q unchanged for rank_stability_window
// consecutive sweeps, or max_iterations. Hitting max_iterations is not an
// error; some matrices drive values toward zero without rank changes and the
// flag in converged_by is the honest answer there.
inline FitnessResult compute_fitness(const BinaryMatrix& m,
                                     const FitnessConfig& cfg = {}) {
    if (cfg.max_iterations < 1) {
        throw validation_error("compute_fitness: max_iterations must be >= 1");
    }
    if (!(cfg.value_tolerance > 0.0)) {
        throw validation_error("compute_fitness: value_tolerance must be > 0");
    }
    if (m.rows() == 0 || m.cols() == 0) {
        throw data_error("compute_fitness: empty matrix");
    }
    if (!is_pruned(m)) {
        throw numerical_error("compute_fitness: matrix has all-zero rows or columns; prune first");
    }

    const std::size_t nc = m.rows();
    const std::size_t np = m.cols();
    std::vector<double> q;
    switch (cfg.initial_q_mode) {
        case InitialQ::ones:
            q.assign(np, 1.0);
            break;
        case InitialQ::one_over_p:
            q.assign(np, 1.0 / static_cast<double>(np));
            break;
        case InitialQ::custom:
            if (cfg.initial_q.size() != np) {
                throw validation_error("compute_fitness: initial_q size does not match product count");
            }
            for (double v : cfg.initial_q) {
                if (!(v > 0.0)) {
                    throw validation_error("compute_fitness: initial_q must be strictly positive");
                }
            }
            q = cfg.initial_q;
            break;
    }
    std::vector<double> f(nc, 1.0);

    FitnessResult result;
    result.countries = m.countries();
    result.products = m.products();
    result.converged_by = ConvergedBy::max_iterations;

    std::uint64_t prev_hash = 0;
    std::size_t stable_run = 0;
    for (std::size_t n = 1; n <= cfg.max_iterations; ++n) {
        std::size_t floored = 0;
        auto [f_new, q_new] = iterate_once(m, f, q, cfg.synchronous_q_update, &floored);

        SweepDiagnostics diag;
        diag.floor_events = floored;
        for (std::size_t c = 0; c < nc; ++c) {
            diag.max_rel_change_f =
                std::max(diag.max_rel_change_f, std::abs(f_new[c] - f[c]) / f[c]);
        }
        for (std::size_t p = 0; p < np; ++p) {
            diag.max_rel_change_q =
                std::max(diag.max_rel_change_q, std::abs(q_new[p] - q[p]) / q[p]);
        }
        diag.rank_hash = detail::rank_order_hash(f_new, q_new);
        if (n > 1 && diag.rank_hash == prev_hash) {
            ++stable_run;
        } else {
            stable_run = 0;
        }
        prev_hash = diag.rank_hash;

        f = std::move(f_new);
        q = std::move(q_new);
        result.sweeps.push_back(diag);
        result.floor_events_total += floored;
        result.iterations_run = n;

        if (diag.max_rel_change_f < cfg.value_tolerance &&
            diag.max_rel_change_q < cfg.value_tolerance) {
            result.converged_by = ConvergedBy::value;
            break;
        }
        if (cfg.rank_stability_window > 0 &&
            stable_run >= cfg.rank_stability_window) {
            result.converged_by = ConvergedBy::rank;
            break;
        }
    }
    result.fitness = std::move(f);
    result.complexity = std::move(q);
    return result;
}

struct RankedCountry {
    std::string country;
    double fitness = 0.0;
    std::size_t rank = 0;     // 1 = highest fitness
    double norm_rank = 0.0;   // 1.0 best, 0.0 worst
    bool tied = false;
};

struct RankedProduct {
    std::string product;
    double complexity = 0.0;
    std::size_t rank = 0; // 1 = highest complexity
    bool tied = false;
};

// Descending by fitness; ties broken lexicographically by country code and
// flagged. Normalized rank is (N - position) / (N - 1), 1.0 for N = 1.
inline std::vector<RankedCountry> rank_countries(const FitnessResult& res) {
    const std::size_t n = res.fitness.size();
    if (n == 0) {
        throw validation_error("rank_countries: empty result");
    }
    auto order = detail::order_desc_by_label(res.fitness, res.countries);
    std::vector<RankedCountry> ranked(n);
    for (std::size_t pos = 0; pos < n; ++pos) {
        std::size_t ix = order[pos];
        RankedCountry& rc = ranked[pos];
        rc.country = res.countries[ix];
        rc.fitness = res.fitness[ix];
        rc.rank = pos + 1;
        rc.norm_rank = n == 1 ? 1.0
                              : static_cast<double>(n - (pos + 1)) /
                                    static_cast<double>(n - 1);
    }
    for (std::size_t pos = 0; pos < n; ++pos) {
        bool tie_prev = pos > 0 && ranked[pos - 1].fitness == ranked[pos].fitness;
        bool tie_next = pos + 1 < n && ranked[pos + 1].fitness == ranked[pos].fitness;
        ranked[pos].tied = tie_prev || tie_next;
    }
    return ranked;
}

inline std::vector<RankedProduct> rank_products(const FitnessResult& res) {
    const std::size_t n = res.complexity.size();
    if (n == 0) {
        throw validation_error("rank_products: empty result");
    }
    auto order = detail::order_desc_by_label(res.complexity, res.products);
    std::vector<RankedProduct> ranked(n);
    for (std::size_t pos = 0; pos < n; ++pos) {
        std::size_t ix = order[pos];
        ranked[pos].product = res.products[ix];
        ranked[pos].complexity = res.complexity[ix];
        ranked[pos].rank = pos + 1;
    }
    for (std::size_t pos = 0; pos < n; ++pos) {
        bool tie_prev = pos > 0 && ranked[pos - 1].complexity == ranked[pos].complexity;
        bool tie_next =
            pos + 1 < n && ranked[pos + 1].complexity == ranked[pos].complexity;
        ranked[pos].tied = tie_prev || tie_next;
    }
    return ranked;
}

// Rows sorted by increasing fitness, columns by increasing complexity; the
// reordered matrix exposes the triangular shape. Ties fall back to label
// order so the output is invariant under input permutations.
inline BinaryMatrix triangular_order(const BinaryMatrix& m,
                                     const FitnessResult& res) {
    if (m.countries() != res.countries || m.products() != res.products) {
        throw validation_error("triangular_order: matrix and result labels do not match");
    }
    std::vector<std::size_t> row_order(m.rows());
    std::iota(row_order.begin(), row_order.end(), std::size_t{0});
    std::sort(row_order.begin(), row_order.end(), [&](std::size_t a, std::size_t b) {
        if (res.fitness[a] != res.fitness[b]) {
            return res.fitness[a] < res.fitness[b];
        }
        return res.countries[a] < res.countries[b];
    });
    std::vector<std::size_t> col_order(m.cols());
    std::iota(col_order.begin(), col_order.end(), std::size_t{0});
    std::sort(col_order.begin(), col_order.end(), [&](std::size_t a, std::size_t b) {
        if (res.complexity[a] != res.complexity[b]) {
            return res.complexity[a] < res.complexity[b];
        }
        return res.products[a] < res.products[b];
    });
    return m.reordered(row_order, col_order);
}

// fitness.csv: country,fitness,rank,norm_rank
inline void write_fitness_csv(const FitnessResult& res, std::ostream& os) {
    csv::write_row(os, {"country", "fitness", "rank", "norm_rank"});
    for (const auto& rc : rank_countries(res)) {
        csv::write_row(os, {rc.country, csv::format_double(rc.fitness),
                            std::to_string(rc.rank), csv::format_double(rc.norm_rank)});
    }
}

// complexity.csv: product,complexity,rank
inline void write_complexity_csv(const FitnessResult& res, std::ostream& os) {
    csv::write_row(os, {"product", "complexity", "rank"});
    for (const auto& rp : rank_products(res)) {
        csv::write_row(os, {rp.product, csv::format_double(rp.complexity),
                            std::to_string(rp.rank)});
    }
}

inline std::vector<RankedCountry> read_fitness_csv(std::istream& is) {
    std::string line;
    if (!csv::read_line(is, line)) {
        throw data_error("fitness csv: empty stream");
    }
    auto header = csv::split(line);
    std::size_t country_ix = csv::require_column(header, "country", "fitness csv");
    std::size_t fitness_ix = csv::require_column(header, "fitness", "fitness csv");
    std::size_t rank_ix = csv::require_column(header, "rank", "fitness csv");
    std::size_t norm_ix = csv::require_column(header, "norm_rank", "fitness csv");
    std::vector<RankedCountry> out;
    while (csv::read_line(is, line)) {
        if (line.empty()) {
            continue;
        }
        auto cells = csv::split(line);
        if (cells.size() != header.size()) {
            throw data_error("fitness csv: ragged row");
        }
        RankedCountry rc;
        rc.country = cells[country_ix];
        long long rank = 0;
        if (!csv::parse_double(cells[fitness_ix], rc.fitness) ||
            !csv::parse_int(cells[rank_ix], rank) ||
            !csv::parse_double(cells[norm_ix], rc.norm_rank)) {
            throw data_error("fitness csv: malformed row for country '" + rc.country + "'");
        }
        rc.rank = static_cast<std::size_t>(rank);
        out.push_back(std::move(rc));
    }
    if (out.empty()) {
        throw data_error("fitness csv: no data rows");
    }
    return out;
}

inline nlohmann::json diagnostics_to_json(const FitnessResult& res) {
    nlohmann::json sweeps = nlohmann::json::array();
    for (std::size_t i = 0; i < res.sweeps.size(); ++i) {
        const auto& d = res.sweeps[i];
        sweeps.push_back({{"sweep", i + 1},
                          {"max_rel_change_f", d.max_rel_change_f},
                          {"max_rel_change_q", d.max_rel_change_q},
                          {"rank_hash", to_hex(d.rank_hash)},
                          {"floor_events", d.floor_events}});
    }
    return nlohmann::json{{"iterations_run", res.iterations_run},
                          {"converged_by", to_string(res.converged_by)},
                          {"floor_events_total", res.floor_events_total},
                          {"n_countries", res.countries.size()},
                          {"n_products", res.products.size()},
                          {"sweeps", std::move(sweeps)}};
}

} // namespace econfit
