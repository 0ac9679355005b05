#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "econfit/error.hpp"
#include "econfit/matrix.hpp"
#include "econfit/random.hpp"
#include "econfit/rca.hpp"

namespace econfit {

namespace detail {

inline std::vector<std::string> make_labels(const char* prefix, std::size_t n) {
    std::size_t width = 1;
    for (std::size_t v = n; v >= 10; v /= 10) {
        ++width;
    }
    std::vector<std::string> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::string num = std::to_string(i + 1);
        labels[i] = std::string(prefix) +
                    std::string(width - std::min(width, num.size()), '0') + num;
    }
    return labels;
}

} // namespace detail

// Perfectly nested matrix: countries receive distinct random diversifications
// and the row with diversification d exports exactly the d most ubiquitous
// products (the column-index prefix). Deterministic given the seed.
inline BinaryMatrix generate_nested(std::size_t nc, std::size_t np,
                                    std::uint64_t seed, int year = 0) {
    if (nc < 1 || np < 1) {
        throw validation_error("generate_nested: nc and np must be >= 1");
    }
    if (nc > np) {
        throw validation_error("generate_nested: nc distinct diversifications in 1.." +
                               std::to_string(np) + " require nc <= np");
    }
    SeededRng rng(seed);
    // Partial Fisher-Yates over 1..np; the first nc entries are the
    // diversifications.
    std::vector<std::size_t> pool(np);
    std::iota(pool.begin(), pool.end(), std::size_t{1});
    for (std::size_t i = 0; i < nc; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng.next_below(np - i));
        std::swap(pool[i], pool[j]);
    }
    std::vector<std::uint8_t> values(nc * np, 0);
    for (std::size_t c = 0; c < nc; ++c) {
        for (std::size_t p = 0; p < pool[c]; ++p) {
            values[c * np + p] = 1;
        }
    }
    return BinaryMatrix(year, detail::make_labels("C", nc),
                        detail::make_labels("P", np), std::move(values));
}

// Tripartite country-capability-product instance. Capability ids live in
// [0, nk); a country exports a product exactly when its capability set covers
// the product's requirement set.
struct CapabilityModel {
    std::uint64_t seed = 0;
    std::size_t n_capabilities = 0;
    double cdensity = 0.0;
    double pdensity = 0.0;
    std::vector<std::string> countries;
    std::vector<std::string> products;
    std::vector<std::vector<std::size_t>> country_capabilities;
    std::vector<std::vector<std::size_t>> product_requirements;
};

struct TripartiteParams {
    std::size_t nc = 20;
    std::size_t nk = 10;
    std::size_t np = 50;
    double cdensity = 0.3; // per-capability link probability, country side
    double pdensity = 0.2; // per-capability link probability, product side
};

struct TripartiteInstance {
    CapabilityModel model;
    BinaryMatrix matrix; // pruned
    PruneReport prune_report;
};

inline TripartiteInstance generate_tripartite(const TripartiteParams& params,
                                              std::uint64_t seed, int year = 0) {
    if (params.nc < 1 || params.nk < 1 || params.np < 1) {
        throw validation_error("generate_tripartite: nc, nk, np must be >= 1");
    }
    if (!(params.cdensity > 0.0 && params.cdensity <= 1.0) ||
        !(params.pdensity > 0.0 && params.pdensity <= 1.0)) {
        throw validation_error("generate_tripartite: densities must be in (0, 1]");
    }
    constexpr int k_max_attempts = 32;
    for (int attempt = 0; attempt < k_max_attempts; ++attempt) {
        // Sub-seed per attempt keeps regeneration deterministic.
        SeededRng rng(seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(attempt));
        CapabilityModel model;
        model.seed = seed;
        model.n_capabilities = params.nk;
        model.cdensity = params.cdensity;
        model.pdensity = params.pdensity;
        model.countries = detail::make_labels("C", params.nc);
        model.products = detail::make_labels("P", params.np);

        model.country_capabilities.resize(params.nc);
        for (std::size_t c = 0; c < params.nc; ++c) {
            // A country with no capabilities is redrawn.
            do {
                model.country_capabilities[c].clear();
                for (std::size_t k = 0; k < params.nk; ++k) {
                    if (rng.bernoulli(params.cdensity)) {
                        model.country_capabilities[c].push_back(k);
                    }
                }
            } while (model.country_capabilities[c].empty());
        }
        model.product_requirements.resize(params.np);
        for (std::size_t p = 0; p < params.np; ++p) {
            for (std::size_t k = 0; k < params.nk; ++k) {
                if (rng.bernoulli(params.pdensity)) {
                    model.product_requirements[p].push_back(k);
                }
            }
        }

        std::vector<std::uint8_t> values(params.nc * params.np, 0);
        for (std::size_t c = 0; c < params.nc; ++c) {
            std::vector<bool> holds(params.nk, false);
            for (std::size_t k : model.country_capabilities[c]) {
                holds[k] = true;
            }
            for (std::size_t p = 0; p < params.np; ++p) {
                bool covered = true;
                for (std::size_t k : model.product_requirements[p]) {
                    if (!holds[k]) {
                        covered = false;
                        break;
                    }
                }
                values[c * params.np + p] = covered ? 1 : 0;
            }
        }
        BinaryMatrix raw(year, model.countries, model.products, std::move(values));
        try {
            auto [pruned, report] = prune(raw);
            return TripartiteInstance{std::move(model), std::move(pruned),
                                      std::move(report)};
        } catch (const data_error&) {
            continue; // fully pruned; retry with the next sub-seed
        }
    }
    throw data_error("generate_tripartite: matrix empty after pruning in " +
                     std::to_string(k_max_attempts) + " attempts");
}

inline nlohmann::json capability_model_to_json(const CapabilityModel& model) {
    nlohmann::json countries = nlohmann::json::object();
    for (std::size_t c = 0; c < model.countries.size(); ++c) {
        countries[model.countries[c]] = model.country_capabilities[c];
    }
    nlohmann::json products = nlohmann::json::object();
    for (std::size_t p = 0; p < model.products.size(); ++p) {
        products[model.products[p]] = model.product_requirements[p];
    }
    return nlohmann::json{{"seed", model.seed},
                          {"n_capabilities", model.n_capabilities},
                          {"cdensity", model.cdensity},
                          {"pdensity", model.pdensity},
                          {"country_capabilities", std::move(countries)},
                          {"product_requirements", std::move(products)}};
}

} // namespace econfit
