#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace econfit {

inline std::size_t levenshtein(std::string_view a, std::string_view b) {
    std::vector<std::size_t> prev(b.size() + 1);
    std::vector<std::size_t> cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) {
        prev[j] = j;
    }
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

// Closest candidate for a typo suggestion. A candidate that extends (or is a
// prefix of) the query beats plain edit distance: "log_gdp" should suggest
// "log_gdp_pc", not the edit-closer "log_emp".
inline std::string nearest_name(std::string_view name,
                                const std::vector<std::string>& candidates) {
    std::string best;
    std::size_t best_dist = ~std::size_t{0};
    bool best_prefix = false;
    for (const auto& cand : candidates) {
        bool prefix = cand.size() >= name.size()
                          ? std::string_view(cand).substr(0, name.size()) == name
                          : name.substr(0, cand.size()) == cand;
        std::size_t d = levenshtein(name, cand);
        if ((prefix && !best_prefix) || (prefix == best_prefix && d < best_dist)) {
            best_prefix = prefix;
            best_dist = d;
            best = cand;
        }
    }
    return best;
}

} // namespace econfit
