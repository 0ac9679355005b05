// Acceptance suite: one line per criterion, nonzero exit if any fail.
// Every tolerance and runtime budget is pinned in code here.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "econfit/econfit.hpp"
#include "oracles.hpp"

using namespace econfit;
namespace fs = std::filesystem;

namespace {

using Failures = std::vector<std::string>;

void expect(Failures& failures, bool ok, const std::string& what) {
    if (!ok) {
        failures.push_back(what);
    }
}

double rel_sup_gap(const std::vector<double>& a, const std::vector<double>& b) {
    double out = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        out = std::max(out,
                       std::abs(a[i] - b[i]) / std::max(std::abs(a[i]), std::abs(b[i])));
    }
    return out;
}

GridSpec grid_of(std::size_t nx, std::size_t ny) {
    GridSpec grid;
    grid.nx = nx;
    grid.ny = ny;
    return grid;
}

ExportMatrix export_from_cells(const std::vector<std::vector<double>>& cells) {
    std::size_t nc = cells.size();
    std::size_t np = cells[0].size();
    std::vector<std::string> countries(nc);
    std::vector<std::string> products(np);
    for (std::size_t i = 0; i < nc; ++i) {
        countries[i] = "C" + std::to_string(100 + i);
    }
    for (std::size_t j = 0; j < np; ++j) {
        products[j] = "P" + std::to_string(100 + j);
    }
    std::vector<double> values;
    for (const auto& row : cells) {
        values.insert(values.end(), row.begin(), row.end());
    }
    return ExportMatrix(0, countries, products, values);
}

// Regressor draw shared by the regression criteria.
GrowthPanel regression_panel(std::size_t n_countries, std::size_t years,
                             const std::vector<double>& beta, double noise_sd,
                             std::uint64_t seed, bool country_intercepts) {
    SeededRng rng(seed);
    std::vector<GrowthObs> obs;
    for (std::size_t c = 0; c < n_countries; ++c) {
        double alpha = country_intercepts ? rng.uniform(-0.5, 0.5) : 0.0;
        for (std::size_t t = 0; t < years; ++t) {
            GrowthObs o;
            o.country = "C" + std::to_string(c);
            o.year = 2000 + static_cast<int>(t);
            o.log_gdp_pc = rng.normal(8.0, 1.0);
            o.log_k_emp = rng.normal(10.0, 0.8);
            o.log_emp = rng.normal(15.0, 1.2);
            o.log_tfp_gdp = rng.normal(-11.0, 0.9);
            o.log_inv_life_exp = rng.normal(-4.1, 0.1);
            o.log_school = rng.normal(0.5, 0.4);
            o.fitness = std::exp(rng.normal(0.0, 1.0));
            o.log_fitness = std::log(o.fitness);
            o.fitness_rank = rng.uniform(0.0, 1.0);
            o.growth = beta[0] + alpha + beta[1] * o.log_gdp_pc + beta[2] * o.log_k_emp +
                       beta[3] * o.log_emp + beta[4] * o.log_tfp_gdp +
                       beta[5] * o.log_inv_life_exp + beta[6] * o.log_school +
                       beta[7] * o.fitness_rank + rng.normal(0.0, noise_sd);
            obs.push_back(std::move(o));
        }
    }
    return GrowthPanel(std::move(obs));
}

// --- criterion bodies --------------------------------------------------------

void fixed_point_correctness(Failures& f) {
    BinaryMatrix m(0, {"A", "B"}, {"P1", "P2"}, {1, 1, 1, 0});
    auto oracle = oracles::fitness_oracle(m, 10000, 1e-12);
    FitnessConfig cfg;
    cfg.max_iterations = 10000;
    cfg.value_tolerance = 1e-12;
    cfg.rank_stability_window = 0;
    auto res = compute_fitness(m, cfg);
    for (int i = 0; i < 2; ++i) {
        expect(f, std::abs(res.fitness[i] - oracle.fitness[i]) <= 1e-9,
               "F[" + std::to_string(i) + "] differs from oracle by more than 1e-9");
        expect(f, std::abs(res.complexity[i] - oracle.complexity[i]) <= 1e-9,
               "Q[" + std::to_string(i) + "] differs from oracle by more than 1e-9");
    }
    double mean_f = (res.fitness[0] + res.fitness[1]) / 2.0;
    double mean_q = (res.complexity[0] + res.complexity[1]) / 2.0;
    expect(f, std::abs(mean_f - 1.0) <= 1e-12, "mean(F) deviates from 1 beyond 1e-12");
    expect(f, std::abs(mean_q - 1.0) <= 1e-12, "mean(Q) deviates from 1 beyond 1e-12");
}

void initial_condition_independence(Failures& f) {
    auto m = prune(oracles::random_binary_matrix(30, 30, 0.45, 1)).first;
    FitnessConfig cfg;
    cfg.value_tolerance = 1e-10;
    cfg.max_iterations = 20000;
    cfg.rank_stability_window = 0;
    SeededRng rng(2024);
    std::vector<std::vector<double>> runs;
    for (int trial = 0; trial < 20; ++trial) {
        FitnessConfig trial_cfg = cfg;
        trial_cfg.initial_q_mode = InitialQ::custom;
        trial_cfg.initial_q.resize(m.cols());
        for (auto& v : trial_cfg.initial_q) {
            v = std::exp(rng.uniform(-3.0, 3.0));
        }
        auto res = compute_fitness(m, trial_cfg);
        expect(f, res.converged_by == ConvergedBy::value,
               "run " + std::to_string(trial) + " did not converge by value");
        runs.push_back(res.fitness);
    }
    double worst = 0.0;
    for (std::size_t a = 0; a < runs.size(); ++a) {
        for (std::size_t b = a + 1; b < runs.size(); ++b) {
            worst = std::max(worst, rel_sup_gap(runs[a], runs[b]));
        }
    }
    expect(f, worst <= 1e-6,
           "pairwise relative sup-norm gap " + std::to_string(worst) + " exceeds 1e-6");
}

void nested_dominance(Failures& f) {
    int good = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        SeededRng size_rng(seed * 31 + 5);
        std::size_t nc = 2 + size_rng.next_below(49);            // 2..50
        std::size_t np = nc + size_rng.next_below(51 - nc);      // nc..50
        auto m = prune(generate_nested(nc, np, seed)).first;
        auto res = compute_fitness(m);
        bool ok = true;
        for (std::size_t a = 0; a < m.rows() && ok; ++a) {
            for (std::size_t b = 0; b < m.rows() && ok; ++b) {
                if (m.row_sum(a) > m.row_sum(b) && !(res.fitness[a] > res.fitness[b])) {
                    ok = false;
                }
            }
        }
        for (std::size_t a = 0; a < m.cols() && ok; ++a) {
            for (std::size_t b = 0; b < m.cols() && ok; ++b) {
                if (m.col_sum(a) < m.col_sum(b) && !(res.complexity[a] > res.complexity[b])) {
                    ok = false;
                }
                if (m.col_sum(a) == m.col_sum(b) &&
                    std::abs(res.complexity[a] - res.complexity[b]) >
                        1e-12 * std::abs(res.complexity[a])) {
                    ok = false;
                }
            }
        }
        if (ok) {
            ++good;
        }
    }
    expect(f, good == 100,
           "only " + std::to_string(good) + "/100 nested instances ranked correctly");
}

void triangularity(Failures& f) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        SeededRng size_rng(seed + 400);
        std::size_t nc = 3 + size_rng.next_below(28);
        std::size_t np = nc + size_rng.next_below(25);
        auto m = prune(generate_nested(nc, np, seed)).first;
        auto ordered = triangular_order(m, compute_fitness(m));
        expect(f, oracles::is_lower_staircase(ordered),
               "seed " + std::to_string(seed) + " did not produce a lower staircase");
    }
}

void capability_recovery(Failures& f) {
    TripartiteParams params; // nc=20, nk=10, np=50, densities 0.3 / 0.2
    std::vector<double> rhos;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        auto inst = generate_tripartite(params, seed);
        auto res = compute_fitness(inst.matrix);
        std::vector<double> caps;
        std::vector<double> fits;
        for (std::size_t i = 0; i < inst.matrix.rows(); ++i) {
            const auto& label = inst.matrix.countries()[i];
            for (std::size_t j = 0; j < inst.model.countries.size(); ++j) {
                if (inst.model.countries[j] == label) {
                    caps.push_back(
                        static_cast<double>(inst.model.country_capabilities[j].size()));
                    break;
                }
            }
            fits.push_back(res.fitness[i]);
        }
        rhos.push_back(oracles::spearman(caps, fits));
    }
    std::sort(rhos.begin(), rhos.end());
    double median = (rhos[24] + rhos[25]) / 2.0;
    expect(f, median >= 0.8,
           "median Spearman " + std::to_string(median) + " below 0.8");
}

void rca_oracle_equivalence(Failures& f) {
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        SeededRng size_rng(seed + 900);
        std::size_t nc = 2 + size_rng.next_below(19);
        std::size_t np = 2 + size_rng.next_below(19);
        auto cells = oracles::random_real_matrix(nc, np, 0.3, seed);
        auto expected = oracles::rca_oracle(cells);
        auto rca = compute_rca(export_from_cells(cells));
        for (std::size_t c = 0; c < nc; ++c) {
            for (std::size_t p = 0; p < np; ++p) {
                if (std::abs(rca(c, p) - expected[c][p]) >
                    1e-12 * std::max(1.0, std::abs(expected[c][p]))) {
                    expect(f, false,
                           "seed " + std::to_string(seed) + " cell mismatch beyond 1e-12");
                    return;
                }
            }
        }
    }
    // scale invariance
    auto cells = oracles::random_real_matrix(15, 18, 0.3, 77);
    auto reference = compute_rca(export_from_cells(cells));
    for (double k : {1e-3, 1.0, 1e6}) {
        auto scaled = cells;
        for (auto& row : scaled) {
            for (auto& v : row) {
                v *= k;
            }
        }
        auto rca = compute_rca(export_from_cells(scaled));
        for (std::size_t i = 0; i < rca.values().size(); ++i) {
            double a = rca.values()[i];
            double b = reference.values()[i];
            bool ok = b == 0.0 ? a == 0.0 : std::abs(a - b) <= 1e-12 * std::abs(b);
            if (!ok) {
                expect(f, false, "scale invariance violated at k=" + std::to_string(k));
                return;
            }
        }
    }
}

void nadaraya_watson(Failures& f) {
    // constant-response recovery, exact
    SeededRng rng(5);
    std::vector<NwPoint> const_pts;
    for (int i = 0; i < 60; ++i) {
        const_pts.push_back(NwPoint{{rng.uniform(-2, 2), rng.uniform(-2, 2)}, 0.321});
    }
    for (int trial = 0; trial < 50; ++trial) {
        auto est = nw_estimate(const_pts, {rng.uniform(-2, 2), rng.uniform(-2, 2)},
                               {0.5, 0.8});
        if (est.value != 0.321) {
            expect(f, false, "constant response not recovered exactly");
            break;
        }
    }
    // hand value
    std::vector<NwPoint> two = {NwPoint{{0.0, 0.0}, 0.0}, NwPoint{{1.0, 0.0}, 1.0}};
    double hand = std::exp(-0.5) / (1.0 + std::exp(-0.5));
    auto est = nw_estimate(two, {0.0, 0.0}, {1.0, 1.0});
    expect(f, std::abs(est.value - hand) <= 1e-12,
           "hand value e^{-1/2}/(1+e^{-1/2}) not reproduced to 1e-12");
    // grid vs per-cell oracle on a 100-point instance
    std::vector<GrowthObs> obs;
    std::vector<std::array<double, 2>> xs;
    std::vector<double> ys;
    for (int i = 0; i < 100; ++i) {
        GrowthObs o;
        o.country = "C" + std::to_string(i);
        o.log_fitness = rng.uniform(-3, 1);
        o.fitness = std::exp(o.log_fitness);
        o.log_gdp_pc = rng.uniform(6, 10);
        o.growth = rng.uniform(-0.05, 0.1);
        xs.push_back({o.log_fitness, o.log_gdp_pc});
        ys.push_back(o.growth);
        obs.push_back(std::move(o));
    }
    GrowthPanel panel(std::move(obs));
    auto surface = build_colormap(panel, VariableSpec{"log_fitness"},
                                  VariableSpec{"log_gdp_pc"}, "growth", grid_of(25, 25));
    for (std::size_t ix = 0; ix < surface.x_axis.size(); ++ix) {
        for (std::size_t iy = 0; iy < surface.y_axis.size(); ++iy) {
            if (!surface.supported_at(ix, iy)) {
                continue;
            }
            double expected = oracles::nw_oracle(
                xs, ys, {surface.x_axis[ix], surface.y_axis[iy]}, surface.bandwidths);
            if (std::abs(surface.estimate_at(ix, iy) - expected) > 1e-12) {
                expect(f, false, "grid estimate differs from per-cell oracle beyond 1e-12");
                return;
            }
        }
    }
    // convex-combination bound on 1000 random queries
    double lo = *std::min_element(ys.begin(), ys.end());
    double hi = *std::max_element(ys.begin(), ys.end());
    double cushion = 1e-12 * (hi - lo);
    std::vector<NwPoint> pts;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        pts.push_back(NwPoint{xs[i], ys[i]});
    }
    for (int trial = 0; trial < 1000; ++trial) {
        auto q = nw_estimate(pts, {rng.uniform(-5, 3), rng.uniform(4, 12)}, {0.4, 0.5});
        if (!q.supported) {
            continue;
        }
        if (q.value < lo - cushion || q.value > hi + cushion) {
            expect(f, false, "estimate escapes the convex hull of responses");
            return;
        }
    }
}

void regression_recovery(Failures& f) {
    std::vector<double> beta = {0.05, -0.08, 0.02, -0.05, 0.01, -0.4, 0.03, 0.25};
    // noise-free recovery, pooled
    auto clean = regression_panel(50, 4, beta, 0.0, 11, false);
    auto pooled = ols_robust(clean, RegressionOptions{true, false});
    for (std::size_t j = 0; j < 8; ++j) {
        expect(f, std::abs(pooled.coefficients[j].estimate - beta[j]) <= 1e-10,
               "pooled noise-free coefficient " + pooled.coefficients[j].name +
                   " beyond 1e-10");
    }
    // noise-free recovery, fixed effects
    auto fe_panel = regression_panel(50, 4, beta, 0.0, 12, true);
    auto fe = ols_robust(fe_panel, RegressionOptions{true, true});
    for (std::size_t j = 0; j < 7; ++j) {
        expect(f, std::abs(fe.coefficients[j].estimate - beta[j + 1]) <= 1e-10,
               "fixed-effects noise-free coefficient " + fe.coefficients[j].name +
                   " beyond 1e-10");
    }
    // noisy: every coefficient within 4 SEs, in >= 95 of 100 seeds
    int good = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto panel = regression_panel(100, 5, beta, 0.01, 5000 + seed, false);
        auto res = ols_robust(panel, RegressionOptions{true, false});
        bool all_within = true;
        for (std::size_t j = 0; j < 8; ++j) {
            if (std::abs(res.coefficients[j].estimate - beta[j]) >
                4.0 * res.coefficients[j].std_error) {
                all_within = false;
                break;
            }
        }
        if (all_within) {
            ++good;
        }
    }
    expect(f, good >= 95,
           "only " + std::to_string(good) + "/100 noisy fits within 4 SEs");
    // HC1 against the independent sandwich computation
    auto noisy = regression_panel(100, 5, beta, 0.01, 321, false);
    auto res = ols_robust(noisy, RegressionOptions{true, false});
    oracles::Mat x;
    for (const auto& o : noisy.observations()) {
        x.push_back({1.0, o.log_gdp_pc, o.log_k_emp, o.log_emp, o.log_tfp_gdp,
                     o.log_inv_life_exp, o.log_school, o.fitness_rank});
    }
    auto oracle = oracles::ols_oracle(x, noisy.column("growth"), 8);
    for (std::size_t j = 0; j < 8; ++j) {
        expect(f,
               std::abs(res.coefficients[j].std_error - oracle.hc1_se[j]) <=
                   1e-10 * oracle.hc1_se[j],
               "HC1 SE for " + res.coefficients[j].name +
                   " differs from sandwich oracle beyond 1e-10");
    }
}

void table_structure(Failures& f) {
    auto panel = regression_panel(30, 4, {0.1, -0.08, 0.02, -0.05, 0.01, -0.4, 0.03, 0.25},
                                  0.01, 7, false);
    auto with_fitness = ols_robust(panel, RegressionOptions{true, false});
    expect(f, with_fitness.coefficients.size() == 8,
           "with fitness: expected 8 coefficient rows, got " +
               std::to_string(with_fitness.coefficients.size()));
    expect(f, with_fitness.coefficients.back().name == "fitness_rank",
           "fitness_rank row missing from the fitness specification");
    auto without = ols_robust(panel, RegressionOptions{false, false});
    expect(f, without.coefficients.size() == 7,
           "without fitness: expected 7 coefficient rows, got " +
               std::to_string(without.coefficients.size()));
    for (const auto& c : without.coefficients) {
        expect(f, c.name != "fitness_rank",
               "fitness_rank row present without the fitness flag");
    }
    auto j_with = regression_report_json(with_fitness);
    auto j_without = regression_report_json(without);
    expect(f, j_with["coefficients"].size() == 8, "json with fitness != 8 rows");
    expect(f, j_without["coefficients"].size() == 7, "json without fitness != 7 rows");
}

void end_to_end_determinism(Failures& f) {
    fs::path base = fs::temp_directory_path() /
                    ("econfit_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(base);
    fs::create_directories(base);
    auto config_for = [&base](const char* sub) {
        nlohmann::json j{
            {"seed", 7},
            {"out_dir", (base / sub).string()},
            {"years", {{"start", 2000}, {"end", 2002}}},
            {"input",
             {{"mode", "synthetic"},
              {"synthetic",
               {{"nc", 20}, {"nk", 10}, {"np", 50}, {"cdensity", 0.3}, {"pdensity", 0.2}}}}},
            {"rca", {{"threshold", 1.0}, {"prune", true}}},
            {"fitness", {{"max_iterations", 1000}, {"value_tolerance", 1e-9}}},
            {"panel", {{"dt", 1}, {"lag", 1}}},
            {"colormaps",
             nlohmann::json::array({{{"x", "log_fitness"},
                                     {"y", "log_gdp_pc"},
                                     {"target", "growth"},
                                     {"nx", 40},
                                     {"ny", 40}}})},
            {"regressions", nlohmann::json::array({{{"with_fitness", true}},
                                                   {{"with_fitness", false}}})}};
        return parse_pipeline_config(j);
    };
    auto m1 = run_pipeline(config_for("a"));
    auto m2 = run_pipeline(config_for("b"));
    expect(f, m1.error.empty() && m2.error.empty(), "pipeline reported an error");
    expect(f, m1.artifacts.size() == m2.artifacts.size(),
           "runs produced different artifact counts");
    for (std::size_t i = 0; i < std::min(m1.artifacts.size(), m2.artifacts.size()); ++i) {
        if (m1.artifacts[i].path != m2.artifacts[i].path ||
            m1.artifacts[i].hash != m2.artifacts[i].hash) {
            expect(f, false, "artifact " + m1.artifacts[i].path + " differs between runs");
            break;
        }
    }
    for (const char* name : {"growth.csv", "surface_1.csv", "report_1.json",
                             "report_2.json", "fitness_2002.csv"}) {
        expect(f, m1.find(name) != nullptr, std::string(name) + " missing from manifest");
    }
    fs::remove_all(base);
}

struct Criterion {
    int number;
    const char* name;
    double budget_seconds; // 0 = no stated budget
    std::function<void(Failures&)> body;
};

} // namespace

int main() {
    std::vector<Criterion> criteria = {
        {1, "fixed-point correctness vs straight-loop oracle", 1.0, fixed_point_correctness},
        {2, "initial-condition independence on a random 30x30", 10.0, initial_condition_independence},
        {3, "nested dominance over 100 instances", 30.0, nested_dominance},
        {4, "triangular reordering yields a lower staircase", 0.0, triangularity},
        {5, "capability recovery on tripartite instances", 0.0, capability_recovery},
        {6, "vectorized Balassa vs four-loop oracle + scale invariance", 0.0, rca_oracle_equivalence},
        {7, "Nadaraya-Watson exactness, oracle equality, convexity", 0.0, nadaraya_watson},
        {8, "regression recovery and HC1 sandwich agreement", 0.0, regression_recovery},
        {9, "coefficient table structure with and without fitness", 0.0, table_structure},
        {10, "end-to-end determinism of the synthetic pipeline", 60.0, end_to_end_determinism},
    };
    int failed = 0;
    for (const auto& criterion : criteria) {
        Failures failures;
        auto start = std::chrono::steady_clock::now();
        try {
            criterion.body(failures);
        } catch (const std::exception& e) {
            failures.push_back(std::string("exception: ") + e.what());
        }
        double seconds = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - start)
                             .count();
        if (criterion.budget_seconds > 0.0 && seconds > criterion.budget_seconds) {
            failures.push_back("runtime " + std::to_string(seconds) + "s exceeds budget " +
                               std::to_string(criterion.budget_seconds) + "s");
        }
        if (failures.empty()) {
            std::printf("[PASS] criterion %2d: %s (%.3fs)\n", criterion.number,
                        criterion.name, seconds);
        } else {
            ++failed;
            std::printf("[FAIL] criterion %2d: %s (%.3fs)\n", criterion.number,
                        criterion.name, seconds);
            for (const auto& failure : failures) {
                std::printf("       - %s\n", failure.c_str());
            }
        }
    }
    if (failed == 0) {
        std::printf("all %zu acceptance criteria passed\n", criteria.size());
    } else {
        std::printf("%d acceptance criteria FAILED\n", failed);
    }
    return failed;
}
