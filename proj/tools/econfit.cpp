// econfit: fitness-complexity pipeline over country-product export data.
//
// Subcommands: ingest, rca, binarize, fitness, synth, panel, colormap,
// regress, run, validate. Exit codes: 0 success, 1 validation, 2 data error,
// 3 numerical error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "econfit/econfit.hpp"

namespace fs = std::filesystem;

namespace {

struct GlobalOptions {
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    std::string out_dir;
};

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw econfit::data_error("cannot read '" + path + "'");
    }
    return in;
}

fs::path resolve_out(const GlobalOptions& global, const std::string& path) {
    fs::path p(path);
    if (!global.out_dir.empty() && p.is_relative()) {
        p = fs::path(global.out_dir) / p;
    }
    if (p.has_parent_path()) {
        fs::create_directories(p.parent_path());
    }
    return p;
}

std::ofstream open_output(const GlobalOptions& global, const std::string& path,
                          fs::path* resolved = nullptr) {
    fs::path p = resolve_out(global, path);
    std::ofstream os(p, std::ios::binary);
    if (!os) {
        throw econfit::data_error("cannot write '" + p.string() + "'");
    }
    if (resolved != nullptr) {
        *resolved = p;
    }
    return os;
}

void apply_schema_overrides(const std::vector<std::string>& maps,
                            econfit::TradeSchema& schema) {
    for (const auto& m : maps) {
        auto eq = m.find('=');
        if (eq == std::string::npos) {
            throw econfit::validation_error("--map expects field=column, got '" + m + "'");
        }
        std::string field = m.substr(0, eq);
        std::string column = m.substr(eq + 1);
        if (field == "year") {
            schema.year_col = column;
        } else if (field == "exporter") {
            schema.exporter_col = column;
        } else if (field == "product") {
            schema.product_col = column;
        } else if (field == "value") {
            schema.value_col = column;
        } else {
            throw econfit::validation_error("--map: unknown trade field '" + field + "'");
        }
    }
}

void report_rejections(const std::vector<econfit::RowRejection>& rejections,
                       std::size_t accepted, std::size_t total) {
    for (const auto& r : rejections) {
        std::cerr << "rejected line " << r.line << ": " << r.reason << "\n";
    }
    std::cerr << "accepted " << accepted << " of " << total << " data rows ("
              << rejections.size() << " rejected)\n";
}

econfit::FitnessVariant parse_variant(const std::string& name) {
    if (name == "norm_rank") {
        return econfit::FitnessVariant::norm_rank;
    }
    if (name == "raw_rank") {
        return econfit::FitnessVariant::raw_rank;
    }
    if (name == "log_fitness") {
        return econfit::FitnessVariant::log_fitness;
    }
    throw econfit::validation_error(
        "--fitness-variant: expected norm_rank, raw_rank or log_fitness");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"econfit: fitness-complexity metric and growth-analysis pipeline"};
    app.require_subcommand(1);

    GlobalOptions global;
    app.add_option("--seed", global.seed, "Global seed for seeded subcommands");
    app.add_option("--threads", global.threads, "Worker threads for per-year stages")
        ->check(CLI::PositiveNumber);
    app.add_option("--out-dir", global.out_dir,
                   "Directory prefix for relative output paths");

    // ingest ----------------------------------------------------------------
    struct {
        std::string trade;
        int year = 0;
        std::string out;
        int min_year = 1;
        int max_year = 9999;
        std::vector<std::string> maps;
    } ingest;
    auto* ingest_cmd = app.add_subcommand("ingest", "Aggregate trade flows into a year's export matrix");
    ingest_cmd->add_option("--trade", ingest.trade, "Trade flow CSV")->required();
    ingest_cmd->add_option("--year", ingest.year, "Year to aggregate")->required();
    ingest_cmd->add_option("--out", ingest.out, "Output matrix CSV")->required();
    ingest_cmd->add_option("--min-year", ingest.min_year, "Lower bound of accepted years");
    ingest_cmd->add_option("--max-year", ingest.max_year, "Upper bound of accepted years");
    ingest_cmd->add_option("--map", ingest.maps, "Column mapping field=column");

    // rca -------------------------------------------------------------------
    struct {
        std::string in;
        std::string out;
    } rca_args;
    auto* rca_cmd = app.add_subcommand("rca", "Compute Balassa RCA from an export matrix");
    rca_cmd->add_option("--in", rca_args.in, "Export matrix CSV")->required();
    rca_cmd->add_option("--out", rca_args.out, "Output RCA matrix CSV")->required();

    // binarize --------------------------------------------------------------
    struct {
        std::string in;
        std::string out;
        double threshold = 1.0;
        bool do_prune = true;
    } binarize_args;
    auto* binarize_cmd = app.add_subcommand("binarize", "Threshold an RCA matrix into the 0/1 matrix M");
    binarize_cmd->add_option("--in", binarize_args.in, "RCA matrix CSV")->required();
    binarize_cmd->add_option("--out", binarize_args.out, "Output binary matrix CSV")->required();
    binarize_cmd->add_option("--threshold", binarize_args.threshold, "RCA threshold (>= maps to 1)");
    binarize_cmd->add_flag("--prune,!--no-prune", binarize_args.do_prune,
                           "Iteratively drop all-zero rows/columns (default on)");

    // fitness ---------------------------------------------------------------
    struct {
        std::string in;
        std::string out;
        std::string complexity_out;
        std::string diagnostics;
        std::string triangular_out;
        double tol = 1e-9;
        std::size_t max_iter = 1000;
        std::size_t rank_window = 10;
        bool synchronous = false;
        bool do_prune = true;
        std::string init = "ones";
    } fit_args;
    auto* fitness_cmd = app.add_subcommand("fitness", "Run the fitness-complexity fixed-point iteration");
    fitness_cmd->add_option("--in", fit_args.in, "Binary matrix CSV")->required();
    fitness_cmd->add_flag("--prune,!--no-prune", fit_args.do_prune,
                          "Drop all-zero rows/columns before iterating (default on)");
    fitness_cmd->add_option("--out", fit_args.out, "Output fitness CSV")->required();
    fitness_cmd->add_option("--complexity-out", fit_args.complexity_out,
                            "Output complexity CSV (default: complexity.csv next to --out)");
    fitness_cmd->add_option("--diagnostics", fit_args.diagnostics, "Per-sweep trace JSON");
    fitness_cmd->add_option("--triangular-out", fit_args.triangular_out,
                            "Matrix reordered by ascending fitness/complexity");
    fitness_cmd->add_option("--tol", fit_args.tol, "Max relative change per sweep");
    fitness_cmd->add_option("--max-iter", fit_args.max_iter, "Iteration cap");
    fitness_cmd->add_option("--rank-window", fit_args.rank_window,
                            "Sweeps of unchanged rank order to stop on (0 disables)");
    fitness_cmd->add_flag("--synchronous", fit_args.synchronous,
                          "Use previous-sweep fitness in the complexity update");
    fitness_cmd->add_option("--init", fit_args.init, "Initial Q: ones or one_over_p")
        ->check(CLI::IsMember({"ones", "one_over_p"}));

    // synth -----------------------------------------------------------------
    auto* synth_cmd = app.add_subcommand("synth", "Generate synthetic matrices with known ground truth");
    synth_cmd->require_subcommand(1);
    struct {
        std::size_t nc = 30;
        std::size_t np = 60;
        std::optional<std::uint64_t> seed;
        std::string out;
    } nested_args;
    auto* nested_cmd = synth_cmd->add_subcommand("nested", "Perfectly nested matrix");
    nested_cmd->add_option("--nc", nested_args.nc, "Countries");
    nested_cmd->add_option("--np", nested_args.np, "Products");
    nested_cmd->add_option("--seed", nested_args.seed, "Seed (default: global --seed)");
    nested_cmd->add_option("--out", nested_args.out, "Output matrix CSV")->required();

    struct {
        econfit::TripartiteParams params;
        std::optional<std::uint64_t> seed;
        std::string out;
        std::string model;
    } trip_args;
    auto* trip_cmd = synth_cmd->add_subcommand("tripartite", "Capability-model matrix");
    trip_cmd->add_option("--nc", trip_args.params.nc, "Countries");
    trip_cmd->add_option("--nk", trip_args.params.nk, "Capabilities");
    trip_cmd->add_option("--np", trip_args.params.np, "Products");
    trip_cmd->add_option("--cdensity", trip_args.params.cdensity, "Country-capability link probability");
    trip_cmd->add_option("--pdensity", trip_args.params.pdensity, "Product-capability link probability");
    trip_cmd->add_option("--seed", trip_args.seed, "Seed (default: global --seed)");
    trip_cmd->add_option("--out", trip_args.out, "Output matrix CSV")->required();
    trip_cmd->add_option("--model", trip_args.model, "Capability model JSON");

    // panel -----------------------------------------------------------------
    struct {
        std::string macro;
        std::vector<std::string> fitness_files; // YEAR=PATH
        int dt = 5;
        int lag = 5;
        int stride = 1;
        std::string variant = "norm_rank";
        std::string out;
    } panel_args;
    auto* panel_cmd = app.add_subcommand("panel", "Build the growth panel from macro data and fitness series");
    panel_cmd->add_option("--macro", panel_args.macro, "Macro panel CSV")->required();
    panel_cmd->add_option("--fitness", panel_args.fitness_files,
                          "Per-year fitness CSV as YEAR=PATH (repeatable); "
                          "default: fitness column of the macro panel");
    panel_cmd->add_option("--dt", panel_args.dt, "Growth horizon in years");
    panel_cmd->add_option("--lag", panel_args.lag, "Regressor lag in years");
    panel_cmd->add_option("--stride", panel_args.stride, "Base-year stride (dt = non-overlapping)");
    panel_cmd->add_option("--fitness-variant", panel_args.variant,
                          "Fitness regressor: norm_rank, raw_rank or log_fitness");
    panel_cmd->add_option("--out", panel_args.out, "Output growth panel CSV")->required();

    // colormap ---------------------------------------------------------------
    struct {
        std::string panel;
        std::string x = "log_fitness";
        std::string y = "log_gdp_pc";
        std::string target = "growth";
        std::size_t nx = 100;
        std::size_t ny = 100;
        std::optional<double> x_min, x_max, y_min, y_max;
        std::optional<double> bw_x, bw_y;
        std::string out;
    } map_args;
    auto* map_cmd = app.add_subcommand("colormap", "Nadaraya-Watson surface over a 2-D driver plane");
    map_cmd->add_option("--panel", map_args.panel, "Growth panel CSV")->required();
    map_cmd->add_option("--x", map_args.x, "X variable");
    map_cmd->add_option("--y", map_args.y, "Y variable");
    map_cmd->add_option("--target", map_args.target, "Smoothed response");
    map_cmd->add_option("--nx", map_args.nx, "Grid cells in x");
    map_cmd->add_option("--ny", map_args.ny, "Grid cells in y");
    map_cmd->add_option("--x-min", map_args.x_min, "Grid lower bound in x");
    map_cmd->add_option("--x-max", map_args.x_max, "Grid upper bound in x");
    map_cmd->add_option("--y-min", map_args.y_min, "Grid lower bound in y");
    map_cmd->add_option("--y-max", map_args.y_max, "Grid upper bound in y");
    map_cmd->add_option("--bandwidth-x", map_args.bw_x, "Fixed bandwidth in x (default: Scott)");
    map_cmd->add_option("--bandwidth-y", map_args.bw_y, "Fixed bandwidth in y (default: Scott)");
    map_cmd->add_option("--out", map_args.out, "Output surface CSV")->required();

    // regress ----------------------------------------------------------------
    struct {
        std::string panel;
        bool with_fitness = true;
        bool fixed_effects = false;
        std::string robust = "hc1";
        std::string out;
        bool text = false;
    } reg_args;
    auto* reg_cmd = app.add_subcommand("regress", "Growth regression with robust standard errors");
    reg_cmd->add_option("--panel", reg_args.panel, "Growth panel CSV")->required();
    reg_cmd->add_flag("--with-fitness,!--no-fitness", reg_args.with_fitness,
                      "Include the fitness-rank regressor (default on)");
    reg_cmd->add_flag("--fixed-effects", reg_args.fixed_effects, "Country fixed effects");
    reg_cmd->add_option("--robust", reg_args.robust, "Covariance estimator (hc1)");
    reg_cmd->add_option("--out", reg_args.out, "Report JSON");
    reg_cmd->add_flag("--text", reg_args.text, "Print an aligned coefficient table");

    // run / validate ----------------------------------------------------------
    struct {
        std::string config;
    } run_args;
    auto* run_cmd = app.add_subcommand("run", "Execute the full pipeline from a config file");
    run_cmd->add_option("--config", run_args.config, "Pipeline config JSON")->required();

    struct {
        std::string config;
    } validate_args;
    auto* validate_cmd = app.add_subcommand("validate", "Check a pipeline config file");
    validate_cmd->add_option("--config", validate_args.config, "Pipeline config JSON")->required();

    // Global flags may also be written after the subcommand name.
    for (CLI::App* sub : {ingest_cmd, rca_cmd, binarize_cmd, fitness_cmd, synth_cmd,
                          nested_cmd, trip_cmd, panel_cmd, map_cmd, reg_cmd, run_cmd,
                          validate_cmd}) {
        sub->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(econfit::ExitCode::validation);
    }

    try {
        if (*ingest_cmd) {
            econfit::TradeSchema schema;
            schema.min_year = ingest.min_year;
            schema.max_year = ingest.max_year;
            apply_schema_overrides(ingest.maps, schema);
            auto in = open_input(ingest.trade);
            auto parsed = econfit::parse_trade_flows(in, schema);
            report_rejections(parsed.rejections, parsed.flows.size(), parsed.data_rows);
            auto matrix = econfit::build_export_matrix(parsed.flows, ingest.year);
            auto os = open_output(global, ingest.out);
            econfit::write_matrix_csv(matrix, os);
        } else if (*rca_cmd) {
            auto in = open_input(rca_args.in);
            auto x = econfit::read_export_matrix_csv(in);
            auto r = econfit::compute_rca(x);
            auto os = open_output(global, rca_args.out);
            econfit::write_matrix_csv(r, os);
        } else if (*binarize_cmd) {
            auto in = open_input(binarize_args.in);
            auto r = econfit::read_rca_matrix_csv(in);
            auto m = econfit::binarize(r, binarize_args.threshold);
            if (binarize_args.do_prune) {
                auto [pruned, report] = econfit::prune(m);
                m = std::move(pruned);
                if (!report.empty()) {
                    std::cerr << "pruned " << report.removed_countries.size()
                              << " countries, " << report.removed_products.size()
                              << " products in " << report.passes << " passes\n";
                }
            }
            auto os = open_output(global, binarize_args.out);
            econfit::write_matrix_csv(m, os);
        } else if (*fitness_cmd) {
            auto in = open_input(fit_args.in);
            auto m = econfit::read_binary_matrix_csv(in);
            if (fit_args.do_prune && !econfit::is_pruned(m)) {
                auto [pruned, report] = econfit::prune(m);
                m = std::move(pruned);
                std::cerr << "pruned " << report.removed_countries.size()
                          << " countries, " << report.removed_products.size()
                          << " products\n";
            }
            econfit::FitnessConfig cfg;
            cfg.value_tolerance = fit_args.tol;
            cfg.max_iterations = fit_args.max_iter;
            cfg.rank_stability_window = fit_args.rank_window;
            cfg.synchronous_q_update = fit_args.synchronous;
            cfg.initial_q_mode = fit_args.init == "one_over_p"
                                     ? econfit::InitialQ::one_over_p
                                     : econfit::InitialQ::ones;
            auto res = econfit::compute_fitness(m, cfg);
            std::cerr << "converged_by=" << econfit::to_string(res.converged_by)
                      << " iterations=" << res.iterations_run << "\n";
            fs::path out_path;
            {
                auto os = open_output(global, fit_args.out, &out_path);
                econfit::write_fitness_csv(res, os);
            }
            std::string complexity_out = fit_args.complexity_out;
            if (complexity_out.empty()) {
                complexity_out = (out_path.parent_path() / "complexity.csv").string();
                auto os = std::ofstream(complexity_out, std::ios::binary);
                econfit::write_complexity_csv(res, os);
            } else {
                auto os = open_output(global, complexity_out);
                econfit::write_complexity_csv(res, os);
            }
            if (!fit_args.diagnostics.empty()) {
                auto os = open_output(global, fit_args.diagnostics);
                os << econfit::diagnostics_to_json(res).dump(2) << "\n";
            }
            if (!fit_args.triangular_out.empty()) {
                auto os = open_output(global, fit_args.triangular_out);
                econfit::write_matrix_csv(econfit::triangular_order(m, res), os);
            }
        } else if (*nested_cmd) {
            auto m = econfit::generate_nested(nested_args.nc, nested_args.np,
                                              nested_args.seed.value_or(global.seed));
            auto os = open_output(global, nested_args.out);
            econfit::write_matrix_csv(m, os);
        } else if (*trip_cmd) {
            auto instance = econfit::generate_tripartite(
                trip_args.params, trip_args.seed.value_or(global.seed));
            auto os = open_output(global, trip_args.out);
            econfit::write_matrix_csv(instance.matrix, os);
            if (!trip_args.model.empty()) {
                auto model_os = open_output(global, trip_args.model);
                model_os << econfit::capability_model_to_json(instance.model).dump(2)
                         << "\n";
            }
        } else if (*panel_cmd) {
            auto in = open_input(panel_args.macro);
            auto parsed = econfit::parse_macro_panel(in);
            if (!parsed.rejections.empty()) {
                report_rejections(parsed.rejections, parsed.panel.rows().size(),
                                  parsed.data_rows);
            }
            econfit::FitnessSeries series;
            if (panel_args.fitness_files.empty()) {
                series = econfit::fitness_series_from_macro(parsed.panel);
            } else {
                for (const auto& spec : panel_args.fitness_files) {
                    auto eq = spec.find('=');
                    long long year = 0;
                    if (eq == std::string::npos ||
                        !econfit::csv::parse_int(spec.substr(0, eq), year)) {
                        throw econfit::validation_error(
                            "--fitness expects YEAR=PATH, got '" + spec + "'");
                    }
                    auto fin = open_input(spec.substr(eq + 1));
                    series[static_cast<int>(year)] =
                        econfit::fitness_series_entry(econfit::read_fitness_csv(fin));
                }
            }
            econfit::PanelOptions opts;
            opts.dt = panel_args.dt;
            opts.lag = panel_args.lag;
            opts.stride = panel_args.stride;
            opts.variant = parse_variant(panel_args.variant);
            auto built = econfit::build_growth_panel(parsed.panel, series, opts);
            for (const auto& [reason, count] : built.attrition) {
                std::cerr << "attrition " << reason << ": " << count << "\n";
            }
            std::cerr << "growth panel: " << built.panel.size() << " observations\n";
            auto os = open_output(global, panel_args.out);
            econfit::write_growth_panel_csv(built.panel, os);
        } else if (*map_cmd) {
            auto in = open_input(map_args.panel);
            auto panel = econfit::read_growth_panel_csv(in);
            econfit::GridSpec grid;
            grid.nx = map_args.nx;
            grid.ny = map_args.ny;
            if (map_args.x_min && map_args.x_max) {
                grid.x_range = {*map_args.x_min, *map_args.x_max};
            }
            if (map_args.y_min && map_args.y_max) {
                grid.y_range = {*map_args.y_min, *map_args.y_max};
            }
            econfit::BandwidthRule bw = econfit::BandwidthRule::scott();
            if (map_args.bw_x && map_args.bw_y) {
                bw = econfit::BandwidthRule::fixed_bandwidths(*map_args.bw_x, *map_args.bw_y);
            } else if (map_args.bw_x || map_args.bw_y) {
                throw econfit::validation_error(
                    "--bandwidth-x and --bandwidth-y must be given together");
            }
            auto surface = econfit::build_colormap(
                panel, econfit::resolve_variable(map_args.x),
                econfit::resolve_variable(map_args.y), map_args.target, grid, bw);
            auto os = open_output(global, map_args.out);
            econfit::write_surface_csv(surface, os);
        } else if (*reg_cmd) {
            if (reg_args.robust != "hc1") {
                throw econfit::validation_error("--robust: only 'hc1' is supported");
            }
            auto in = open_input(reg_args.panel);
            auto panel = econfit::read_growth_panel_csv(in);
            econfit::RegressionOptions opts;
            opts.include_fitness = reg_args.with_fitness;
            opts.fixed_effects = reg_args.fixed_effects;
            auto res = econfit::ols_robust(panel, opts);
            if (reg_args.text || reg_args.out.empty()) {
                std::cout << econfit::regression_report_text(res);
            }
            if (!reg_args.out.empty()) {
                auto os = open_output(global, reg_args.out);
                os << econfit::regression_report_json(res).dump(2) << "\n";
            }
        } else if (*run_cmd) {
            auto cfg = econfit::load_pipeline_config(run_args.config);
            if (!global.out_dir.empty()) {
                cfg.out_dir = global.out_dir;
            }
            if (app.count("--seed") > 0) {
                cfg.seed = global.seed;
            }
            econfit::RunOptions opts;
            opts.threads = global.threads;
            auto manifest = econfit::run_pipeline(cfg, opts);
            std::cerr << "wrote " << manifest.artifacts.size() << " artifacts to "
                      << cfg.out_dir << "\n";
        } else if (*validate_cmd) {
            auto cfg = econfit::load_pipeline_config(validate_args.config);
            auto report = econfit::validate_config(cfg);
            for (const auto& v : report.violations) {
                std::cout << "violation: " << v << "\n";
            }
            if (!report.ok()) {
                return static_cast<int>(econfit::ExitCode::validation);
            }
            std::cout << "config ok\n";
        }
    } catch (const econfit::validation_error& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return static_cast<int>(econfit::ExitCode::validation);
    } catch (const econfit::data_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return static_cast<int>(econfit::ExitCode::data);
    } catch (const econfit::numerical_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return static_cast<int>(econfit::ExitCode::numerical);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(econfit::ExitCode::data);
    }
    return 0;
}
