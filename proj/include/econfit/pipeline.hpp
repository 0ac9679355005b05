#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "econfit/econometrics.hpp"
#include "econfit/error.hpp"
#include "econfit/fitness.hpp"
#include "econfit/hash.hpp"
#include "econfit/ingest.hpp"
#include "econfit/kernelmap.hpp"
#include "econfit/matrix.hpp"
#include "econfit/random.hpp"
#include "econfit/rca.hpp"
#include "econfit/strings.hpp"
#include "econfit/synthetic.hpp"

namespace econfit {

inline constexpr const char* k_version = "0.1.0";

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct ColormapSpec {
    std::string x = "log_fitness";
    std::string y = "log_gdp_pc";
    std::string target = "growth";
    std::size_t nx = 100;
    std::size_t ny = 100;
    std::optional<std::pair<double, double>> x_range;
    std::optional<std::pair<double, double>> y_range;
    std::optional<std::array<double, 2>> bandwidths; // default: Scott's rule
};

struct RegressionSpec {
    bool with_fitness = true;
    bool fixed_effects = false;
    std::string robust = "hc1";
};

enum class InputMode { files, synthetic };

struct PipelineConfig {
    std::uint64_t seed = 0;
    std::string out_dir = "out";
    int year_start = 0;
    int year_end = 0;
    InputMode mode = InputMode::files;
    std::string mode_name = "files"; // raw value, checked by validate_config
    std::string trade_path;          // files mode
    std::string macro_path;
    TripartiteParams synth; // synthetic mode
    double rca_threshold = 1.0;
    bool prune_matrix = true;
    FitnessConfig fitness;
    PanelOptions panel;
    std::vector<ColormapSpec> colormaps;
    std::vector<RegressionSpec> regressions;
};

inline PipelineConfig parse_pipeline_config(const nlohmann::json& j) {
    PipelineConfig cfg;
    cfg.seed = j.value("seed", std::uint64_t{0});
    cfg.out_dir = j.value("out_dir", std::string("out"));
    if (j.contains("years")) {
        cfg.year_start = j["years"].value("start", 0);
        cfg.year_end = j["years"].value("end", 0);
    }
    if (j.contains("input")) {
        const auto& in = j["input"];
        cfg.mode_name = in.value("mode", std::string("files"));
        cfg.mode = cfg.mode_name == "synthetic" ? InputMode::synthetic : InputMode::files;
        cfg.trade_path = in.value("trade", std::string());
        cfg.macro_path = in.value("macro", std::string());
        if (in.contains("synthetic")) {
            const auto& s = in["synthetic"];
            cfg.synth.nc = s.value("nc", cfg.synth.nc);
            cfg.synth.nk = s.value("nk", cfg.synth.nk);
            cfg.synth.np = s.value("np", cfg.synth.np);
            cfg.synth.cdensity = s.value("cdensity", cfg.synth.cdensity);
            cfg.synth.pdensity = s.value("pdensity", cfg.synth.pdensity);
        }
    }
    if (j.contains("rca")) {
        cfg.rca_threshold = j["rca"].value("threshold", 1.0);
        cfg.prune_matrix = j["rca"].value("prune", true);
    }
    if (j.contains("fitness")) {
        const auto& f = j["fitness"];
        cfg.fitness.max_iterations = f.value("max_iterations", cfg.fitness.max_iterations);
        cfg.fitness.value_tolerance = f.value("value_tolerance", cfg.fitness.value_tolerance);
        cfg.fitness.rank_stability_window =
            f.value("rank_stability_window", cfg.fitness.rank_stability_window);
        cfg.fitness.synchronous_q_update =
            f.value("synchronous_q_update", cfg.fitness.synchronous_q_update);
        std::string init = f.value("initial_q", std::string("ones"));
        if (init == "one_over_p") {
            cfg.fitness.initial_q_mode = InitialQ::one_over_p;
        }
    }
    if (j.contains("panel")) {
        const auto& p = j["panel"];
        cfg.panel.dt = p.value("dt", cfg.panel.dt);
        cfg.panel.lag = p.value("lag", cfg.panel.lag);
        cfg.panel.stride = p.value("stride", cfg.panel.stride);
        std::string variant = p.value("fitness_variant", std::string("norm_rank"));
        if (variant == "raw_rank") {
            cfg.panel.variant = FitnessVariant::raw_rank;
        } else if (variant == "log_fitness") {
            cfg.panel.variant = FitnessVariant::log_fitness;
        }
    }
    for (const auto& c : j.value("colormaps", nlohmann::json::array())) {
        ColormapSpec spec;
        spec.x = c.value("x", spec.x);
        spec.y = c.value("y", spec.y);
        spec.target = c.value("target", spec.target);
        spec.nx = c.value("nx", spec.nx);
        spec.ny = c.value("ny", spec.ny);
        if (c.contains("x_min") && c.contains("x_max")) {
            spec.x_range = {c["x_min"].get<double>(), c["x_max"].get<double>()};
        }
        if (c.contains("y_min") && c.contains("y_max")) {
            spec.y_range = {c["y_min"].get<double>(), c["y_max"].get<double>()};
        }
        if (c.contains("bandwidth_x") && c.contains("bandwidth_y")) {
            spec.bandwidths = {{c["bandwidth_x"].get<double>(), c["bandwidth_y"].get<double>()}};
        }
        cfg.colormaps.push_back(std::move(spec));
    }
    for (const auto& r : j.value("regressions", nlohmann::json::array())) {
        RegressionSpec spec;
        spec.with_fitness = r.value("with_fitness", true);
        spec.fixed_effects = r.value("fixed_effects", false);
        spec.robust = r.value("robust", std::string("hc1"));
        cfg.regressions.push_back(spec);
    }
    return cfg;
}

inline PipelineConfig load_pipeline_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw data_error("config: cannot read '" + path + "'");
    }
    nlohmann::json j;
    try {
        in >> j;
        return parse_pipeline_config(j);
    } catch (const nlohmann::json::exception& e) {
        throw data_error("config: invalid JSON in '" + path + "': " + e.what());
    }
}

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

// Lists every violated constraint; callers decide whether to abort.
inline ValidationReport validate_config(const PipelineConfig& cfg) {
    ValidationReport report;
    auto flag = [&report](std::string msg) { report.violations.push_back(std::move(msg)); };

    if (cfg.out_dir.empty()) {
        flag("out_dir: must not be empty");
    }
    const bool mode_known = cfg.mode_name == "files" || cfg.mode_name == "synthetic";
    if (!mode_known) {
        flag("input.mode: must be 'files' or 'synthetic', got '" + cfg.mode_name + "'");
    }
    if (cfg.year_start > cfg.year_end) {
        flag("years: empty range [" + std::to_string(cfg.year_start) + ", " +
             std::to_string(cfg.year_end) + "]");
    }
    if (!mode_known) {
        // path/parameter checks below depend on the mode
    } else if (cfg.mode == InputMode::files) {
        if (cfg.trade_path.empty()) {
            flag("input.trade: path required in files mode");
        }
        if (cfg.macro_path.empty()) {
            flag("input.macro: path required in files mode");
        }
        if (!cfg.trade_path.empty() && cfg.trade_path == cfg.macro_path) {
            flag("input: trade and macro must reference distinct paths");
        }
    } else {
        if (cfg.synth.nc < 1 || cfg.synth.nk < 1 || cfg.synth.np < 1) {
            flag("input.synthetic: nc, nk, np must be >= 1");
        }
        if (!(cfg.synth.cdensity > 0.0 && cfg.synth.cdensity <= 1.0)) {
            flag("input.synthetic.cdensity: must be in (0, 1]");
        }
        if (!(cfg.synth.pdensity > 0.0 && cfg.synth.pdensity <= 1.0)) {
            flag("input.synthetic.pdensity: must be in (0, 1]");
        }
    }
    if (!(cfg.rca_threshold > 0.0)) {
        flag("rca.threshold: must be > 0");
    }
    if (cfg.fitness.max_iterations < 1) {
        flag("fitness.max_iterations: must be >= 1");
    }
    if (!(cfg.fitness.value_tolerance > 0.0)) {
        flag("fitness.value_tolerance: must be > 0");
    }
    if (cfg.panel.dt < 1) {
        flag("panel.dt: must be >= 1");
    }
    if (cfg.panel.lag < 0) {
        flag("panel.lag: must be >= 0");
    }
    if (cfg.panel.stride < 1) {
        flag("panel.stride: must be >= 1");
    }
    auto columns = GrowthPanel::numeric_column_names();
    auto check_variable = [&](const std::string& name, const std::string& where) {
        if (GrowthPanel::has_column(name)) {
            return;
        }
        if (name.rfind("log_", 0) == 0 && GrowthPanel::has_column(name.substr(4))) {
            return;
        }
        flag(where + ": unknown variable '" + name + "'; did you mean '" +
             nearest_name(name, columns) + "'?");
    };
    for (std::size_t i = 0; i < cfg.colormaps.size(); ++i) {
        const auto& spec = cfg.colormaps[i];
        std::string where = "colormaps[" + std::to_string(i) + "]";
        check_variable(spec.x, where + ".x");
        check_variable(spec.y, where + ".y");
        check_variable(spec.target, where + ".target");
        if (spec.nx < 2 || spec.ny < 2) {
            flag(where + ": grid must be at least 2x2");
        }
        if (spec.bandwidths &&
            (!((*spec.bandwidths)[0] > 0.0) || !((*spec.bandwidths)[1] > 0.0))) {
            flag(where + ": bandwidths must be > 0");
        }
    }
    for (std::size_t i = 0; i < cfg.regressions.size(); ++i) {
        if (cfg.regressions[i].robust != "hc1") {
            flag("regressions[" + std::to_string(i) + "].robust: only 'hc1' is supported");
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Run manifest
// ---------------------------------------------------------------------------

struct ArtifactRecord {
    std::string path; // relative to out_dir
    std::size_t bytes = 0;
    std::string hash; // fnv1a64, hex
};

struct RunManifest {
    std::vector<ArtifactRecord> artifacts;
    std::map<std::string, double> stage_ms;
    std::map<int, std::string> fitness_converged_by;
    std::string error; // empty on success

    const ArtifactRecord* find(const std::string& path) const {
        for (const auto& a : artifacts) {
            if (a.path == path) {
                return &a;
            }
        }
        return nullptr;
    }

    nlohmann::json to_json(const PipelineConfig& cfg) const {
        nlohmann::json artifacts_json = nlohmann::json::array();
        for (const auto& a : artifacts) {
            artifacts_json.push_back(
                {{"path", a.path}, {"bytes", a.bytes}, {"fnv1a64", a.hash}});
        }
        nlohmann::json convergence = nlohmann::json::object();
        for (const auto& [year, by] : fitness_converged_by) {
            convergence[std::to_string(year)] = by;
        }
        nlohmann::json j{{"version", k_version},
                         {"seed", cfg.seed},
                         {"out_dir", cfg.out_dir},
                         {"artifacts", std::move(artifacts_json)},
                         {"stage_ms", stage_ms},
                         {"fitness_converged_by", std::move(convergence)}};
        if (!error.empty()) {
            j["error"] = error;
        }
        return j;
    }
};

struct RunOptions {
    std::size_t threads = 1; // concurrent per-year fitness computations
};

namespace detail {

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                                 std::uint64_t index) {
    Fnv1a64 h;
    h.update_u64(seed).update_u64(stream).update_u64(index);
    return h.digest();
}

class ArtifactWriter {
public:
    ArtifactWriter(std::filesystem::path out_dir, RunManifest& manifest)
        : out_dir_(std::move(out_dir)), manifest_(manifest) {}

    std::filesystem::path write(const std::string& name, const std::string& content) {
        std::filesystem::path path = out_dir_ / name;
        std::ofstream os(path, std::ios::binary);
        if (!os) {
            throw data_error("run: cannot write artifact '" + path.string() + "'");
        }
        os << content;
        os.close();
        manifest_.artifacts.push_back(
            ArtifactRecord{name, content.size(), to_hex(fnv1a64(content))});
        return path;
    }

private:
    std::filesystem::path out_dir_;
    RunManifest& manifest_;
};

// Synthetic inputs for desk-scale runs: one tripartite matrix per year turned
// into positive export values, plus a macro panel with smooth positive series.
inline std::string synth_trade_csv(const PipelineConfig& cfg) {
    std::ostringstream os;
    csv::write_row(os, {"year", "exporter", "product", "value"});
    for (int year = cfg.year_start; year <= cfg.year_end; ++year) {
        auto instance = generate_tripartite(
            cfg.synth, derive_seed(cfg.seed, 1, static_cast<std::uint64_t>(year)), year);
        SeededRng value_rng(derive_seed(cfg.seed, 2, static_cast<std::uint64_t>(year)));
        const auto& m = instance.matrix;
        for (std::size_t c = 0; c < m.rows(); ++c) {
            for (std::size_t p = 0; p < m.cols(); ++p) {
                if (!m(c, p)) {
                    continue;
                }
                double value = std::exp(value_rng.normal(4.0, 1.0));
                csv::write_row(os, {std::to_string(year), m.countries()[c],
                                    m.products()[p], csv::format_double(value)});
            }
        }
    }
    return os.str();
}

inline std::string synth_macro_csv(const PipelineConfig& cfg) {
    auto labels = make_labels("C", cfg.synth.nc);
    std::ostringstream os;
    csv::write_row(os, {"country", "year", "gdp_pc", "k_emp", "emp", "pop", "tfp",
                        "life_exp", "school"});
    // Panel needs rows at t - lag and t + dt around the trade years.
    const int first = cfg.year_start - cfg.panel.lag;
    const int last = cfg.year_end + cfg.panel.dt;
    for (std::size_t c = 0; c < labels.size(); ++c) {
        SeededRng rng(derive_seed(cfg.seed, 3, c));
        double log_gdp = rng.uniform(6.5, 9.5);
        double log_k = rng.uniform(8.0, 11.0);
        double log_emp = rng.uniform(13.0, 17.0);
        double life = rng.uniform(50.0, 80.0);
        double school = rng.uniform(1.0, 3.0);
        for (int year = first; year <= last; ++year) {
            log_gdp += rng.normal(0.02, 0.03);
            log_k += rng.normal(0.02, 0.02);
            log_emp += rng.normal(0.01, 0.01);
            life = std::clamp(life + rng.normal(0.2, 0.3), 30.0, 95.0);
            school = std::max(0.5, school + rng.normal(0.01, 0.02));
            double gdp_pc = std::exp(log_gdp);
            double emp = std::exp(log_emp);
            double pop = emp * rng.uniform(2.0, 3.0);
            double tfp = std::exp(rng.normal(0.0, 0.5)) * gdp_pc * pop * 1e-5;
            csv::write_row(os, {labels[c], std::to_string(year),
                                csv::format_double(gdp_pc), csv::format_double(std::exp(log_k)),
                                csv::format_double(emp), csv::format_double(pop),
                                csv::format_double(tfp), csv::format_double(life),
                                csv::format_double(school)});
        }
    }
    return os.str();
}

template <typename F>
std::string render(F&& writer) {
    std::ostringstream os;
    writer(os);
    return os.str();
}

} // namespace detail

// Executes ingest -> rca -> fitness (per year) -> panel -> colormaps ->
// regressions, writing every artifact plus manifest.json under out_dir.
// Identical config and inputs produce identical artifact hashes. On a stage
// error the partial manifest is still written before the error propagates.
inline RunManifest run_pipeline(const PipelineConfig& cfg, const RunOptions& run_opts = {}) {
    auto report = validate_config(cfg);
    if (!report.ok()) {
        std::string msg = "run: configuration invalid:";
        for (const auto& v : report.violations) {
            msg += "\n  - " + v;
        }
        throw validation_error(msg);
    }

    std::filesystem::path out_dir(cfg.out_dir);
    std::filesystem::create_directories(out_dir);
    RunManifest manifest;
    detail::ArtifactWriter writer(out_dir, manifest);
    using clock = std::chrono::steady_clock;
    auto stage_start = clock::now();
    std::string stage = "ingest";
    auto finish_stage = [&](const std::string& name) {
        auto now = clock::now();
        manifest.stage_ms[name] =
            std::chrono::duration<double, std::milli>(now - stage_start).count();
        stage_start = now;
    };

    try {
        // Resolve inputs, materializing synthetic ones as ordinary artifacts.
        std::filesystem::path trade_path;
        std::filesystem::path macro_path;
        if (cfg.mode == InputMode::synthetic) {
            trade_path = writer.write("trade.csv", detail::synth_trade_csv(cfg));
            macro_path = writer.write("panel.csv", detail::synth_macro_csv(cfg));
        } else {
            trade_path = cfg.trade_path;
            macro_path = cfg.macro_path;
        }

        std::ifstream trade_in(trade_path);
        if (!trade_in) {
            throw data_error("run: cannot read trade file '" + trade_path.string() + "'");
        }
        auto trade = parse_trade_flows(trade_in);
        std::vector<ExportMatrix> matrices;
        for (int year = cfg.year_start; year <= cfg.year_end; ++year) {
            matrices.push_back(build_export_matrix(trade.flows, year));
            writer.write("matrix_" + std::to_string(year) + ".csv",
                         detail::render([&](std::ostream& os) {
                             write_matrix_csv(matrices.back(), os);
                         }));
        }
        finish_stage("ingest");

        stage = "rca";
        std::vector<BinaryMatrix> binary;
        for (const auto& x : matrices) {
            RcaMatrix rca = compute_rca(x);
            writer.write("rca_" + std::to_string(x.year()) + ".csv",
                         detail::render([&](std::ostream& os) { write_matrix_csv(rca, os); }));
            BinaryMatrix m = binarize(rca, cfg.rca_threshold);
            if (cfg.prune_matrix) {
                m = prune(m).first;
            }
            writer.write("m_" + std::to_string(x.year()) + ".csv",
                         detail::render([&](std::ostream& os) { write_matrix_csv(m, os); }));
            binary.push_back(std::move(m));
        }
        finish_stage("rca");

        stage = "fitness";
        std::vector<FitnessResult> fitness_results(binary.size());
        const std::size_t workers = std::max<std::size_t>(1, run_opts.threads);
        for (std::size_t begin = 0; begin < binary.size(); begin += workers) {
            std::size_t end = std::min(binary.size(), begin + workers);
            std::vector<std::future<FitnessResult>> futures;
            for (std::size_t i = begin; i < end; ++i) {
                futures.push_back(std::async(
                    workers > 1 ? std::launch::async : std::launch::deferred,
                    [&binary, &cfg, i] { return compute_fitness(binary[i], cfg.fitness); }));
            }
            for (std::size_t i = begin; i < end; ++i) {
                fitness_results[i] = futures[i - begin].get();
            }
        }
        FitnessSeries series;
        for (std::size_t i = 0; i < binary.size(); ++i) {
            int year = binary[i].year();
            const auto& res = fitness_results[i];
            manifest.fitness_converged_by[year] = to_string(res.converged_by);
            writer.write("fitness_" + std::to_string(year) + ".csv",
                         detail::render([&](std::ostream& os) { write_fitness_csv(res, os); }));
            writer.write("complexity_" + std::to_string(year) + ".csv",
                         detail::render([&](std::ostream& os) { write_complexity_csv(res, os); }));
            writer.write("diag_" + std::to_string(year) + ".json",
                         diagnostics_to_json(res).dump(2) + "\n");
            series[year] = fitness_series_entry(res);
        }
        finish_stage("fitness");

        stage = "panel";
        std::ifstream macro_in(macro_path);
        if (!macro_in) {
            throw data_error("run: cannot read macro file '" + macro_path.string() + "'");
        }
        auto macro = parse_macro_panel(macro_in);
        auto panel_result = build_growth_panel(macro.panel, series, cfg.panel);
        writer.write("growth.csv", detail::render([&](std::ostream& os) {
                         write_growth_panel_csv(panel_result.panel, os);
                     }));
        finish_stage("panel");

        stage = "colormap";
        for (std::size_t i = 0; i < cfg.colormaps.size(); ++i) {
            const auto& spec = cfg.colormaps[i];
            GridSpec grid;
            grid.nx = spec.nx;
            grid.ny = spec.ny;
            grid.x_range = spec.x_range;
            grid.y_range = spec.y_range;
            BandwidthRule bw = spec.bandwidths
                                   ? BandwidthRule::fixed_bandwidths((*spec.bandwidths)[0],
                                                                     (*spec.bandwidths)[1])
                                   : BandwidthRule::scott();
            KernelSurface surface =
                build_colormap(panel_result.panel, resolve_variable(spec.x),
                               resolve_variable(spec.y), spec.target, grid, bw);
            writer.write("surface_" + std::to_string(i + 1) + ".csv",
                         detail::render([&](std::ostream& os) {
                             write_surface_csv(surface, os);
                         }));
        }
        finish_stage("colormap");

        stage = "regress";
        for (std::size_t i = 0; i < cfg.regressions.size(); ++i) {
            const auto& spec = cfg.regressions[i];
            RegressionOptions opts;
            opts.include_fitness = spec.with_fitness;
            opts.fixed_effects = spec.fixed_effects;
            RegressionResult res = ols_robust(panel_result.panel, opts);
            writer.write("report_" + std::to_string(i + 1) + ".json",
                         regression_report_json(res).dump(2) + "\n");
        }
        finish_stage("regress");
    } catch (const std::exception& e) {
        manifest.error = "stage " + stage + ": " + e.what();
        std::ofstream os(out_dir / "manifest.json", std::ios::binary);
        os << manifest.to_json(cfg).dump(2) << "\n";
        throw;
    }

    std::ofstream os(out_dir / "manifest.json", std::ios::binary);
    if (!os) {
        throw data_error("run: cannot write manifest.json");
    }
    os << manifest.to_json(cfg).dump(2) << "\n";
    return manifest;
}

} // namespace econfit
