#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "econfit/pipeline.hpp"

using namespace econfit;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() /
               ("econfit_test_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

nlohmann::json synthetic_config_json(const std::string& out_dir) {
    return nlohmann::json{
        {"seed", 7},
        {"out_dir", out_dir},
        {"years", {{"start", 2000}, {"end", 2002}}},
        {"input",
         {{"mode", "synthetic"},
          {"synthetic",
           {{"nc", 20}, {"nk", 10}, {"np", 50}, {"cdensity", 0.3}, {"pdensity", 0.2}}}}},
        {"rca", {{"threshold", 1.0}, {"prune", true}}},
        {"fitness", {{"max_iterations", 500}, {"value_tolerance", 1e-9}}},
        {"panel", {{"dt", 1}, {"lag", 1}}},
        {"colormaps",
         nlohmann::json::array({{{"x", "log_fitness"},
                                 {"y", "log_gdp_pc"},
                                 {"target", "growth"},
                                 {"nx", 20},
                                 {"ny", 20}}})},
        {"regressions", nlohmann::json::array({{{"with_fitness", true}},
                                               {{"with_fitness", false}}})},
    };
}

} // namespace

TEST_CASE("config parsing fills defaults") {
    auto cfg = parse_pipeline_config(synthetic_config_json("out"));
    CHECK(cfg.seed == 7);
    CHECK(cfg.mode == InputMode::synthetic);
    CHECK(cfg.year_start == 2000);
    CHECK(cfg.year_end == 2002);
    CHECK(cfg.synth.nc == 20);
    CHECK(cfg.rca_threshold == 1.0);
    CHECK(cfg.fitness.max_iterations == 500);
    CHECK(cfg.panel.dt == 1);
    REQUIRE(cfg.colormaps.size() == 1);
    CHECK(cfg.colormaps[0].nx == 20);
    REQUIRE(cfg.regressions.size() == 2);
    CHECK_FALSE(cfg.regressions[1].with_fitness);
}

TEST_CASE("well-formed config produces an empty report") {
    auto cfg = parse_pipeline_config(synthetic_config_json("out"));
    auto report = validate_config(cfg);
    CHECK(report.ok());
    CHECK(report.violations.empty());
}

TEST_CASE("negative tolerance is a violation naming the field") {
    auto j = synthetic_config_json("out");
    j["fitness"]["value_tolerance"] = -1e-9;
    auto report = validate_config(parse_pipeline_config(j));
    REQUIRE(report.violations.size() == 1);
    CHECK(report.violations[0].find("value_tolerance") != std::string::npos);
}

TEST_CASE("unknown colormap variable suggests the nearest valid name") {
    auto j = synthetic_config_json("out");
    j["colormaps"][0]["y"] = "log_gdp";
    auto report = validate_config(parse_pipeline_config(j));
    REQUIRE(report.violations.size() == 1);
    CHECK(report.violations[0].find("log_gdp_pc") != std::string::npos);
}

TEST_CASE("structural violations are all listed") {
    auto j = synthetic_config_json("out");
    j["years"] = {{"start", 2005}, {"end", 2000}};
    j["input"]["mode"] = "magic";
    j["rca"]["threshold"] = 0.0;
    j["panel"]["stride"] = 0;
    auto report = validate_config(parse_pipeline_config(j));
    CHECK(report.violations.size() == 4);
}

TEST_CASE("files mode requires distinct existing paths") {
    nlohmann::json j{{"out_dir", "out"},
                     {"years", {{"start", 2000}, {"end", 2000}}},
                     {"input", {{"mode", "files"}, {"trade", "a.csv"}, {"macro", "a.csv"}}}};
    auto report = validate_config(parse_pipeline_config(j));
    REQUIRE(report.violations.size() == 1);
    CHECK(report.violations[0].find("distinct") != std::string::npos);
}

TEST_CASE("synthetic pipeline writes the declared artifacts") {
    TempDir dir("artifacts");
    auto cfg = parse_pipeline_config(synthetic_config_json((dir.path / "out").string()));
    auto manifest = run_pipeline(cfg);
    CHECK(manifest.error.empty());
    for (const char* name :
         {"trade.csv", "panel.csv", "matrix_2000.csv", "matrix_2001.csv",
          "matrix_2002.csv", "rca_2000.csv", "m_2000.csv", "fitness_2000.csv",
          "fitness_2001.csv", "fitness_2002.csv", "complexity_2000.csv",
          "diag_2000.json", "growth.csv", "surface_1.csv", "report_1.json",
          "report_2.json"}) {
        INFO(name);
        CHECK(manifest.find(name) != nullptr);
        CHECK(fs::exists(dir.path / "out" / name));
    }
    CHECK(fs::exists(dir.path / "out" / "manifest.json"));
    CHECK(manifest.fitness_converged_by.size() == 3);

    // every artifact hash matches the file content on disk
    for (const auto& a : manifest.artifacts) {
        std::ifstream in(dir.path / "out" / a.path, std::ios::binary);
        std::string content((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
        CHECK(content.size() == a.bytes);
        CHECK(to_hex(fnv1a64(content)) == a.hash);
    }

    // the two regression reports have the published row structure
    std::ifstream with_in(dir.path / "out" / "report_1.json");
    nlohmann::json with_fitness;
    with_in >> with_fitness;
    CHECK(with_fitness["coefficients"].size() == 8);
    std::ifstream without_in(dir.path / "out" / "report_2.json");
    nlohmann::json without;
    without_in >> without;
    CHECK(without["coefficients"].size() == 7);
}

TEST_CASE("identical config runs to identical artifact hashes") {
    TempDir dir("determinism");
    auto cfg1 = parse_pipeline_config(synthetic_config_json((dir.path / "a").string()));
    auto cfg2 = parse_pipeline_config(synthetic_config_json((dir.path / "b").string()));
    auto m1 = run_pipeline(cfg1);
    auto m2 = run_pipeline(cfg2);
    REQUIRE(m1.artifacts.size() == m2.artifacts.size());
    for (std::size_t i = 0; i < m1.artifacts.size(); ++i) {
        CHECK(m1.artifacts[i].path == m2.artifacts[i].path);
        CHECK(m1.artifacts[i].hash == m2.artifacts[i].hash);
    }
    // concurrency must not change results
    auto cfg3 = parse_pipeline_config(synthetic_config_json((dir.path / "c").string()));
    RunOptions opts;
    opts.threads = 3;
    auto m3 = run_pipeline(cfg3, opts);
    REQUIRE(m3.artifacts.size() == m1.artifacts.size());
    for (std::size_t i = 0; i < m1.artifacts.size(); ++i) {
        CHECK(m3.artifacts[i].hash == m1.artifacts[i].hash);
    }
}

TEST_CASE("a different seed changes the synthetic artifacts") {
    TempDir dir("seed");
    auto j = synthetic_config_json((dir.path / "a").string());
    auto m1 = run_pipeline(parse_pipeline_config(j));
    j["seed"] = 8;
    j["out_dir"] = (dir.path / "b").string();
    auto m2 = run_pipeline(parse_pipeline_config(j));
    CHECK(m1.find("trade.csv")->hash != m2.find("trade.csv")->hash);
}

TEST_CASE("missing input aborts at ingest with a partial manifest") {
    TempDir dir("abort");
    nlohmann::json j{
        {"out_dir", (dir.path / "out").string()},
        {"years", {{"start", 2000}, {"end", 2000}}},
        {"input",
         {{"mode", "files"},
          {"trade", (dir.path / "missing_trade.csv").string()},
          {"macro", (dir.path / "missing_panel.csv").string()}}}};
    auto cfg = parse_pipeline_config(j);
    CHECK_THROWS_AS(run_pipeline(cfg), data_error);
    REQUIRE(fs::exists(dir.path / "out" / "manifest.json"));
    std::ifstream in(dir.path / "out" / "manifest.json");
    nlohmann::json manifest;
    in >> manifest;
    REQUIRE(manifest.contains("error"));
    std::string error = manifest["error"].get<std::string>();
    CHECK(error.find("ingest") != std::string::npos);
    CHECK_FALSE(fs::exists(dir.path / "out" / "growth.csv"));
}

TEST_CASE("invalid config makes run refuse to start") {
    auto j = synthetic_config_json("out");
    j["rca"]["threshold"] = -1.0;
    CHECK_THROWS_AS(run_pipeline(parse_pipeline_config(j)), validation_error);
}

TEST_CASE("files mode reproduces the synthetic run byte for byte") {
    TempDir dir("files");
    auto j = synthetic_config_json((dir.path / "synth").string());
    auto synth_manifest = run_pipeline(parse_pipeline_config(j));

    nlohmann::json files_j = j;
    files_j["out_dir"] = (dir.path / "files").string();
    files_j["input"] = {{"mode", "files"},
                        {"trade", (dir.path / "synth" / "trade.csv").string()},
                        {"macro", (dir.path / "synth" / "panel.csv").string()}};
    auto files_manifest = run_pipeline(parse_pipeline_config(files_j));

    // all derived artifacts identical (files mode has no trade/panel artifacts)
    for (const auto& a : files_manifest.artifacts) {
        const auto* b = synth_manifest.find(a.path);
        REQUIRE(b != nullptr);
        CHECK(a.hash == b->hash);
    }
}
