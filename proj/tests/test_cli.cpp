#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cutset/cli.hpp"

using namespace cutset;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path temp_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("cutset_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

ExperimentConfig quick_toy_config() {
    ExperimentConfig cfg;
    cfg.model = "conjugate-toy";
    cfg.run.n_iterations = 1500;
    cfg.run.aux_prerun = 150;
    cfg.run.n0 = 150;
    cfg.run.m = 4;
    cfg.run.kappa = {2};
    cfg.run.thin = 5;
    cfg.run.seed = 3;
    cfg.grid_candidates = 40;
    return cfg;
}

}  // namespace

TEST_CASE("empty config text keeps all defaults") {
    const ExperimentConfig c = parse_config("");
    CHECK(c.run.n_iterations == 100000);
    CHECK(c.run.n0 == 1000);
    CHECK(c.run.p_mix == doctest::Approx(0.75));
    CHECK(c.run.aux_prerun == 10000);
    CHECK(c.run.burn_in_fraction == doctest::Approx(0.1));
    CHECK(c.run.thin == 100);
    CHECK(c.model == "conjugate-toy");
}

TEST_CASE("scalar kappa and comments parse") {
    const ExperimentConfig c = parse_config(
        "# comment\n"
        "kappa = 3\n"
        "\n"
        "phi_step_sd = 0.25, 0.5\n"
        "algorithm = nested\n");
    CHECK(c.run.kappa == std::vector<int>{3});
    CHECK(c.run.phi_step_sd == Vec{0.25, 0.5});
    CHECK(c.run.algorithm == Algorithm::nested);
}

TEST_CASE("config errors carry line numbers") {
    CHECK_THROWS_WITH_AS((void)parse_config("n_iterations = -1"),
                         doctest::Contains("constraint"), ConfigError);
    CHECK_THROWS_WITH_AS((void)parse_config("seed = 1\nbogus_key = 2\n"),
                         doctest::Contains("line 2"), ConfigError);
    CHECK_THROWS_WITH_AS((void)parse_config("thin = abc"),
                         doctest::Contains("line 1"), ConfigError);
    CHECK_THROWS_WITH_AS((void)parse_config("just some text"),
                         doctest::Contains("key = value"), ConfigError);
    CHECK_THROWS_AS((void)parse_config("model = unknown-model"), ConfigError);
}

TEST_CASE("config render round-trips") {
    ExperimentConfig c = quick_toy_config();
    c.run.phi_step_sd = {0.37};
    c.run.theta_step_sd = {0.15};
    c.run.burn_in_fraction = 0.25;
    c.toy_sd = 0.7;
    const std::string text = render_config(c);
    const ExperimentConfig back = parse_config(text);
    CHECK(render_config(back) == text);
}

TEST_CASE("hpv csv ingestion") {
    const fs::path dir = temp_dir("hpv");
    const fs::path file = dir / "hpv.csv";
    {
        std::ofstream out(file);
        out << "city,Z,N,Y,T\n";
        out << "a,5,100,12,1000.5\n";
        out << "b,9,250,3,2500\n";
    }
    const auto recs = read_hpv_csv(file.string());
    REQUIRE(recs.size() == 2);
    CHECK(recs[0].city == "a");
    CHECK(recs[0].Z == 5);
    CHECK(recs[1].N == 250);
    CHECK(recs[1].T == doctest::Approx(2500.0));

    {
        std::ofstream out(file);
        out << "city,Z,N\n";
    }
    CHECK_THROWS_WITH_AS((void)read_hpv_csv(file.string()),
                         doctest::Contains("header"), std::runtime_error);
    CHECK_THROWS_AS((void)read_hpv_csv((dir / "missing.csv").string()),
                    std::runtime_error);
}

TEST_CASE("build_model covers every model tag") {
    ExperimentConfig c = quick_toy_config();
    CHECK(build_model(c).theta_dim() == 1);
    c.model = "random-effects";
    c.re_groups = 4;
    CHECK(build_model(c).phi_dim() == 4);
    c.model = "regression";
    c.reg_d = 2;
    CHECK(build_model(c).theta_dim() == 2);
    c.model = "hpv";
    c.data_path = "";
    CHECK_THROWS_AS((void)build_model(c), ConfigError);
}

TEST_CASE("run_experiment writes deterministic outputs") {
    const ExperimentConfig cfg = quick_toy_config();
    const fs::path dir_a = temp_dir("run_a");
    const fs::path dir_b = temp_dir("run_b");
    const RunSummary a = run_experiment(cfg, dir_a);
    const RunSummary b = run_experiment(cfg, dir_b);

    CHECK(a.retained > 0);
    CHECK(fs::exists(dir_a / "trace.csv"));
    CHECK(fs::exists(dir_a / "summary.json"));
    CHECK(fs::exists(dir_a / "cells_curve.csv"));
    CHECK(slurp(dir_a / "trace.csv") == slurp(dir_b / "trace.csv"));
    // summaries agree except for the wall-clock timing fields
    auto ja = nlohmann::json::parse(slurp(dir_a / "summary.json"));
    auto jb = nlohmann::json::parse(slurp(dir_b / "summary.json"));
    for (auto* j : {&ja, &jb}) {
        j->erase("aux_prerun_seconds");
        j->erase("main_seconds");
    }
    CHECK(ja == jb);

    // header self-description
    std::ifstream in(dir_a / "trace.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "iteration,theta_0,phi_0");

    // summary embeds a replayable config echo
    const auto j = nlohmann::json::parse(slurp(dir_a / "summary.json"));
    const ExperimentConfig echoed =
        parse_config(j.at("config").get<std::string>());
    CHECK(render_config(echoed) == render_config(cfg));
    CHECK(j.at("theta").size() == 1);
    const double q025 = j.at("theta")[0].at("q025").get<double>();
    const double q975 = j.at("theta")[0].at("q975").get<double>();
    CHECK(q025 < q975);
}

TEST_CASE("failed runs leave no partial outputs") {
    ExperimentConfig cfg = quick_toy_config();
    cfg.model = "hpv";
    cfg.data_path = "/nonexistent/data.csv";
    const fs::path dir = temp_dir("fail");
    CHECK_THROWS(run_experiment(cfg, dir));
    CHECK(!fs::exists(dir / "trace.csv"));
    CHECK(!fs::exists(dir / "summary.json"));
}

TEST_CASE("summaries pool across independent runs by concatenation") {
    const ExperimentConfig cfg = quick_toy_config();
    const CutModel model = build_model(cfg);
    const AuxGrid grid = build_grid(model, cfg);
    std::vector<double> pooled;
    for (std::uint64_t seed : {1ull, 2ull}) {
        RunConfig rc = cfg.run;
        rc.seed = seed;
        rc.theta_step_sd = {0.5};
        rc.phi_step_sd = {0.5};
        const ChainTrace t = run_sacut(model, grid, rc);
        for (const Vec& th : t.retained_theta(rc)) pooled.push_back(th[0]);
    }
    const ComponentSummary s = summarize_component(pooled);
    CHECK(s.q025 < s.mean);
    CHECK(s.mean < s.q975);
    CHECK(s.sd > 0.0);
}

TEST_CASE("kappa_select reports candidates in ascending order") {
    ExperimentConfig cfg = quick_toy_config();
    const fs::path dir = temp_dir("ksel");
    const auto report = kappa_select(cfg, {2, 1}, 1200, dir);
    REQUIRE(report.size() == 2);
    CHECK(report[0].kappa == 1);
    CHECK(report[1].kappa == 2);
    CHECK(report[1].max_central_deviation == doctest::Approx(0.0));
    CHECK(report[0].max_central_deviation >= 0.0);
    CHECK(fs::exists(dir / "qq_kappa1.csv"));
    CHECK(fs::exists(dir / "qq_kappa2.csv"));
}

TEST_CASE("number formatting round-trips doubles exactly") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 123456.789, 0.0}) {
        const std::string s = detail::fmt_double(v);
        CHECK(std::stod(s) == v);
    }
}
