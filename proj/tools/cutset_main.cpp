#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cutset/cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int default_workers() {
    if (const char* env = std::getenv("CUTSET_WORKERS")) {
        const int w = std::atoi(env);
        if (w >= 1) return w;
    }
    return 1;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw cutset::ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

cutset::ExperimentConfig load_config(const std::string& path,
                                     const std::string& algorithm,
                                     long seed_override, int workers) {
    cutset::ExperimentConfig cfg =
        path.empty() ? cutset::ExperimentConfig{}
                     : cutset::parse_config(slurp(path));
    if (!algorithm.empty())
        cfg.run.algorithm = cutset::parse_algorithm(algorithm);
    if (seed_override >= 0)
        cfg.run.seed = static_cast<std::uint64_t>(seed_override);
    if (workers >= 1) cfg.run.workers = workers;
    return cfg;
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            const std::string& algorithm, long seed, int workers) {
    const auto cfg = load_config(config_path, algorithm, seed, workers);
    const auto summary = cutset::run_experiment(cfg, out_dir);
    json j{{"retained", summary.retained},
           {"phi_accept_rate", summary.phi_accept_rate},
           {"main_seconds", summary.main_seconds},
           {"final_store_size", summary.final_store_size}};
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_grid(const std::string& config_path, const std::string& out_dir,
             int overlap_draws, long seed, int workers) {
    const auto cfg = load_config(config_path, "", seed, workers);
    const cutset::CutModel model = cutset::build_model(cfg);
    const cutset::AuxGrid grid = cutset::build_grid(model, cfg);

    fs::create_directories(out_dir);
    {
        std::ofstream out(fs::path(out_dir) / "grid.csv");
        out << "index";
        for (std::size_t k = 0; k < grid.dim(); ++k) out << ",phi_" << k;
        out << "\n";
        for (std::size_t i = 0; i < grid.m(); ++i) {
            out << i;
            for (double v : grid.points[i])
                out << "," << cutset::detail::fmt_double(v);
            out << "\n";
        }
    }

    json j{{"m", grid.m()}, {"dim", grid.dim()}};
    if (grid.dim() <= 10) {
        const auto extra = cutset::sample_phi_marginal(
            model, cfg.grid_candidates,
            cfg.run.phi_step_sd.empty()
                ? cutset::Vec(model.phi_dim(),
                              0.05 * model.phi_support.width(0))
                : cfg.run.phi_step_sd,
            cfg.run.seed + 1);
        j["coverage_ratio"] = cutset::coverage_ratio(grid, extra.samples);
    }
    if (overlap_draws >= 100) {
        const auto flags =
            cutset::overlap_summary(model, grid, overlap_draws, cfg.run.seed);
        std::vector<std::string> names;
        for (auto f : flags)
            names.push_back(f == cutset::OverlapFlag::yes      ? "yes"
                            : f == cutset::OverlapFlag::no     ? "no"
                                                               : "unknown");
        j["overlap"] = names;
    }
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_diagnose(const std::vector<std::string>& traces) {
    // reads one column-named CSV per chain; reports per-column summaries
    // and, with >= 2 traces, the between-chain Rhat
    std::vector<std::string> columns;
    std::vector<std::vector<std::vector<double>>> data;  // [trace][col][row]
    for (const std::string& path : traces) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open " + path);
        std::string line;
        if (!std::getline(in, line))
            throw std::runtime_error(path + ": empty");
        std::vector<std::string> header;
        {
            std::stringstream ss(line);
            std::string cell;
            while (std::getline(ss, cell, ',')) header.push_back(cell);
        }
        if (columns.empty())
            columns = header;
        else if (columns != header)
            throw std::runtime_error(path + ": header mismatch across traces");
        std::vector<std::vector<double>> cols(header.size());
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::stringstream ss(line);
            std::string cell;
            std::size_t k = 0;
            while (std::getline(ss, cell, ',') && k < cols.size())
                cols[k++].push_back(std::stod(cell));
        }
        data.push_back(std::move(cols));
    }

    json j;
    for (std::size_t k = 0; k < columns.size(); ++k) {
        if (columns[k] == "iteration") continue;
        json cj;
        std::vector<std::vector<double>> chains;
        for (const auto& trace : data) chains.push_back(trace[k]);
        const auto s = cutset::summarize_component(chains[0]);
        cj["mean"] = s.mean;
        cj["sd"] = s.sd;
        cj["q025"] = s.q025;
        cj["q975"] = s.q975;
        cj["lag1_ac"] = s.lag1_ac;
        if (chains.size() >= 2) {
            std::size_t shortest = chains[0].size();
            for (const auto& c : chains)
                shortest = std::min(shortest, c.size());
            for (auto& c : chains) c.resize(shortest);
            cj["rhat"] = cutset::gelman_rubin(chains);
        }
        j[columns[k]] = cj;
    }
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_orthotope_sim(int d, int kappa, const std::vector<long>& ns,
                      int replicates, const std::string& target, double sd,
                      long seed, const std::string& out_path) {
    const double h = std::pow(10.0, -kappa);
    cutset::BoxSupport box(cutset::Vec(d, -0.5 * h),
                           cutset::Vec(d, 1.0 + 0.5 * h));
    cutset::PartitionSpec spec(std::vector<int>(d, kappa), box);

    std::function<cutset::Vec(cutset::Rng&)> sampler;
    if (target == "uniform") {
        sampler = [&box, d](cutset::Rng& rng) {
            cutset::Vec x(d);
            for (int k = 0; k < d; ++k)
                x[k] = rng.uniform(box.lower[k], box.upper[k]);
            return x;
        };
    } else if (target == "truncnorm") {
        sampler = [&box, d, sd](cutset::Rng& rng) {
            cutset::Vec x(d);
            for (int k = 0; k < d; ++k) {
                double v;
                do {
                    v = rng.normal(0.5, sd);
                } while (v < box.lower[k] || v > box.upper[k]);
                x[k] = v;
            }
            return x;
        };
    } else {
        throw cutset::ConfigError("target must be uniform or truncnorm");
    }

    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << "n,mean,se,expected_uniform\n";
    cutset::Rng rng(static_cast<std::uint64_t>(seed), cutset::stream::misc);
    for (long n : ns) {
        const auto r =
            cutset::simulate_cells_visited(sampler, spec, n, replicates, rng);
        out << n << "," << cutset::detail::fmt_double(r.mean) << ","
            << cutset::detail::fmt_double(r.se) << ","
            << cutset::detail::fmt_double(
                   cutset::expected_cells_uniform(d, kappa, n))
            << "\n";
    }
    return 0;
}

int cmd_kappa_select(const std::string& config_path,
                     const std::vector<int>& kappas, long trial_iterations,
                     const std::string& out_dir, long seed, int workers) {
    const auto cfg = load_config(config_path, "", seed, workers);
    const auto report =
        cutset::kappa_select(cfg, kappas, trial_iterations, out_dir);
    json j = json::array();
    for (const auto& row : report)
        j.push_back({{"kappa", row.kappa},
                     {"max_central_deviation", row.max_central_deviation}});
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_gen_data(const std::string& model, const std::string& out_path,
                 long seed, int n) {
    if (model == "hpv") {
        const auto records = cutset::generate_hpv_data(
            -5.0, 10.0, n, static_cast<std::uint64_t>(seed));
        std::ofstream out(out_path);
        out << "city,Z,N,Y,T\n";
        for (const auto& r : records)
            out << r.city << "," << r.Z << "," << r.N << "," << r.Y << ","
                << cutset::detail::fmt_double(r.T) << "\n";
        return 0;
    }
    if (model == "regression") {
        const auto data = cutset::generate_regression_data(
            1, n, n, 1.0, static_cast<std::uint64_t>(seed));
        std::ofstream out(out_path);
        out << "x_theta,x_phi,y,z\n";
        for (std::size_t i = 0; i < data.X.size(); ++i)
            out << cutset::detail::fmt_double(data.X[i][0]) << ","
                << cutset::detail::fmt_double(data.X[i][1]) << ","
                << cutset::detail::fmt_double(data.Y[i]) << ","
                << cutset::detail::fmt_double(data.Z[i]) << "\n";
        return 0;
    }
    if (model == "random-effects") {
        const auto data = cutset::generate_random_effects_data(
            n, 20, 9.0, static_cast<std::uint64_t>(seed));
        std::ofstream out(out_path);
        out << "group,y_bar,s_sq\n";
        for (std::size_t i = 0; i < data.y_bar.size(); ++i)
            out << i + 1 << "," << cutset::detail::fmt_double(data.y_bar[i])
                << "," << cutset::detail::fmt_double(data.s_sq[i]) << "\n";
        return 0;
    }
    throw cutset::ConfigError("gen-data: unknown model " + model);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cut-model inference toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".", algorithm, target = "uniform";
    std::string gen_model, out_path = "data.csv";
    std::vector<std::string> traces;
    std::vector<long> ns{10, 100, 1000};
    std::vector<int> kappas{1, 2, 3};
    long seed = -1, trial_iterations = 20000;
    int workers = default_workers(), overlap_draws = 0, d = 1, kappa = 1,
        replicates = 1000, n = 20;
    double sd = 0.1;

    auto* run = app.add_subcommand("run", "execute a configured chain");
    run->add_option("--config", config_path, "flat key=value config file");
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--algorithm", algorithm,
                    "sacut | naive | nested | partial-gibbs");
    run->add_option("--seed", seed, "seed override");
    run->add_option("--workers", workers, "worker threads");

    auto* grid = app.add_subcommand("grid", "build and assess the phi grid");
    grid->add_option("--config", config_path);
    grid->add_option("--out", out_dir);
    grid->add_option("--overlap-draws", overlap_draws,
                     "per-point draws for the overlap check (>= 100 to run)");
    grid->add_option("--seed", seed);
    grid->add_option("--workers", workers);

    auto* diag = app.add_subcommand("diagnose", "summarize trace CSVs");
    diag->add_option("--trace", traces, "trace.csv paths (one per chain)")
        ->required();

    auto* osim = app.add_subcommand("orthotope-sim",
                                    "visited-cell growth simulation");
    osim->add_option("--d", d);
    osim->add_option("--kappa", kappa);
    osim->add_option("--n", ns, "iteration counts");
    osim->add_option("--replicates", replicates);
    osim->add_option("--target", target, "uniform | truncnorm");
    osim->add_option("--sd", sd, "truncnorm spread");
    osim->add_option("--seed", seed);
    osim->add_option("--out", out_path, "output CSV path");

    auto* ksel = app.add_subcommand("kappa-select",
                                    "QQ comparison across kappa candidates");
    ksel->add_option("--config", config_path);
    ksel->add_option("--kappa", kappas, "candidates");
    ksel->add_option("--trial-iterations", trial_iterations);
    ksel->add_option("--out", out_dir);
    ksel->add_option("--seed", seed);
    ksel->add_option("--workers", workers);

    auto* gen = app.add_subcommand("gen-data", "write a synthetic dataset");
    gen->add_option("--model", gen_model, "hpv | regression | random-effects")
        ->required();
    gen->add_option("--out", out_path);
    gen->add_option("--seed", seed);
    gen->add_option("--n", n, "record/group count");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed())
            return cmd_run(config_path, out_dir, algorithm, seed, workers);
        if (grid->parsed())
            return cmd_grid(config_path, out_dir, overlap_draws, seed, workers);
        if (diag->parsed()) return cmd_diagnose(traces);
        if (osim->parsed())
            return cmd_orthotope_sim(d, kappa, ns, replicates, target, sd,
                                     seed < 0 ? 1 : seed, out_path);
        if (ksel->parsed())
            return cmd_kappa_select(config_path, kappas, trial_iterations,
                                    out_dir, seed, workers);
        if (gen->parsed())
            return cmd_gen_data(gen_model, out_path, seed < 0 ? 1 : seed, n);
    } catch (const cutset::ConfigError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::domain_error& e) {
        std::cerr << "model error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "model error: " << e.what() << "\n";
        return 2;
    } catch (const std::runtime_error& e) {
        const std::string msg = e.what();
        const bool degenerate = msg.find("degenerate") != std::string::npos ||
                                msg.find("deviates") != std::string::npos;
        std::cerr << (degenerate ? "numerical error: " : "error: ") << msg
                  << "\n";
        return degenerate ? 3 : 2;
    }
    return 1;
}
