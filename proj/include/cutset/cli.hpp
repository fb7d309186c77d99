#ifndef CUTSET_CLI_HPP
#define CUTSET_CLI_HPP

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cutset/diagnostics.hpp"
#include "cutset/models.hpp"
#include "cutset/samplers.hpp"

namespace cutset {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Full experiment description: the chain settings plus which model to build
// and its data source. Serialized as flat `key = value` lines.
struct ExperimentConfig {
    RunConfig run;
    std::string model = "conjugate-toy";
    int grid_candidates = 500;  // phi posterior draws fed to Max-Min

    // conjugate-toy
    double toy_y = 1.0;
    double toy_mean = 0.0;
    double toy_sd = 1.0;

    // random-effects (synthetic)
    int re_groups = 20;
    int re_group_size = 20;
    double re_outlier = 9.0;

    // regression (synthetic)
    int reg_d = 1;
    int reg_n_y = 50;
    int reg_n_z = 50;
    double reg_phi = 1.0;

    std::uint64_t data_seed = 7;  // synthetic data generation seed
    std::string data_path;        // hpv: CSV with header city,Z,N,Y,T
};

namespace detail {

inline std::string fmt_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string fmt_vec(const Vec& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += fmt_double(v[i]);
    }
    return s;
}

inline std::string fmt_ints(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(v[i]);
    }
    return s;
}

template <typename T>
T parse_number(const std::string& text, int line) {
    T out{};
    std::istringstream in(text);
    in >> out;
    if (in.fail() || !in.eof())
        throw ConfigError("line " + std::to_string(line) + ": bad number '" +
                          text + "'");
    return out;
}

inline std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(cur);
    return parts;
}

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace detail

inline std::string render_config(const ExperimentConfig& c) {
    using detail::fmt_double;
    std::string out;
    auto kv = [&](const std::string& k, const std::string& v) {
        out += k + " = " + v + "\n";
    };
    kv("algorithm", algorithm_name(c.run.algorithm));
    kv("n_iterations", std::to_string(c.run.n_iterations));
    kv("burn_in_fraction", fmt_double(c.run.burn_in_fraction));
    kv("thin", std::to_string(c.run.thin));
    kv("kappa", detail::fmt_ints(c.run.kappa));
    kv("n0", std::to_string(c.run.n0));
    kv("m", std::to_string(c.run.m));
    kv("p_mix", fmt_double(c.run.p_mix));
    kv("aux_prerun", std::to_string(c.run.aux_prerun));
    if (!c.run.phi_step_sd.empty())
        kv("phi_step_sd", detail::fmt_vec(c.run.phi_step_sd));
    if (!c.run.theta_step_sd.empty())
        kv("theta_step_sd", detail::fmt_vec(c.run.theta_step_sd));
    kv("n_int", std::to_string(c.run.n_int));
    kv("seed", std::to_string(c.run.seed));
    kv("workers", std::to_string(c.run.workers));
    kv("model", c.model);
    kv("grid_candidates", std::to_string(c.grid_candidates));
    kv("toy_y", fmt_double(c.toy_y));
    kv("toy_mean", fmt_double(c.toy_mean));
    kv("toy_sd", fmt_double(c.toy_sd));
    kv("re_groups", std::to_string(c.re_groups));
    kv("re_group_size", std::to_string(c.re_group_size));
    kv("re_outlier", fmt_double(c.re_outlier));
    kv("reg_d", std::to_string(c.reg_d));
    kv("reg_n_y", std::to_string(c.reg_n_y));
    kv("reg_n_z", std::to_string(c.reg_n_z));
    kv("reg_phi", fmt_double(c.reg_phi));
    kv("data_seed", std::to_string(c.data_seed));
    if (!c.data_path.empty()) kv("data_path", c.data_path);
    return out;
}

// Parses flat `key = value` text. Unknown keys and malformed values are
// rejected with the offending line number. Missing keys keep defaults.
inline ExperimentConfig parse_config(const std::string& text) {
    using detail::parse_number;
    ExperimentConfig c;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string s = detail::trim(raw);
        if (s.empty() || s[0] == '#') continue;
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line) +
                              ": expected key = value");
        const std::string key = detail::trim(s.substr(0, eq));
        const std::string val = detail::trim(s.substr(eq + 1));
        if (val.empty())
            throw ConfigError("line " + std::to_string(line) + ": empty value");

        auto num = [&](auto& field) {
            field = parse_number<std::decay_t<decltype(field)>>(val, line);
        };
        if (key == "algorithm") {
            try {
                c.run.algorithm = parse_algorithm(val);
            } catch (const std::invalid_argument& e) {
                throw ConfigError("line " + std::to_string(line) + ": " +
                                  e.what());
            }
        } else if (key == "n_iterations") num(c.run.n_iterations);
        else if (key == "burn_in_fraction") num(c.run.burn_in_fraction);
        else if (key == "thin") num(c.run.thin);
        else if (key == "kappa") {
            c.run.kappa.clear();
            for (const std::string& p : detail::split_commas(val))
                c.run.kappa.push_back(parse_number<int>(detail::trim(p), line));
        } else if (key == "n0") num(c.run.n0);
        else if (key == "m") num(c.run.m);
        else if (key == "p_mix") num(c.run.p_mix);
        else if (key == "aux_prerun") num(c.run.aux_prerun);
        else if (key == "phi_step_sd" || key == "theta_step_sd") {
            Vec v;
            for (const std::string& p : detail::split_commas(val))
                v.push_back(parse_number<double>(detail::trim(p), line));
            (key[0] == 'p' ? c.run.phi_step_sd : c.run.theta_step_sd) = v;
        } else if (key == "n_int") num(c.run.n_int);
        else if (key == "seed") num(c.run.seed);
        else if (key == "workers") num(c.run.workers);
        else if (key == "model") c.model = val;
        else if (key == "grid_candidates") num(c.grid_candidates);
        else if (key == "toy_y") num(c.toy_y);
        else if (key == "toy_mean") num(c.toy_mean);
        else if (key == "toy_sd") num(c.toy_sd);
        else if (key == "re_groups") num(c.re_groups);
        else if (key == "re_group_size") num(c.re_group_size);
        else if (key == "re_outlier") num(c.re_outlier);
        else if (key == "reg_d") num(c.reg_d);
        else if (key == "reg_n_y") num(c.reg_n_y);
        else if (key == "reg_n_z") num(c.reg_n_z);
        else if (key == "reg_phi") num(c.reg_phi);
        else if (key == "data_seed") num(c.data_seed);
        else if (key == "data_path") c.data_path = val;
        else
            throw ConfigError("line " + std::to_string(line) +
                              ": unknown key '" + key + "'");
    }
    try {
        c.run.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("constraint violation: ") + e.what());
    }
    if (c.model != "conjugate-toy" && c.model != "random-effects" &&
        c.model != "regression" && c.model != "hpv")
        throw ConfigError("unknown model '" + c.model + "'");
    return c;
}

/// Reads records in the `city,Z,N,Y,T` layout.
inline std::vector<HpvRecord> read_hpv_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error(path + ": empty file");
    if (detail::trim(line) != "city,Z,N,Y,T")
        throw std::runtime_error(path + ": expected header city,Z,N,Y,T");
    std::vector<HpvRecord> records;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        const auto parts = detail::split_commas(line);
        if (parts.size() != 5)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected 5 fields");
        HpvRecord r;
        r.city = detail::trim(parts[0]);
        r.Z = detail::parse_number<long>(detail::trim(parts[1]), lineno);
        r.N = detail::parse_number<long>(detail::trim(parts[2]), lineno);
        r.Y = detail::parse_number<long>(detail::trim(parts[3]), lineno);
        r.T = detail::parse_number<double>(detail::trim(parts[4]), lineno);
        records.push_back(std::move(r));
    }
    if (records.empty()) throw std::runtime_error(path + ": no data rows");
    return records;
}

/// Instantiates the configured model, generating synthetic data if needed.
inline CutModel build_model(const ExperimentConfig& c) {
    if (c.model == "conjugate-toy")
        return make_conjugate_toy(c.toy_y, c.toy_mean, c.toy_sd);
    if (c.model == "random-effects") {
        const auto data = generate_random_effects_data(
            c.re_groups, c.re_group_size, c.re_outlier, c.data_seed);
        return make_random_effects_model(data.y_bar, data.s_sq,
                                         c.re_group_size);
    }
    if (c.model == "regression") {
        const auto data = generate_regression_data(c.reg_d, c.reg_n_y,
                                                   c.reg_n_z, c.reg_phi,
                                                   c.data_seed);
        return make_regression_model(data.X, data.Y, data.Z, c.reg_d);
    }
    if (c.model == "hpv") {
        if (c.data_path.empty())
            throw ConfigError("hpv model requires data_path");
        return make_hpv_model(read_hpv_csv(c.data_path));
    }
    throw ConfigError("unknown model '" + c.model + "'");
}

// Draws grid candidates from p(phi|Z) and thins them to m points with the
// Max-Min procedure. Uses default phi-posterior steps when none configured.
inline AuxGrid build_grid(const CutModel& model, const ExperimentConfig& c) {
    Vec step = c.run.phi_step_sd;
    if (step.empty()) {
        step.resize(model.phi_dim());
        for (std::size_t k = 0; k < step.size(); ++k)
            step[k] = 0.05 * model.phi_support.width(k);
    }
    if (c.grid_candidates < c.run.m)
        throw ConfigError("grid_candidates must be >= m");
    const auto draws =
        sample_phi_marginal(model, c.grid_candidates, step, c.run.seed);
    if (c.run.m == 1) {  // degenerate single-point grid (diagnostics use)
        AuxGrid g;
        g.points.push_back(draws.samples[0]);
        g.standardize_min.assign(model.phi_dim(), 0.0);
        g.standardize_max.assign(model.phi_dim(), 1.0);
        return g;
    }
    return max_min_select(draws.samples, c.run.m, c.run.seed);
}

struct ComponentSummary {
    double mean = 0.0;
    double sd = 0.0;
    double q025 = 0.0;
    double q975 = 0.0;
    double lag1_ac = 0.0;
};

struct RunSummary {
    std::vector<ComponentSummary> theta;
    std::vector<ComponentSummary> phi;
    long retained = 0;
    double phi_accept_rate = 0.0;
    double aux_prerun_seconds = 0.0;
    double main_seconds = 0.0;
    long final_store_size = 0;
};

inline ComponentSummary summarize_component(std::vector<double> x) {
    if (x.size() < 3)
        throw std::invalid_argument("summarize_component: need >= 3 samples");
    ComponentSummary s;
    s.mean = detail::mean_of(x);
    s.sd = std::sqrt(detail::sample_var(x));
    try {
        s.lag1_ac = lag1_autocorr(x);
    } catch (const std::domain_error&) {
        s.lag1_ac = 1.0;  // constant trace: maximally sticky
    }
    std::sort(x.begin(), x.end());
    s.q025 = detail::quantile_sorted(x, 0.025);
    s.q975 = detail::quantile_sorted(x, 0.975);
    return s;
}

inline RunSummary summarize_trace(const ChainTrace& trace,
                                  const RunConfig& cfg) {
    RunSummary s;
    const auto theta = trace.retained_theta(cfg);
    const auto phi = trace.retained_phi(cfg);
    s.retained = static_cast<long>(theta.size());
    const std::size_t dt = theta.empty() ? 0 : theta[0].size();
    const std::size_t dp = phi.empty() ? 0 : phi[0].size();
    for (std::size_t k = 0; k < dt; ++k) {
        std::vector<double> comp;
        for (const Vec& t : theta) comp.push_back(t[k]);
        s.theta.push_back(summarize_component(std::move(comp)));
    }
    for (std::size_t k = 0; k < dp; ++k) {
        std::vector<double> comp;
        for (const Vec& p : phi) comp.push_back(p[k]);
        s.phi.push_back(summarize_component(std::move(comp)));
    }
    s.phi_accept_rate = trace.phi_accept_rate();
    s.aux_prerun_seconds = trace.aux_prerun_seconds;
    s.main_seconds = trace.main_seconds;
    s.final_store_size = trace.final_store_size;
    return s;
}

namespace detail {

inline std::uint64_t fnv1a(const std::string& bytes,
                           std::uint64_t h = 1469598103934665603ull) {
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 1099511628211ull;
    }
    return h;
}

inline nlohmann::json component_json(const ComponentSummary& s) {
    return {{"mean", s.mean},
            {"sd", s.sd},
            {"q025", s.q025},
            {"q975", s.q975},
            {"lag1_ac", s.lag1_ac}};
}

}  // namespace detail

// Executes the configured run and writes trace.csv, summary.json and
// cells_curve.csv (plus aux_store.csv for the rounded algorithm) into
// `out_dir`. Partial outputs are removed if anything fails.
inline RunSummary run_experiment(const ExperimentConfig& cfg,
                                 const std::filesystem::path& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const std::vector<fs::path> outputs = {
        out_dir / "trace.csv", out_dir / "summary.json",
        out_dir / "cells_curve.csv", out_dir / "aux_store.csv"};
    auto cleanup = [&] {
        for (const fs::path& p : outputs) {
            std::error_code ec;
            fs::remove(p, ec);
        }
    };

    try {
        const CutModel model = build_model(cfg);
        AuxGrid grid;
        const bool needs_grid = cfg.run.algorithm == Algorithm::sacut ||
                                cfg.run.algorithm == Algorithm::naive;
        if (needs_grid) grid = build_grid(model, cfg);

        RunConfig rc = cfg.run;
        if (rc.theta_step_sd.empty()) {
            rc.theta_step_sd.resize(model.theta_dim());
            for (std::size_t k = 0; k < rc.theta_step_sd.size(); ++k)
                rc.theta_step_sd[k] = 0.05 * model.theta_support.width(k);
        }
        if (rc.phi_step_sd.empty()) {
            rc.phi_step_sd.resize(model.phi_dim());
            for (std::size_t k = 0; k < rc.phi_step_sd.size(); ++k)
                rc.phi_step_sd[k] = 0.05 * model.phi_support.width(k);
        }

        const ChainTrace trace = run_chain(model, grid, rc);
        const RunSummary summary = summarize_trace(trace, rc);

        // trace.csv: retained samples only
        {
            std::ofstream out(out_dir / "trace.csv");
            out << "iteration";
            for (std::size_t k = 0; k < model.theta_dim(); ++k)
                out << ",theta_" << k;
            for (std::size_t k = 0; k < model.phi_dim(); ++k)
                out << ",phi_" << k;
            out << "\n";
            const auto burn = static_cast<std::size_t>(
                rc.burn_in_fraction * static_cast<double>(trace.theta.size()));
            for (std::size_t i = burn; i < trace.theta.size();
                 i += static_cast<std::size_t>(rc.thin)) {
                out << i;
                for (double v : trace.theta[i])
                    out << "," << detail::fmt_double(v);
                for (double v : trace.phi[i])
                    out << "," << detail::fmt_double(v);
                out << "\n";
            }
            if (!out) throw std::runtime_error("failed writing trace.csv");
        }

        // cells_curve.csv: store growth per iteration (thinned)
        {
            std::ofstream out(out_dir / "cells_curve.csv");
            out << "iteration,cells\n";
            for (std::size_t i = 0; i < trace.store_sizes.size();
                 i += static_cast<std::size_t>(rc.thin))
                out << i << "," << trace.store_sizes[i] << "\n";
            if (!out) throw std::runtime_error("failed writing cells_curve.csv");
        }

        // summary.json with config echo and input content hash
        {
            const std::string echo = render_config(cfg);
            std::uint64_t hash = detail::fnv1a(echo);
            if (!cfg.data_path.empty()) {
                std::ifstream data(cfg.data_path);
                std::stringstream ss;
                ss << data.rdbuf();
                hash = detail::fnv1a(ss.str(), hash);
            }
            nlohmann::json j;
            j["config"] = echo;
            j["input_hash"] = hash;
            j["algorithm"] = algorithm_name(rc.algorithm);
            j["retained"] = summary.retained;
            j["phi_accept_rate"] = summary.phi_accept_rate;
            j["aux_prerun_seconds"] = summary.aux_prerun_seconds;
            j["main_seconds"] = summary.main_seconds;
            j["final_store_size"] = summary.final_store_size;
            for (const auto& s : summary.theta)
                j["theta"].push_back(detail::component_json(s));
            for (const auto& s : summary.phi)
                j["phi"].push_back(detail::component_json(s));
            std::ofstream out(out_dir / "summary.json");
            out << j.dump(2) << "\n";
            if (!out) throw std::runtime_error("failed writing summary.json");
        }
        return summary;
    } catch (...) {
        cleanup();
        throw;
    }
}

struct KappaReportRow {
    int kappa = 0;
    double max_central_deviation = 0.0;  // over the central 98% of quantiles
};

// Short preliminary runs across kappa candidates, compared by QQ against
// the largest candidate as gold standard. Writes one QQ CSV per candidate.
inline std::vector<KappaReportRow> kappa_select(
    const ExperimentConfig& base, std::vector<int> kappa_candidates,
    long trial_iterations, const std::filesystem::path& out_dir) {
    if (kappa_candidates.empty())
        throw std::invalid_argument("kappa_select: need >= 1 candidate");
    std::sort(kappa_candidates.begin(), kappa_candidates.end());
    std::filesystem::create_directories(out_dir);

    const CutModel model = build_model(base);
    const AuxGrid grid = build_grid(model, base);

    auto first_component = [&](int kappa) {
        ExperimentConfig c = base;
        c.run.algorithm = Algorithm::sacut;
        c.run.kappa = {kappa};
        c.run.n_iterations = trial_iterations;
        c.run.aux_prerun = std::min(base.run.aux_prerun, trial_iterations / 2);
        RunConfig rc = c.run;
        if (rc.theta_step_sd.empty()) {
            rc.theta_step_sd.resize(model.theta_dim());
            for (std::size_t k = 0; k < rc.theta_step_sd.size(); ++k)
                rc.theta_step_sd[k] = 0.05 * model.theta_support.width(k);
        }
        if (rc.phi_step_sd.empty()) {
            rc.phi_step_sd.resize(model.phi_dim());
            for (std::size_t k = 0; k < rc.phi_step_sd.size(); ++k)
                rc.phi_step_sd[k] = 0.05 * model.phi_support.width(k);
        }
        const ChainTrace trace = run_sacut(model, grid, rc);
        std::vector<double> comp;
        for (const Vec& t : trace.retained_theta(rc)) comp.push_back(t[0]);
        return comp;
    };

    const int gold_kappa = kappa_candidates.back();
    const auto gold = first_component(gold_kappa);

    std::vector<KappaReportRow> report;
    const int n_q = 99;
    for (int kappa : kappa_candidates) {
        const auto samples =
            (kappa == gold_kappa) ? gold : first_component(kappa);
        const auto pairs = qq_pairs(samples, gold, n_q);
        std::ofstream out(out_dir /
                          ("qq_kappa" + std::to_string(kappa) + ".csv"));
        out << "q_candidate,q_gold\n";
        double dev = 0.0;
        for (int i = 0; i < n_q; ++i) {
            out << detail::fmt_double(pairs[i].first) << ","
                << detail::fmt_double(pairs[i].second) << "\n";
            if (i >= 1 && i <= n_q - 2)  // central 98%
                dev = std::max(dev, std::abs(pairs[i].first - pairs[i].second));
        }
        report.push_back({kappa, dev});
    }
    return report;
}

}  // namespace cutset

#endif
