#ifndef CUTSET_SAMPLERS_HPP
#define CUTSET_SAMPLERS_HPP

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "cutset/grid.hpp"
#include "cutset/model.hpp"
#include "cutset/partition.hpp"
#include "cutset/proposal.hpp"
#include "cutset/rng.hpp"
#include "cutset/samc.hpp"

namespace cutset {

enum class Algorithm { sacut, naive, nested, partial_gibbs };

inline std::string algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::sacut: return "sacut";
        case Algorithm::naive: return "naive";
        case Algorithm::nested: return "nested";
        case Algorithm::partial_gibbs: return "partial-gibbs";
    }
    throw std::logic_error("algorithm_name");
}

inline Algorithm parse_algorithm(const std::string& s) {
    if (s == "sacut") return Algorithm::sacut;
    if (s == "naive") return Algorithm::naive;
    if (s == "nested") return Algorithm::nested;
    if (s == "partial-gibbs") return Algorithm::partial_gibbs;
    throw std::invalid_argument("unknown algorithm: " + s);
}

struct RunConfig {
    Algorithm algorithm = Algorithm::sacut;
    long n_iterations = 100000;
    double burn_in_fraction = 0.1;
    long thin = 100;
    std::vector<int> kappa{3};
    long n0 = 1000;
    int m = 50;
    double p_mix = 0.75;
    long aux_prerun = 10000;
    Vec phi_step_sd;
    Vec theta_step_sd;
    int n_int = 10;  // nested only: internal theta steps per iteration
    std::uint64_t seed = 1;
    int workers = 1;

    void validate() const {
        if (n_iterations < 1) throw std::invalid_argument("n_iterations >= 1");
        if (n_iterations <= aux_prerun)
            throw std::invalid_argument("n_iterations > aux_prerun required");
        if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0))
            throw std::invalid_argument("burn_in_fraction in [0, 1)");
        if (thin < 1) throw std::invalid_argument("thin >= 1");
        if (n0 < 1) throw std::invalid_argument("n0 >= 1");
        if (m < 1) throw std::invalid_argument("m >= 1");
        if (!(p_mix > 0.0 && p_mix < 1.0))
            throw std::invalid_argument("p_mix in (0, 1)");
        if (aux_prerun < 0) throw std::invalid_argument("aux_prerun >= 0");
        if (n_int < 1) throw std::invalid_argument("n_int >= 1");
        if (workers < 1) throw std::invalid_argument("workers >= 1");
        for (double s : phi_step_sd)
            if (!(s > 0.0)) throw std::invalid_argument("phi_step_sd > 0");
        for (double s : theta_step_sd)
            if (!(s > 0.0)) throw std::invalid_argument("theta_step_sd > 0");
    }
};

/// Full (unthinned) output of one chain.
struct ChainTrace {
    std::vector<Vec> theta;  // one entry per main iteration
    std::vector<Vec> phi;
    long phi_accepts = 0;
    std::vector<long> store_sizes;  // visited-cell count per iteration
    double aux_prerun_seconds = 0.0;
    double main_seconds = 0.0;
    long final_store_size = 0;
    long last_query_evals = 0;

    double phi_accept_rate() const {
        return theta.empty() ? 0.0
                             : static_cast<double>(phi_accepts) /
                                   static_cast<double>(theta.size());
    }

    /// Applies burn-in and thinning: keeps every thin-th of the tail.
    template <typename T>
    static std::vector<T> retain(const std::vector<T>& all, double burn_fraction,
                                 long thin) {
        const auto burn = static_cast<std::size_t>(
            burn_fraction * static_cast<double>(all.size()));
        std::vector<T> kept;
        for (std::size_t i = burn; i < all.size(); i += thin)
            kept.push_back(all[i]);
        return kept;
    }

    std::vector<Vec> retained_theta(const RunConfig& cfg) const {
        return retain(theta, cfg.burn_in_fraction, cfg.thin);
    }
    std::vector<Vec> retained_phi(const RunConfig& cfg) const {
        return retain(phi, cfg.burn_in_fraction, cfg.thin);
    }
};

// Acceptance probability of the phi move:
// min{1, p(phi'|Z) q(phi|phi') / (p(phi|Z) q(phi'|phi))}. The theta factors
// cancel, so this depends on the phi module alone.
inline double phi_accept_prob(const CutModel& model, const Vec& phi_prev,
                              const Vec& phi_prop, double q_log_ratio) {
    const double delta = log_phi_posterior(model, phi_prop) -
                         log_phi_posterior(model, phi_prev) + q_log_ratio;
    return std::min(1.0, std::exp(delta));
}

namespace detail {

// One random-walk MH update of the phi chain against p(phi|Z). Always
// consumes d normals plus one uniform from `rng`, so the phi stream usage
// (and hence the phi path) is identical across all algorithms.
inline bool phi_mh_update(const CutModel& model, Vec& phi, double& log_post,
                          const Vec& step_sd, Rng& rng) {
    Vec prop(phi.size());
    for (std::size_t k = 0; k < phi.size(); ++k)
        prop[k] = phi[k] + step_sd[k] * rng.normal();
    const double u = rng.uniform();
    if (!model.phi_support.contains(prop)) return false;
    const double lp = log_phi_posterior(model, prop);
    if (std::log(u) < lp - log_post) {
        phi = std::move(prop);
        log_post = lp;
        return true;
    }
    return false;
}

inline Vec phi_chain_start(const CutModel& model) {
    Vec phi(model.phi_dim());
    for (std::size_t k = 0; k < phi.size(); ++k)
        phi[k] = 0.5 * (model.phi_support.lower[k] + model.phi_support.upper[k]);
    return phi;
}

inline Vec theta_chain_start(const CutModel& model) {
    Vec theta(model.theta_dim());
    for (std::size_t k = 0; k < theta.size(); ++k)
        theta[k] = 0.5 * (model.theta_support.lower[k] +
                          model.theta_support.upper[k]);
    return theta;
}

inline double seconds_since(
    std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
}

}  // namespace detail

// Full cut sampler with the rounded, cell-aggregated proposal store. Each
// iteration advances the auxiliary chain once and absorbs the emitted
// sample; on phi acceptance a fresh theta is drawn from the cell proposal,
// otherwise the previous (theta, phi) pair is copied forward.
inline ChainTrace run_sacut(const CutModel& model, const AuxGrid& grid,
                            const RunConfig& cfg) {
    cfg.validate();
    const PartitionSpec spec(cfg.kappa, model.theta_support);
    const double R = cell_count_real(spec);
    const auto neigh = build_neighbours(grid);

    Rng aux_rng(cfg.seed, stream::aux);
    Rng phi_rng(cfg.seed, stream::phi);
    Rng theta_rng(cfg.seed, stream::theta);

    SamcState aux = init_samc_state(model, grid, cfg.n0, cfg.p_mix,
                                    cfg.theta_step_sd);
    RoundedStore store(spec, grid);

    ChainTrace out;
    auto t0 = std::chrono::steady_clock::now();
    for (long i = 0; i < cfg.aux_prerun; ++i)
        samc_step(aux, model, grid, neigh, aux_rng);
    out.aux_prerun_seconds = detail::seconds_since(t0);

    Vec phi = detail::phi_chain_start(model);
    double phi_lp = log_phi_posterior(model, phi);
    Vec theta = detail::theta_chain_start(model);

    t0 = std::chrono::steady_clock::now();
    for (long it = 0; it < cfg.n_iterations; ++it) {
        store.absorb(samc_step(aux, model, grid, neigh, aux_rng), model);
        if (detail::phi_mh_update(model, phi, phi_lp, cfg.phi_step_sd,
                                  phi_rng)) {
            ++out.phi_accepts;
            const auto probs = store.pstar_cell_probs(phi, model, cfg.workers);
            const WeightProcess w = weight_process(probs, store.n(), R);
            theta = sample_pkappa(w, spec, theta_rng);
        }
        out.theta.push_back(theta);
        out.phi.push_back(phi);
        out.store_sizes.push_back(static_cast<long>(store.cells().size()));
    }
    out.main_seconds = detail::seconds_since(t0);
    out.final_store_size = static_cast<long>(store.cells().size());
    out.last_query_evals = store.last_query_evals();
    return out;
}

// Same chain structure but with the unrounded store: every retained
// auxiliary sample is kept and reweighted at each query.
inline ChainTrace run_naive_sacut(const CutModel& model, const AuxGrid& grid,
                                  const RunConfig& cfg) {
    cfg.validate();
    const auto neigh = build_neighbours(grid);

    Rng aux_rng(cfg.seed, stream::aux);
    Rng phi_rng(cfg.seed, stream::phi);
    Rng theta_rng(cfg.seed, stream::theta);

    SamcState aux = init_samc_state(model, grid, cfg.n0, cfg.p_mix,
                                    cfg.theta_step_sd);
    NaiveStore store(grid);

    ChainTrace out;
    auto t0 = std::chrono::steady_clock::now();
    for (long i = 0; i < cfg.aux_prerun; ++i)
        samc_step(aux, model, grid, neigh, aux_rng);
    out.aux_prerun_seconds = detail::seconds_since(t0);

    Vec phi = detail::phi_chain_start(model);
    double phi_lp = log_phi_posterior(model, phi);
    Vec theta = detail::theta_chain_start(model);

    t0 = std::chrono::steady_clock::now();
    for (long it = 0; it < cfg.n_iterations; ++it) {
        store.absorb(samc_step(aux, model, grid, neigh, aux_rng), model);
        if (detail::phi_mh_update(model, phi, phi_lp, cfg.phi_step_sd,
                                  phi_rng)) {
            ++out.phi_accepts;
            theta = store.draw(phi, model, theta_rng, cfg.workers);
        }
        out.theta.push_back(theta);
        out.phi.push_back(phi);
        out.store_sizes.push_back(static_cast<long>(store.size()));
    }
    out.main_seconds = detail::seconds_since(t0);
    out.final_store_size = static_cast<long>(store.size());
    return out;
}

// Nested MCMC baseline: the phi chain is identical, and after every phi
// update a persistent internal theta chain takes n_int random-walk steps
// against p(theta | Y, phi_n). n_int = 1 reproduces the plug-in behaviour
// of naive single-site Gibbs samplers.
inline ChainTrace run_nested_mcmc(const CutModel& model, const RunConfig& cfg) {
    cfg.validate();
    Rng phi_rng(cfg.seed, stream::phi);
    Rng theta_rng(cfg.seed, stream::theta);

    Vec phi = detail::phi_chain_start(model);
    double phi_lp = log_phi_posterior(model, phi);
    Vec theta = detail::theta_chain_start(model);
    double theta_lp = log_joint_y(model, theta, phi);

    ChainTrace out;
    auto t0 = std::chrono::steady_clock::now();
    for (long it = 0; it < cfg.n_iterations; ++it) {
        if (detail::phi_mh_update(model, phi, phi_lp, cfg.phi_step_sd, phi_rng))
            ++out.phi_accepts;
        theta_lp = log_joint_y(model, theta, phi);  // target moved with phi
        for (int s = 0; s < cfg.n_int; ++s) {
            Vec prop(theta.size());
            for (std::size_t k = 0; k < theta.size(); ++k)
                prop[k] = theta[k] + cfg.theta_step_sd[k] * theta_rng.normal();
            const double u = theta_rng.uniform();
            if (!model.theta_support.contains(prop)) continue;
            const double lp = log_joint_y(model, prop, phi);
            if (std::log(u) < lp - theta_lp) {
                theta = std::move(prop);
                theta_lp = lp;
            }
        }
        out.theta.push_back(theta);
        out.phi.push_back(phi);
        out.store_sizes.push_back(0);
    }
    out.main_seconds = detail::seconds_since(t0);
    return out;
}

// Gold-standard baseline for conjugate models: theta is drawn exactly from
// p(theta | Y, phi_n) each iteration.
inline ChainTrace run_partial_gibbs(const CutModel& model,
                                    const RunConfig& cfg) {
    cfg.validate();
    if (!model.has_exact_sampler())
        throw std::invalid_argument(
            "run_partial_gibbs: model has no exact conditional sampler");
    Rng phi_rng(cfg.seed, stream::phi);
    Rng theta_rng(cfg.seed, stream::theta);

    Vec phi = detail::phi_chain_start(model);
    double phi_lp = log_phi_posterior(model, phi);

    ChainTrace out;
    auto t0 = std::chrono::steady_clock::now();
    for (long it = 0; it < cfg.n_iterations; ++it) {
        if (detail::phi_mh_update(model, phi, phi_lp, cfg.phi_step_sd, phi_rng))
            ++out.phi_accepts;
        out.theta.push_back(model.exact_conditional_sampler(phi, theta_rng));
        out.phi.push_back(phi);
        out.store_sizes.push_back(0);
    }
    out.main_seconds = detail::seconds_since(t0);
    return out;
}

/// Dispatch on cfg.algorithm. `grid` may be empty for nested/partial-gibbs.
inline ChainTrace run_chain(const CutModel& model, const AuxGrid& grid,
                            const RunConfig& cfg) {
    switch (cfg.algorithm) {
        case Algorithm::sacut: return run_sacut(model, grid, cfg);
        case Algorithm::naive: return run_naive_sacut(model, grid, cfg);
        case Algorithm::nested: return run_nested_mcmc(model, cfg);
        case Algorithm::partial_gibbs: return run_partial_gibbs(model, cfg);
    }
    throw std::logic_error("run_chain");
}

}  // namespace cutset

#endif
