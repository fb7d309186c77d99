#ifndef CUTSET_SAMC_HPP
#define CUTSET_SAMC_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "cutset/grid.hpp"
#include "cutset/model.hpp"
#include "cutset/rng.hpp"

namespace cutset {

/// Gain schedule: n0 / max(n0, n), decreasing to 0.
inline double xi(long n, long n0) {
    if (n < 1 || n0 < 1) throw std::invalid_argument("xi: n, n0 >= 1");
    return static_cast<double>(n0) / static_cast<double>(std::max(n0, n));
}

// log w_i += xi_n (1{i == visited} - 1/m), then re-center to max 0. The
// re-centering constant is common to all i, so no acceptance probability
// (or weight ratio) changes.
inline void update_weights(Vec& log_w, std::size_t visited_index, long n,
                           long n0) {
    const std::size_t m = log_w.size();
    if (visited_index >= m)
        throw std::invalid_argument("update_weights: bad visited index");
    const double gain = xi(n, n0);
    const double inv_m = 1.0 / static_cast<double>(m);
    for (std::size_t i = 0; i < m; ++i)
        log_w[i] += gain * ((i == visited_index ? 1.0 : 0.0) - inv_m);
    const double top = *std::max_element(log_w.begin(), log_w.end());
    for (double& w : log_w) w -= top;
}

// Symmetric neighbour sets: k nearest neighbours in standardized phi
// coordinates, symmetrized by union so q2(j|i) > 0 iff q2(i|j) > 0.
inline std::vector<std::vector<std::size_t>> build_neighbours(
    const AuxGrid& grid, int k = 4) {
    const std::size_t m = grid.m();
    std::vector<Vec> z;
    for (const Vec& p : grid.points) z.push_back(grid.standardized(p));
    std::vector<std::vector<std::size_t>> neigh(m);
    for (std::size_t i = 0; i < m; ++i) {
        std::vector<std::pair<double, std::size_t>> dist;
        for (std::size_t j = 0; j < m; ++j) {
            if (j == i) continue;
            double s = 0.0;
            for (std::size_t c = 0; c < z[i].size(); ++c)
                s += (z[i][c] - z[j][c]) * (z[i][c] - z[j][c]);
            dist.emplace_back(s, j);
        }
        std::sort(dist.begin(), dist.end());
        const std::size_t take =
            std::min<std::size_t>(static_cast<std::size_t>(k), dist.size());
        for (std::size_t t = 0; t < take; ++t)
            neigh[i].push_back(dist[t].second);
    }
    for (std::size_t i = 0; i < m; ++i)  // symmetrize by union
        for (std::size_t j : neigh[i])
            if (std::find(neigh[j].begin(), neigh[j].end(), i) == neigh[j].end())
                neigh[j].push_back(i);
    for (auto& nb : neigh) std::sort(nb.begin(), nb.end());
    return neigh;
}

/// Auxiliary chain state.
struct SamcState {
    Vec theta_tilde;
    std::size_t phi_index = 0;
    Vec log_w;               // estimates of log p(Y|phi0_i), re-centered to max 0
    long n = 0;              // completed iterations
    long n0 = 1000;          // shrink magnitude
    double p_mix = 0.75;     // probability of a theta move
    Vec theta_step_sd;
    double cur_log_joint = 0.0;  // log p(Y|theta~, phi0_idx) + log p(theta~)
};

inline SamcState init_samc_state(const CutModel& model, const AuxGrid& grid,
                                 long n0, double p_mix,
                                 const Vec& theta_step_sd) {
    SamcState s;
    s.theta_tilde.resize(model.theta_dim());
    for (std::size_t k = 0; k < s.theta_tilde.size(); ++k)
        s.theta_tilde[k] = 0.5 * (model.theta_support.lower[k] +
                                  model.theta_support.upper[k]);
    s.phi_index = 0;
    s.log_w.assign(grid.m(), 0.0);
    s.n0 = n0;
    s.p_mix = p_mix;
    s.theta_step_sd = theta_step_sd;
    s.cur_log_joint =
        log_joint_y(model, s.theta_tilde, grid.points[s.phi_index]);
    return s;
}

/// One emitted auxiliary record; log_w_snapshot is the PRE-update vector.
struct AuxSample {
    Vec theta;
    std::size_t phi_index = 0;
    Vec log_w_snapshot;
};

// One Algorithm-1 auxiliary step: mixture proposal (theta random walk with
// probability p_mix, otherwise a uniform draw from the neighbour set of the
// current phi index), MH acceptance against the iteration-specific target
//   p_n(theta, phi0_i) ~ p(Y|theta, phi0_i) p(theta) / w_{n-1}^(i),
// then the weight update with the realized phi index.
inline AuxSample samc_step(SamcState& state, const CutModel& model,
                           const AuxGrid& grid,
                           const std::vector<std::vector<std::size_t>>& neigh,
                           Rng& rng) {
    const std::size_t m = grid.m();
    Vec log_w_before = state.log_w;

    const bool theta_move = (m == 1) || (rng.uniform() < state.p_mix);
    if (theta_move) {
        Vec prop(state.theta_tilde.size());
        for (std::size_t k = 0; k < prop.size(); ++k)
            prop[k] = state.theta_tilde[k] + state.theta_step_sd[k] * rng.normal();
        const double u = rng.uniform();
        if (model.theta_support.contains(prop)) {
            const double lp =
                log_joint_y(model, prop, grid.points[state.phi_index]);
            if (std::log(u) < lp - state.cur_log_joint) {
                state.theta_tilde = std::move(prop);
                state.cur_log_joint = lp;
            }
        }
    } else {
        const std::size_t i = state.phi_index;
        const std::size_t j = neigh[i][rng.uniform_index(neigh[i].size())];
        const double u = rng.uniform();
        const double lp_j = log_joint_y(model, state.theta_tilde, grid.points[j]);
        // q2 ratio corrects for unequal neighbour counts at the grid edge
        const double log_q_ratio =
            std::log(static_cast<double>(neigh[i].size())) -
            std::log(static_cast<double>(neigh[j].size()));
        const double log_alpha = (lp_j - state.log_w[j]) -
                                 (state.cur_log_joint - state.log_w[i]) +
                                 log_q_ratio;
        if (std::log(u) < log_alpha) {
            state.phi_index = j;
            state.cur_log_joint = lp_j;
        }
    }

    ++state.n;
    update_weights(state.log_w, state.phi_index, state.n, state.n0);

    AuxSample out;
    out.theta = state.theta_tilde;
    out.phi_index = state.phi_index;
    out.log_w_snapshot = std::move(log_w_before);
    return out;
}

/// Empirical visiting frequency of each grid index.
inline Vec visit_frequencies(const std::vector<std::size_t>& trace,
                             std::size_t m) {
    if (trace.empty()) throw std::invalid_argument("visit_frequencies: empty");
    Vec freq(m, 0.0);
    for (std::size_t i : trace) freq.at(i) += 1.0;
    for (double& f : freq) f /= static_cast<double>(trace.size());
    return freq;
}

}  // namespace cutset

#endif
