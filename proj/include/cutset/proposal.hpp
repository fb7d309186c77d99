#ifndef CUTSET_PROPOSAL_HPP
#define CUTSET_PROPOSAL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <stdexcept>
#include <thread>
#include <vector>

#include "cutset/model.hpp"
#include "cutset/partition.hpp"
#include "cutset/rng.hpp"
#include "cutset/samc.hpp"

namespace cutset {

// Runs fn(i) for i in [0, count) over `workers` threads. Each index writes
// only its own output slot, so results do not depend on the worker count.
inline void parallel_for(std::size_t count, int workers,
                         const std::function<void(std::size_t)>& fn) {
    if (workers <= 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    const std::size_t n_threads =
        std::min<std::size_t>(static_cast<std::size_t>(workers), count);
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) {
        pool.emplace_back([&, t]() {
            for (std::size_t i = t; i < count; i += n_threads) fn(i);
        });
    }
    for (std::thread& th : pool) th.join();
}

namespace detail {
inline double log_add_exp(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    const double hi = std::max(a, b);
    return hi + std::log1p(std::exp(std::min(a, b) - hi));
}
}  // namespace detail

// Aggregated importance-weight cache over visited partition cells. For each
// cell r and grid index i it accumulates
//   A[r,i] = sum_j w_{j-1}^(i) / p(Y | theta_r, phi0_i)
// over emitted samples j landing in cell r with realized index i, with the
// likelihood taken at the cell CENTER so the denominator is cached and a
// query costs exactly one fresh likelihood evaluation per visited cell.
// All arithmetic is in log space.
class RoundedStore {
public:
    struct Entry {
        double log_acc = -std::numeric_limits<double>::infinity();
        double log_lik_center = 0.0;  // cached log p(Y|theta_r, phi0_i)
    };
    struct Cell {
        std::map<std::size_t, Entry> by_index;
        double log_acc_total = -std::numeric_limits<double>::infinity();
        long visits = 0;
    };

    RoundedStore(PartitionSpec spec, const AuxGrid& grid)
        : spec_(std::move(spec)), grid_(&grid) {}

    void absorb(const AuxSample& sample, const CutModel& model) {
        const CellKey key = spec_.key_of(sample.theta);
        Cell& cell = cells_[key];
        auto [it, fresh] = cell.by_index.try_emplace(sample.phi_index);
        Entry& entry = it->second;
        if (fresh) {
            const Vec center = spec_.clamped_center_of(key);
            entry.log_lik_center = log_joint_y(model, center,
                                               grid_->points[sample.phi_index]);
            if (!std::isfinite(entry.log_lik_center)) {
                cell.by_index.erase(it);
                if (cell.by_index.empty() && cell.visits == 0) cells_.erase(key);
                ++skipped_;
                return;
            }
        }
        const double log_c =
            sample.log_w_snapshot[sample.phi_index] - entry.log_lik_center;
        entry.log_acc = detail::log_add_exp(entry.log_acc, log_c);
        cell.log_acc_total = detail::log_add_exp(cell.log_acc_total, log_c);
        ++cell.visits;
        ++n_;
    }

    const PartitionSpec& spec() const { return spec_; }
    const AuxGrid& grid() const { return *grid_; }
    const std::map<CellKey, Cell>& cells() const { return cells_; }
    long n() const { return n_; }
    long skipped() const { return skipped_; }

    /// Fresh likelihood evaluations performed by the last query.
    long last_query_evals() const { return last_query_evals_; }

    // Normalized P* over visited cells at a query phi; keys returned in
    // lattice order. Requires exactly |cells| fresh likelihood evaluations.
    struct CellProbs {
        std::vector<CellKey> keys;
        Vec probs;
    };
    CellProbs pstar_cell_probs(const Vec& phi_query, const CutModel& model,
                               int workers = 1) const {
        if (cells_.empty())
            throw std::runtime_error("pstar_cell_probs: empty store");
        CellProbs out;
        Vec log_num;
        for (const auto& [key, cell] : cells_) {
            out.keys.push_back(key);
            log_num.push_back(cell.log_acc_total);
        }
        // theta_r part: p(Y|theta_r, phi') is common across grid indices
        Vec log_lik(out.keys.size());
        parallel_for(out.keys.size(), workers, [&](std::size_t r) {
            log_lik[r] = log_joint_y(
                model, spec_.clamped_center_of(out.keys[r]), phi_query);
        });
        last_query_evals_ = static_cast<long>(out.keys.size());
        double top = -std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < log_num.size(); ++r) {
            log_num[r] += log_lik[r];
            top = std::max(top, log_num[r]);
        }
        if (!std::isfinite(top))
            throw std::runtime_error("pstar_cell_probs: degenerate proposal");
        double total = 0.0;
        for (double& v : log_num) {
            v = std::exp(v - top);
            total += v;
        }
        out.probs.resize(log_num.size());
        for (std::size_t r = 0; r < log_num.size(); ++r)
            out.probs[r] = log_num[r] / total;
        return out;
    }

    /// Snapshot rows for audit export: (key, grid index, log A, cached loglik).
    struct SnapshotRow {
        CellKey key;
        std::size_t phi_index;
        double log_acc;
        double log_lik_center;
    };
    std::vector<SnapshotRow> snapshot() const {
        std::vector<SnapshotRow> rows;
        for (const auto& [key, cell] : cells_)
            for (const auto& [i, entry] : cell.by_index)
                rows.push_back({key, i, entry.log_acc, entry.log_lik_center});
        return rows;
    }

private:
    PartitionSpec spec_;
    const AuxGrid* grid_;
    std::map<CellKey, Cell> cells_;
    long n_ = 0;
    long skipped_ = 0;
    mutable long last_query_evals_ = 0;
};

// The floor-regularized weight process W_n over all R_kappa cells:
// visited cells carry (P*_r + (nR)^-1)/(1 + n^-1); every unvisited cell
// carries the uniform floor. Sums to 1 by construction.
struct WeightProcess {
    std::vector<CellKey> keys;  // visited cells, lattice order
    Vec weights;                // W_n per visited cell
    double floor_weight = 0.0;  // W_n of each unvisited cell
    double R_kappa = 0.0;
    long n = 0;

    double visited_mass() const {
        double s = 0.0;
        for (double w : weights) s += w;
        return s;
    }
};

inline WeightProcess weight_process(const RoundedStore::CellProbs& cell_probs,
                                    long n, double R_kappa) {
    if (n < 1) throw std::invalid_argument("weight_process: n >= 1");
    WeightProcess w;
    w.keys = cell_probs.keys;
    w.R_kappa = R_kappa;
    w.n = n;
    const double nd = static_cast<double>(n);
    const double floor_raw = 1.0 / (nd * R_kappa);
    const double denom = 1.0 + 1.0 / nd;
    w.floor_weight = floor_raw / denom;
    w.weights.resize(cell_probs.probs.size());
    for (std::size_t r = 0; r < w.weights.size(); ++r)
        w.weights[r] = (cell_probs.probs[r] + floor_raw) / denom;
    return w;
}

namespace detail {

/// Uniform draw inside the (clipped) cell with the given key.
inline Vec uniform_in_cell(const PartitionSpec& spec, const CellKey& key,
                           Rng& rng) {
    const std::size_t d = spec.dim();
    Vec theta(d);
    for (std::size_t k = 0; k < d; ++k) {
        const double c = static_cast<double>(key[k]) / spec.scale(k);
        const double h = 0.5 * spec.cell_width(k);
        const double lo = std::max(c - h, spec.support.lower[k]);
        const double hi = std::min(c + h, spec.support.upper[k]);
        theta[k] = rng.uniform(lo, hi);
    }
    return theta;
}

}  // namespace detail

// Draw theta from p_n^(kappa): pick a cell with probability W_n, then
// uniform within the cell intersected with the support.
inline Vec sample_pkappa(const WeightProcess& w, const PartitionSpec& spec,
                         Rng& rng) {
    const double u = rng.uniform();
    double cum = 0.0;
    for (std::size_t r = 0; r < w.keys.size(); ++r) {
        cum += w.weights[r];
        if (u < cum) return detail::uniform_in_cell(spec, w.keys[r], rng);
    }
    // landed in the unvisited floor mass: uniform over unvisited cells
    const std::size_t d = spec.dim();
    for (int tries = 0; tries < 100000; ++tries) {
        CellKey key(d);
        for (std::size_t k = 0; k < d; ++k) {
            const std::uint64_t span =
                static_cast<std::uint64_t>(spec.key_hi(k) - spec.key_lo(k)) + 1;
            key[k] = spec.key_lo(k) +
                     static_cast<std::int64_t>(rng.uniform_index(span));
        }
        if (!std::binary_search(w.keys.begin(), w.keys.end(), key))
            return detail::uniform_in_cell(spec, key, rng);
    }
    // all cells visited (tiny partitions): fall back to the last cell
    return detail::uniform_in_cell(spec, w.keys.back(), rng);
}

/// Density of p_n^(kappa) at theta; strictly positive on the support.
inline double density_pkappa(const WeightProcess& w, const PartitionSpec& spec,
                             const Vec& theta) {
    const CellKey key = spec.key_of(theta);  // throws outside support
    const double mu = cell_measure(spec, key);
    const auto it = std::lower_bound(w.keys.begin(), w.keys.end(), key);
    if (it != w.keys.end() && *it == key)
        return w.weights[static_cast<std::size_t>(it - w.keys.begin())] / mu;
    return w.floor_weight / mu;
}

// -------------------------------------------------------------------------
// Naive variant: retains the raw (unrounded) auxiliary samples and
// resamples one of them with weight w_{j-1}^(i) p(Y|theta_j, phi') /
// p(Y|theta_j, phi0_i). Memory O(n); each draw costs n evaluations.
// -------------------------------------------------------------------------
class NaiveStore {
public:
    struct Item {
        Vec theta;
        double log_w;          // log w_{j-1}^(i_j)
        double log_lik_denom;  // log p(Y|theta_j, phi0_{i_j}) + log p(theta_j)
    };

    explicit NaiveStore(const AuxGrid& grid) : grid_(&grid) {}

    void absorb(const AuxSample& sample, const CutModel& model) {
        Item item;
        item.log_w = sample.log_w_snapshot[sample.phi_index];
        item.log_lik_denom =
            log_joint_y(model, sample.theta, grid_->points[sample.phi_index]);
        item.theta = sample.theta;
        items_.push_back(std::move(item));
    }

    std::size_t size() const { return items_.size(); }
    const std::vector<Item>& items() const { return items_; }

    Vec draw(const Vec& phi_query, const CutModel& model, Rng& rng,
             int workers = 1) const {
        if (items_.empty()) throw std::runtime_error("NaiveStore: empty");
        Vec log_wt(items_.size());
        parallel_for(items_.size(), workers, [&](std::size_t j) {
            log_wt[j] = items_[j].log_w +
                        log_joint_y(model, items_[j].theta, phi_query) -
                        items_[j].log_lik_denom;
        });
        const double top = *std::max_element(log_wt.begin(), log_wt.end());
        if (!std::isfinite(top))
            throw std::runtime_error("NaiveStore: degenerate proposal");
        double total = 0.0;
        for (double& v : log_wt) {
            v = std::exp(v - top);
            total += v;
        }
        const double u = rng.uniform() * total;
        double cum = 0.0;
        for (std::size_t j = 0; j < log_wt.size(); ++j) {
            cum += log_wt[j];
            if (u < cum) return items_[j].theta;
        }
        return items_.back().theta;
    }

private:
    const AuxGrid* grid_;
    std::vector<Item> items_;
};

}  // namespace cutset

#endif
