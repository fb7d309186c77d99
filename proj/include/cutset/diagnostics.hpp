#ifndef CUTSET_DIAGNOSTICS_HPP
#define CUTSET_DIAGNOSTICS_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <stdexcept>
#include <vector>

#include "cutset/partition.hpp"
#include "cutset/rng.hpp"

namespace cutset {

namespace detail {

inline double mean_of(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

inline double sample_var(const std::vector<double>& x) {
    const double m = mean_of(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size() - 1);
}

/// Empirical quantile with linear interpolation.
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
    const std::size_t n = sorted.size();
    if (n == 1) return sorted[0];
    const double pos = p * static_cast<double>(n - 1);
    const std::size_t i = static_cast<std::size_t>(pos);
    if (i + 1 >= n) return sorted[n - 1];
    const double frac = pos - static_cast<double>(i);
    return sorted[i] * (1.0 - frac) + sorted[i + 1] * frac;
}

}  // namespace detail

// Classic (non-split) Gelman-Rubin statistic:
// R = sqrt( ((n-1)/n W + B/n) / W ). split_chains halves each chain first.
inline double gelman_rubin(const std::vector<std::vector<double>>& chains,
                           bool split_chains = false) {
    std::vector<std::vector<double>> work;
    if (split_chains) {
        for (const auto& c : chains) {
            const std::size_t half = c.size() / 2;
            work.emplace_back(c.begin(), c.begin() + half);
            work.emplace_back(c.begin() + half, c.begin() + 2 * half);
        }
    } else {
        work = chains;
    }
    if (work.size() < 2) throw std::invalid_argument("gelman_rubin: >= 2 chains");
    const std::size_t n = work[0].size();
    if (n < 10) throw std::invalid_argument("gelman_rubin: chains too short");
    for (const auto& c : work)
        if (c.size() != n)
            throw std::invalid_argument("gelman_rubin: unequal chain lengths");

    const double M = static_cast<double>(work.size());
    const double N = static_cast<double>(n);
    double W = 0.0;
    std::vector<double> means;
    for (const auto& c : work) {
        W += detail::sample_var(c) / M;
        means.push_back(detail::mean_of(c));
    }
    if (!(W > 0.0)) throw std::domain_error("gelman_rubin: degenerate chains");
    const double B = N * detail::sample_var(means);
    return std::sqrt(((N - 1.0) / N * W + B / N) / W);
}

inline double lag1_autocorr(const std::vector<double>& trace) {
    const std::size_t n = trace.size();
    if (n < 3) throw std::invalid_argument("lag1_autocorr: length >= 3");
    const double m = detail::mean_of(trace);
    double denom = 0.0, num = 0.0;
    for (std::size_t i = 0; i < n; ++i) denom += (trace[i] - m) * (trace[i] - m);
    if (!(denom > 0.0)) throw std::domain_error("lag1_autocorr: zero variance");
    for (std::size_t i = 0; i + 1 < n; ++i)
        num += (trace[i] - m) * (trace[i + 1] - m);
    return num / denom;
}

/// Mean of squared componentwise errors.
inline double mse_components(const Vec& estimates, const Vec& truth) {
    if (estimates.size() != truth.size())
        throw std::invalid_argument("mse_components: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        const double e = estimates[i] - truth[i];
        s += e * e;
    }
    return s / static_cast<double>(estimates.size());
}

// Closed-form expected number of visited cells after n iid draws from a
// uniform target over R equal-probability cells: R - R ((R-1)/R)^n.
inline double expected_cells_visited(double R, long n) {
    if (n < 1) throw std::invalid_argument("expected_cells_visited: n >= 1");
    return R - R * std::pow((R - 1.0) / R, static_cast<double>(n));
}

/// Same, on the unit box [0 - h/2, 1 + h/2]^d with h = 10^-kappa.
inline double expected_cells_uniform(int d, int kappa, long n) {
    const double h = std::pow(10.0, -kappa);
    BoxSupport box(Vec(d, 0.0 - 0.5 * h), Vec(d, 1.0 + 0.5 * h));
    PartitionSpec spec(std::vector<int>(d, kappa), box);
    return expected_cells_visited(cell_count_real(spec), n);
}

struct CellsVisitedSummary {
    double mean = 0.0;
    double se = 0.0;
};

// Monte Carlo estimate of E|visited cells| after n iid draws from `target`.
inline CellsVisitedSummary simulate_cells_visited(
    const std::function<Vec(Rng&)>& target, const PartitionSpec& spec, long n,
    int replicates, Rng& rng) {
    if (replicates < 30)
        throw std::invalid_argument("simulate_cells_visited: replicates >= 30");
    std::vector<double> counts;
    for (int rep = 0; rep < replicates; ++rep) {
        std::set<CellKey> visited;
        for (long i = 0; i < n; ++i) visited.insert(spec.key_of(target(rng)));
        counts.push_back(static_cast<double>(visited.size()));
    }
    CellsVisitedSummary out;
    out.mean = detail::mean_of(counts);
    out.se = std::sqrt(detail::sample_var(counts) /
                       static_cast<double>(replicates));
    return out;
}

/// Kolmogorov-Smirnov distance of an empirical sample against a cdf.
inline double ks_distance(std::vector<double> samples,
                          const std::function<double(double)>& cdf) {
    if (samples.empty()) throw std::invalid_argument("ks_distance: empty");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double c = cdf(samples[i]);
        d = std::max(d, std::abs(c - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - c));
    }
    return d;
}

/// Matched empirical quantiles at equally spaced probabilities.
inline std::vector<std::pair<double, double>> qq_pairs(
    std::vector<double> samples_a, std::vector<double> samples_b,
    int quantile_count) {
    if (samples_a.empty() || samples_b.empty())
        throw std::invalid_argument("qq_pairs: empty input");
    std::sort(samples_a.begin(), samples_a.end());
    std::sort(samples_b.begin(), samples_b.end());
    std::vector<std::pair<double, double>> pairs;
    for (int i = 0; i < quantile_count; ++i) {
        const double p = (i + 0.5) / static_cast<double>(quantile_count);
        pairs.emplace_back(detail::quantile_sorted(samples_a, p),
                           detail::quantile_sorted(samples_b, p));
    }
    return pairs;
}

}  // namespace cutset

#endif
