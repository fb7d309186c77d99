#ifndef CUTSET_GRID_HPP
#define CUTSET_GRID_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "cutset/diagnostics.hpp"
#include "cutset/model.hpp"
#include "cutset/rng.hpp"

namespace cutset {

/// Pre-selected auxiliary parameter set.
struct AuxGrid {
    std::vector<Vec> points;
    Vec standardize_min;  // coordinate ranges used during selection
    Vec standardize_max;

    std::size_t m() const { return points.size(); }
    std::size_t dim() const { return points.empty() ? 0 : points[0].size(); }

    Vec standardized(const Vec& x) const {
        Vec z(x.size());
        for (std::size_t k = 0; k < x.size(); ++k)
            z[k] = (x[k] - standardize_min[k]) /
                   (standardize_max[k] - standardize_min[k]);
        return z;
    }
};

struct PhiSampleResult {
    std::vector<Vec> samples;
    double acceptance_rate = 0.0;
    bool low_acceptance_warning = false;
};

// Random-walk MH on p(phi|Z). Runs enough iterations that, after dropping
// the first 20% as burn-in, `count` evenly thinned draws remain.
inline PhiSampleResult sample_phi_marginal(const CutModel& model, int count,
                                           const Vec& step_sd,
                                           std::uint64_t seed) {
    if (count < 1) throw std::invalid_argument("sample_phi_marginal: count >= 1");
    if (step_sd.size() != model.phi_dim())
        throw std::invalid_argument("sample_phi_marginal: step_sd dimension");
    for (double s : step_sd)
        if (!(s > 0.0))
            throw std::invalid_argument("sample_phi_marginal: step_sd > 0");

    const long thin = 10;
    const long kept_span = static_cast<long>(count) * thin;
    const long total = (kept_span * 5 + 3) / 4;  // kept span is 80% of total
    const long burn = total - kept_span;

    Rng rng(seed, stream::grid);
    Vec phi(model.phi_dim());
    for (std::size_t k = 0; k < phi.size(); ++k)
        phi[k] = 0.5 * (model.phi_support.lower[k] + model.phi_support.upper[k]);
    double lp = log_phi_posterior(model, phi);

    PhiSampleResult out;
    long accepted = 0;
    for (long it = 1; it <= total; ++it) {
        Vec prop(phi.size());
        for (std::size_t k = 0; k < phi.size(); ++k)
            prop[k] = phi[k] + step_sd[k] * rng.normal();
        const double u = rng.uniform();
        if (model.phi_support.contains(prop)) {
            const double lp_prop = log_phi_posterior(model, prop);
            if (std::log(u) < lp_prop - lp) {
                phi = std::move(prop);
                lp = lp_prop;
                ++accepted;
            }
        }
        if (it > burn && (it - burn) % thin == 0) out.samples.push_back(phi);
    }
    out.samples.resize(count);
    out.acceptance_rate = static_cast<double>(accepted) / total;
    out.low_acceptance_warning = out.acceptance_rate < 0.01;
    return out;
}

// Max-Min selection: standardize candidates to the unit box, pick a random
// first point, then repeatedly add the unselected candidate with the
// largest minimum distance to the selected set.
inline AuxGrid max_min_select(const std::vector<Vec>& candidates, int m,
                              std::uint64_t seed) {
    if (m < 2 || static_cast<std::size_t>(m) > candidates.size())
        throw std::invalid_argument("max_min_select: need 2 <= m <= |candidates|");
    const std::size_t d = candidates[0].size();

    AuxGrid grid;
    grid.standardize_min.assign(d, std::numeric_limits<double>::infinity());
    grid.standardize_max.assign(d, -std::numeric_limits<double>::infinity());
    for (const Vec& c : candidates)
        for (std::size_t k = 0; k < d; ++k) {
            grid.standardize_min[k] = std::min(grid.standardize_min[k], c[k]);
            grid.standardize_max[k] = std::max(grid.standardize_max[k], c[k]);
        }
    for (std::size_t k = 0; k < d; ++k)
        if (!(grid.standardize_max[k] > grid.standardize_min[k]))
            throw std::invalid_argument(
                "max_min_select: coordinate with zero range");

    std::vector<Vec> std_pts;
    for (const Vec& c : candidates) std_pts.push_back(grid.standardized(c));

    Rng rng(seed, stream::grid);
    std::vector<bool> selected(candidates.size(), false);
    std::vector<double> min_dist(candidates.size(),
                                 std::numeric_limits<double>::infinity());
    std::size_t first = rng.uniform_index(candidates.size());
    selected[first] = true;
    grid.points.push_back(candidates[first]);

    auto dist2 = [&](std::size_t a, std::size_t b) {
        double s = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            const double diff = std_pts[a][k] - std_pts[b][k];
            s += diff * diff;
        }
        return s;
    };

    std::size_t last = first;
    while (grid.points.size() < static_cast<std::size_t>(m)) {
        std::size_t best = candidates.size();
        double best_dist = -1.0;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            if (selected[i]) continue;
            min_dist[i] = std::min(min_dist[i], dist2(i, last));
            if (min_dist[i] > best_dist) {
                best_dist = min_dist[i];
                best = i;
            }
        }
        selected[best] = true;
        grid.points.push_back(candidates[best]);
        last = best;
    }
    return grid;
}

namespace detail {

// Is x a convex combination of the given points? Phase-1 simplex on
//   sum_i lambda_i p_i = x, sum_i lambda_i = 1, lambda >= 0.
inline bool in_convex_hull(const std::vector<Vec>& points, const Vec& x) {
    const std::size_t m = points.size();
    const std::size_t d = x.size();
    const std::size_t rows = d + 1;
    const std::size_t cols = m + rows + 1;  // lambdas, artificials, rhs

    std::vector<std::vector<double>> T(rows + 1, std::vector<double>(cols, 0.0));
    for (std::size_t r = 0; r < rows; ++r) {
        double rhs = (r < d) ? x[r] : 1.0;
        for (std::size_t j = 0; j < m; ++j)
            T[r][j] = (r < d) ? points[j][r] : 1.0;
        if (rhs < 0.0) {
            rhs = -rhs;
            for (std::size_t j = 0; j < m; ++j) T[r][j] = -T[r][j];
        }
        T[r][m + r] = 1.0;
        T[r][cols - 1] = rhs;
    }
    // objective: minimize sum of artificials; reduced costs are c - sum of
    // rows, with c = 1 on the artificial columns (so basics start at 0)
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < cols; ++j) T[rows][j] -= T[r][j];
    for (std::size_t r = 0; r < rows; ++r) T[rows][m + r] += 1.0;

    std::vector<std::size_t> basis(rows);
    for (std::size_t r = 0; r < rows; ++r) basis[r] = m + r;

    const double tol = 1e-10;
    for (int iter = 0; iter < 10000; ++iter) {
        std::size_t enter = cols - 1;
        for (std::size_t j = 0; j + 1 < cols; ++j)
            if (T[rows][j] < -tol) {  // Bland's rule: first improving column
                enter = j;
                break;
            }
        if (enter == cols - 1) break;
        std::size_t leave = rows;
        double best_ratio = std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < rows; ++r) {
            if (T[r][enter] > tol) {
                const double ratio = T[r][cols - 1] / T[r][enter];
                if (ratio < best_ratio - tol ||
                    (ratio < best_ratio + tol && leave < rows &&
                     basis[r] < basis[leave])) {
                    best_ratio = ratio;
                    leave = r;
                }
            }
        }
        if (leave == rows) break;  // unbounded; cannot happen here
        const double piv = T[leave][enter];
        for (std::size_t j = 0; j < cols; ++j) T[leave][j] /= piv;
        for (std::size_t r = 0; r <= rows; ++r) {
            if (r == leave) continue;
            const double f = T[r][enter];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < cols; ++j) T[r][j] -= f * T[leave][j];
        }
        basis[leave] = enter;
    }
    return -T[rows][cols - 1] < 1e-7;  // objective value ~ 0 means feasible
}

}  // namespace detail

// Fraction of candidate points inside the convex hull of the grid.
// Degenerate grids (fewer than d+1 points) cover nothing.
inline double coverage_ratio(const AuxGrid& grid,
                             const std::vector<Vec>& candidates) {
    if (candidates.empty())
        throw std::invalid_argument("coverage_ratio: no candidates");
    const std::size_t d = grid.dim();
    if (d > 10) throw std::invalid_argument("coverage_ratio: dimension <= 10");
    if (grid.m() < d + 1) return 0.0;

    // standardize jointly so the feasibility tolerance is scale-free
    Vec lo(d, std::numeric_limits<double>::infinity());
    Vec hi(d, -std::numeric_limits<double>::infinity());
    auto absorb = [&](const Vec& p) {
        for (std::size_t k = 0; k < d; ++k) {
            lo[k] = std::min(lo[k], p[k]);
            hi[k] = std::max(hi[k], p[k]);
        }
    };
    for (const Vec& p : grid.points) absorb(p);
    for (const Vec& p : candidates) absorb(p);
    auto scale = [&](const Vec& p) {
        Vec z(d);
        for (std::size_t k = 0; k < d; ++k) {
            const double range = hi[k] - lo[k];
            z[k] = range > 0.0 ? (p[k] - lo[k]) / range : 0.0;
        }
        return z;
    };
    std::vector<Vec> hull_pts;
    for (const Vec& p : grid.points) hull_pts.push_back(scale(p));

    long inside = 0;
    for (const Vec& c : candidates)
        if (detail::in_convex_hull(hull_pts, scale(c))) ++inside;
    return static_cast<double>(inside) / static_cast<double>(candidates.size());
}

enum class OverlapFlag { no, yes, unknown };

// For each grid point, draw from p(theta|Y,phi0) with two MH chains and
// flag whether the inter-quartile box intersects those of the two nearest
// grid neighbours (componentwise). Rhat > 1.5 between the chains marks the
// point as unknown.
inline std::vector<OverlapFlag> overlap_summary(const CutModel& model,
                                                const AuxGrid& grid,
                                                int draws_per_point,
                                                std::uint64_t seed) {
    if (draws_per_point < 100)
        throw std::invalid_argument("overlap_summary: draws_per_point >= 100");
    const std::size_t m = grid.m();
    const std::size_t d = model.theta_dim();

    Vec step(d);
    for (std::size_t k = 0; k < d; ++k)
        step[k] = 0.05 * model.theta_support.width(k);

    // IQR box per grid point, or empty on the Rhat failure
    struct Box {
        Vec q25, q75;
        bool ok = false;
    };
    std::vector<Box> boxes(m);
    for (std::size_t i = 0; i < m; ++i) {
        std::vector<std::vector<Vec>> chains(2);
        for (int c = 0; c < 2; ++c) {
            Rng rng(seed, stream::grid + 16 + 2 * i + c);
            Vec theta(d);
            for (std::size_t k = 0; k < d; ++k)
                theta[k] = model.theta_support.lower[k] +
                           (c == 0 ? 0.25 : 0.75) * model.theta_support.width(k);
            double lp = log_joint_y(model, theta, grid.points[i]);
            const int burn = draws_per_point / 2;
            for (int it = 0; it < burn + draws_per_point; ++it) {
                Vec prop(d);
                for (std::size_t k = 0; k < d; ++k)
                    prop[k] = theta[k] + step[k] * rng.normal();
                const double u = rng.uniform();
                if (model.theta_support.contains(prop)) {
                    const double lp_prop = log_joint_y(model, prop, grid.points[i]);
                    if (std::log(u) < lp_prop - lp) {
                        theta = std::move(prop);
                        lp = lp_prop;
                    }
                }
                if (it >= burn) chains[c].push_back(theta);
            }
        }
        bool converged = true;
        for (std::size_t k = 0; k < d; ++k) {
            std::vector<std::vector<double>> comp(2);
            for (int c = 0; c < 2; ++c)
                for (const Vec& t : chains[c]) comp[c].push_back(t[k]);
            try {
                if (gelman_rubin(comp) > 1.5) converged = false;
            } catch (const std::domain_error&) {
                converged = false;  // stuck chains
            }
        }
        boxes[i].ok = converged;
        if (!converged) continue;
        boxes[i].q25.resize(d);
        boxes[i].q75.resize(d);
        for (std::size_t k = 0; k < d; ++k) {
            std::vector<double> pooled;
            for (int c = 0; c < 2; ++c)
                for (const Vec& t : chains[c]) pooled.push_back(t[k]);
            std::sort(pooled.begin(), pooled.end());
            boxes[i].q25[k] = detail::quantile_sorted(pooled, 0.25);
            boxes[i].q75[k] = detail::quantile_sorted(pooled, 0.75);
        }
    }

    auto boxes_intersect = [&](const Box& a, const Box& b) {
        for (std::size_t k = 0; k < d; ++k)
            if (a.q75[k] < b.q25[k] || b.q75[k] < a.q25[k]) return false;
        return true;
    };

    std::vector<OverlapFlag> flags(m, OverlapFlag::unknown);
    for (std::size_t i = 0; i < m; ++i) {
        if (!boxes[i].ok) continue;
        // two nearest neighbours in standardized phi coordinates
        std::vector<std::pair<double, std::size_t>> dist;
        const Vec zi = grid.standardized(grid.points[i]);
        for (std::size_t j = 0; j < m; ++j) {
            if (j == i) continue;
            const Vec zj = grid.standardized(grid.points[j]);
            double s = 0.0;
            for (std::size_t k = 0; k < zi.size(); ++k)
                s += (zi[k] - zj[k]) * (zi[k] - zj[k]);
            dist.emplace_back(s, j);
        }
        std::sort(dist.begin(), dist.end());
        const std::size_t n_neigh = std::min<std::size_t>(2, dist.size());
        bool all = true, known = true;
        for (std::size_t nn = 0; nn < n_neigh; ++nn) {
            const Box& nb = boxes[dist[nn].second];
            if (!nb.ok) {
                known = false;
                break;
            }
            if (!boxes_intersect(boxes[i], nb)) all = false;
        }
        if (known) flags[i] = all ? OverlapFlag::yes : OverlapFlag::no;
    }
    return flags;
}

}  // namespace cutset

#endif
