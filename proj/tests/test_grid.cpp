#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "cutset/grid.hpp"
#include "cutset/models.hpp"

using namespace cutset;

namespace {

// Independent greedy re-implementation of the Max-Min rule, given the first
// selected point. Operates on raw distances after the same standardization.
std::vector<Vec> greedy_oracle(const std::vector<Vec>& candidates, int m,
                               const Vec& first) {
    const std::size_t d = candidates[0].size();
    Vec lo(d, 1e300), hi(d, -1e300);
    for (const Vec& c : candidates)
        for (std::size_t k = 0; k < d; ++k) {
            lo[k] = std::min(lo[k], c[k]);
            hi[k] = std::max(hi[k], c[k]);
        }
    auto dist2 = [&](const Vec& a, const Vec& b) {
        double s = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            const double diff = (a[k] - b[k]) / (hi[k] - lo[k]);
            s += diff * diff;
        }
        return s;
    };
    std::vector<Vec> chosen{first};
    std::vector<bool> used(candidates.size(), false);
    for (std::size_t i = 0; i < candidates.size(); ++i)
        if (candidates[i] == first) used[i] = true;
    while (chosen.size() < static_cast<std::size_t>(m)) {
        double best = -1.0;
        std::size_t best_i = 0;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            if (used[i]) continue;
            double mind = 1e300;
            for (const Vec& c : chosen)
                mind = std::min(mind, dist2(candidates[i], c));
            if (mind > best) {
                best = mind;
                best_i = i;
            }
        }
        used[best_i] = true;
        chosen.push_back(candidates[best_i]);
    }
    return chosen;
}

AuxGrid manual_grid(std::vector<Vec> points) {
    AuxGrid g;
    const std::size_t d = points[0].size();
    g.points = std::move(points);
    g.standardize_min.assign(d, 1e300);
    g.standardize_max.assign(d, -1e300);
    for (const Vec& p : g.points)
        for (std::size_t k = 0; k < d; ++k) {
            g.standardize_min[k] = std::min(g.standardize_min[k], p[k]);
            g.standardize_max[k] = std::max(g.standardize_max[k], p[k]);
        }
    return g;
}

}  // namespace

TEST_CASE("phi marginal sampler recovers the truncated normal target") {
    const CutModel m = make_conjugate_toy(1.0, 0.0, 1.0);  // p(phi|Z)=N(0,1)
    const auto res = sample_phi_marginal(m, 2000, {1.0}, 17);
    REQUIRE(res.samples.size() == 2000);
    CHECK(!res.low_acceptance_warning);
    double mean = 0.0, var = 0.0;
    for (const Vec& p : res.samples) mean += p[0] / 2000.0;
    for (const Vec& p : res.samples)
        var += (p[0] - mean) * (p[0] - mean) / 1999.0;
    // generous ESS discount for the thinned random walk
    CHECK(std::abs(mean) < 3.0 * std::sqrt(var / 200.0));
}

TEST_CASE("phi marginal sampler stays inside a very narrow box") {
    CutModel m = make_conjugate_toy(1.0, 0.0, 1.0);
    m.phi_support = BoxSupport({-0.005}, {0.005});
    const auto res = sample_phi_marginal(m, 200, {0.01}, 3);
    for (const Vec& p : res.samples) {
        CHECK(p[0] >= -0.005);
        CHECK(p[0] <= 0.005);
    }
}

TEST_CASE("phi marginal sampler is deterministic given the seed") {
    const CutModel m = make_conjugate_toy(1.0, 0.0, 1.0);
    const auto a = sample_phi_marginal(m, 100, {0.5}, 9);
    const auto b = sample_phi_marginal(m, 100, {0.5}, 9);
    CHECK(a.samples == b.samples);
    const auto c = sample_phi_marginal(m, 100, {0.5}, 10);
    CHECK(a.samples != c.samples);
}

TEST_CASE("phi marginal sampler input validation") {
    const CutModel m = make_conjugate_toy(1.0, 0.0, 1.0);
    CHECK_THROWS_AS((void)sample_phi_marginal(m, 0, {0.5}, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)sample_phi_marginal(m, 10, {-0.5}, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)sample_phi_marginal(m, 10, {0.5, 0.5}, 1),
                    std::invalid_argument);
}

TEST_CASE("max-min with three 1-D candidates picks the extremes") {
    const std::vector<Vec> cands{{0.0}, {0.9}, {1.0}};
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const AuxGrid g = max_min_select(cands, 2, seed);
        if (g.points[0][0] == 0.0) {
            CHECK(g.points[1][0] == 1.0);  // 1.0 is farther than 0.9
        } else {
            CHECK(g.points[1][0] == 0.0);  // from 0.9 or 1.0 the far end is 0
        }
    }
}

TEST_CASE("max-min with m equal to candidate count selects everything") {
    const std::vector<Vec> cands{{0.0}, {0.4}, {1.0}};
    const AuxGrid g = max_min_select(cands, 3, 5);
    std::set<double> got;
    for (const Vec& p : g.points) got.insert(p[0]);
    CHECK(got == std::set<double>{0.0, 0.4, 1.0});
}

TEST_CASE("max-min matches a brute-force greedy oracle") {
    Rng rng(21, stream::misc);
    std::vector<Vec> cands;
    for (int i = 0; i < 20; ++i)
        cands.push_back({rng.uniform(-2.0, 5.0), rng.uniform(0.0, 1.0)});
    const AuxGrid g = max_min_select(cands, 5, 33);
    const auto oracle = greedy_oracle(cands, 5, g.points[0]);
    CHECK(g.points == oracle);
}

TEST_CASE("max-min is permutation invariant given the same first pick") {
    Rng rng(22, stream::misc);
    std::vector<Vec> cands;
    for (int i = 0; i < 15; ++i)
        cands.push_back({rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)});
    const AuxGrid g = max_min_select(cands, 6, 1);
    std::vector<Vec> shuffled = cands;
    std::reverse(shuffled.begin(), shuffled.end());
    const auto oracle = greedy_oracle(shuffled, 6, g.points[0]);
    CHECK(g.points == oracle);
}

TEST_CASE("max-min validation") {
    const std::vector<Vec> cands{{0.0}, {1.0}};
    CHECK_THROWS_AS((void)max_min_select(cands, 3, 1), std::invalid_argument);
    CHECK_THROWS_AS((void)max_min_select(cands, 1, 1), std::invalid_argument);
    const std::vector<Vec> flat{{0.5}, {0.5}, {0.5}};
    CHECK_THROWS_AS((void)max_min_select(flat, 2, 1), std::invalid_argument);
}

TEST_CASE("coverage ratio for 1-D extreme grids") {
    std::vector<Vec> cands;
    for (int i = 0; i <= 20; ++i) cands.push_back({i / 20.0});
    CHECK(coverage_ratio(manual_grid({{0.0}, {1.0}}), cands) ==
          doctest::Approx(1.0));
    // interval [0, 0.5] covers the 11 candidates at 0.00 .. 0.50
    CHECK(coverage_ratio(manual_grid({{0.0}, {0.5}}), cands) ==
          doctest::Approx(11.0 / 21.0));
}

TEST_CASE("coverage ratio of the grid over itself is 1") {
    std::vector<Vec> pts{{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}, {0.7, 0.8}};
    CHECK(coverage_ratio(manual_grid(pts), pts) == doctest::Approx(1.0));
}

TEST_CASE("degenerate grids cover nothing") {
    // 2-D hull needs at least 3 points
    const AuxGrid g = manual_grid({{0.0, 0.0}, {1.0, 1.0}});
    CHECK(coverage_ratio(g, {{0.5, 0.5}}) == 0.0);
}

TEST_CASE("coverage grows as grid points are added") {
    std::vector<Vec> cands;
    Rng rng(4, stream::misc);
    for (int i = 0; i < 50; ++i)
        cands.push_back({rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)});
    const double small = coverage_ratio(
        manual_grid({{0.2, 0.2}, {0.8, 0.2}, {0.5, 0.8}}), cands);
    const double large = coverage_ratio(
        manual_grid({{0.2, 0.2}, {0.8, 0.2}, {0.5, 0.8}, {0.0, 0.0},
                     {1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}}),
        cands);
    CHECK(large >= small);
    CHECK(large == doctest::Approx(1.0));
}

TEST_CASE("convex hull membership in 2-D") {
    const std::vector<Vec> square{{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0},
                                  {0.0, 1.0}};
    CHECK(detail::in_convex_hull(square, {0.5, 0.5}));
    CHECK(detail::in_convex_hull(square, {0.0, 0.0}));
    CHECK(!detail::in_convex_hull(square, {1.2, 0.5}));
    CHECK(!detail::in_convex_hull(square, {0.5, -0.1}));
}

TEST_CASE("overlap flags: wide conditionals overlap, tight ones do not") {
    // p(theta|Y,phi) = N(phi, 1): quartiles +-0.674 around each grid point,
    // spacing 0.1 -> everything overlaps
    {
        const CutModel m = make_conjugate_toy(1.0, 0.0, 1.0,
                                              BoxSupport({-6.0}, {6.0}),
                                              BoxSupport({-2.0}, {2.0}));
        const AuxGrid g = manual_grid({{-0.1}, {0.0}, {0.1}});
        const auto flags = overlap_summary(m, g, 400, 2);
        for (auto f : flags) CHECK(f == OverlapFlag::yes);
    }
    // sd 0.05 spaced 1.0 apart -> inter-quartile boxes are disjoint
    {
        const CutModel m = make_conjugate_toy(0.05, 0.0, 1.0,
                                              BoxSupport({-2.0}, {3.0}),
                                              BoxSupport({-2.0}, {3.0}));
        const AuxGrid g = manual_grid({{-1.0}, {0.0}, {1.0}});
        const auto flags = overlap_summary(m, g, 400, 2);
        for (auto f : flags) {
            CHECK(f != OverlapFlag::yes);
        }
    }
}

TEST_CASE("overlap is trivially complete when the conditional ignores phi") {
    CutModel m = make_conjugate_toy(1.0, 0.0, 1.0);
    m.log_lik_y = [](const Vec& theta, const Vec&) {
        return -0.5 * theta[0] * theta[0];
    };
    const AuxGrid g = manual_grid({{-1.0}, {0.5}, {2.0}});
    const auto flags = overlap_summary(m, g, 400, 6);
    for (auto f : flags) CHECK(f == OverlapFlag::yes);
}

TEST_CASE("overlap_summary validates draw count") {
    const CutModel m = make_conjugate_toy(1.0, 0.0, 1.0);
    const AuxGrid g = manual_grid({{0.0}, {0.1}});
    CHECK_THROWS_AS((void)overlap_summary(m, g, 50, 1), std::invalid_argument);
}
