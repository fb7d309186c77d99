#ifndef CUTSET_PARTITION_HPP
#define CUTSET_PARTITION_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <vector>

#include "cutset/model.hpp"

namespace cutset {

// Cell identity is the integer lattice point floor(10^kappa * theta + 0.5)
// per dimension; centers are only ever derived from these integers.
using CellKey = std::vector<std::int64_t>;

/// Rounding-based hypercube partition of a compact box.
struct PartitionSpec {
    std::vector<int> kappa;  // per-dimension decimal precision
    BoxSupport support;

    PartitionSpec() = default;
    PartitionSpec(std::vector<int> k, BoxSupport box)
        : kappa(std::move(k)), support(std::move(box)) {
        if (kappa.size() == 1 && support.dim() > 1)
            kappa.assign(support.dim(), kappa[0]);  // scalar broadcast
        if (kappa.size() != support.dim())
            throw std::invalid_argument("PartitionSpec: kappa/support mismatch");
        for (int k_ : kappa)
            if (k_ < 0) throw std::invalid_argument("PartitionSpec: kappa >= 0");
    }
    PartitionSpec(int k, BoxSupport box)
        : PartitionSpec(std::vector<int>{k}, std::move(box)) {}

    std::size_t dim() const { return support.dim(); }

    double scale(std::size_t k) const { return std::pow(10.0, kappa[k]); }
    double cell_width(std::size_t k) const { return std::pow(10.0, -kappa[k]); }

    std::int64_t coord_key(double x, std::size_t k) const {
        return static_cast<std::int64_t>(std::floor(scale(k) * x + 0.5));
    }

    CellKey key_of(const Vec& theta) const {
        if (!support.contains(theta))
            throw std::domain_error("PartitionSpec: point outside support");
        CellKey key(dim());
        // clamp: a point exactly on the top box edge may round into a
        // zero-measure cell that key_hi excludes (boundary set, measure zero)
        for (std::size_t k = 0; k < dim(); ++k)
            key[k] = std::clamp(coord_key(theta[k], k), key_lo(k), key_hi(k));
        return key;
    }

    Vec center_of(const CellKey& key) const {
        Vec c(dim());
        for (std::size_t k = 0; k < dim(); ++k)
            c[k] = static_cast<double>(key[k]) / scale(k);
        return c;
    }

    // Representative point of a cell: the lattice center, pulled onto the box
    // edge when the cell is clipped. Always inside both the cell and the box.
    Vec clamped_center_of(const CellKey& key) const {
        Vec c = center_of(key);
        for (std::size_t k = 0; k < dim(); ++k)
            c[k] = std::clamp(c[k], support.lower[k], support.upper[k]);
        return c;
    }

    std::int64_t key_lo(std::size_t k) const {
        return coord_key(support.lower[k], k);
    }
    std::int64_t key_hi(std::size_t k) const {
        std::int64_t key = coord_key(support.upper[k], k);
        // a cube whose lower face sits exactly on the box edge intersects
        // the box in a measure-zero set; it is not a cell
        if ((static_cast<double>(key) - 0.5) * cell_width(k) >=
            support.upper[k])
            --key;
        return key;
    }
};

/// Cell center of the cell containing theta, clamped into the support so
/// the result is a valid point of the same cell; idempotent.
inline Vec round_kappa(const Vec& theta, const PartitionSpec& spec) {
    return spec.clamped_center_of(spec.key_of(theta));
}

/// Lebesgue measure of the (possibly partial) cell with the given key.
inline double cell_measure(const PartitionSpec& spec, const CellKey& key) {
    double mu = 1.0;
    for (std::size_t k = 0; k < spec.dim(); ++k) {
        if (key[k] < spec.key_lo(k) || key[k] > spec.key_hi(k))
            throw std::domain_error("cell_measure: center outside support");
        const double c = static_cast<double>(key[k]) / spec.scale(k);
        const double h = 0.5 * spec.cell_width(k);
        const double lo = std::max(c - h, spec.support.lower[k]);
        const double hi = std::min(c + h, spec.support.upper[k]);
        mu *= hi - lo;
    }
    return mu;
}

inline double cell_measure(const PartitionSpec& spec, const Vec& center) {
    CellKey key(spec.dim());
    for (std::size_t k = 0; k < spec.dim(); ++k)
        key[k] = spec.coord_key(center[k], k);
    return cell_measure(spec, key);
}

/// Exact cell count R_kappa. Errors if it does not fit in 63 bits.
inline std::uint64_t enumerate_cells(const PartitionSpec& spec) {
    unsigned __int128 count = 1;
    for (std::size_t k = 0; k < spec.dim(); ++k) {
        const std::uint64_t per_dim =
            static_cast<std::uint64_t>(spec.key_hi(k) - spec.key_lo(k)) + 1;
        count *= per_dim;
        if (count > (static_cast<unsigned __int128>(1) << 63))
            throw std::overflow_error("enumerate_cells: cell count exceeds 2^63");
    }
    return static_cast<std::uint64_t>(count);
}

/// Cell count as a real number; never overflows (used for the (n R)^-1 floor).
inline double cell_count_real(const PartitionSpec& spec) {
    double count = 1.0;
    for (std::size_t k = 0; k < spec.dim(); ++k)
        count *= static_cast<double>(spec.key_hi(k) - spec.key_lo(k)) + 1.0;
    return count;
}

/// Calls fn for every cell key, in lexicographic key order.
inline void for_each_cell(const PartitionSpec& spec,
                          const std::function<void(const CellKey&)>& fn) {
    enumerate_cells(spec);  // overflow guard
    const std::size_t d = spec.dim();
    CellKey key(d);
    for (std::size_t k = 0; k < d; ++k) key[k] = spec.key_lo(k);
    while (true) {
        fn(key);
        std::size_t k = d;
        while (k > 0) {
            --k;
            if (key[k] < spec.key_hi(k)) {
                ++key[k];
                break;
            }
            key[k] = spec.key_lo(k);
            if (k == 0) return;
        }
        if (d == 0) return;
    }
}

namespace detail {

// Gauss-Legendre nodes/weights on [-1, 1] via Newton iteration.
inline void gauss_legendre(int n, Vec& nodes, Vec& weights) {
    nodes.assign(n, 0.0);
    weights.assign(n, 0.0);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int j = 2; j <= n; ++j) {
                const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
}

}  // namespace detail

/// Piecewise-constant density over a partition; constant within each cell.
class PiecewiseDensity {
public:
    PiecewiseDensity(PartitionSpec spec, std::map<CellKey, double> values)
        : spec_(std::move(spec)), values_(std::move(values)) {}

    double operator()(const Vec& theta) const {
        const auto it = values_.find(spec_.key_of(theta));
        return it == values_.end() ? 0.0 : it->second;
    }

    const PartitionSpec& spec() const { return spec_; }
    const std::map<CellKey, double>& values() const { return values_; }

    double integral() const {
        double total = 0.0;
        for (const auto& [key, v] : values_) total += v * cell_measure(spec_, key);
        return total;
    }

private:
    PartitionSpec spec_;
    std::map<CellKey, double> values_;
};

// S_kappa(f): cell value = cell probability / cell measure, with the cell
// probability computed by tensor Gauss-Legendre quadrature.
inline PiecewiseDensity simple_function_approx(
    const std::function<double(const Vec&)>& f, const PartitionSpec& spec,
    int quad_points_per_cell) {
    if (quad_points_per_cell < 8)
        throw std::invalid_argument("simple_function_approx: need >= 8 points");
    const std::size_t d = spec.dim();
    const int n1d = std::max(
        2, static_cast<int>(std::ceil(std::pow(
               static_cast<double>(quad_points_per_cell), 1.0 / d))));
    Vec nodes, weights;
    detail::gauss_legendre(n1d, nodes, weights);

    std::map<CellKey, double> mass;
    double total = 0.0;
    for_each_cell(spec, [&](const CellKey& key) {
        // clipped cell bounds
        Vec lo(d), hi(d);
        for (std::size_t k = 0; k < d; ++k) {
            const double c = static_cast<double>(key[k]) / spec.scale(k);
            const double h = 0.5 * spec.cell_width(k);
            lo[k] = std::max(c - h, spec.support.lower[k]);
            hi[k] = std::min(c + h, spec.support.upper[k]);
        }
        // tensor quadrature
        std::vector<int> idx(d, 0);
        double cell_mass = 0.0;
        while (true) {
            Vec x(d);
            double w = 1.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double half = 0.5 * (hi[k] - lo[k]);
                x[k] = lo[k] + half * (1.0 + nodes[idx[k]]);
                w *= half * weights[idx[k]];
            }
            cell_mass += w * f(x);
            std::size_t k = d;
            bool done = true;
            while (k > 0) {
                --k;
                if (idx[k] + 1 < n1d) {
                    ++idx[k];
                    done = false;
                    break;
                }
                idx[k] = 0;
            }
            if (done) break;
        }
        mass[key] = cell_mass;
        total += cell_mass;
    });

    if (std::abs(total - 1.0) > 1e-3)
        throw std::runtime_error(
            "simple_function_approx: quadrature mass deviates from 1");

    std::map<CellKey, double> values;
    for (const auto& [key, m] : mass)
        values[key] = (m / total) / cell_measure(spec, key);
    return PiecewiseDensity(spec, std::move(values));
}

/// Sup-norm error bound for S_kappa(f): sup||grad f|| * sqrt(d) / 10^kappa.
inline double approx_error_bound(double grad_sup, int d, int kappa) {
    if (grad_sup < 0.0)
        throw std::invalid_argument("approx_error_bound: grad_sup >= 0");
    return grad_sup * std::sqrt(static_cast<double>(d)) /
           std::pow(10.0, kappa);
}

}  // namespace cutset

#endif
