#ifndef CUTSET_MODEL_HPP
#define CUTSET_MODEL_HPP

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cutset/rng.hpp"

namespace cutset {

using Vec = std::vector<double>;

/// Compact axis-aligned box support.
struct BoxSupport {
    Vec lower;
    Vec upper;

    BoxSupport() = default;
    BoxSupport(Vec lo, Vec hi) : lower(std::move(lo)), upper(std::move(hi)) {
        if (lower.size() != upper.size())
            throw std::invalid_argument("BoxSupport: dimension mismatch");
        for (std::size_t k = 0; k < lower.size(); ++k) {
            if (!std::isfinite(lower[k]) || !std::isfinite(upper[k]) ||
                !(lower[k] < upper[k]))
                throw std::invalid_argument(
                    "BoxSupport: requires finite lower < upper");
        }
    }

    std::size_t dim() const { return lower.size(); }

    bool contains(const Vec& x) const {
        if (x.size() != dim()) return false;
        for (std::size_t k = 0; k < dim(); ++k)
            if (x[k] < lower[k] || x[k] > upper[k]) return false;
        return true;
    }

    double width(std::size_t k) const { return upper[k] - lower[k]; }

    double measure() const {
        double v = 1.0;
        for (std::size_t k = 0; k < dim(); ++k) v *= width(k);
        return v;
    }
};

// Two-module cut model. Data is bound into the callables. All evaluations
// must be pure and finite inside the supports.
struct CutModel {
    std::function<double(const Vec&, const Vec&)> log_lik_y;  // log p(Y|theta,phi)
    std::function<double(const Vec&)> log_lik_z;              // log p(Z|phi)
    std::function<double(const Vec&)> log_prior_theta;
    std::function<double(const Vec&)> log_prior_phi;
    BoxSupport theta_support;
    BoxSupport phi_support;
    // Present only for conjugate models: draws theta ~ p(theta|Y,phi).
    std::function<Vec(const Vec&, Rng&)> exact_conditional_sampler;

    std::size_t theta_dim() const { return theta_support.dim(); }
    std::size_t phi_dim() const { return phi_support.dim(); }
    bool has_exact_sampler() const {
        return static_cast<bool>(exact_conditional_sampler);
    }
};

/// Unnormalized log p(theta|Y,phi) = log p(Y|theta,phi) + log p(theta).
inline double log_joint_y(const CutModel& model, const Vec& theta,
                          const Vec& phi) {
    if (!model.theta_support.contains(theta))
        throw std::domain_error("log_joint_y: theta outside support");
    if (!model.phi_support.contains(phi))
        throw std::domain_error("log_joint_y: phi outside support");
    return model.log_lik_y(theta, phi) + model.log_prior_theta(theta);
}

/// Unnormalized log p(phi|Z) = log p(Z|phi) + log p(phi).
inline double log_phi_posterior(const CutModel& model, const Vec& phi) {
    if (!model.phi_support.contains(phi))
        throw std::domain_error("log_phi_posterior: phi outside support");
    return model.log_lik_z(phi) + model.log_prior_phi(phi);
}

namespace detail {
inline constexpr double log_sqrt_2pi = 0.9189385332046727;  // log sqrt(2*pi)

inline double log_normal_pdf(double x, double mean, double sd) {
    const double z = (x - mean) / sd;
    return -0.5 * z * z - std::log(sd) - log_sqrt_2pi;
}
}  // namespace detail

}  // namespace cutset

#endif
