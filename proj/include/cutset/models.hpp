#ifndef CUTSET_MODELS_HPP
#define CUTSET_MODELS_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "cutset/model.hpp"
#include "cutset/rng.hpp"

namespace cutset {

// ---------------------------------------------------------------------------
// Conjugate toy: theta | Y, phi ~ N(phi, y^2), flat prior on theta,
// p(phi|Z) = N(phi_prior_mean, phi_prior_sd^2). Both marginals analytic:
// the cut marginal of theta is N(phi_prior_mean, y^2 + phi_prior_sd^2).
// ---------------------------------------------------------------------------

inline CutModel make_conjugate_toy(double y_value, double phi_prior_mean,
                                   double phi_prior_sd, BoxSupport theta_box,
                                   BoxSupport phi_box) {
    if (y_value == 0.0)
        throw std::invalid_argument("make_conjugate_toy: y_value must be nonzero");
    if (phi_prior_sd <= 0.0)
        throw std::invalid_argument("make_conjugate_toy: phi_prior_sd must be > 0");
    if (theta_box.dim() != 1 || phi_box.dim() != 1)
        throw std::invalid_argument("make_conjugate_toy: supports must be 1-D");

    const double y = std::abs(y_value);
    CutModel m;
    m.theta_support = std::move(theta_box);
    m.phi_support = std::move(phi_box);
    m.log_lik_y = [y](const Vec& theta, const Vec& phi) {
        return detail::log_normal_pdf(theta[0], phi[0], y);
    };
    m.log_lik_z = [phi_prior_mean, phi_prior_sd](const Vec& phi) {
        return detail::log_normal_pdf(phi[0], phi_prior_mean, phi_prior_sd);
    };
    m.log_prior_theta = [](const Vec&) { return 0.0; };
    m.log_prior_phi = [](const Vec&) { return 0.0; };

    const BoxSupport box = m.theta_support;
    m.exact_conditional_sampler = [y, box](const Vec& phi, Rng& rng) -> Vec {
        // rejection against the box; the box normally covers many sds
        for (int tries = 0; tries < 100000; ++tries) {
            const double t = rng.normal(phi[0], y);
            if (t >= box.lower[0] && t <= box.upper[0]) return Vec{t};
        }
        throw std::runtime_error("conjugate toy: conditional sampler failed");
    };
    return m;
}

/// Default wide boxes: 10 marginal sds around the prior mean.
inline CutModel make_conjugate_toy(double y_value, double phi_prior_mean,
                                   double phi_prior_sd) {
    const double y = std::abs(y_value);
    const double marg_sd = std::sqrt(y * y + phi_prior_sd * phi_prior_sd);
    BoxSupport theta_box({phi_prior_mean - 10.0 * marg_sd},
                         {phi_prior_mean + 10.0 * marg_sd});
    BoxSupport phi_box({phi_prior_mean - 10.0 * phi_prior_sd},
                       {phi_prior_mean + 10.0 * phi_prior_sd});
    return make_conjugate_toy(y_value, phi_prior_mean, phi_prior_sd,
                              std::move(theta_box), std::move(phi_box));
}

// ---------------------------------------------------------------------------
// Normal-normal random effects model on sufficient statistics.
//   Ybar_i ~ N(beta_i, phi_i^2/J),  beta_i ~ N(0, theta^2)  (marginalized)
//   s_i^2  ~ Gamma((J-1)/2, rate 1/(2 phi_i^2))
// Parameters are the variances: theta = (theta^2), phi = (phi_1^2,...).
// Priors: p(phi_i^2) ~ 1/phi_i^2 and p(theta^2|phi^2) ~ 1/(theta^2 +
// mean(phi^2)/J). The theta prior depends on phi, so it is evaluated inside
// log_lik_y per (theta, phi) pair and log_prior_theta is identically zero.
// p(phi_i^2 | s_i^2) is InvGamma((J-1)/2, s_i^2/2), the analytic oracle.
// ---------------------------------------------------------------------------

inline CutModel make_random_effects_model(Vec y_bar, Vec s_sq, int group_size) {
    const std::size_t n = y_bar.size();
    if (s_sq.size() != n)
        throw std::invalid_argument("make_random_effects_model: length mismatch");
    if (group_size < 2)
        throw std::invalid_argument("make_random_effects_model: group_size >= 2");
    for (double s : s_sq)
        if (!(s > 0.0))
            throw std::domain_error("make_random_effects_model: s_sq must be > 0");

    const double J = static_cast<double>(group_size);
    const double half_df = (J - 1.0) / 2.0;

    // Data-informed compact boxes. phi_i^2 | s_i^2 is InvGamma(half_df,
    // s_i^2/2): 1/phi_i^2 ~ Gamma(half_df, s_i^2/2), covered to ~10 sds.
    Vec phi_lo(n), phi_hi(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double beta = s_sq[i] / 2.0;
        const double rate_hi = (half_df + 10.0 * std::sqrt(half_df)) / beta;
        phi_lo[i] = 1.0 / rate_hi;
        phi_hi[i] = beta / 0.25;  // far right tail of the inverse gamma
    }
    double ysq_max = 0.0, s_mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ysq_max = std::max(ysq_max, y_bar[i] * y_bar[i]);
        s_mean += s_sq[i] / (J - 1.0) / static_cast<double>(n);
    }
    const double theta_hi = std::max(1.0, 10.0 * (ysq_max + s_mean / J));
    BoxSupport theta_box({1e-4}, {theta_hi});

    CutModel m;
    m.theta_support = std::move(theta_box);
    m.phi_support = BoxSupport(std::move(phi_lo), std::move(phi_hi));
    m.log_lik_y = [y_bar, J, n](const Vec& theta, const Vec& phi) {
        const double th2 = theta[0];
        double phibar = 0.0;
        for (double p : phi) phibar += p / static_cast<double>(n);
        double ll = -std::log(th2 + phibar / J);  // p(theta^2 | phi^2)
        for (std::size_t i = 0; i < n; ++i) {
            const double v = th2 + phi[i] / J;
            ll += -0.5 * std::log(v) - y_bar[i] * y_bar[i] / (2.0 * v) -
                  detail::log_sqrt_2pi;
        }
        return ll;
    };
    m.log_lik_z = [s_sq, half_df, n](const Vec& phi) {
        double ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double rate = 1.0 / (2.0 * phi[i]);
            ll += half_df * std::log(rate) - std::lgamma(half_df) +
                  (half_df - 1.0) * std::log(s_sq[i]) - rate * s_sq[i];
        }
        return ll;
    };
    m.log_prior_theta = [](const Vec&) { return 0.0; };
    m.log_prior_phi = [n](const Vec& phi) {
        double lp = 0.0;
        for (std::size_t i = 0; i < n; ++i) lp += -std::log(phi[i]);
        return lp;
    };
    return m;
}

// ---------------------------------------------------------------------------
// Strong-dependence linear regression.
//   Y_i ~ N(theta' x_theta_i + phi * x_phi_i, sigma^2 = 3)
//   Z_j ~ N(phi, 1)
// X rows hold (x_theta_1..x_theta_d, x_phi). Uniform priors on the boxes.
// ---------------------------------------------------------------------------

inline CutModel make_regression_model(const std::vector<Vec>& X, Vec Y, Vec Z,
                                      int d) {
    if (d < 1 || d > 20)
        throw std::invalid_argument("make_regression_model: d in 1..20");
    if (X.size() != Y.size())
        throw std::invalid_argument("make_regression_model: X/Y size mismatch");
    for (const Vec& row : X)
        if (row.size() != static_cast<std::size_t>(d) + 1)
            throw std::invalid_argument(
                "make_regression_model: row length must be d+1");
    if (Z.empty())
        throw std::invalid_argument("make_regression_model: Z empty");

    const double sigma = std::sqrt(3.0);  // N(., 3) read as variance 3
    const double z_mean =
        std::accumulate(Z.begin(), Z.end(), 0.0) / static_cast<double>(Z.size());

    CutModel m;
    m.theta_support = BoxSupport(Vec(d, -5.0), Vec(d, 5.0));
    m.phi_support = BoxSupport({z_mean - 1.5}, {z_mean + 1.5});
    m.log_lik_y = [X, Y, sigma, d](const Vec& theta, const Vec& phi) {
        double ll = 0.0;
        for (std::size_t i = 0; i < X.size(); ++i) {
            double mu = phi[0] * X[i][d];
            for (int p = 0; p < d; ++p) mu += theta[p] * X[i][p];
            ll += detail::log_normal_pdf(Y[i], mu, sigma);
        }
        return ll;
    };
    m.log_lik_z = [Z](const Vec& phi) {
        double ll = 0.0;
        for (double z : Z) ll += detail::log_normal_pdf(z, phi[0], 1.0);
        return ll;
    };
    m.log_prior_theta = [](const Vec&) { return 0.0; };
    m.log_prior_phi = [](const Vec&) { return 0.0; };
    return m;
}

// ---------------------------------------------------------------------------
// HPV / cancer incidence model.
//   Z_i ~ Bin(N_i, phi_i),  Y_i ~ Poisson(T_i exp(theta_1 + theta_2 phi_i))
// Beta(1,1) prior on each phi_i (truncated to a compact sub-box of (0,1)),
// uniform box prior on theta.
// ---------------------------------------------------------------------------

struct HpvRecord {
    std::string city;
    long Z = 0;
    long N = 0;
    long Y = 0;
    double T = 0.0;
};

inline CutModel make_hpv_model(const std::vector<HpvRecord>& records) {
    if (records.empty()) throw std::invalid_argument("make_hpv_model: no records");
    for (const HpvRecord& r : records) {
        if (r.Z < 0 || r.N < 1 || r.Z > r.N)
            throw std::domain_error("make_hpv_model: need 0 <= Z <= N");
        if (r.Y < 0) throw std::domain_error("make_hpv_model: Y must be >= 0");
        if (!(r.T > 0.0)) throw std::domain_error("make_hpv_model: T must be > 0");
    }
    const std::size_t n = records.size();

    CutModel m;
    m.theta_support = BoxSupport({-8.0, -10.0}, {2.0, 40.0});
    m.phi_support = BoxSupport(Vec(n, 1e-4), Vec(n, 1.0 - 1e-4));
    m.log_lik_y = [records](const Vec& theta, const Vec& phi) {
        double ll = 0.0;
        for (std::size_t i = 0; i < records.size(); ++i) {
            const double eta = theta[0] + theta[1] * phi[i];
            const double y = static_cast<double>(records[i].Y);
            ll += y * (eta + std::log(records[i].T)) -
                  records[i].T * std::exp(eta) - std::lgamma(y + 1.0);
        }
        return ll;
    };
    m.log_lik_z = [records](const Vec& phi) {
        double ll = 0.0;
        for (std::size_t i = 0; i < records.size(); ++i) {
            const double z = static_cast<double>(records[i].Z);
            const double nn = static_cast<double>(records[i].N);
            ll += z * std::log(phi[i]) + (nn - z) * std::log(1.0 - phi[i]) +
                  std::lgamma(nn + 1.0) - std::lgamma(z + 1.0) -
                  std::lgamma(nn - z + 1.0);
        }
        return ll;
    };
    m.log_prior_theta = [](const Vec&) { return 0.0; };
    m.log_prior_phi = [](const Vec&) { return 0.0; };  // Beta(1,1)
    return m;
}

// ---------------------------------------------------------------------------
// Synthetic data generators (desk-scale stand-ins for the experiments).
// ---------------------------------------------------------------------------

struct RegressionData {
    std::vector<Vec> X;
    Vec Y;
    Vec Z;
};

inline RegressionData generate_regression_data(int d, int n_y, int n_z,
                                               double phi_true,
                                               std::uint64_t seed) {
    Rng rng(seed, stream::misc);
    RegressionData data;
    Vec theta_true(d);
    for (int p = 0; p < d; ++p) theta_true[p] = std::sin(p + 1.0);
    const double sigma = std::sqrt(3.0);
    for (int i = 0; i < n_y; ++i) {
        Vec row(d + 1);
        for (int p = 0; p <= d; ++p) row[p] = rng.normal();  // iid N(0,1)
        double mu = phi_true * row[d];
        for (int p = 0; p < d; ++p) mu += theta_true[p] * row[p];
        data.X.push_back(std::move(row));
        data.Y.push_back(mu + sigma * rng.normal());
    }
    for (int j = 0; j < n_z; ++j) data.Z.push_back(phi_true + rng.normal());
    return data;
}

struct RandomEffectsData {
    Vec y_bar;
    Vec s_sq;
    Vec phi_sq_true;
    int group_size = 20;
};

// theta^2 = 2, phi_i^2 ~ Unif(0.5, 1.5), beta_1 forced to the outlier value.
inline RandomEffectsData generate_random_effects_data(int n_groups,
                                                      int group_size,
                                                      double outlier_beta1,
                                                      std::uint64_t seed) {
    Rng rng(seed, stream::misc);
    RandomEffectsData data;
    data.group_size = group_size;
    const double theta_sq = 2.0;
    for (int i = 0; i < n_groups; ++i) {
        const double phi_sq = rng.uniform(0.5, 1.5);
        const double beta =
            (i == 0) ? outlier_beta1 : rng.normal(0.0, std::sqrt(theta_sq));
        double sum = 0.0, sumsq = 0.0;
        for (int j = 0; j < group_size; ++j) {
            const double y = rng.normal(beta, std::sqrt(phi_sq));
            sum += y;
            sumsq += y * y;
        }
        const double mean = sum / group_size;
        data.y_bar.push_back(mean);
        data.s_sq.push_back(sumsq - group_size * mean * mean);
        data.phi_sq_true.push_back(phi_sq);
    }
    return data;
}

inline std::vector<HpvRecord> generate_hpv_data(double theta1, double theta2,
                                                int n_cities,
                                                std::uint64_t seed) {
    Rng rng(seed, stream::misc);
    std::vector<HpvRecord> records;
    for (int i = 0; i < n_cities; ++i) {
        HpvRecord r;
        r.city = "city" + std::to_string(i + 1);
        const double phi = rng.uniform(0.05, 0.3);
        r.N = 1000 + static_cast<long>(rng.uniform_index(2000));
        long z = 0;
        for (long k = 0; k < r.N; ++k)
            if (rng.uniform() < phi) ++z;
        r.Z = z;
        r.T = 1e4 * (1.0 + rng.uniform());
        const double rate = r.T * std::exp(theta1 + theta2 * phi);
        // Poisson via inversion on the cdf (rates here are moderate) or a
        // normal approximation for large rates.
        if (rate < 50.0) {
            double u = rng.uniform();
            double p = std::exp(-rate), cdf = p;
            long y = 0;
            while (u > cdf && y < 10000) {
                ++y;
                p *= rate / static_cast<double>(y);
                cdf += p;
            }
            r.Y = y;
        } else {
            r.Y = std::max(0L, static_cast<long>(
                                   std::lround(rng.normal(rate, std::sqrt(rate)))));
        }
        records.push_back(std::move(r));
    }
    return records;
}

}  // namespace cutset

#endif
