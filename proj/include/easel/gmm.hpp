// Isotropic Gaussian mixture with closed-form sigma-smoothed density and
// score; the ground-truth stand-in for a learned prior.
#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "easel/rng.hpp"

namespace easel {

struct GmmDensity {
    std::vector<double> weights;               // sum to 1
    std::vector<std::vector<double>> means;    // one d-vector per component
    std::vector<double> variances;             // per-component isotropic s^2

    int dim() const { return means.empty() ? 0 : static_cast<int>(means[0].size()); }

    void validate() const {
        const std::size_t k = weights.size();
        if (k == 0 || means.size() != k || variances.size() != k)
            throw std::invalid_argument("GmmDensity: component lists must agree and be nonempty");
        double sum = 0.0;
        for (double w : weights) {
            if (!(w >= 0.0)) throw std::invalid_argument("GmmDensity: weights must be >= 0");
            sum += w;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw std::invalid_argument("GmmDensity: weights must sum to 1");
        for (double v : variances)
            if (!(v > 0.0)) throw std::invalid_argument("GmmDensity: variances must be > 0");
        for (const auto& m : means)
            if (m.size() != means[0].size())
                throw std::invalid_argument("GmmDensity: mean dimensions differ");
    }
};

// log p_sigma(x) where p_sigma is the mixture convolved with N(0, sigma^2 I),
// evaluated with log-sum-exp for stability.
inline double gmm_log_density(const GmmDensity& gmm, const std::vector<double>& x, double sigma) {
    const int d = gmm.dim();
    if (static_cast<int>(x.size()) != d)
        throw std::invalid_argument("gmm_log_density: dimension mismatch");
    std::vector<double> logs(gmm.weights.size());
    double max_log = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < gmm.weights.size(); ++k) {
        const double var = gmm.variances[k] + sigma * sigma;
        double sq = 0.0;
        for (int i = 0; i < d; ++i) {
            const double diff = x[i] - gmm.means[k][i];
            sq += diff * diff;
        }
        logs[k] = (gmm.weights[k] > 0.0 ? std::log(gmm.weights[k])
                                        : -std::numeric_limits<double>::infinity()) -
                  0.5 * d * std::log(2.0 * std::numbers::pi * var) - 0.5 * sq / var;
        max_log = std::max(max_log, logs[k]);
    }
    double acc = 0.0;
    for (double lg : logs) acc += std::exp(lg - max_log);
    return max_log + std::log(acc);
}

// grad_x log p_sigma(x): responsibility-weighted sum of (mu_k - x)/(s_k^2 + sigma^2).
inline std::vector<double> analytic_gmm_score(const GmmDensity& gmm, const std::vector<double>& x,
                                              double sigma) {
    gmm.validate();
    if (!(sigma >= 0.0)) throw std::invalid_argument("analytic_gmm_score: sigma must be >= 0");
    const int d = gmm.dim();
    if (static_cast<int>(x.size()) != d)
        throw std::invalid_argument("analytic_gmm_score: dimension mismatch");

    const std::size_t K = gmm.weights.size();
    std::vector<double> logs(K);
    double max_log = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < K; ++k) {
        const double var = gmm.variances[k] + sigma * sigma;
        double sq = 0.0;
        for (int i = 0; i < d; ++i) {
            const double diff = x[i] - gmm.means[k][i];
            sq += diff * diff;
        }
        logs[k] = (gmm.weights[k] > 0.0 ? std::log(gmm.weights[k])
                                        : -std::numeric_limits<double>::infinity()) -
                  0.5 * d * std::log(2.0 * std::numbers::pi * var) - 0.5 * sq / var;
        max_log = std::max(max_log, logs[k]);
    }
    double norm = 0.0;
    for (double lg : logs) norm += std::exp(lg - max_log);

    std::vector<double> score(d, 0.0);
    for (std::size_t k = 0; k < K; ++k) {
        const double resp = std::exp(logs[k] - max_log) / norm;
        if (resp == 0.0) continue;
        const double var = gmm.variances[k] + sigma * sigma;
        for (int i = 0; i < d; ++i) score[i] += resp * (gmm.means[k][i] - x[i]) / var;
    }
    return score;
}

// Direct sample from the mixture (component choice, then Gaussian draw).
inline std::vector<double> gmm_sample(const GmmDensity& gmm, RngStream& rng) {
    const double u = rng.uniform();
    double cum = 0.0;
    std::size_t k = 0;
    for (; k + 1 < gmm.weights.size(); ++k) {
        cum += gmm.weights[k];
        if (u <= cum) break;
    }
    const double s = std::sqrt(gmm.variances[k]);
    std::vector<double> x(gmm.dim());
    for (int i = 0; i < gmm.dim(); ++i) x[i] = gmm.means[k][i] + s * rng.normal();
    return x;
}

}  // namespace easel
