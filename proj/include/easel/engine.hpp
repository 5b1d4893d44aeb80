// EASEL iterative reconstruction: annealed conditional Langevin dynamics with
// separable-quadratic-surrogate data-consistency steps and Nesterov momentum.
//
// Two-loop structure, outer over noise scales l = 1..L with step
// eps_l = tau * sigma_l^2 / sigma_L^2, inner over t = 1..T:
//   u^t = x^{t-1} + (eps_l/2) s(x^{t-1}; sigma_l) + sqrt(eps_l) z
//   x^t = w^{t-1} - [A^T(A x^{t-1} - y) + beta (x^{t-1} - u^t)] / (A^T A 1 + beta)
//   w^t = x^t + gamma (x^t - x^{t-1})
// and x^0 <- w^T at each scale transition (momentum history resets).
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "easel/metrics.hpp"
#include "easel/projector.hpp"
#include "easel/rng.hpp"
#include "easel/schedule.hpp"
#include "easel/score.hpp"
#include "easel/types.hpp"

namespace easel {

struct EaselParams {
    int inner_iters = 150;      // T, inner iterations per scale
    double tau = 1.8e-5;        // base step size
    double beta = 150.0;        // data-coupling penalty
    double gamma = 0.5;         // momentum relaxation in [0, 1]
    double lambda = 150.0;      // fidelity weight; carried for documentation,
                                // beta is the operative coupling in the update
    int channels = 10;          // C for the score wrapper (applied by the score)
    std::uint64_t seed = 0;

    // Evaluate the data gradient at w^{t-1} (textbook Nesterov) instead of
    // x^{t-1} as the update above writes it.
    bool grad_at_momentum = false;
    // Test hook: force the Langevin noise z to zero.
    bool zero_noise = false;

    void validate() const {
        if (inner_iters < 0) throw std::invalid_argument("EaselParams: T must be >= 0");
        if (!(tau > 0.0)) throw std::invalid_argument("EaselParams: tau must be > 0");
        if (!(beta >= 0.0)) throw std::invalid_argument("EaselParams: beta must be >= 0");
        if (!(gamma >= 0.0 && gamma <= 1.0))
            throw std::invalid_argument("EaselParams: gamma must be in [0, 1]");
        if (channels < 1) throw std::invalid_argument("EaselParams: channels must be >= 1");
    }
};

struct TraceRecord {
    int iteration = 0;    // global inner-iteration index, 0-based
    int scale = 0;        // l, 1-based
    int inner = 0;        // t, 1-based
    double sigma = 0.0;
    double epsilon = 0.0;
    double residual = 0.0;  // ||y - A x^t||_2
    double psnr = std::numeric_limits<double>::quiet_NaN();
    double ssim = std::numeric_limits<double>::quiet_NaN();
};

struct ReconTrace {
    std::vector<TraceRecord> records;
};

inline double step_size(double sigma_l, double sigma_last, double tau) {
    if (!(sigma_last > 0.0)) throw std::invalid_argument("step_size: sigma_L must be > 0");
    if (!(tau > 0.0)) throw std::invalid_argument("step_size: tau must be > 0");
    return tau * (sigma_l * sigma_l) / (sigma_last * sigma_last);
}

namespace detail {
inline void require_finite(const Image& img, const std::string& what) {
    for (double v : img.values)
        if (!std::isfinite(v)) throw std::runtime_error(what + ": non-finite value");
}
}  // namespace detail

// One Langevin step against the prior: u = x + (eps/2) s(x; sigma) + sqrt(eps) z.
inline Image langevin_prior_step(const Image& x_prev, const ScoreFunction& score, double sigma,
                                 double epsilon, RngStream& rng, bool zero_noise = false) {
    if (!(epsilon >= 0.0)) throw std::invalid_argument("langevin_prior_step: epsilon must be >= 0");
    const Image s = score.evaluate(x_prev, sigma);
    if (!(s.grid == x_prev.grid))
        throw std::runtime_error("langevin_prior_step: score output shape mismatch");
    detail::require_finite(s, "langevin_prior_step: score output");

    Image u = x_prev;
    const double half_eps = 0.5 * epsilon;
    const double sqrt_eps = std::sqrt(epsilon);
    if (zero_noise) {
        for (std::size_t j = 0; j < u.values.size(); ++j) u.values[j] += half_eps * s.values[j];
    } else {
        for (std::size_t j = 0; j < u.values.size(); ++j)
            u.values[j] += half_eps * s.values[j] + sqrt_eps * rng.normal();
    }
    return u;
}

// SQS data-consistency step. The division is component-wise; pixels with
// denom + beta == 0 keep their x_prev value.
inline Image sqs_data_step(const Image& x_prev, const Image& w_prev, const Image& u,
                           const Sinogram& y, const FanBeamGeometry& geometry, double beta,
                           const Image& denom) {
    if (!(x_prev.grid == w_prev.grid) || !(x_prev.grid == u.grid) || !(x_prev.grid == denom.grid))
        throw std::invalid_argument("sqs_data_step: image shape mismatch");
    require_same_geometry(y, geometry, "sqs_data_step");

    Sinogram resid = forward_project(x_prev, geometry);
    for (std::size_t i = 0; i < resid.values.size(); ++i) resid.values[i] -= y.values[i];
    const Image bp = back_project(resid, geometry, x_prev.grid);

    Image x_t(x_prev.grid);
    for (std::size_t j = 0; j < x_t.values.size(); ++j) {
        const double den = denom.values[j] + beta;
        if (den == 0.0) {
            x_t.values[j] = x_prev.values[j];
        } else {
            const double num = bp.values[j] + beta * (x_prev.values[j] - u.values[j]);
            x_t.values[j] = w_prev.values[j] - num / den;
        }
    }
    return x_t;
}

inline Image momentum_update(const Image& x_t, const Image& x_prev, double gamma) {
    if (!(gamma >= 0.0 && gamma <= 1.0))
        throw std::invalid_argument("momentum_update: gamma must be in [0, 1]");
    if (!(x_t.grid == x_prev.grid))
        throw std::invalid_argument("momentum_update: image shape mismatch");
    Image w = x_t;
    for (std::size_t j = 0; j < w.values.size(); ++j)
        w.values[j] += gamma * (x_t.values[j] - x_prev.values[j]);
    return w;
}

struct EaselResult {
    Image image;
    ReconTrace trace;
};

inline EaselResult easel_reconstruct(const Sinogram& y, const FanBeamGeometry& geometry,
                                     const ImageGrid& grid, const ScoreFunction& score,
                                     const NoiseSchedule& schedule, const EaselParams& params,
                                     RngStream rng, const Image& x0,
                                     const Image* reference = nullptr) {
    y.validate();
    if (y.domain != SinogramDomain::LineIntegral)
        throw std::invalid_argument("easel_reconstruct: y must be a line-integral sinogram");
    require_same_geometry(y, geometry, "easel_reconstruct");
    schedule.validate();
    params.validate();
    if (!(x0.grid == grid)) throw std::invalid_argument("easel_reconstruct: x0 is not on the grid");
    x0.validate();

    EaselResult result;
    result.image = x0;
    if (params.inner_iters == 0) return result;

    const Image denom = sqs_denominator(geometry, grid);
    const int L = schedule.size();
    const double sigma_last = schedule.last();
    const double beta = params.beta;

    Image x = x0;
    Image w = x0;
    Sinogram ax = forward_project(x, geometry);
    int iteration = 0;

    auto step_or_throw = [&](auto&& fn, int l, int t) {
        try {
            return fn();
        } catch (const std::exception& e) {
            throw std::runtime_error("easel_reconstruct: failure at scale " + std::to_string(l) +
                                     " inner " + std::to_string(t) + ": " + e.what());
        }
    };

    for (int l = 1; l <= L; ++l) {
        const double sigma = schedule.sigmas[l - 1];
        const double eps = step_size(sigma, sigma_last, params.tau);
        for (int t = 1; t <= params.inner_iters; ++t) {
            const Image u = step_or_throw(
                [&] {
                    return langevin_prior_step(x, score, sigma, eps, rng, params.zero_noise);
                },
                l, t);

            // Data gradient at x^{t-1} as Algorithm 1 writes it, or at w^{t-1}
            // when the textbook-Nesterov flag is set.
            const Image& grad_point = params.grad_at_momentum ? w : x;
            Sinogram resid = params.grad_at_momentum ? forward_project(w, geometry) : ax;
            for (std::size_t i = 0; i < resid.values.size(); ++i) resid.values[i] -= y.values[i];
            const Image bp = back_project(resid, geometry, grid);

            Image x_t(grid);
            for (std::size_t j = 0; j < x_t.values.size(); ++j) {
                const double den = denom.values[j] + beta;
                if (den == 0.0) {
                    x_t.values[j] = x.values[j];
                } else {
                    const double num =
                        bp.values[j] + beta * (grad_point.values[j] - u.values[j]);
                    x_t.values[j] = w.values[j] - num / den;
                }
            }
            step_or_throw([&] { detail::require_finite(x_t, "iterate"); return 0; }, l, t);

            w = momentum_update(x_t, x, params.gamma);
            x = std::move(x_t);

            ax = forward_project(x, geometry);
            double sq = 0.0;
            for (std::size_t i = 0; i < ax.values.size(); ++i) {
                const double d = y.values[i] - ax.values[i];
                sq += d * d;
            }

            TraceRecord rec;
            rec.iteration = iteration++;
            rec.scale = l;
            rec.inner = t;
            rec.sigma = sigma;
            rec.epsilon = eps;
            rec.residual = std::sqrt(sq);
            if (reference) {
                rec.psnr = psnr(x, *reference);
                rec.ssim = ssim(x, *reference);
            }
            result.trace.records.push_back(rec);
        }
        // Scale transition: x^0 <- w^T, momentum history reset.
        x = w;
        ax = forward_project(x, geometry);
    }

    result.image = w;
    return result;
}

// Unconditional annealed Langevin sampling: the prior half of the engine with
// the data term removed.
inline Image langevin_sample(const ScoreFunction& score, const NoiseSchedule& schedule, int inner_iters,
                             double tau, RngStream rng, const Image& x0) {
    schedule.validate();
    if (inner_iters < 0) throw std::invalid_argument("langevin_sample: T must be >= 0");
    x0.validate();

    Image x = x0;
    const double sigma_last = schedule.last();
    for (double sigma : schedule.sigmas) {
        const double eps = step_size(sigma, sigma_last, tau);
        for (int t = 0; t < inner_iters; ++t)
            x = langevin_prior_step(x, score, sigma, eps, rng);
    }
    return x;
}

}  // namespace easel
