// Total-variation baseline: gradient descent on ||y - Ax||^2 + w * TV(x)
// with smoothed isotropic TV. The nominal step is 1/(Lipschitz estimate of
// the data term); a halving guard keeps the objective trace monotone near the
// TV kinks where the smoothed curvature blows up.
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "easel/projector.hpp"
#include "easel/types.hpp"

namespace easel {

inline constexpr double kTvSmoothing = 1e-6;

namespace detail {

inline double tv_value(const Image& x, double delta) {
    const int nx = x.grid.nx, ny = x.grid.ny;
    double acc = 0.0;
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix) {
            const double gx = (ix + 1 < nx) ? x.at(ix + 1, iy) - x.at(ix, iy) : 0.0;
            const double gy = (iy + 1 < ny) ? x.at(ix, iy + 1) - x.at(ix, iy) : 0.0;
            acc += std::sqrt(gx * gx + gy * gy + delta * delta);
        }
    return acc;
}

inline Image tv_gradient(const Image& x, double delta) {
    const int nx = x.grid.nx, ny = x.grid.ny;
    Image g(x.grid);
    auto norm_at = [&](int ix, int iy) {
        const double gx = (ix + 1 < nx) ? x.at(ix + 1, iy) - x.at(ix, iy) : 0.0;
        const double gy = (iy + 1 < ny) ? x.at(ix, iy + 1) - x.at(ix, iy) : 0.0;
        return std::sqrt(gx * gx + gy * gy + delta * delta);
    };
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix) {
            double acc = 0.0;
            const double n0 = norm_at(ix, iy);
            const double gx = (ix + 1 < nx) ? x.at(ix + 1, iy) - x.at(ix, iy) : 0.0;
            const double gy = (iy + 1 < ny) ? x.at(ix, iy + 1) - x.at(ix, iy) : 0.0;
            acc -= (gx + gy) / n0;
            if (ix > 0) {
                const double gxl = x.at(ix, iy) - x.at(ix - 1, iy);
                acc += gxl / norm_at(ix - 1, iy);
            }
            if (iy > 0) {
                const double gyu = x.at(ix, iy) - x.at(ix, iy - 1);
                acc += gyu / norm_at(ix, iy - 1);
            }
            g.at(ix, iy) = acc;
        }
    return g;
}

}  // namespace detail

struct TvResult {
    Image image;
    std::vector<double> objective_trace;  // F(x_k), k = 0..n_iters
    std::vector<double> residual_trace;   // ||y - A x_k||_2
};

inline TvResult tv_reconstruct_traced(const Sinogram& y, const FanBeamGeometry& geometry,
                                      const ImageGrid& grid, double tv_weight, int n_iters) {
    y.validate();
    grid.validate();
    require_same_geometry(y, geometry, "tv_reconstruct");
    if (!(tv_weight >= 0.0)) throw std::invalid_argument("tv_reconstruct: tv_weight must be >= 0");
    if (n_iters < 1) throw std::invalid_argument("tv_reconstruct: n_iters must be >= 1");

    // lambda_max(A^T A) <= max_j (A^T A 1)_j for the nonnegative system matrix,
    // so 1/(2 max denom) is a valid data-term step.
    const Image denom = sqs_denominator(geometry, grid);
    const double max_denom = *std::max_element(denom.values.begin(), denom.values.end());
    const double step0 = 1.0 / (2.0 * std::max(max_denom, 1e-30));

    TvResult res;
    res.image = Image(grid);
    Image& x = res.image;

    auto objective = [&](const Image& img, Sinogram* ax_out) {
        Sinogram ax = forward_project(img, geometry);
        double sq = 0.0;
        for (std::size_t i = 0; i < ax.values.size(); ++i) {
            const double d = ax.values[i] - y.values[i];
            sq += d * d;
        }
        if (ax_out) *ax_out = std::move(ax);
        return sq + tv_weight * detail::tv_value(img, kTvSmoothing);
    };

    Sinogram ax(geometry, SinogramDomain::LineIntegral);
    double f = objective(x, &ax);
    auto push_trace = [&](double fval, const Sinogram& axc) {
        double sq = 0.0;
        for (std::size_t i = 0; i < axc.values.size(); ++i) {
            const double d = axc.values[i] - y.values[i];
            sq += d * d;
        }
        res.objective_trace.push_back(fval);
        res.residual_trace.push_back(std::sqrt(sq));
    };
    push_trace(f, ax);

    for (int it = 0; it < n_iters; ++it) {
        Sinogram resid = ax;
        for (std::size_t i = 0; i < resid.values.size(); ++i) resid.values[i] -= y.values[i];
        Image grad = back_project(resid, geometry, grid);
        for (double& v : grad.values) v *= 2.0;
        if (tv_weight > 0.0) {
            const Image gtv = detail::tv_gradient(x, kTvSmoothing);
            for (std::size_t j = 0; j < grad.values.size(); ++j)
                grad.values[j] += tv_weight * gtv.values[j];
        }

        double step = step0;
        Image cand(grid);
        bool accepted = false;
        for (int h = 0; h < 60; ++h) {
            for (std::size_t j = 0; j < x.values.size(); ++j)
                cand.values[j] = x.values[j] - step * grad.values[j];
            Sinogram ax_cand(geometry, SinogramDomain::LineIntegral);
            const double f_cand = objective(cand, &ax_cand);
            if (f_cand <= f) {
                x = cand;
                f = f_cand;
                ax = std::move(ax_cand);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        // If no decrease is possible the iterate stays put and the trace
        // remains flat from here on.
        push_trace(f, ax);
        if (!accepted) {
            for (int rest = it + 1; rest < n_iters; ++rest) push_trace(f, ax);
            break;
        }
    }
    return res;
}

inline Image tv_reconstruct(const Sinogram& y, const FanBeamGeometry& geometry, const ImageGrid& grid,
                            double tv_weight, int n_iters) {
    return tv_reconstruct_traced(y, geometry, grid, tv_weight, n_iters).image;
}

}  // namespace easel
