// Filtered back-projection for the flat equispaced fan-beam geometry:
// cosine pre-weighting, band-limited ramp convolution on the virtual detector
// at the isocenter, distance-weighted back-projection over the full scan.
#pragma once

#include <cmath>
#include <vector>

#include "easel/projector.hpp"
#include "easel/types.hpp"

namespace easel {

enum class FbpFilter { RamLak, Hann };

namespace detail {

// Band-limited ramp kernel sampled at spacing delta, lags -(n-1)..(n-1).
// The Hann variant apodizes the same kernel in the spatial domain.
inline std::vector<double> ramp_kernel(int n_det, double delta, FbpFilter filter) {
    const int half = n_det - 1;
    std::vector<double> h(2 * half + 1, 0.0);
    auto ramlak = [&](int lag) -> double {
        if (lag == 0) return 1.0 / (4.0 * delta * delta);
        if (lag % 2 == 0) return 0.0;
        const double pl = std::numbers::pi * lag * delta;
        return -1.0 / (pl * pl);
    };
    for (int lag = -half; lag <= half; ++lag) {
        double v = ramlak(lag);
        if (filter == FbpFilter::Hann) {
            const double lm = (lag - 1 <= -n_det) ? 0.0 : ramlak(lag - 1);
            const double lp = (lag + 1 >= n_det) ? 0.0 : ramlak(lag + 1);
            v = 0.5 * v + 0.25 * (lm + lp);
        }
        h[lag + half] = v;
    }
    return h;
}

}  // namespace detail

inline Image fbp_ramp(const Sinogram& y, const FanBeamGeometry& geometry, const ImageGrid& grid,
                      FbpFilter filter = FbpFilter::RamLak) {
    y.validate();
    grid.validate();
    require_same_geometry(y, geometry, "fbp_ramp");
    if (y.domain != SinogramDomain::LineIntegral)
        throw std::invalid_argument("fbp_ramp: input must be a line-integral sinogram");
    if (geometry.n_angles < 2) throw std::invalid_argument("fbp_ramp: need at least 2 angles");

    const int na = geometry.n_angles, nd = geometry.n_det;
    const double D = geometry.sad;
    const double mag = geometry.sad / geometry.sdd;
    const double ds = geometry.det_spacing * mag;  // spacing on the virtual detector
    const auto kernel = detail::ramp_kernel(nd, ds, filter);
    const int half = nd - 1;

    // Virtual-detector coordinates and cosine weights.
    std::vector<double> svec(nd), cosw(nd);
    for (int k = 0; k < nd; ++k) {
        svec[k] = geometry.det_coord(k) * mag;
        cosw[k] = D / std::sqrt(D * D + svec[k] * svec[k]);
    }

    // Filter each view: Q(j) = ds * sum_m R'(m) * (1/2) h(j - m). The 1/2
    // accounts for every line being measured twice over the 2*pi scan.
    std::vector<double> filtered(static_cast<std::size_t>(na) * nd, 0.0);
    detail::parallel_for(na, num_threads(), [&](int a_lo, int a_hi, int) {
        std::vector<double> rw(nd);
        for (int a = a_lo; a < a_hi; ++a) {
            for (int k = 0; k < nd; ++k) rw[k] = y.at(a, k) * cosw[k];
            for (int j = 0; j < nd; ++j) {
                double acc = 0.0;
                for (int m = 0; m < nd; ++m) acc += rw[m] * kernel[j - m + half];
                filtered[static_cast<std::size_t>(a) * nd + j] = 0.5 * ds * acc;
            }
        }
    });

    // Distance-weighted back-projection with linear interpolation in s.
    Image out(grid);
    const double dbeta = 2.0 * std::numbers::pi / na;
    const double s0 = svec[0];
    detail::parallel_for(grid.ny, num_threads(), [&](int y_lo, int y_hi, int) {
        for (int iy = y_lo; iy < y_hi; ++iy) {
            const double py = grid.pixel_center_y(iy);
            for (int ix = 0; ix < grid.nx; ++ix) {
                const double px = grid.pixel_center_x(ix);
                double acc = 0.0;
                for (int a = 0; a < na; ++a) {
                    const double theta = geometry.angle(a);
                    const double ux = std::cos(theta), uy = std::sin(theta);
                    const double ru = px * ux + py * uy;
                    const double rt = -px * uy + py * ux;
                    const double dist = D - ru;  // source-plane distance, > 0 inside the FOV
                    const double s = D * rt / dist;
                    const double fidx = (s - s0) / ds;
                    const int k0 = static_cast<int>(std::floor(fidx));
                    if (k0 < 0 || k0 + 1 >= nd) continue;
                    const double frac = fidx - k0;
                    const double q = (1.0 - frac) * filtered[static_cast<std::size_t>(a) * nd + k0] +
                                     frac * filtered[static_cast<std::size_t>(a) * nd + k0 + 1];
                    const double u = dist / D;
                    acc += q / (u * u);
                }
                out.at(ix, iy) = acc * dbeta;
            }
        }
    });
    return out;
}

}  // namespace easel
