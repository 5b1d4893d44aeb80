// Image quality metrics: MAE, PSNR, and Gaussian-windowed SSIM.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "easel/types.hpp"

namespace easel {

struct MetricReport {
    double mae = 0.0;
    double psnr = 0.0;
    double ssim = 0.0;
};

namespace detail {
inline void require_same_shape(const Image& x, const Image& ref, const char* where) {
    if (!(x.grid == ref.grid))
        throw std::invalid_argument(std::string(where) + ": image shapes differ");
}
}  // namespace detail

inline double mae(const Image& x, const Image& ref) {
    detail::require_same_shape(x, ref, "mae");
    double acc = 0.0;
    for (std::size_t i = 0; i < x.values.size(); ++i) acc += std::abs(x.values[i] - ref.values[i]);
    return acc / static_cast<double>(x.values.size());
}

enum class PsnrConvention {
    Rmse,          // 20*log10(max(ref) / rmse), the standard definition
    LiteralNorm,   // 20*log10(max(ref) / ||x - ref||_2), no 1/sqrt(N)
};

// Peak signal-to-noise ratio in dB against the reference image ref.
// Identical images report +infinity.
inline double psnr(const Image& x, const Image& ref,
                   PsnrConvention convention = PsnrConvention::Rmse) {
    detail::require_same_shape(x, ref, "psnr");
    const double peak = *std::max_element(ref.values.begin(), ref.values.end());
    if (!(peak > 0.0)) throw std::invalid_argument("psnr: reference peak must be > 0");
    double sq = 0.0;
    for (std::size_t i = 0; i < x.values.size(); ++i) {
        const double d = x.values[i] - ref.values[i];
        sq += d * d;
    }
    if (sq == 0.0) return std::numeric_limits<double>::infinity();
    double denom = std::sqrt(sq);
    if (convention == PsnrConvention::Rmse) denom /= std::sqrt(static_cast<double>(x.values.size()));
    return 20.0 * std::log10(peak / denom);
}

namespace detail {
inline std::vector<double> gaussian_window(int size, double sigma) {
    std::vector<double> w(size);
    const double c = 0.5 * (size - 1);
    double sum = 0.0;
    for (int i = 0; i < size; ++i) {
        w[i] = std::exp(-0.5 * (i - c) * (i - c) / (sigma * sigma));
        sum += w[i];
    }
    for (double& v : w) v /= sum;
    return w;
}

// Separable Gaussian filtering over the valid region (windows fully inside).
inline std::vector<double> filter_valid(const std::vector<double>& img, int nx, int ny,
                                        const std::vector<double>& w) {
    const int k = static_cast<int>(w.size());
    const int ox = nx - k + 1, oy = ny - k + 1;
    std::vector<double> tmp(static_cast<std::size_t>(ox) * ny, 0.0);
    for (int y = 0; y < ny; ++y)
        for (int x = 0; x < ox; ++x) {
            double acc = 0.0;
            for (int i = 0; i < k; ++i) acc += w[i] * img[static_cast<std::size_t>(y) * nx + x + i];
            tmp[static_cast<std::size_t>(y) * ox + x] = acc;
        }
    std::vector<double> out(static_cast<std::size_t>(ox) * oy, 0.0);
    for (int y = 0; y < oy; ++y)
        for (int x = 0; x < ox; ++x) {
            double acc = 0.0;
            for (int i = 0; i < k; ++i) acc += w[i] * tmp[static_cast<std::size_t>(y + i) * ox + x];
            out[static_cast<std::size_t>(y) * ox + x] = acc;
        }
    return out;
}
}  // namespace detail

// Mean SSIM over all 11x11 Gaussian windows (sigma 1.5) fully inside the
// image. Stabilizers use the dynamic range of the reference. The raw mean is
// reported; anticorrelated structure can push it below zero.
inline double ssim(const Image& x, const Image& ref, int window = 11, double sigma = 1.5,
                   double k1 = 0.01, double k2 = 0.03) {
    detail::require_same_shape(x, ref, "ssim");
    const int nx = x.grid.nx, ny = x.grid.ny;
    if (nx < window || ny < window)
        throw std::invalid_argument("ssim: image smaller than the window");

    const double lo = *std::min_element(ref.values.begin(), ref.values.end());
    const double hi = *std::max_element(ref.values.begin(), ref.values.end());
    const double range = hi - lo;
    const double c1 = (k1 * range) * (k1 * range);
    const double c2 = (k2 * range) * (k2 * range);

    const auto w = detail::gaussian_window(window, sigma);
    const std::size_t n = x.values.size();
    std::vector<double> xx(n), rr(n), xr(n);
    for (std::size_t i = 0; i < n; ++i) {
        xx[i] = x.values[i] * x.values[i];
        rr[i] = ref.values[i] * ref.values[i];
        xr[i] = x.values[i] * ref.values[i];
    }
    const auto mu_x = detail::filter_valid(x.values, nx, ny, w);
    const auto mu_r = detail::filter_valid(ref.values, nx, ny, w);
    const auto m_xx = detail::filter_valid(xx, nx, ny, w);
    const auto m_rr = detail::filter_valid(rr, nx, ny, w);
    const auto m_xr = detail::filter_valid(xr, nx, ny, w);

    double acc = 0.0;
    for (std::size_t i = 0; i < mu_x.size(); ++i) {
        const double var_x = m_xx[i] - mu_x[i] * mu_x[i];
        const double var_r = m_rr[i] - mu_r[i] * mu_r[i];
        const double cov = m_xr[i] - mu_x[i] * mu_r[i];
        acc += ((2.0 * mu_x[i] * mu_r[i] + c1) * (2.0 * cov + c2)) /
               ((mu_x[i] * mu_x[i] + mu_r[i] * mu_r[i] + c1) * (var_x + var_r + c2));
    }
    return acc / static_cast<double>(mu_x.size());
}

inline MetricReport evaluate_metrics(const Image& x, const Image& ref) {
    return {mae(x, ref), psnr(x, ref), ssim(x, ref)};
}

}  // namespace easel
