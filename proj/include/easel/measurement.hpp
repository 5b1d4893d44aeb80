// Low-dose measurement simulation: Poisson transmission counts with source
// intensity b and background mean r, and the log-domain conversion that turns
// counts back into line integrals with Gaussian inverse-variance weights.
#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "easel/rng.hpp"
#include "easel/types.hpp"

namespace easel {

// Photons below this level are clamped before the log transform; counts at or
// below the background would otherwise produce an undefined line integral.
inline constexpr double kCountClamp = 0.5;

struct DoseModel {
    std::vector<double> b{50'000.0};  // source intensity per ray; size 1 = uniform
    std::vector<double> r{0.0};       // background mean per ray; size 1 = uniform

    double b_at(std::size_t i) const { return b.size() == 1 ? b[0] : b[i]; }
    double r_at(std::size_t i) const { return r.size() == 1 ? r[0] : r[i]; }

    void validate(std::size_t n_rays) const {
        if (b.empty() || (b.size() != 1 && b.size() != n_rays))
            throw std::invalid_argument("DoseModel: b must be scalar or per-ray");
        if (r.empty() || (r.size() != 1 && r.size() != n_rays))
            throw std::invalid_argument("DoseModel: r must be scalar or per-ray");
        for (double v : b)
            if (!(v >= 0.0)) throw std::invalid_argument("DoseModel: b must be >= 0");
        for (double v : r)
            if (!(v >= 0.0)) throw std::invalid_argument("DoseModel: r must be >= 0");
    }
};

// Poisson draw: exact inversion by sequential search below mean 30, rounded
// Gaussian (clamped at zero) above, where the relative error of the normal
// approximation is negligible but search time is not.
inline double poisson_draw(RngStream& rng, double mean) {
    if (!(mean >= 0.0)) throw std::invalid_argument("poisson_draw: mean must be >= 0");
    if (mean == 0.0) return 0.0;
    if (mean < 30.0) {
        const double u = rng.uniform();
        double p = std::exp(-mean);
        double cum = p;
        double k = 0.0;
        while (u > cum && k < 1e6) {
            k += 1.0;
            p *= mean / k;
            cum += p;
        }
        return k;
    }
    const double z = rng.normal();
    return std::max(0.0, std::round(mean + std::sqrt(mean) * z));
}

// I_i ~ Poisson(b_i * exp(-[Ax]_i) + r_i). Each ray consumes its own
// counter-based substream, so results do not depend on evaluation order.
inline Sinogram simulate_counts(const Sinogram& line_integrals, const DoseModel& dose, RngStream rng) {
    line_integrals.validate();
    if (line_integrals.domain != SinogramDomain::LineIntegral)
        throw std::invalid_argument("simulate_counts: input must be a line-integral sinogram");
    const std::size_t n = line_integrals.values.size();
    dose.validate(n);
    for (double t : line_integrals.values)
        if (!(t >= 0.0))
            throw std::invalid_argument("simulate_counts: negative line integral (non-physical attenuation)");

    Sinogram counts(line_integrals.geometry, SinogramDomain::PhotonCount);
    for (std::size_t i = 0; i < n; ++i) {
        const double mean = dose.b_at(i) * std::exp(-line_integrals.values[i]) + dose.r_at(i);
        RngStream ray_stream = rng.substream(static_cast<std::uint64_t>(i));
        counts.values[i] = poisson_draw(ray_stream, mean);
    }
    return counts;
}

// Log transform with plug-in statistical weights:
//   y_i = ln(b_i / max(I_i - r_i, clamp)),  w_i = (Ibar_i - r_i)^2 / Ibar_i
// with Ibar_i = max(I_i, clamp) standing in for the unavailable E[I_i].
inline std::pair<Sinogram, Sinogram> counts_to_log_sinogram(const Sinogram& counts,
                                                            const DoseModel& dose) {
    counts.validate();
    if (counts.domain != SinogramDomain::PhotonCount)
        throw std::invalid_argument("counts_to_log_sinogram: input must be a photon-count sinogram");
    const std::size_t n = counts.values.size();
    dose.validate(n);
    for (double c : counts.values)
        if (!(c >= 0.0)) throw std::invalid_argument("counts_to_log_sinogram: negative count");

    Sinogram y(counts.geometry, SinogramDomain::LineIntegral);
    Sinogram w(counts.geometry, SinogramDomain::Weight);
    for (std::size_t i = 0; i < n; ++i) {
        const double b = dose.b_at(i);
        if (!(b > 0.0))
            throw std::invalid_argument("counts_to_log_sinogram: b=0 ray, log transform undefined");
        const double r = dose.r_at(i);
        const double transmitted = std::max(counts.values[i] - r, kCountClamp);
        y.values[i] = std::log(b / transmitted);
        const double ibar = std::max(counts.values[i], kCountClamp);
        const double num = ibar - r;
        w.values[i] = num * num / ibar;
    }
    return {std::move(y), std::move(w)};
}

}  // namespace easel
