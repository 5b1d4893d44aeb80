// Geometric annealing ladder of noise scales.
#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace easel {

struct NoiseSchedule {
    std::vector<double> sigmas;  // strictly decreasing, geometric

    int size() const { return static_cast<int>(sigmas.size()); }
    double first() const { return sigmas.front(); }
    double last() const { return sigmas.back(); }

    void validate() const {
        if (sigmas.empty()) throw std::invalid_argument("NoiseSchedule: empty");
        for (double s : sigmas)
            if (!(s > 0.0)) throw std::invalid_argument("NoiseSchedule: sigmas must be > 0");
        for (std::size_t i = 1; i < sigmas.size(); ++i)
            if (!(sigmas[i] < sigmas[i - 1]))
                throw std::invalid_argument("NoiseSchedule: sigmas must strictly decrease");
        if (sigmas.size() > 2) {
            const double ratio = sigmas[1] / sigmas[0];
            for (std::size_t i = 2; i < sigmas.size(); ++i) {
                const double r = sigmas[i] / sigmas[i - 1];
                if (std::abs(r - ratio) > 1e-12 * ratio)
                    throw std::invalid_argument("NoiseSchedule: ratio is not constant");
            }
        }
    }
};

inline NoiseSchedule make_schedule(double sigma_first, double sigma_last, int length) {
    if (!(sigma_last > 0.0) || !(sigma_first >= sigma_last))
        throw std::invalid_argument("make_schedule: need sigma_first >= sigma_last > 0");
    if (length < 1) throw std::invalid_argument("make_schedule: length must be >= 1");
    if (length == 1) {
        if (sigma_first != sigma_last)
            throw std::invalid_argument("make_schedule: length 1 requires sigma_first == sigma_last");
        return {{sigma_first}};
    }
    if (sigma_first == sigma_last)
        throw std::invalid_argument("make_schedule: equal endpoints need length 1");

    NoiseSchedule sched;
    sched.sigmas.resize(length);
    const double log_ratio = std::log(sigma_last / sigma_first) / (length - 1);
    for (int l = 0; l < length; ++l) sched.sigmas[l] = sigma_first * std::exp(l * log_ratio);
    sched.sigmas.front() = sigma_first;
    sched.sigmas.back() = sigma_last;
    return sched;
}

}  // namespace easel
