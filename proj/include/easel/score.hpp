// ScoreFunction: an evaluable prior gradient s(x; sigma) with the shape of x.
#pragma once

#include <functional>
#include <memory>
#include <utility>

#include "easel/gmm.hpp"
#include "easel/types.hpp"

namespace easel {

class ScoreFunction {
public:
    virtual ~ScoreFunction() = default;

    // Must return a finite image of the same shape as x.
    virtual Image evaluate(const Image& x, double sigma) const = 0;
};

class ZeroScore final : public ScoreFunction {
public:
    Image evaluate(const Image& x, double) const override { return Image(x.grid); }
};

// Adapter for test scripts and hand-built scores.
class FunctionScore final : public ScoreFunction {
public:
    using Fn = std::function<Image(const Image&, double)>;
    explicit FunctionScore(Fn fn) : fn_(std::move(fn)) {}
    Image evaluate(const Image& x, double sigma) const override { return fn_(x, sigma); }

private:
    Fn fn_;
};

// Analytic smoothed-GMM score over the flattened pixel vector.
class GmmScore final : public ScoreFunction {
public:
    explicit GmmScore(GmmDensity gmm) : gmm_(std::move(gmm)) { gmm_.validate(); }

    Image evaluate(const Image& x, double sigma) const override {
        const auto s = analytic_gmm_score(gmm_, x.values, sigma);
        Image out(x.grid);
        out.values = s;
        return out;
    }

    const GmmDensity& density() const { return gmm_; }

private:
    GmmDensity gmm_;
};

// Isotropic Gaussian prior N(mean, s^2 I) over pixels; a one-component GmmScore
// that does not need the full mixture machinery at image dimension.
class IsotropicGaussianScore final : public ScoreFunction {
public:
    IsotropicGaussianScore(double mean, double stddev) : mean_(mean), var_(stddev * stddev) {
        if (!(stddev > 0.0)) throw std::invalid_argument("IsotropicGaussianScore: stddev must be > 0");
    }

    Image evaluate(const Image& x, double sigma) const override {
        Image out(x.grid);
        const double denom = var_ + sigma * sigma;
        for (std::size_t i = 0; i < x.values.size(); ++i)
            out.values[i] = (mean_ - x.values[i]) / denom;
        return out;
    }

private:
    double mean_;
    double var_;
};

}  // namespace easel
