// Denoising score matching: the multi-scale training objective and the Adam
// training loop for the denoiser score model.
//
// Objective (per sample, channel-averaged):
//   (1/2L) sum_l sigma_l^2 E || s(x_tilde; sigma_l) - (x - x_tilde)/sigma_l^2 ||^2 / C
// with one noise draw per (image, scale) pair. With s = f/sigma and
// x_tilde = x + sigma z the per-draw term reduces to ||f(x_tilde) + z||^2 / C.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "easel/rng.hpp"
#include "easel/schedule.hpp"
#include "easel/score.hpp"
#include "easel/score_model.hpp"
#include "easel/types.hpp"

namespace easel {

namespace detail {

inline void require_resolution(const Image& img, int nx, int ny, const char* where) {
    if (img.grid.nx != nx || img.grid.ny != ny)
        throw std::invalid_argument(std::string(where) + ": image resolution mismatch");
}

// Channel-copied stack of one image plus per-channel noise sigma * z.
inline void fill_noisy_stack(const Image& x, int channels, double sigma, RngStream& stream,
                             Eigen::Ref<Eigen::VectorXd> stack, Eigen::Ref<Eigen::VectorXd> z) {
    const int d = static_cast<int>(x.values.size());
    for (int c = 0; c < channels; ++c)
        for (int j = 0; j < d; ++j) {
            const double zj = stream.normal();
            z[c * d + j] = zj;
            stack[c * d + j] = x.values[j] + sigma * zj;
        }
}

}  // namespace detail

// Monte-Carlo DSM loss for any score evaluator: evaluator(stack, sigma) must
// return the score of the stacked input. Noise is drawn from the substream of
// each sample id, so the estimate does not depend on batch order as long as
// ids travel with their samples.
template <typename Evaluator>
inline double dsm_loss_with(const Evaluator& evaluator, int channels,
                            const std::vector<Image>& batch, const NoiseSchedule& schedule,
                            const RngStream& rng,
                            const std::vector<std::uint64_t>* sample_ids = nullptr) {
    if (batch.empty()) throw std::invalid_argument("dsm_loss: empty batch");
    schedule.validate();
    const int nx = batch[0].grid.nx, ny = batch[0].grid.ny;
    const int d = nx * ny;
    const int L = schedule.size();

    std::vector<std::uint64_t> ids;
    if (sample_ids) {
        if (sample_ids->size() != batch.size())
            throw std::invalid_argument("dsm_loss: sample id list does not match batch");
        ids = *sample_ids;
    } else {
        ids.resize(batch.size());
        for (std::size_t n = 0; n < ids.size(); ++n) ids[n] = n;
    }

    // Per-sample terms keyed by id; summed in ascending id order so the total
    // is bitwise invariant under batch permutation.
    std::vector<std::pair<std::uint64_t, double>> terms;
    terms.reserve(batch.size());
    Eigen::VectorXd stack(channels * d), z(channels * d), target(channels * d);
    for (std::size_t n = 0; n < batch.size(); ++n) {
        detail::require_resolution(batch[n], nx, ny, "dsm_loss");
        RngStream sample_stream = rng.substream(ids[n]);
        double per_sample = 0.0;
        for (int l = 0; l < L; ++l) {
            const double sigma = schedule.sigmas[l];
            detail::fill_noisy_stack(batch[n], channels, sigma, sample_stream, stack, z);
            const Eigen::VectorXd s = evaluator(stack, sigma);
            if (s.size() != stack.size())
                throw std::invalid_argument("dsm_loss: evaluator output shape mismatch");
            // sigma^2 * || s - (x - x_tilde)/sigma^2 ||^2, channel-averaged.
            // The target is formed by subtraction from the noisy stack, so an
            // evaluator that returns exactly (x - x_tilde)/sigma^2 scores zero.
            for (int c = 0; c < channels; ++c)
                for (int j = 0; j < d; ++j)
                    target[c * d + j] =
                        (batch[n].values[j] - stack[c * d + j]) / (sigma * sigma);
            const double sq = (s - target).squaredNorm();
            per_sample += sigma * sigma * sq / channels;
        }
        terms.emplace_back(ids[n], per_sample / (2.0 * L));
    }
    std::sort(terms.begin(), terms.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    double total = 0.0;
    for (const auto& [id, t] : terms) total += t;
    return total / static_cast<double>(batch.size());
}

inline double dsm_loss(const DenoiserScoreModel& model, const std::vector<Image>& batch,
                       const NoiseSchedule& schedule, const RngStream& rng,
                       const std::vector<std::uint64_t>* sample_ids = nullptr) {
    model.validate();
    if (!batch.empty())
        detail::require_resolution(batch[0], model.nx, model.ny, "dsm_loss");
    return dsm_loss_with(
        [&](const Eigen::VectorXd& stack, double sigma) -> Eigen::VectorXd {
            return model.forward(stack) / sigma;
        },
        model.channels, batch, schedule, rng, sample_ids);
}

struct TrainConfig {
    int channels = 10;
    std::vector<int> hidden;     // empty = [4d, 4d] at the training resolution
    int steps = 2000;
    int batch_size = 8;
    double learning_rate = 1e-3;  // Adam
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
};

struct TrainResult {
    DenoiserScoreModel model;
    std::vector<double> loss_trace;  // one entry per step
};

// Stochastic minimization of the DSM objective with Adam. One optimizer step
// per minibatch; every (image, scale) pair in the batch contributes one draw.
// All randomness comes from counter-based substreams of `rng`, so the result
// is a deterministic function of (dataset, schedule, config, seed).
inline TrainResult train_score(const std::vector<Image>& dataset, const NoiseSchedule& schedule,
                               const TrainConfig& cfg, const RngStream& rng) {
    if (dataset.empty()) throw std::invalid_argument("train_score: empty dataset");
    schedule.validate();
    const int nx = dataset[0].grid.nx, ny = dataset[0].grid.ny;
    for (const Image& img : dataset) detail::require_resolution(img, nx, ny, "train_score");
    if (cfg.steps < 1 || cfg.batch_size < 1 || cfg.channels < 1)
        throw std::invalid_argument("train_score: bad config");

    TrainResult result;
    DenoiserScoreModel& model = result.model;
    model.channels = cfg.channels;
    model.nx = nx;
    model.ny = ny;
    const int d = nx * ny;
    model.hidden = cfg.hidden.empty() ? std::vector<int>{4 * d, 4 * d} : cfg.hidden;
    model.sigma_first = schedule.first();
    model.sigma_last = schedule.last();
    model.schedule_len = schedule.size();
    init_model_params(model, rng.substream("init"));

    // Adam state.
    std::vector<Eigen::MatrixXd> mw, vw;
    std::vector<Eigen::VectorXd> mb, vb;
    for (std::size_t i = 0; i < model.weights.size(); ++i) {
        mw.push_back(Eigen::MatrixXd::Zero(model.weights[i].rows(), model.weights[i].cols()));
        vw.push_back(Eigen::MatrixXd::Zero(model.weights[i].rows(), model.weights[i].cols()));
        mb.push_back(Eigen::VectorXd::Zero(model.biases[i].size()));
        vb.push_back(Eigen::VectorXd::Zero(model.biases[i].size()));
    }
    Eigen::VectorXd ms = Eigen::VectorXd::Zero(model.skip.size());
    Eigen::VectorXd vs = Eigen::VectorXd::Zero(model.skip.size());

    const int L = schedule.size();
    const int cols = cfg.batch_size * L;
    const int n_in = model.input_dim();
    Eigen::MatrixXd X(n_in, cols), Z(n_in, cols), VT(n_in, cols);
    RngStream batch_root = rng.substream("batch");
    RngStream noise_root = rng.substream("noise");

    double initial_loss = -1.0;
    int high_loss_run = 0;
    for (int step = 0; step < cfg.steps; ++step) {
        RngStream pick = batch_root.substream(static_cast<std::uint64_t>(step));
        RngStream noise_step = noise_root.substream(static_cast<std::uint64_t>(step));
        for (int b = 0; b < cfg.batch_size; ++b) {
            const auto idx = static_cast<std::size_t>(pick.uniform() * dataset.size()) % dataset.size();
            RngStream slot_stream = noise_step.substream(static_cast<std::uint64_t>(b));
            for (int l = 0; l < L; ++l) {
                const int col = b * L + l;
                const double sigma = schedule.sigmas[l];
                detail::fill_noisy_stack(dataset[idx], cfg.channels, sigma,
                                         slot_stream, X.col(col), Z.col(col));
                // sigma-scaled target (x - x_tilde)/sigma, approximately -z.
                for (int c = 0; c < cfg.channels; ++c)
                    for (int j = 0; j < d; ++j)
                        VT(c * d + j, col) =
                            (dataset[idx].values[j] - X(c * d + j, col)) / sigma;
            }
        }

        DenoiserScoreModel::ForwardCache cache;
        const Eigen::MatrixXd F = model.forward(X, &cache);
        const Eigen::MatrixXd R = F - VT;  // f - sigma * target, per column
        const double loss = R.squaredNorm() / (2.0 * L * cfg.batch_size * cfg.channels);
        result.loss_trace.push_back(loss);
        if (step == 0) initial_loss = loss;
        if (!std::isfinite(loss) || loss > 10.0 * initial_loss) {
            if (++high_loss_run >= 200)
                throw std::runtime_error("train_score: diverged (loss > 10x initial for 200 steps)");
        } else {
            high_loss_run = 0;
        }

        const Eigen::MatrixXd grad_out = R / (static_cast<double>(L) * cfg.batch_size * cfg.channels);
        auto grads = model.backward(cache, grad_out);

        const double t = step + 1;
        const double corr1 = 1.0 - std::pow(cfg.adam_beta1, t);
        const double corr2 = 1.0 - std::pow(cfg.adam_beta2, t);
        for (std::size_t i = 0; i < model.weights.size(); ++i) {
            mw[i] = cfg.adam_beta1 * mw[i] + (1.0 - cfg.adam_beta1) * grads.weights[i];
            vw[i] = cfg.adam_beta2 * vw[i] +
                    (1.0 - cfg.adam_beta2) * grads.weights[i].array().square().matrix();
            model.weights[i].array() -= cfg.learning_rate * (mw[i].array() / corr1) /
                                        ((vw[i].array() / corr2).sqrt() + cfg.adam_eps);
            mb[i] = cfg.adam_beta1 * mb[i] + (1.0 - cfg.adam_beta1) * grads.biases[i];
            vb[i] = cfg.adam_beta2 * vb[i] +
                    (1.0 - cfg.adam_beta2) * grads.biases[i].array().square().matrix();
            model.biases[i].array() -= cfg.learning_rate * (mb[i].array() / corr1) /
                                       ((vb[i].array() / corr2).sqrt() + cfg.adam_eps);
        }
        ms = cfg.adam_beta1 * ms + (1.0 - cfg.adam_beta1) * grads.skip;
        vs = cfg.adam_beta2 * vs + (1.0 - cfg.adam_beta2) * grads.skip.array().square().matrix();
        model.skip.array() -= cfg.learning_rate * (ms.array() / corr1) /
                              ((vs.array() / corr2).sqrt() + cfg.adam_eps);
    }
    return result;
}

// ScoreFunction adapter over a trained model; evaluation goes through the
// channel-copy wrapper.
class DenoiserScore final : public ScoreFunction {
public:
    explicit DenoiserScore(DenoiserScoreModel model) : model_(std::move(model)) { model_.validate(); }

    Image evaluate(const Image& x, double sigma) const override {
        return channel_copy_score(model_, x, sigma);
    }

    const DenoiserScoreModel& model() const { return model_; }

private:
    DenoiserScoreModel model_;
};

}  // namespace easel
