// Acceptance suite: one pass/fail line per criterion.
//
// Usage: acceptance [criterion numbers...]   (default: all)
#include <cstdarg>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "easel/config.hpp"
#include "easel/dsm.hpp"
#include "easel/engine.hpp"
#include "easel/fbp.hpp"
#include "easel/gmm.hpp"
#include "easel/io.hpp"
#include "easel/measurement.hpp"
#include "easel/metrics.hpp"
#include "easel/phantom.hpp"
#include "easel/pipeline.hpp"
#include "easel/projector.hpp"
#include "easel/tv.hpp"

using namespace easel;
namespace fs = std::filesystem;
using clock_type = std::chrono::steady_clock;

namespace {

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

Outcome pass(std::string detail) { return {true, std::move(detail)}; }
Outcome fail(std::string detail) { return {false, std::move(detail)}; }

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof(buf), f, args);
    va_end(args);
    return buf;
}

// ---- shared desk-scale experiment setup (criteria 9, 11, 12) -------------

// Desk-scale analog of the paper's full-size experiment. The coupling and
// inner-iteration count were picked by a (beta, T) sweep against this prior's
// capacity; the shipped config keeps the full-size defaults.
constexpr int kGridN = 64;
constexpr double kMuPerMm = 0.05;   // attenuation of normalized value 1
constexpr double kBetaDesk = 20.0;  // coupling tuned for the desk-scale prior
constexpr int kInnerItersDesk = 30; // T for the 64^2 analog runs
constexpr int kTestPhantoms = 10;

ImageGrid desk_grid() { return {kGridN, kGridN, 1.0}; }

FanBeamGeometry desk_geometry() {
    FanBeamGeometry g;
    g.n_angles = 180;
    g.n_det = 128;
    g.det_spacing = 2.0;
    g.sad = 500.0;
    g.sdd = 1000.0;
    return g;
}

RngStream acceptance_root() { return RngStream(20240801); }

// The trained 64^2 prior is shared between criteria 11 and 12.
const DenoiserScoreModel& desk_prior(std::string* train_info = nullptr) {
    static std::optional<DenoiserScoreModel> model;
    static std::string info;
    if (!model) {
        const auto t0 = clock_type::now();
        RngStream root = acceptance_root();
        RngStream fam = root.substream("train");
        std::vector<Image> dataset;
        dataset.reserve(1500);
        for (int i = 0; i < 1500; ++i)
            dataset.push_back(random_ellipse_phantom(desk_grid(), 4, 10, fam.substream(i)));
        TrainConfig tc;
        tc.channels = 10;
        tc.hidden = {128, 128};
        tc.steps = 1000;
        tc.batch_size = 4;
        const NoiseSchedule sched = make_schedule(1.0, 0.01, 12);
        TrainResult result = train_score(dataset, sched, tc, root.substream("training"));
        info = fmt("prior: C=10 hidden=128,128 loss %.0f->%.0f in %.0f s",
                   result.loss_trace.front(), result.loss_trace.back(), seconds_since(t0));
        model = std::move(result.model);
    }
    if (train_info) *train_info = info;
    return *model;
}

struct DeskCase {
    Image phantom;   // normalized
    Sinogram y;      // physical line integrals
    Image fbp_norm;  // FBP reconstruction, normalized units
    double fbp_psnr = 0.0;
};

DeskCase make_desk_case(int index, double b_photons) {
    RngStream root = acceptance_root();
    DeskCase c;
    c.phantom = random_ellipse_phantom(desk_grid(), 4, 10, root.substream("test").substream(index));
    Image physical = c.phantom;
    for (double& v : physical.values) v *= kMuPerMm;
    DoseModel dose;
    dose.b = {b_photons};
    const Sinogram counts = simulate_counts(
        forward_project(physical, desk_geometry()), dose,
        root.substream("noise").substream(index).substream(static_cast<std::uint64_t>(b_photons)));
    auto [y, w] = counts_to_log_sinogram(counts, dose);
    c.y = std::move(y);
    Image fbp = fbp_ramp(c.y, desk_geometry(), desk_grid());
    for (double& v : fbp.values) v /= kMuPerMm;
    c.fbp_psnr = psnr(fbp, c.phantom);
    c.fbp_norm = std::move(fbp);
    return c;
}

double run_easel_psnr(const DeskCase& c, const ScoreFunction& score, int stream_index) {
    Sinogram yn = c.y;
    for (double& v : yn.values) v /= kMuPerMm;
    EaselParams params;
    params.inner_iters = kInnerItersDesk;
    params.beta = kBetaDesk;
    params.gamma = 0.5;
    params.tau = 1.8e-5;
    params.channels = 10;
    const auto res = easel_reconstruct(
        yn, desk_geometry(), desk_grid(), score, make_schedule(1.0, 0.01, 12), params,
        acceptance_root().substream("langevin").substream(stream_index), c.fbp_norm);
    return psnr(res.image, c.phantom);
}

// ---- criteria -------------------------------------------------------------

Outcome criterion_adjointness() {
    const auto t0 = clock_type::now();
    const ImageGrid grid{32, 32, 1.0};
    FanBeamGeometry g;
    g.n_angles = 24;
    g.n_det = 64;
    g.det_spacing = 2.5;
    RngStream rng(7);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        Image x(grid);
        for (double& v : x.values) v = 2.0 * rng.uniform() - 1.0;
        Sinogram s(g, SinogramDomain::LineIntegral);
        for (double& v : s.values) v = 2.0 * rng.uniform() - 1.0;
        const Sinogram ax = forward_project(x, g);
        const Image ats = back_project(s, g, grid);
        double lhs = 0, rhs = 0, nax = 0, ns = 0;
        for (std::size_t i = 0; i < ax.values.size(); ++i) {
            lhs += ax.values[i] * s.values[i];
            nax += ax.values[i] * ax.values[i];
            ns += s.values[i] * s.values[i];
        }
        for (std::size_t j = 0; j < x.values.size(); ++j) rhs += x.values[j] * ats.values[j];
        worst = std::max(worst, std::abs(lhs - rhs) / (std::sqrt(nax) * std::sqrt(ns) + 1e-30));
    }
    const double dt = seconds_since(t0);
    if (worst >= 1e-10) return fail(fmt("worst relative adjoint error %.3e >= 1e-10", worst));
    if (dt >= 10.0) return fail(fmt("runtime %.1f s >= 10 s", dt));
    return pass(fmt("worst relative error %.3e, %.2f s", worst, dt));
}

Outcome criterion_dense_oracle() {
    const ImageGrid grid{16, 16, 1.0};
    FanBeamGeometry g;
    g.n_angles = 8;
    g.n_det = 16;
    g.det_spacing = 4.0;
    g.sad = 100.0;
    g.sdd = 200.0;
    const DenseMatrix A = build_dense_matrix(g, grid);
    RngStream rng(42);

    auto rel_err = [](const std::vector<double>& a, const std::vector<double>& b) {
        double num = 0, den = 0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            num += (a[i] - b[i]) * (a[i] - b[i]);
            den += b[i] * b[i];
        }
        return std::sqrt(num) / (std::sqrt(den) + 1e-300);
    };

    Image x(grid);
    for (double& v : x.values) v = rng.uniform();
    const double e_fwd = rel_err(forward_project(x, g).values, A.apply(x.values));

    Sinogram s(g, SinogramDomain::LineIntegral);
    for (double& v : s.values) v = rng.uniform();
    const double e_back = rel_err(back_project(s, g, grid).values, A.apply_transpose(s.values));

    const double e_den = rel_err(sqs_denominator(g, grid).values,
                                 A.apply_transpose(A.apply(std::vector<double>(256, 1.0))));

    const double worst = std::max({e_fwd, e_back, e_den});
    if (worst >= 1e-12)
        return fail(fmt("fwd %.2e back %.2e denom %.2e (>= 1e-12)", e_fwd, e_back, e_den));
    return pass(fmt("fwd %.2e back %.2e denom %.2e", e_fwd, e_back, e_den));
}

Outcome criterion_poisson_stats() {
    const int n = 100'000;
    const double b = 5e4, t = 0.9, r = 0.0;
    const double mu = b * std::exp(-t) + r;
    FanBeamGeometry g;
    g.n_angles = 1;
    g.n_det = n;
    g.det_spacing = 1.0;
    Sinogram li(g, SinogramDomain::LineIntegral, t);
    DoseModel dose;
    dose.b = {b};
    dose.r = {r};
    const Sinogram counts = simulate_counts(li, dose, RngStream(1234));
    double mean = 0.0;
    for (double c : counts.values) mean += c;
    mean /= n;
    double var = 0.0;
    for (double c : counts.values) var += (c - mean) * (c - mean);
    var /= n - 1;

    const double se_mean = std::sqrt(mu / n);
    const double se_var = std::sqrt((mu + 2.0 * mu * mu) / n);
    const double dm = std::abs(mean - mu) / se_mean;
    const double dv = std::abs(var - mu) / se_var;
    if (dm >= 4.0 || dv >= 4.0)
        return fail(
            fmt("mean %.1f (%.2f se), var %.1f (%.2f se) vs model %.1f", mean, dm, var, dv, mu));
    return pass(fmt("mean off %.2f se, variance off %.2f se (model mean %.1f)", dm, dv, mu));
}

Outcome criterion_log_round_trip() {
    const double b = 5e4, r = 2.0;
    FanBeamGeometry g;
    g.n_angles = 1;
    g.n_det = 256;
    g.det_spacing = 1.0;
    Sinogram counts(g, SinogramDomain::PhotonCount);
    std::vector<double> truth(256);
    for (int i = 0; i < 256; ++i) {
        truth[i] = 4.0 * i / 255.0;
        counts.values[i] = b * std::exp(-truth[i]) + r;
    }
    DoseModel dose;
    dose.b = {b};
    dose.r = {r};
    const auto [y, w] = counts_to_log_sinogram(counts, dose);
    double worst = 0.0;
    for (int i = 0; i < 256; ++i)
        worst = std::max(worst, std::abs(y.values[i] - truth[i]) / (std::abs(truth[i]) + 1e-9));
    if (worst >= 1e-12) return fail(fmt("worst relative error %.3e >= 1e-12", worst));
    return pass(fmt("worst relative error %.3e", worst));
}

Outcome criterion_score_finite_difference() {
    const auto t0 = clock_type::now();
    GmmDensity g;
    g.weights = {0.25, 0.35, 0.4};
    g.means = {{0.0, 0.5, -0.5, 1.0}, {1.0, -1.0, 0.3, 0.2}, {-0.7, 0.2, 0.9, -0.4}};
    g.variances = {0.3, 0.6, 0.45};
    RngStream rng(17);
    const double h = 1e-5;
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> x(4);
        for (double& v : x) v = 3.0 * (rng.uniform() - 0.5);
        const double sigma = 0.05 + rng.uniform();
        const auto s = analytic_gmm_score(g, x, sigma);
        double num = 0, den = 0;
        for (int i = 0; i < 4; ++i) {
            std::vector<double> xp = x, xm = x;
            xp[i] += h;
            xm[i] -= h;
            const double fd =
                (gmm_log_density(g, xp, sigma) - gmm_log_density(g, xm, sigma)) / (2 * h);
            num += (fd - s[i]) * (fd - s[i]);
            den += fd * fd;
        }
        worst = std::max(worst, std::sqrt(num) / (std::sqrt(den) + 1e-30));
    }
    const double dt = seconds_since(t0);
    if (worst >= 1e-6) return fail(fmt("worst relative error %.3e >= 1e-6", worst));
    if (dt >= 5.0) return fail(fmt("runtime %.1f s >= 5 s", dt));
    return pass(fmt("worst relative error %.3e, %.2f s", worst, dt));
}

Outcome criterion_dsm_fidelity() {
    const auto t0 = clock_type::now();
    const ImageGrid grid{8, 8, 1.0};
    const int d = 64;
    RngStream root(4242);

    std::vector<double> mu(d);
    for (int iy = 0; iy < 8; ++iy)
        for (int ix = 0; ix < 8; ++ix)
            mu[iy * 8 + ix] = 0.5 + 0.3 * std::sin(0.7 * ix) * std::cos(0.9 * iy);
    const double s = 0.2;

    RngStream data = root.substream("data");
    std::vector<Image> dataset;
    dataset.reserve(20'000);
    for (int n = 0; n < 20'000; ++n) {
        Image img(grid);
        for (int j = 0; j < d; ++j) img.values[j] = mu[j] + s * data.normal();
        dataset.push_back(std::move(img));
    }

    const NoiseSchedule sched = make_schedule(1.0, 0.01, 12);
    TrainConfig tc;
    tc.channels = 10;
    tc.hidden = {4 * d, 4 * d};
    tc.steps = 1200;
    tc.batch_size = 12;
    const TrainResult result = train_score(dataset, sched, tc, root.substream("training"));

    // A freshly initialized model (same init stream) is the reference for the
    // must-improve invariant.
    DenoiserScoreModel init_model = result.model;
    init_model_params(init_model, root.substream("training").substream("init"));

    GmmDensity gaussian;
    gaussian.weights = {1.0};
    gaussian.means = {mu};
    gaussian.variances = {s * s};

    RngStream eval = root.substream("eval");
    double min_cos = 1.0;
    double err_trained = 0.0, err_init = 0.0;
    for (int l = 0; l < sched.size(); ++l) {
        const double sigma = sched.sigmas[l];
        const double spread = std::sqrt(s * s + sigma * sigma);
        double cos_acc = 0.0;
        for (int p = 0; p < 100; ++p) {
            Image x(grid);
            for (int j = 0; j < d; ++j) x.values[j] = mu[j] + spread * eval.normal();
            const auto st = analytic_gmm_score(gaussian, x.values, sigma);
            const Image sm = channel_copy_score(result.model, x, sigma);
            const Image si = channel_copy_score(init_model, x, sigma);
            double ab = 0, aa = 0, bb = 0;
            for (int j = 0; j < d; ++j) {
                ab += st[j] * sm.values[j];
                aa += st[j] * st[j];
                bb += sm.values[j] * sm.values[j];
                err_trained += sigma * sigma * (sm.values[j] - st[j]) * (sm.values[j] - st[j]);
                err_init += sigma * sigma * (si.values[j] - st[j]) * (si.values[j] - st[j]);
            }
            cos_acc += ab / (std::sqrt(aa * bb) + 1e-30);
        }
        min_cos = std::min(min_cos, cos_acc / 100.0);
    }
    const double dt = seconds_since(t0);
    if (min_cos <= 0.95) return fail(fmt("min mean cosine %.4f <= 0.95", min_cos));
    if (err_trained >= err_init)
        return fail(
            fmt("weighted score error did not improve: %.3g vs init %.3g", err_trained, err_init));
    if (dt >= 300.0) return fail(fmt("training budget exceeded: %.0f s >= 300 s", dt));
    return pass(fmt("min mean cosine %.4f over 12 scales, weighted error %.3g < init %.3g, %.0f s",
                    min_cos, err_trained, err_init, dt));
}

Outcome criterion_zero_model_loss() {
    const ImageGrid grid{8, 8, 1.0};
    const int d = 64;
    const NoiseSchedule sched = make_schedule(1.0, 0.01, 12);
    RngStream data_rng(23);
    std::vector<Image> batch;  // 100 samples x 12 scales = 1200 draws
    for (int n = 0; n < 100; ++n) {
        Image img(grid);
        for (double& v : img.values) v = data_rng.uniform();
        batch.push_back(std::move(img));
    }
    DenoiserScoreModel zero;
    zero.channels = 1;
    zero.nx = 8;
    zero.ny = 8;
    zero.hidden = {8};
    const auto dims = zero.layer_dims();
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        zero.weights.push_back(Eigen::MatrixXd::Zero(dims[i + 1], dims[i]));
        zero.biases.push_back(Eigen::VectorXd::Zero(dims[i + 1]));
    }
    zero.skip = Eigen::VectorXd::Zero(zero.input_dim());

    const double loss = dsm_loss(zero, batch, sched, RngStream(7));
    const double expected = d / 2.0;
    const double rel = std::abs(loss - expected) / expected;
    if (rel >= 0.05)
        return fail(fmt("loss %.3f vs d/2 = %.1f (off %.1f%%)", loss, expected, 100 * rel));
    return pass(fmt("loss %.3f vs d/2 = %.1f (off %.2f%%)", loss, expected, 100 * rel));
}

Outcome criterion_mode_recovery() {
    GmmDensity gmm;
    gmm.weights = {0.8, 0.2};
    gmm.means = {{-4.0}, {4.0}};
    gmm.variances = {0.25, 0.25};
    const GmmScore score(gmm);
    const ImageGrid grid{1, 1, 1.0};
    const int n_chains = 5000;

    const NoiseSchedule annealed = make_schedule(8.0, 0.5, 10);
    RngStream chains(909);
    int left = 0;
    for (int c = 0; c < n_chains; ++c) {
        const Image s =
            langevin_sample(score, annealed, 100, 0.05, chains.substream(c), Image(grid));
        if (s.values[0] < 0.0) ++left;
    }
    const double w_annealed = static_cast<double>(left) / n_chains;

    const NoiseSchedule single = make_schedule(0.5, 0.5, 1);
    RngStream control_chains(909);
    left = 0;
    for (int c = 0; c < n_chains; ++c) {
        Image x0(grid);
        x0.values[0] = 12.0;  // far from both modes
        const Image s = langevin_sample(score, single, 100, 0.05, control_chains.substream(c), x0);
        if (s.values[0] < 0.0) ++left;
    }
    const double w_control = static_cast<double>(left) / n_chains;

    const double dev = std::abs(w_annealed - 0.8);
    const double dev_control = std::abs(w_control - 0.8);
    if (dev > 0.05) return fail(fmt("annealed weight %.4f deviates %.3f > 0.05", w_annealed, dev));
    return pass(
        fmt("annealed weight %.4f (dev %.3f); single-scale far-init control %.4f (dev %.3f, "
            "reported diagnostic)",
            w_annealed, dev, w_control, dev_control));
}

Outcome criterion_sqs_descent() {
    const ImageGrid grid = desk_grid();
    const FanBeamGeometry g = desk_geometry();
    const Image phantom = shepp_logan(grid);
    Image physical = phantom;
    for (double& v : physical.values) v *= kMuPerMm;
    DoseModel dose;
    dose.b = {5e4};
    const Sinogram counts =
        simulate_counts(forward_project(physical, g), dose, RngStream(55).substream("noise"));
    auto [y, w] = counts_to_log_sinogram(counts, dose);

    EaselParams params;
    params.inner_iters = 500;
    params.beta = 150.0;
    params.gamma = 0.0;
    params.zero_noise = true;
    const ZeroScore zero;
    const auto res = easel_reconstruct(y, g, grid, zero, make_schedule(0.5, 0.5, 1), params,
                                       RngStream(56), Image(grid));
    if (res.trace.records.size() != 500)
        return fail(fmt("expected 500 records, got %zu", res.trace.records.size()));
    for (std::size_t i = 1; i < res.trace.records.size(); ++i)
        if (res.trace.records[i].residual > res.trace.records[i - 1].residual)
            return fail(fmt("residual increased at iteration %zu: %.6g -> %.6g", i,
                            res.trace.records[i - 1].residual, res.trace.records[i].residual));
    return pass(fmt("residual %.4g -> %.4g monotone over 500 iterations",
                    res.trace.records.front().residual, res.trace.records.back().residual));
}

Outcome criterion_step_schedule() {
    const ImageGrid grid{8, 8, 1.0};
    FanBeamGeometry g;
    g.n_angles = 6;
    g.n_det = 24;
    g.det_spacing = 2.5;
    g.sad = 200.0;
    g.sdd = 400.0;
    const Image phantom = random_ellipse_phantom(grid, 2, 4, RngStream(9));
    const Sinogram y = forward_project(phantom, g);
    const NoiseSchedule sched = make_schedule(1.0, 0.01, 12);
    const double tau = 1.8e-5;

    EaselParams params;
    params.inner_iters = 3;
    params.tau = tau;
    params.beta = 2.0;
    params.zero_noise = true;
    const ZeroScore zero;
    const auto res = easel_reconstruct(y, g, grid, zero, sched, params, RngStream(2), Image(grid));
    if (res.trace.records.size() != 36)
        return fail(fmt("expected 36 records, got %zu", res.trace.records.size()));
    for (const TraceRecord& r : res.trace.records) {
        const double expected = tau * (r.sigma * r.sigma) / (sched.last() * sched.last());
        if (r.epsilon != expected)
            return fail(
                fmt("epsilon mismatch at scale %d: %.17g vs %.17g", r.scale, r.epsilon, expected));
    }
    if (res.trace.records.back().epsilon != tau)
        return fail(fmt("final epsilon %.17g != tau %.17g", res.trace.records.back().epsilon, tau));
    return pass("epsilon_l = tau sigma_l^2/sigma_L^2 exact for all scales; epsilon_L = tau");
}

Outcome criterion_end_to_end() {
    const auto t0 = clock_type::now();
    std::string info;
    const DenoiserScore score(desk_prior(&info));

    std::vector<DeskCase> cases;
    for (int k = 0; k < kTestPhantoms; ++k) cases.push_back(make_desk_case(k, 5e4));

    // TV baseline: weight picked from a log grid on the first phantom, then
    // frozen for the rest (reported alongside, ordering not asserted).
    double best_tv_weight = 0.1;
    {
        double best = -1e30;
        for (double wgt : {0.03, 0.1, 0.3, 1.0}) {
            Image tv = tv_reconstruct(cases[0].y, desk_geometry(), desk_grid(), wgt, 150);
            for (double& v : tv.values) v /= kMuPerMm;
            const double p = psnr(tv, cases[0].phantom);
            if (p > best) {
                best = p;
                best_tv_weight = wgt;
            }
        }
    }

    double fbp_acc = 0.0, easel_acc = 0.0, tv_acc = 0.0;
    for (int k = 0; k < kTestPhantoms; ++k) {
        fbp_acc += cases[k].fbp_psnr;
        easel_acc += run_easel_psnr(cases[k], score, k);
        Image tv = tv_reconstruct(cases[k].y, desk_geometry(), desk_grid(), best_tv_weight, 150);
        for (double& v : tv.values) v /= kMuPerMm;
        tv_acc += psnr(tv, cases[k].phantom);
    }
    fbp_acc /= kTestPhantoms;
    easel_acc /= kTestPhantoms;
    tv_acc /= kTestPhantoms;

    const double dt = seconds_since(t0);
    const double margin = easel_acc - fbp_acc;
    const std::string detail =
        fmt("EASEL %.2f dB vs FBP %.2f dB (margin %+.2f, need >= 2); TV %.2f dB at weight %g "
            "(reported); %s; %.0f s",
            easel_acc, fbp_acc, margin, tv_acc, best_tv_weight, info.c_str(), dt);
    if (margin < 2.0) return fail(detail);
    if (dt >= 1800.0) return fail(detail + " (budget exceeded)");
    return pass(detail);
}

Outcome criterion_dose_robustness() {
    const auto t0 = clock_type::now();
    const DenoiserScore score(desk_prior());

    double fbp_low = 0.0, easel_low = 0.0, easel_high = 0.0;
    for (int k = 0; k < kTestPhantoms; ++k) {
        const DeskCase low = make_desk_case(k, 1e4);
        const DeskCase high = make_desk_case(k, 1e5);
        fbp_low += low.fbp_psnr;
        easel_low += run_easel_psnr(low, score, 100 + k);
        easel_high += run_easel_psnr(high, score, 200 + k);
    }
    fbp_low /= kTestPhantoms;
    easel_low /= kTestPhantoms;
    easel_high /= kTestPhantoms;

    const double margin = easel_low - fbp_low;
    const double degradation = easel_high - easel_low;
    const double dt = seconds_since(t0);
    const std::string detail =
        fmt("same prior, no retraining: EASEL %.2f dB at b=1e5, %.2f dB at b=1e4 (degradation "
            "%.2f dB, reported); FBP at b=1e4 %.2f dB, margin %+.2f (need >= 2); %.0f s",
            easel_high, easel_low, degradation, fbp_low, margin, dt);
    if (margin < 2.0) return fail(detail);
    return pass(detail);
}

Outcome criterion_metrics() {
    Image a(ImageGrid{2, 1, 1.0}), b(ImageGrid{2, 1, 1.0});
    a.values = {1.0, 2.0};
    b.values = {2.0, 4.0};
    if (mae(a, b) != 1.5 || mae(b, a) != 1.5 || mae(a, a) != 0.0) return fail("mae examples failed");

    Image ref(ImageGrid{2, 1, 1.0}), x(ImageGrid{2, 1, 1.0});
    ref.values = {1.0, 0.0};
    x.values = {1.1, 0.1};
    if (std::abs(psnr(x, ref) - 20.0) > 1e-12) return fail("psnr hand example failed");
    if (!std::isinf(psnr(ref, ref))) return fail("psnr identical-image sentinel failed");

    // Brute-force SSIM window oracle on a 16x16 instance.
    RngStream rng(8);
    Image r16(ImageGrid{16, 16, 1.0});
    for (double& v : r16.values) v = rng.uniform();
    Image x16 = r16;
    for (double& v : x16.values) v += 0.1 * rng.normal();

    const int window = 11;
    const double sig = 1.5;
    std::vector<double> w2(window * window);
    double wsum = 0.0;
    for (int j = 0; j < window; ++j)
        for (int i = 0; i < window; ++i) {
            const double c = 0.5 * (window - 1);
            const double g = std::exp(-0.5 * ((i - c) * (i - c) + (j - c) * (j - c)) / (sig * sig));
            w2[j * window + i] = g;
            wsum += g;
        }
    for (double& v : w2) v /= wsum;
    double lo = r16.values[0], hi = r16.values[0];
    for (double v : r16.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double c1 = (0.01 * (hi - lo)) * (0.01 * (hi - lo));
    const double c2 = (0.03 * (hi - lo)) * (0.03 * (hi - lo));
    double acc = 0.0;
    int count = 0;
    for (int oy = 0; oy + window <= 16; ++oy)
        for (int ox = 0; ox + window <= 16; ++ox) {
            double mx = 0, mr = 0, sxx = 0, srr = 0, sxr = 0;
            for (int j = 0; j < window; ++j)
                for (int i = 0; i < window; ++i) {
                    const double ww = w2[j * window + i];
                    const double av = x16.at(ox + i, oy + j);
                    const double bv = r16.at(ox + i, oy + j);
                    mx += ww * av;
                    mr += ww * bv;
                    sxx += ww * av * av;
                    srr += ww * bv * bv;
                    sxr += ww * av * bv;
                }
            const double vx = sxx - mx * mx, vr = srr - mr * mr, cov = sxr - mx * mr;
            acc += ((2 * mx * mr + c1) * (2 * cov + c2)) /
                   ((mx * mx + mr * mr + c1) * (vx + vr + c2));
            ++count;
        }
    const double brute = acc / count;
    const double fast = ssim(x16, r16);
    if (std::abs(fast - brute) > 1e-12)
        return fail(fmt("ssim window oracle off by %.3e > 1e-12", std::abs(fast - brute)));
    if (ssim(r16, r16) != 1.0) return fail("ssim self-comparison is not exactly 1");
    return pass(fmt("mae/psnr hand values exact; ssim oracle gap %.2e", std::abs(fast - brute)));
}

Outcome criterion_determinism() {
    ExperimentConfig cfg;
    cfg.set("grid.nx", "32");
    cfg.set("grid.ny", "32");
    cfg.set("geometry.n_angles", "45");
    cfg.set("geometry.n_det", "64");
    cfg.set("geometry.det_spacing_mm", "2.0");
    cfg.set("schedule.L", "3");
    cfg.set("schedule.sigma_last", "0.05");
    cfg.set("easel.T", "4");
    cfg.set("easel.score", "gaussian:0.3,0.5");
    cfg.set("tv.iters", "25");
    cfg.set("phantom.kind", "random_ellipse");
    cfg.set("methods", "fbp,tv,easel");

    const fs::path base = fs::temp_directory_path() / "easel_acceptance_det";
    fs::remove_all(base);
    const PipelineReport r1 = run_pipeline(cfg, (base / "run1").string());
    const PipelineReport r2 = run_pipeline(cfg, (base / "run2").string());
    if (!r1.ok() || !r2.ok()) return fail("pipeline run reported errors");

    std::size_t compared = 0;
    for (const auto& entry : fs::directory_iterator(base / "run1")) {
        const auto name = entry.path().filename();
        std::ifstream f1(entry.path(), std::ios::binary);
        std::ifstream f2(base / "run2" / name, std::ios::binary);
        if (!f2) return fail("missing file in rerun: " + name.string());
        const std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
        const std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
        if (b1 != b2) return fail("byte mismatch in " + name.string());
        ++compared;
    }
    fs::remove_all(base);
    return pass(fmt("%zu artifacts byte-identical across reruns", compared));
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"projector adjointness < 1e-10 over 100 pairs", criterion_adjointness},
        {"dense-oracle equivalence < 1e-12 on 16x16/8x16", criterion_dense_oracle},
        {"Poisson count statistics within 4 SE at b=5e4", criterion_poisson_stats},
        {"log-transform round trip < 1e-12", criterion_log_round_trip},
        {"analytic GMM score vs finite differences < 1e-6", criterion_score_finite_difference},
        {"trained score cosine > 0.95 on all 12 scales", criterion_dsm_fidelity},
        {"zero-model DSM loss within 5% of d/2", criterion_zero_model_loss},
        {"annealed Langevin mode-weight recovery +-0.05", criterion_mode_recovery},
        {"SQS residual monotone over 500 iterations (64^2)", criterion_sqs_descent},
        {"trace step schedule epsilon_l = tau sigma_l^2/sigma_L^2", criterion_step_schedule},
        {"EASEL beats FBP by >= 2 dB on 10 phantoms (b=5e4)", criterion_end_to_end},
        {"same prior at b=1e4/1e5; >= 2 dB over FBP at b=1e4", criterion_dose_robustness},
        {"metric hand values and SSIM window oracle", criterion_metrics},
        {"pipeline reruns byte-identical", criterion_determinism},
    };

    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!selected.empty() && !selected.count(id)) continue;
        const auto t0 = clock_type::now();
        Outcome outcome;
        try {
            outcome = criteria[i].second();
        } catch (const std::exception& e) {
            outcome = fail(std::string("exception: ") + e.what());
        }
        std::printf("[%s] criterion %2d: %s -- %s (%.1f s)\n", outcome.pass ? "PASS" : "FAIL", id,
                    criteria[i].first.c_str(), outcome.detail.c_str(), seconds_since(t0));
        std::fflush(stdout);
        if (!outcome.pass) ++failures;
    }
    if (failures == 0) {
        std::printf("acceptance: all criteria passed\n");
    } else {
        std::printf("acceptance: %d criterion(s) failed\n", failures);
    }
    return failures == 0 ? 0 : 1;
}
