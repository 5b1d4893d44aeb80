// Configuration-driven experiment runner: phantom -> projection -> counts ->
// log transform -> reconstructions -> metrics, all artifacts stamped with the
// config hash and seed so a rerun with the same config is byte-identical.
#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "easel/config.hpp"
#include "easel/dsm.hpp"
#include "easel/engine.hpp"
#include "easel/fbp.hpp"
#include "easel/io.hpp"
#include "easel/measurement.hpp"
#include "easel/metrics.hpp"
#include "easel/phantom.hpp"
#include "easel/projector.hpp"
#include "easel/tv.hpp"

namespace easel {

struct MetricsRow {
    std::string method;
    MetricReport metrics;
};

struct PipelineReport {
    std::string out_dir;
    std::vector<MetricsRow> rows;
    std::vector<std::pair<std::string, std::string>> errors;  // (stage, message)

    bool ok() const { return errors.empty(); }
};

namespace detail {

inline Image scaled_image(const Image& img, double factor) {
    Image out = img;
    for (double& v : out.values) v *= factor;
    return out;
}

inline Sinogram scaled_sinogram(const Sinogram& s, double factor) {
    Sinogram out = s;
    for (double& v : out.values) v *= factor;
    return out;
}

inline std::string metrics_csv_line(const std::string& method, const MetricReport& m) {
    return method + "," + format_double(m.mae) + "," + format_double(m.psnr) + "," +
           format_double(m.ssim) + "\n";
}

inline void write_trace_csv(const std::string& path, const ReconTrace& trace,
                            const ArtifactStamp& stamp) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    f << "# easel-trace" << stamp.header_suffix() << "\n";
    f << "iteration,l,t,sigma,epsilon,residual,psnr,ssim\n";
    for (const TraceRecord& r : trace.records) {
        f << r.iteration << "," << r.scale << "," << r.inner << "," << format_double(r.sigma)
          << "," << format_double(r.epsilon) << "," << format_double(r.residual) << ",";
        if (std::isfinite(r.psnr)) f << format_double(r.psnr);
        f << ",";
        if (std::isfinite(r.ssim)) f << format_double(r.ssim);
        f << "\n";
    }
}

}  // namespace detail

// Builds the score function named by easel.score. The denoiser checkpoint must
// match the reconstruction grid.
inline std::unique_ptr<ScoreFunction> make_score_function(const ExperimentConfig& cfg,
                                                          const ImageGrid& grid) {
    const std::string spec = cfg.get("easel.score");
    if (spec == "zero") return std::make_unique<ZeroScore>();
    if (spec.rfind("gaussian:", 0) == 0) {
        const std::string args = spec.substr(9);
        const auto comma = args.find(',');
        if (comma == std::string::npos)
            throw std::invalid_argument("easel.score gaussian needs <mean>,<std>");
        return std::make_unique<IsotropicGaussianScore>(std::stod(args.substr(0, comma)),
                                                        std::stod(args.substr(comma + 1)));
    }
    if (spec.rfind("checkpoint:", 0) == 0) {
        DenoiserScoreModel model = load_score_model(spec.substr(11));
        if (model.nx != grid.nx || model.ny != grid.ny)
            throw std::invalid_argument("checkpoint resolution " + std::to_string(model.nx) + "x" +
                                        std::to_string(model.ny) + " does not match the grid");
        return std::make_unique<DenoiserScore>(std::move(model));
    }
    throw std::invalid_argument("unknown easel.score: " + spec);
}

inline Image make_phantom(const ExperimentConfig& cfg) {
    const ImageGrid grid = cfg.grid();
    if (cfg.get("phantom.kind") == "shepp_logan") return shepp_logan(grid);
    RngStream stream = cfg.run_stream().substream("phantom").substream(
        static_cast<std::uint64_t>(cfg.get_int("phantom.index")));
    return random_ellipse_phantom(grid, cfg.get_int("phantom.n_ellipses_min"),
                                  cfg.get_int("phantom.n_ellipses_max"), stream);
}

inline PipelineReport run_pipeline(const ExperimentConfig& cfg,
                                   const std::string& out_dir_override = "") {
    namespace fs = std::filesystem;
    PipelineReport report;
    const std::string out_dir =
        out_dir_override.empty() ? cfg.get("output.dir") : out_dir_override;
    report.out_dir = out_dir;

    auto fail = [&](const std::string& stage, const std::string& message) {
        report.errors.emplace_back(stage, message);
        std::ofstream err(fs::path(out_dir) / "error.txt", std::ios::app);
        err << stage << ": " << message << "\n";
    };

    const ArtifactStamp stamp = cfg.stamp();
    try {
        cfg.validate();
        fs::create_directories(out_dir);
        std::ofstream snap(fs::path(out_dir) / "config.txt");
        snap << "# config_hash=" << cfg.hash_hex() << "\n" << cfg.canonical_text();
    } catch (const std::exception& e) {
        fs::create_directories(out_dir);
        fail("config", e.what());
        return report;
    }

    const ImageGrid grid = cfg.grid();
    const FanBeamGeometry geometry = cfg.geometry();
    const double mu = cfg.get_double("phantom.mu_per_mm");

    Image phantom;  // normalized [0, 1]
    try {
        phantom = make_phantom(cfg);
        save_image((fs::path(out_dir) / "phantom.img").string(), phantom, stamp);
        save_png16((fs::path(out_dir) / "phantom.png").string(), phantom);
    } catch (const std::exception& e) {
        fail("phantom", e.what());
        return report;
    }

    Sinogram sino_true;  // physical line integrals of mu * phantom
    try {
        sino_true = forward_project(detail::scaled_image(phantom, mu), geometry);
        save_sinogram((fs::path(out_dir) / "sino_true.img").string(), sino_true, stamp);
    } catch (const std::exception& e) {
        fail("project", e.what());
        return report;
    }

    Sinogram counts;
    const DoseModel dose = cfg.dose();
    try {
        RngStream noise = cfg.run_stream().substream("noise");
        counts = simulate_counts(sino_true, dose, noise);
        save_sinogram((fs::path(out_dir) / "sino_counts.img").string(), counts, stamp);
    } catch (const std::exception& e) {
        fail("simulate", e.what());
        return report;
    }

    Sinogram y, weights;
    try {
        std::tie(y, weights) = counts_to_log_sinogram(counts, dose);
        save_sinogram((fs::path(out_dir) / "sino_y.img").string(), y, stamp);
        save_sinogram((fs::path(out_dir) / "sino_w.img").string(), weights, stamp);
    } catch (const std::exception& e) {
        fail("log_transform", e.what());
        return report;
    }

    const FbpFilter filter = cfg.get("fbp.filter") == "hann" ? FbpFilter::Hann : FbpFilter::RamLak;
    auto save_recon = [&](const std::string& name, const Image& recon_norm) {
        save_image((fs::path(out_dir) / ("recon_" + name + ".img")).string(), recon_norm, stamp);
        save_png16((fs::path(out_dir) / ("recon_" + name + ".png")).string(), recon_norm);
        report.rows.push_back({name, evaluate_metrics(recon_norm, phantom)});
    };

    for (const std::string& method : cfg.methods()) {
        try {
            if (method == "fbp") {
                const Image recon = fbp_ramp(y, geometry, grid, filter);
                save_recon("fbp", detail::scaled_image(recon, 1.0 / mu));
            } else if (method == "tv") {
                const TvResult tv = tv_reconstruct_traced(y, geometry, grid,
                                                          cfg.get_double("tv.weight"),
                                                          cfg.get_int("tv.iters"));
                std::ofstream tf(fs::path(out_dir) / "trace_tv.csv");
                tf << "# easel-tv-trace" << stamp.header_suffix() << "\niteration,objective,residual\n";
                for (std::size_t k = 0; k < tv.objective_trace.size(); ++k)
                    tf << k << "," << detail::format_double(tv.objective_trace[k]) << ","
                       << detail::format_double(tv.residual_trace[k]) << "\n";
                save_recon("tv", detail::scaled_image(tv.image, 1.0 / mu));
            } else if (method == "easel") {
                // The engine runs in the normalized units the prior was
                // trained in; the measured line integrals are rescaled by the
                // recorded affine map (division by mu) instead.
                const Sinogram y_norm = detail::scaled_sinogram(y, 1.0 / mu);
                const auto score = make_score_function(cfg, grid);
                Image x0(grid);
                if (cfg.get("easel.init") == "fbp")
                    x0 = detail::scaled_image(fbp_ramp(y, geometry, grid, filter), 1.0 / mu);
                const EaselParams params = cfg.easel_params();
                RngStream engine_stream = params.seed != 0
                                              ? RngStream(params.seed)
                                              : cfg.run_stream().substream("langevin");
                const Image* trace_ref =
                    cfg.get_bool("easel.trace_metrics") ? &phantom : nullptr;
                const EaselResult res = easel_reconstruct(y_norm, geometry, grid, *score,
                                                          cfg.schedule(), params, engine_stream, x0,
                                                          trace_ref);
                detail::write_trace_csv((fs::path(out_dir) / "trace_easel.csv").string(), res.trace,
                                        stamp);
                save_recon("easel", res.image);
            } else {
                throw std::invalid_argument("unknown method " + method);
            }
        } catch (const std::exception& e) {
            fail("method:" + method, e.what());
        }
    }

    try {
        std::ofstream mf(fs::path(out_dir) / "metrics.csv");
        mf << "# easel-metrics units=normalized" << stamp.header_suffix() << "\n";
        mf << "method,mae,psnr_db,ssim\n";
        for (const MetricsRow& row : report.rows)
            mf << detail::metrics_csv_line(row.method, row.metrics);
    } catch (const std::exception& e) {
        fail("metrics", e.what());
    }
    return report;
}

struct SweepRow {
    std::string value;
    std::vector<MetricsRow> rows;
    std::string error;  // empty on success
};

struct SweepTable {
    std::string parameter;
    std::vector<SweepRow> rows;
};

// Runs the pipeline once per parameter value; failures are recorded per value
// and the sweep continues. Each value owns an isolated output subdirectory.
inline SweepTable sweep(const ExperimentConfig& cfg, const std::string& parameter,
                        const std::vector<std::string>& values,
                        const std::string& out_dir_override = "") {
    namespace fs = std::filesystem;
    SweepTable table;
    table.parameter = parameter;
    const std::string base =
        out_dir_override.empty() ? cfg.get("output.dir") : out_dir_override;
    for (const std::string& value : values) {
        SweepRow row;
        row.value = value;
        try {
            ExperimentConfig sub = cfg;
            sub.set(parameter, value);
            const std::string sub_dir =
                (fs::path(base) / ("sweep_" + parameter + "=" + value)).string();
            const PipelineReport rep = run_pipeline(sub, sub_dir);
            row.rows = rep.rows;
            if (!rep.ok()) row.error = rep.errors.front().first + ": " + rep.errors.front().second;
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        table.rows.push_back(std::move(row));
    }

    if (!values.empty()) {
        fs::create_directories(base);
        std::ofstream f(fs::path(base) / ("sweep_" + parameter + ".csv"));
        f << "# easel-sweep parameter=" << parameter << "\n";
        f << parameter << ",method,mae,psnr_db,ssim,error\n";
        for (const SweepRow& row : table.rows) {
            if (row.rows.empty())
                f << row.value << ",,,,," << row.error << "\n";
            for (const MetricsRow& m : row.rows)
                f << row.value << "," << m.method << "," << detail::format_double(m.metrics.mae)
                  << "," << detail::format_double(m.metrics.psnr) << ","
                  << detail::format_double(m.metrics.ssim) << "," << row.error << "\n";
        }
    }
    return table;
}

}  // namespace easel
