// Command-line harness: configuration-driven experiment pipelines plus
// file-level building blocks (phantom, project, simulate, train-score,
// reconstruct, evaluate, sweep, report).
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "easel/config.hpp"
#include "easel/dsm.hpp"
#include "easel/engine.hpp"
#include "easel/fbp.hpp"
#include "easel/io.hpp"
#include "easel/measurement.hpp"
#include "easel/metrics.hpp"
#include "easel/phantom.hpp"
#include "easel/pipeline.hpp"
#include "easel/projector.hpp"
#include "easel/tv.hpp"

namespace fs = std::filesystem;

namespace {

struct ConfigCli {
    std::string config_file;
    std::vector<std::string> sets;                           // --set key=value
    std::vector<std::pair<std::string, std::string>> flags;  // mirrored key flags

    // Precedence: flag > --set > file > default.
    easel::ExperimentConfig resolve() const {
        easel::ExperimentConfig cfg;
        if (!config_file.empty()) cfg = easel::ExperimentConfig::from_file(config_file);
        for (const std::string& kv : sets) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("--set expects key=value, got: " + kv);
            cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
        }
        for (const auto& [key, value] : flags) cfg.set(key, value);
        return cfg;
    }
};

void attach_config_options(CLI::App* cmd, ConfigCli& cc) {
    cmd->add_option("-c,--config", cc.config_file, "Experiment config file");
    cmd->add_option("--set", cc.sets, "Override a config key (key=value), repeatable");
    for (const auto& [key, def] : easel::ExperimentConfig::defaults()) {
        cmd->add_option_function<std::string>(
            "--" + key,
            [&cc, key = key](const std::string& v) { cc.flags.emplace_back(key, v); },
            "Config key (default: " + (def.empty() ? std::string("<auto>") : def) + ")");
    }
}

int fail(const std::string& stage, const std::string& message) {
    std::cerr << "error at stage " << stage << ": " << message << "\n";
    return 1;
}

std::string default_out(const easel::ExperimentConfig& cfg, const std::string& name) {
    return (fs::path(cfg.get("output.dir")) / name).string();
}

void print_metrics_row(const std::string& method, const easel::MetricReport& m) {
    std::printf("%s: mae=%.6g psnr=%.4g dB ssim=%.4g\n", method.c_str(), m.mae, m.psnr, m.ssim);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Low-dose CT reconstruction toolkit (annealed score-prior + SQS engine)"};
    app.require_subcommand(1);

    // phantom
    auto* cmd_phantom = app.add_subcommand("phantom", "Render the configured phantom");
    ConfigCli cc_phantom;
    attach_config_options(cmd_phantom, cc_phantom);
    std::string phantom_out;
    cmd_phantom->add_option("-o,--out", phantom_out, "Output image path (.img)");

    // project
    auto* cmd_project = app.add_subcommand(
        "project", "Forward-project an image (scaled by phantom.mu_per_mm) to line integrals");
    ConfigCli cc_project;
    attach_config_options(cmd_project, cc_project);
    std::string project_in, project_out;
    cmd_project->add_option("-i,--image", project_in, "Input image (.img), normalized units");
    cmd_project->add_option("-o,--out", project_out, "Output sinogram path (.img)");

    // simulate
    auto* cmd_simulate = app.add_subcommand(
        "simulate", "Simulate photon counts from line integrals and log-transform them");
    ConfigCli cc_simulate;
    attach_config_options(cmd_simulate, cc_simulate);
    std::string simulate_in, simulate_prefix;
    cmd_simulate->add_option("-i,--sino", simulate_in, "Line-integral sinogram (.img)");
    cmd_simulate->add_option("-o,--out-prefix", simulate_prefix,
                             "Output prefix; writes <prefix>_counts/_y/_w.img");

    // train-score
    auto* cmd_train = app.add_subcommand(
        "train-score", "Train the denoiser score model on the configured phantom family");
    ConfigCli cc_train;
    attach_config_options(cmd_train, cc_train);
    std::string train_out;
    cmd_train->add_option("-o,--out", train_out, "Checkpoint output path");

    // reconstruct
    auto* cmd_recon = app.add_subcommand("reconstruct", "Reconstruct a log sinogram");
    ConfigCli cc_recon;
    attach_config_options(cmd_recon, cc_recon);
    std::string recon_in, recon_out, recon_method = "fbp";
    cmd_recon->add_option("-i,--sino", recon_in, "Log sinogram y (.img)")->required();
    cmd_recon->add_option("-m,--method", recon_method, "fbp | tv | easel");
    cmd_recon->add_option("-o,--out", recon_out, "Output image path (.img), normalized units");

    // evaluate
    auto* cmd_eval = app.add_subcommand("evaluate", "Metrics of a reconstruction vs a reference");
    std::string eval_recon, eval_ref, eval_report;
    cmd_eval->add_option("-i,--recon", eval_recon, "Reconstruction (.img)")->required();
    cmd_eval->add_option("-r,--reference", eval_ref, "Reference image (.img)")->required();
    cmd_eval->add_option("--report", eval_report, "Append the metrics row to this CSV file");

    // sweep
    auto* cmd_sweep = app.add_subcommand("sweep", "Run the pipeline over a list of parameter values");
    ConfigCli cc_sweep;
    attach_config_options(cmd_sweep, cc_sweep);
    std::string sweep_param, sweep_values;
    cmd_sweep->add_option("-p,--param", sweep_param, "Config key to sweep")->required();
    cmd_sweep->add_option("-v,--values", sweep_values, "Comma-separated values")->required();

    // report
    auto* cmd_report = app.add_subcommand("report", "Run the full pipeline and write a report directory");
    ConfigCli cc_report;
    attach_config_options(cmd_report, cc_report);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*cmd_phantom) {
            const auto cfg = cc_phantom.resolve();
            cfg.validate();
            const easel::Image img = easel::make_phantom(cfg);
            const std::string out = phantom_out.empty() ? default_out(cfg, "phantom.img") : phantom_out;
            fs::create_directories(fs::path(out).parent_path().empty() ? "." : fs::path(out).parent_path().string());
            easel::save_image(out, img, cfg.stamp());
            easel::save_png16(fs::path(out).replace_extension(".png").string(), img);
            std::cout << "wrote " << out << "\n";
            return 0;
        }

        if (*cmd_project) {
            const auto cfg = cc_project.resolve();
            cfg.validate();
            const std::string in = project_in.empty() ? default_out(cfg, "phantom.img") : project_in;
            const easel::Image img = easel::load_image(in);
            const double mu = cfg.get_double("phantom.mu_per_mm");
            const easel::Sinogram sino =
                easel::forward_project(easel::detail::scaled_image(img, mu), cfg.geometry());
            const std::string out = project_out.empty() ? default_out(cfg, "sino_true.img") : project_out;
            easel::save_sinogram(out, sino, cfg.stamp());
            std::cout << "wrote " << out << "\n";
            return 0;
        }

        if (*cmd_simulate) {
            const auto cfg = cc_simulate.resolve();
            cfg.validate();
            const std::string in = simulate_in.empty() ? default_out(cfg, "sino_true.img") : simulate_in;
            const easel::Sinogram sino = easel::load_sinogram(in);
            const easel::DoseModel dose = cfg.dose();
            easel::RngStream noise = cfg.run_stream().substream("noise");
            const easel::Sinogram counts = easel::simulate_counts(sino, dose, noise);
            const auto [y, w] = easel::counts_to_log_sinogram(counts, dose);
            const std::string prefix =
                simulate_prefix.empty() ? default_out(cfg, "sino") : simulate_prefix;
            easel::save_sinogram(prefix + "_counts.img", counts, cfg.stamp());
            easel::save_sinogram(prefix + "_y.img", y, cfg.stamp());
            easel::save_sinogram(prefix + "_w.img", w, cfg.stamp());
            std::cout << "wrote " << prefix << "_{counts,y,w}.img\n";
            return 0;
        }

        if (*cmd_train) {
            const auto cfg = cc_train.resolve();
            cfg.validate();
            const easel::ImageGrid grid = cfg.grid();
            easel::RngStream family = cfg.run_stream().substream("train_phantoms");
            std::vector<easel::Image> dataset;
            const int n = cfg.get_int("train.n_phantoms");
            dataset.reserve(n);
            for (int i = 0; i < n; ++i)
                dataset.push_back(easel::random_ellipse_phantom(
                    grid, cfg.get_int("phantom.n_ellipses_min"), cfg.get_int("phantom.n_ellipses_max"),
                    family.substream(static_cast<std::uint64_t>(i))));

            easel::TrainConfig tc;
            tc.channels = cfg.get_int("easel.channels");
            tc.steps = cfg.get_int("train.steps");
            tc.batch_size = cfg.get_int("train.batch_size");
            tc.learning_rate = cfg.get_double("train.learning_rate");
            if (!cfg.get("train.hidden").empty())
                tc.hidden = easel::detail::split_ints(cfg.get("train.hidden"));

            const auto result = easel::train_score(dataset, cfg.schedule(), tc,
                                                   cfg.run_stream().substream("training"));
            const std::string out = train_out.empty() ? default_out(cfg, "score.ckpt") : train_out;
            fs::create_directories(fs::path(out).parent_path().empty() ? "." : fs::path(out).parent_path().string());
            easel::save_score_model(out, result.model);
            std::printf("trained %zu params, loss %.4g -> %.4g, wrote %s\n",
                        result.model.parameter_count(), result.loss_trace.front(),
                        result.loss_trace.back(), out.c_str());
            return 0;
        }

        if (*cmd_recon) {
            const auto cfg = cc_recon.resolve();
            cfg.validate();
            const easel::ImageGrid grid = cfg.grid();
            const easel::Sinogram y = easel::load_sinogram(recon_in);
            const easel::FanBeamGeometry geometry = y.geometry;
            const double mu = cfg.get_double("phantom.mu_per_mm");
            const easel::FbpFilter filter =
                cfg.get("fbp.filter") == "hann" ? easel::FbpFilter::Hann : easel::FbpFilter::RamLak;

            easel::Image recon;
            if (recon_method == "fbp") {
                recon = easel::detail::scaled_image(easel::fbp_ramp(y, geometry, grid, filter), 1.0 / mu);
            } else if (recon_method == "tv") {
                recon = easel::detail::scaled_image(
                    easel::tv_reconstruct(y, geometry, grid, cfg.get_double("tv.weight"),
                                          cfg.get_int("tv.iters")),
                    1.0 / mu);
            } else if (recon_method == "easel") {
                const easel::Sinogram y_norm = easel::detail::scaled_sinogram(y, 1.0 / mu);
                const auto score = easel::make_score_function(cfg, grid);
                easel::Image x0(grid);
                if (cfg.get("easel.init") == "fbp")
                    x0 = easel::detail::scaled_image(easel::fbp_ramp(y, geometry, grid, filter), 1.0 / mu);
                const easel::EaselParams params = cfg.easel_params();
                easel::RngStream stream = params.seed != 0
                                              ? easel::RngStream(params.seed)
                                              : cfg.run_stream().substream("langevin");
                auto res = easel::easel_reconstruct(y_norm, geometry, grid, *score, cfg.schedule(),
                                                    params, stream, x0);
                const std::string out =
                    recon_out.empty() ? default_out(cfg, "recon_easel.img") : recon_out;
                easel::detail::write_trace_csv(
                    fs::path(out).replace_extension(".trace.csv").string(), res.trace, cfg.stamp());
                recon = res.image;
            } else {
                return fail("reconstruct", "unknown method " + recon_method);
            }

            const std::string out =
                recon_out.empty() ? default_out(cfg, "recon_" + recon_method + ".img") : recon_out;
            fs::create_directories(fs::path(out).parent_path().empty() ? "." : fs::path(out).parent_path().string());
            easel::save_image(out, recon, cfg.stamp());
            easel::save_png16(fs::path(out).replace_extension(".png").string(), recon);
            std::cout << "wrote " << out << "\n";
            return 0;
        }

        if (*cmd_eval) {
            const easel::Image recon = easel::load_image(eval_recon);
            const easel::Image ref = easel::load_image(eval_ref);
            const easel::MetricReport m = easel::evaluate_metrics(recon, ref);
            print_metrics_row(fs::path(eval_recon).stem().string(), m);
            if (!eval_report.empty()) {
                const bool fresh = !fs::exists(eval_report);
                std::ofstream f(eval_report, std::ios::app);
                if (fresh) f << "image,mae,psnr_db,ssim\n";
                f << fs::path(eval_recon).stem().string() << ","
                  << easel::detail::format_double(m.mae) << ","
                  << easel::detail::format_double(m.psnr) << ","
                  << easel::detail::format_double(m.ssim) << "\n";
            }
            return 0;
        }

        if (*cmd_sweep) {
            const auto cfg = cc_sweep.resolve();
            std::vector<std::string> values;
            std::stringstream ss(sweep_values);
            std::string tok;
            while (std::getline(ss, tok, ',')) values.push_back(tok);
            const easel::SweepTable table = easel::sweep(cfg, sweep_param, values);
            for (const easel::SweepRow& row : table.rows) {
                if (!row.error.empty()) {
                    std::printf("%s=%s: error: %s\n", sweep_param.c_str(), row.value.c_str(),
                                row.error.c_str());
                    continue;
                }
                for (const easel::MetricsRow& m : row.rows)
                    std::printf("%s=%s %s: mae=%.6g psnr=%.4g ssim=%.4g\n", sweep_param.c_str(),
                                row.value.c_str(), m.method.c_str(), m.metrics.mae, m.metrics.psnr,
                                m.metrics.ssim);
            }
            return 0;
        }

        if (*cmd_report) {
            const auto cfg = cc_report.resolve();
            const easel::PipelineReport rep = easel::run_pipeline(cfg);
            for (const easel::MetricsRow& row : rep.rows) print_metrics_row(row.method, row.metrics);
            if (!rep.ok()) return fail(rep.errors.front().first, rep.errors.front().second);
            std::cout << "report written to " << rep.out_dir << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        return fail(app.get_subcommands().empty() ? "cli" : app.get_subcommands()[0]->get_name(),
                    e.what());
    }
    return 0;
}
