// Flat key-value experiment configuration. Every knob has a shipped default;
// a parsed config may override any known key and nothing else. The canonical
// text (defaults materialized, sorted keys, output directory excluded) defines
// the config hash stamped on artifacts.
#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "easel/engine.hpp"
#include "easel/io.hpp"
#include "easel/measurement.hpp"
#include "easel/rng.hpp"
#include "easel/schedule.hpp"
#include "easel/types.hpp"

namespace easel {

class ExperimentConfig {
public:
    static const std::map<std::string, std::string>& defaults() {
        static const std::map<std::string, std::string> d = {
            {"grid.nx", "128"},
            {"grid.ny", "128"},
            {"grid.pixel_size_mm", "1.0"},
            {"geometry.n_angles", "360"},
            {"geometry.n_det", "256"},
            {"geometry.det_spacing_mm", "1.6"},
            {"geometry.sad_mm", "500"},
            {"geometry.sdd_mm", "1000"},
            {"dose.b_photons", "50000"},
            {"dose.r_photons", "0"},
            {"schedule.sigma_first", "1.0"},
            {"schedule.sigma_last", "0.01"},
            {"schedule.L", "12"},
            {"easel.T", "150"},
            {"easel.tau", "1.8e-5"},
            {"easel.beta", "150"},
            {"easel.gamma", "0.5"},
            {"easel.lambda", "150"},
            {"easel.channels", "10"},
            {"easel.seed", "0"},  // 0 = derive from the run seed
            {"easel.grad_at_momentum", "false"},
            {"easel.init", "fbp"},          // fbp | zero
            {"easel.score", "zero"},        // zero | gaussian:<mean>,<std> | checkpoint:<path>
            {"easel.trace_metrics", "false"},  // record PSNR/SSIM vs the phantom per iteration
            {"phantom.kind", "shepp_logan"},  // shepp_logan | random_ellipse
            {"phantom.n_ellipses_min", "4"},
            {"phantom.n_ellipses_max", "10"},
            {"phantom.mu_per_mm", "0.04"},  // attenuation of normalized value 1
            {"phantom.index", "0"},
            {"tv.weight", "1.0"},
            {"tv.iters", "200"},
            {"fbp.filter", "ramlak"},  // ramlak | hann
            {"methods", "fbp"},
            {"output.dir", "out"},
            {"seed", "1"},
            {"train.n_phantoms", "200"},
            {"train.steps", "1200"},
            {"train.batch_size", "4"},
            {"train.learning_rate", "1e-3"},
            {"train.hidden", ""},  // empty = [4d, 4d]
        };
        return d;
    }

    ExperimentConfig() = default;

    void set(const std::string& key, const std::string& value) {
        if (!defaults().count(key))
            throw std::invalid_argument("config: unknown key '" + key + "'");
        overrides_[key] = value;
    }

    const std::string& get(const std::string& key) const {
        auto it = overrides_.find(key);
        if (it != overrides_.end()) return it->second;
        auto d = defaults().find(key);
        if (d == defaults().end()) throw std::invalid_argument("config: unknown key '" + key + "'");
        return d->second;
    }

    int get_int(const std::string& key) const { return std::stoi(get(key)); }
    double get_double(const std::string& key) const { return std::stod(get(key)); }
    std::uint64_t get_u64(const std::string& key) const { return std::stoull(get(key)); }
    bool get_bool(const std::string& key) const {
        const std::string& v = get(key);
        if (v == "true" || v == "1") return true;
        if (v == "false" || v == "0") return false;
        throw std::invalid_argument("config: key '" + key + "' is not a boolean: " + v);
    }

    static ExperimentConfig from_text(const std::string& text) {
        ExperimentConfig cfg;
        std::stringstream ss(text);
        std::string line;
        int lineno = 0;
        while (std::getline(ss, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            auto strip = [](std::string s) {
                const auto b = s.find_first_not_of(" \t\r");
                const auto e = s.find_last_not_of(" \t\r");
                return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
            };
            line = strip(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                            " is not 'key = value'");
            cfg.set(strip(line.substr(0, eq)), strip(line.substr(eq + 1)));
        }
        return cfg;
    }

    static ExperimentConfig from_file(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw std::runtime_error("config: cannot open " + path);
        std::stringstream ss;
        ss << f.rdbuf();
        return from_text(ss.str());
    }

    // Defaults materialized, keys sorted; the output directory is excluded so
    // reruns into different directories stay byte-identical.
    std::string canonical_text() const {
        std::string out;
        for (const auto& [key, def] : defaults()) {
            if (key == "output.dir") continue;
            out += key;
            out += " = ";
            out += get(key);
            out += "\n";
        }
        return out;
    }

    std::string hash_hex() const {
        const std::uint64_t h = detail::fnv1a(canonical_text());
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
        return buf;
    }

    ArtifactStamp stamp() const { return {hash_hex(), get_u64("seed")}; }

    // --- typed views ------------------------------------------------------

    ImageGrid grid() const {
        ImageGrid g{get_int("grid.nx"), get_int("grid.ny"), get_double("grid.pixel_size_mm")};
        g.validate();
        return g;
    }

    FanBeamGeometry geometry() const {
        FanBeamGeometry g;
        g.n_angles = get_int("geometry.n_angles");
        g.n_det = get_int("geometry.n_det");
        g.det_spacing = get_double("geometry.det_spacing_mm");
        g.sad = get_double("geometry.sad_mm");
        g.sdd = get_double("geometry.sdd_mm");
        g.validate();
        return g;
    }

    DoseModel dose() const {
        DoseModel d;
        d.b = {get_double("dose.b_photons")};
        d.r = {get_double("dose.r_photons")};
        d.validate(1);
        return d;
    }

    NoiseSchedule schedule() const {
        return make_schedule(get_double("schedule.sigma_first"), get_double("schedule.sigma_last"),
                             get_int("schedule.L"));
    }

    EaselParams easel_params() const {
        EaselParams p;
        p.inner_iters = get_int("easel.T");
        p.tau = get_double("easel.tau");
        p.beta = get_double("easel.beta");
        p.gamma = get_double("easel.gamma");
        p.lambda = get_double("easel.lambda");
        p.channels = get_int("easel.channels");
        p.seed = get_u64("easel.seed");
        p.grad_at_momentum = get_bool("easel.grad_at_momentum");
        p.validate();
        return p;
    }

    std::vector<std::string> methods() const {
        std::vector<std::string> out;
        std::stringstream ss(get("methods"));
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            const auto b = tok.find_first_not_of(" \t");
            const auto e = tok.find_last_not_of(" \t");
            if (b == std::string::npos) continue;
            out.push_back(tok.substr(b, e - b + 1));
        }
        return out;
    }

    RngStream run_stream() const { return RngStream(get_u64("seed")); }

    // Every block must validate before any compute starts.
    void validate() const {
        const ImageGrid g = grid();
        const FanBeamGeometry geo = geometry();
        require_grid_in_fov(geo, g, "config");
        dose();
        schedule();
        easel_params();
        const std::string kind = get("phantom.kind");
        if (kind != "shepp_logan" && kind != "random_ellipse")
            throw std::invalid_argument("config: unknown phantom.kind " + kind);
        if (get_int("phantom.n_ellipses_min") < 0 ||
            get_int("phantom.n_ellipses_max") < get_int("phantom.n_ellipses_min"))
            throw std::invalid_argument("config: bad phantom ellipse count range");
        if (!(get_double("phantom.mu_per_mm") > 0.0))
            throw std::invalid_argument("config: phantom.mu_per_mm must be > 0");
        const std::string filter = get("fbp.filter");
        if (filter != "ramlak" && filter != "hann")
            throw std::invalid_argument("config: unknown fbp.filter " + filter);
        const std::string init = get("easel.init");
        if (init != "fbp" && init != "zero")
            throw std::invalid_argument("config: unknown easel.init " + init);
        if (!(get_double("tv.weight") >= 0.0) || get_int("tv.iters") < 1)
            throw std::invalid_argument("config: bad tv block");
        const std::string score = get("easel.score");
        if (score != "zero" && score.rfind("gaussian:", 0) != 0 && score.rfind("checkpoint:", 0) != 0)
            throw std::invalid_argument("config: easel.score must be zero, gaussian:<mean>,<std> "
                                        "or checkpoint:<path>");
        for (const std::string& m : methods())
            if (m != "fbp" && m != "tv" && m != "easel")
                throw std::invalid_argument("config: unknown method " + m);
    }

private:
    std::map<std::string, std::string> overrides_;
};

}  // namespace easel
