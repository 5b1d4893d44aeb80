// Trainable denoiser score model: a dense network over the channel-copied
// pixel stack, with the noise-conditioning rule s(x; sigma) = f(x) / sigma.
// The channel-copy wrapper replicates a single-channel image into C identical
// channels before the network and averages the C output channels after.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "easel/rng.hpp"
#include "easel/types.hpp"

namespace easel {

struct DenoiserScoreModel {
    int channels = 1;            // C
    int nx = 0, ny = 0;          // training resolution
    std::vector<int> hidden;     // hidden layer widths
    std::string activation = "tanh";
    double sigma_first = 1.0, sigma_last = 0.01;  // schedule endpoints used in training
    int schedule_len = 1;

    std::vector<Eigen::MatrixXd> weights;  // weights[i]: (out x in)
    std::vector<Eigen::VectorXd> biases;
    Eigen::VectorXd skip;  // elementwise linear skip, one gain per stack entry

    int pixel_count() const { return nx * ny; }
    int input_dim() const { return channels * pixel_count(); }

    std::vector<int> layer_dims() const {
        std::vector<int> dims;
        dims.push_back(input_dim());
        for (int h : hidden) dims.push_back(h);
        dims.push_back(input_dim());
        return dims;
    }

    std::size_t parameter_count() const {
        std::size_t n = static_cast<std::size_t>(skip.size());
        for (std::size_t i = 0; i < weights.size(); ++i)
            n += static_cast<std::size_t>(weights[i].size()) + biases[i].size();
        return n;
    }

    void validate() const {
        if (channels < 1 || nx < 1 || ny < 1)
            throw std::invalid_argument("DenoiserScoreModel: bad shape");
        if (activation != "tanh")
            throw std::invalid_argument("DenoiserScoreModel: unknown activation " + activation);
        const auto dims = layer_dims();
        if (weights.size() + 1 != dims.size() || biases.size() != weights.size())
            throw std::invalid_argument("DenoiserScoreModel: parameter list does not match descriptor");
        for (std::size_t i = 0; i < weights.size(); ++i) {
            if (weights[i].rows() != dims[i + 1] || weights[i].cols() != dims[i] ||
                biases[i].size() != dims[i + 1])
                throw std::invalid_argument("DenoiserScoreModel: layer shape mismatch");
        }
        if (skip.size() != input_dim())
            throw std::invalid_argument("DenoiserScoreModel: skip gain size mismatch");
    }

    struct ForwardCache {
        std::vector<Eigen::MatrixXd> activations;  // activations[0] = input
    };

    // f_theta on a batch of stacks (columns): dense layers with tanh hidden
    // units and a linear output, plus an elementwise linear skip from the
    // input. The skip carries the full-rank part of the denoising direction
    // that a narrow hidden bottleneck cannot represent.
    Eigen::MatrixXd forward(const Eigen::MatrixXd& x, ForwardCache* cache = nullptr) const {
        Eigen::MatrixXd a = x;
        if (cache) {
            cache->activations.clear();
            cache->activations.push_back(a);
        }
        for (std::size_t i = 0; i < weights.size(); ++i) {
            Eigen::MatrixXd z = (weights[i] * a).colwise() + biases[i];
            if (i + 1 < weights.size()) {
                a = z.array().tanh();
            } else {
                a = std::move(z);
            }
            if (cache) cache->activations.push_back(a);
        }
        a.array() += x.array().colwise() * skip.array();
        return a;
    }

    struct Gradients {
        std::vector<Eigen::MatrixXd> weights;
        std::vector<Eigen::VectorXd> biases;
        Eigen::VectorXd skip;
    };

    // Backpropagate d(loss)/d(output) through the cached forward pass.
    Gradients backward(const ForwardCache& cache, const Eigen::MatrixXd& grad_out) const {
        Gradients g;
        g.weights.resize(weights.size());
        g.biases.resize(weights.size());
        g.skip = (grad_out.array() * cache.activations[0].array()).rowwise().sum();
        Eigen::MatrixXd delta = grad_out;
        for (int i = static_cast<int>(weights.size()) - 1; i >= 0; --i) {
            g.weights[i] = delta * cache.activations[i].transpose();
            g.biases[i] = delta.rowwise().sum();
            if (i > 0) {
                delta = weights[i].transpose() * delta;
                delta.array() *= 1.0 - cache.activations[i].array().square();
            }
        }
        return g;
    }
};

// Kaiming-normal weights, zero biases, zero skip gains.
inline void init_model_params(DenoiserScoreModel& model, RngStream rng) {
    const auto dims = model.layer_dims();
    model.weights.clear();
    model.biases.clear();
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        Eigen::MatrixXd w(dims[i + 1], dims[i]);
        const double std = std::sqrt(2.0 / dims[i]);
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = std * rng.normal();
        model.weights.push_back(std::move(w));
        model.biases.push_back(Eigen::VectorXd::Zero(dims[i + 1]));
    }
    model.skip = Eigen::VectorXd::Zero(model.input_dim());
}

// Replicate x into C identical channels, evaluate, average the channels back.
// Score output uses the sigma-conditioning rule, so sigma must be > 0.
inline Image channel_copy_score(const DenoiserScoreModel& model, const Image& x, double sigma) {
    model.validate();
    if (x.grid.nx != model.nx || x.grid.ny != model.ny)
        throw std::invalid_argument("channel_copy_score: image is not at the model's training resolution");
    if (!(sigma > 0.0)) throw std::invalid_argument("channel_copy_score: sigma must be > 0");

    const int d = model.pixel_count();
    Eigen::VectorXd stack(model.input_dim());
    for (int c = 0; c < model.channels; ++c)
        for (int j = 0; j < d; ++j) stack[c * d + j] = x.values[j];

    const Eigen::MatrixXd out = model.forward(stack);
    Image s(x.grid);
    for (int j = 0; j < d; ++j) {
        double acc = 0.0;
        for (int c = 0; c < model.channels; ++c) acc += out(c * d + j, 0);
        s.values[j] = acc / model.channels / sigma;
    }
    return s;
}

// --- checkpoint format -------------------------------------------------
// One plain-text header line followed by the flat parameter vector as
// little-endian 64-bit floats, layer by layer (weights row-major, then bias).

namespace detail {
inline std::string join_ints(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        s += std::to_string(v[i]);
    }
    return s;
}

inline std::vector<int> split_ints(const std::string& s) {
    std::vector<int> v;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) v.push_back(std::stoi(tok));
    return v;
}
}  // namespace detail

inline void save_score_model(const std::string& path, const DenoiserScoreModel& model) {
    model.validate();
    static_assert(std::endian::native == std::endian::little,
                  "checkpoint writer assumes a little-endian host");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_score_model: cannot open " + path);
    f << "easel-score-v1 channels=" << model.channels << " nx=" << model.nx << " ny=" << model.ny
      << " hidden=" << detail::join_ints(model.hidden) << " act=" << model.activation
      << " sigma_first=" << model.sigma_first << " sigma_last=" << model.sigma_last
      << " L=" << model.schedule_len << " params=" << model.parameter_count() << "\n";
    auto write_block = [&](const double* p, std::size_t n) {
        f.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
    };
    for (std::size_t i = 0; i < model.weights.size(); ++i) {
        const auto& w = model.weights[i];
        std::vector<double> row_major(static_cast<std::size_t>(w.size()));
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c)
                row_major[static_cast<std::size_t>(r) * w.cols() + c] = w(r, c);
        write_block(row_major.data(), row_major.size());
        write_block(model.biases[i].data(), static_cast<std::size_t>(model.biases[i].size()));
    }
    write_block(model.skip.data(), static_cast<std::size_t>(model.skip.size()));
    if (!f) throw std::runtime_error("save_score_model: write failed for " + path);
}

inline DenoiserScoreModel load_score_model(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_score_model: cannot open " + path);
    std::string header;
    if (!std::getline(f, header)) throw std::runtime_error("load_score_model: missing header");
    std::stringstream ss(header);
    std::string magic;
    ss >> magic;
    if (magic != "easel-score-v1")
        throw std::runtime_error("load_score_model: bad magic in " + path);

    DenoiserScoreModel m;
    std::size_t declared_params = 0;
    std::string tok;
    while (ss >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) throw std::runtime_error("load_score_model: bad header token " + tok);
        const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
        if (key == "channels") m.channels = std::stoi(val);
        else if (key == "nx") m.nx = std::stoi(val);
        else if (key == "ny") m.ny = std::stoi(val);
        else if (key == "hidden") m.hidden = detail::split_ints(val);
        else if (key == "act") m.activation = val;
        else if (key == "sigma_first") m.sigma_first = std::stod(val);
        else if (key == "sigma_last") m.sigma_last = std::stod(val);
        else if (key == "L") m.schedule_len = std::stoi(val);
        else if (key == "params") declared_params = std::stoull(val);
        else throw std::runtime_error("load_score_model: unknown header key " + key);
    }

    const auto dims = m.layer_dims();
    auto read_block = [&](double* p, std::size_t n) {
        f.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
        if (f.gcount() != static_cast<std::streamsize>(n * sizeof(double)))
            throw std::runtime_error("load_score_model: truncated parameter payload in " + path);
    };
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        Eigen::MatrixXd w(dims[i + 1], dims[i]);
        std::vector<double> row_major(static_cast<std::size_t>(w.size()));
        read_block(row_major.data(), row_major.size());
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c)
                w(r, c) = row_major[static_cast<std::size_t>(r) * w.cols() + c];
        Eigen::VectorXd b(dims[i + 1]);
        read_block(b.data(), static_cast<std::size_t>(b.size()));
        m.weights.push_back(std::move(w));
        m.biases.push_back(std::move(b));
    }
    m.skip.resize(m.input_dim());
    read_block(m.skip.data(), static_cast<std::size_t>(m.skip.size()));
    if (declared_params != 0 && declared_params != m.parameter_count())
        throw std::runtime_error("load_score_model: header parameter count mismatch");
    char extra;
    if (f.read(&extra, 1) && f.gcount() == 1)
        throw std::runtime_error("load_score_model: trailing bytes after parameters");
    m.validate();
    return m;
}

}  // namespace easel
