#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "bidpo/common.hpp"
#include "bidpo/net/encoding.hpp"

namespace bidpo {

template <class S>
using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using Vector = Eigen::Matrix<S, Eigen::Dynamic, 1>;

enum class Activation { silu, tanh };

inline std::string to_string(Activation a) { return a == Activation::silu ? "silu" : "tanh"; }
inline Activation parse_activation(const std::string& s) {
    if (s == "silu") return Activation::silu;
    if (s == "tanh") return Activation::tanh;
    throw InvalidRange("unknown activation '" + s + "'");
}

/// What the last layer predicts. `epsilon`: the noise itself. `v`: the
/// velocity sqrt(ab) eps - sqrt(1 - ab) x0, so eps_hat = sqrt(1 - ab) x_t +
/// sqrt(ab) y. `x0`: the clean image, so eps_hat = (x_t - sqrt(ab) y) /
/// sqrt(1 - ab). The last two spare a narrow MLP from having to copy x_t.
enum class Parameterization : std::uint8_t { epsilon, v, x0 };

inline std::string to_string(Parameterization p) {
    switch (p) {
        case Parameterization::epsilon: return "epsilon";
        case Parameterization::v: return "v";
        case Parameterization::x0: return "x0";
    }
    return "?";
}
inline Parameterization parse_parameterization(const std::string& s) {
    for (auto p : {Parameterization::epsilon, Parameterization::v, Parameterization::x0})
        if (to_string(p) == s) return p;
    throw InvalidRange("unknown parameterization '" + s + "'");
}

/// eps_hat = skip * x_t + scale * y for raw network output y.
struct OutputCoefficients {
    double skip = 0.0;
    double scale = 1.0;
};

inline OutputCoefficients output_coefficients(Parameterization p, double alpha_bar) {
    switch (p) {
        case Parameterization::epsilon: return {};
        case Parameterization::v: return {std::sqrt(1.0 - alpha_bar), std::sqrt(alpha_bar)};
        case Parameterization::x0: {
            const double s = std::sqrt(1.0 - alpha_bar);
            return {1.0 / s, -std::sqrt(alpha_bar) / s};
        }
    }
    return {};
}

struct NetConfig {
    ImageShape image{};
    int time_dim = 32;
    int hidden = 256;
    int depth = 2;  ///< number of hidden layers
    Activation activation = Activation::silu;
    Parameterization output = Parameterization::epsilon;

    [[nodiscard]] int input_dim() const { return image.size() + time_dim + kCaptionEncodingDim; }
    [[nodiscard]] int output_dim() const { return image.size(); }
    bool operator==(const NetConfig&) const = default;

    /// Weights plus biases of the dense stack.
    [[nodiscard]] std::size_t parameter_count() const {
        auto in = static_cast<std::size_t>(input_dim());
        auto h = static_cast<std::size_t>(hidden);
        auto out = static_cast<std::size_t>(output_dim());
        auto d = static_cast<std::size_t>(depth);
        return in * h + h + (d - 1) * (h * h + h) + h * out + out;
    }

    void validate() const {
        if (image.grid < 1 || image.channels < 1 || time_dim < 0 || time_dim % 2 != 0 || hidden < 1 || depth < 1)
            throw InvalidRange("net config: sizes must be positive and time_dim even");
    }
};

template <class S>
struct DenseLayer {
    Matrix<S> W;  ///< out x in
    Vector<S> b;

    bool operator==(const DenseLayer& o) const {
        return W.rows() == o.W.rows() && W.cols() == o.W.cols() && b.size() == o.b.size() && W == o.W && b == o.b;
    }
};

/// Weights of the noise-prediction network. A frozen copy (trainable=false)
/// serves as the reference model.
template <class S>
struct DenoiserParams {
    NetConfig config{};
    std::vector<DenseLayer<S>> layers;
    bool trainable = true;

    [[nodiscard]] std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& l : layers) n += static_cast<std::size_t>(l.W.size() + l.b.size());
        return n;
    }

    [[nodiscard]] bool all_finite() const {
        for (const auto& l : layers)
            if (!l.W.allFinite() || !l.b.allFinite()) return false;
        return true;
    }

    void check_shapes() const {
        int in = config.input_dim();
        if (layers.size() != static_cast<std::size_t>(config.depth + 1)) throw ShapeMismatch("params: wrong layer count");
        for (std::size_t i = 0; i < layers.size(); ++i) {
            int out = i + 1 == layers.size() ? config.output_dim() : config.hidden;
            if (layers[i].W.rows() != out || layers[i].W.cols() != in || layers[i].b.size() != out)
                throw ShapeMismatch("params: layer " + std::to_string(i) + " shape does not chain");
            in = out;
        }
    }

    /// Bitwise comparison of weights and config; the trainable flag is ignored.
    [[nodiscard]] bool same_weights(const DenoiserParams& o) const { return config == o.config && layers == o.layers; }

    template <class T>
    [[nodiscard]] DenoiserParams<T> cast() const {
        DenoiserParams<T> out;
        out.config = config;
        out.trainable = trainable;
        for (const auto& l : layers) out.layers.push_back({l.W.template cast<T>(), l.b.template cast<T>()});
        return out;
    }
};

/// He-uniform hidden layers and a zero output layer, so the fresh network
/// predicts exactly zero noise.
template <class S>
DenoiserParams<S> init_params(const NetConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    DenoiserParams<S> p;
    p.config = cfg;
    Rng rng(seed);
    int in = cfg.input_dim();
    for (int i = 0; i <= cfg.depth; ++i) {
        bool last = i == cfg.depth;
        int out = last ? cfg.output_dim() : cfg.hidden;
        DenseLayer<S> layer{Matrix<S>::Zero(out, in), Vector<S>::Zero(out)};
        if (!last) {
            double bound = std::sqrt(6.0 / in);
            std::uniform_real_distribution<double> u(-bound, bound);
            for (Eigen::Index c = 0; c < layer.W.cols(); ++c)
                for (Eigen::Index r = 0; r < layer.W.rows(); ++r) layer.W(r, c) = static_cast<S>(u(rng));
        }
        p.layers.push_back(std::move(layer));
        in = out;
    }
    return p;
}

/// Deep copy marked non-trainable.
template <class S>
DenoiserParams<S> clone_frozen(const DenoiserParams<S>& p) {
    DenoiserParams<S> c = p;
    c.trainable = false;
    return c;
}

/// Per-layer gradients with the same shapes as the parameters.
template <class S>
struct Gradients {
    std::vector<DenseLayer<S>> layers;

    static Gradients zeros_like(const DenoiserParams<S>& p) {
        Gradients g;
        for (const auto& l : p.layers)
            g.layers.push_back({Matrix<S>::Zero(l.W.rows(), l.W.cols()), Vector<S>::Zero(l.b.size())});
        return g;
    }

    [[nodiscard]] double norm() const {
        double s = 0;
        for (const auto& l : layers)
            s += static_cast<double>(l.W.squaredNorm()) + static_cast<double>(l.b.squaredNorm());
        return std::sqrt(s);
    }

    [[nodiscard]] bool all_zero() const {
        for (const auto& l : layers)
            if (!l.W.isZero(0) || !l.b.isZero(0)) return false;
        return true;
    }
};

/// Flat views used by optimizers and finite-difference checks. Order: for each
/// layer, W column-major, then b.
template <class S, class Fn>
void for_each_parameter(std::vector<DenseLayer<S>>& layers, Fn&& fn) {
    for (auto& l : layers) {
        for (Eigen::Index i = 0; i < l.W.size(); ++i) fn(l.W.data()[i]);
        for (Eigen::Index i = 0; i < l.b.size(); ++i) fn(l.b.data()[i]);
    }
}

}  // namespace bidpo
