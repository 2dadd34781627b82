#pragma once

#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "bidpo/net/params.hpp"

namespace bidpo {

struct TapeError : std::logic_error {
    using std::logic_error::logic_error;
};

namespace detail {

template <class S>
Matrix<S> activate(const Matrix<S>& z, Activation a) {
    if (a == Activation::tanh) return z.array().tanh().matrix();
    return (z.array() / (S(1) + (-z.array()).exp())).matrix();
}

template <class S>
Matrix<S> activate_grad(const Matrix<S>& z, Activation a) {
    if (a == Activation::tanh) return (S(1) - z.array().tanh().square()).matrix();
    auto sig = (S(1) / (S(1) + (-z.array()).exp())).eval();
    return (sig * (S(1) + z.array() * (S(1) - sig))).matrix();
}

template <class S>
struct ForwardCache {
    std::vector<Matrix<S>> inputs;  ///< input to each layer
    std::vector<Matrix<S>> pre;     ///< pre-activation of each hidden layer
};

template <class S>
Matrix<S> forward_impl(const DenoiserParams<S>& p, const Matrix<S>& X, ForwardCache<S>* cache) {
    if (X.rows() != p.config.input_dim()) throw ShapeMismatch("forward: input rows do not match the network");
    Matrix<S> a = X;
    for (std::size_t i = 0; i < p.layers.size(); ++i) {
        const auto& l = p.layers[i];
        Matrix<S> z = l.W * a;
        z.colwise() += l.b;
        if (cache) cache->inputs.push_back(std::move(a));
        if (i + 1 == p.layers.size()) return z;
        a = activate(z, p.config.activation);
        if (cache) cache->pre.push_back(std::move(z));
    }
    return a;
}

}  // namespace detail

/// Writes one network input column: noisy image, time embedding, caption code.
template <class S, class Derived>
void write_input_column(Matrix<S>& X, Eigen::Index col, const NetConfig& cfg, const Eigen::MatrixBase<Derived>& x_t,
                        int t, int T, const std::vector<double>& caption_code) {
    const int n = cfg.image.size();
    if (x_t.size() != n || static_cast<int>(caption_code.size()) != kCaptionEncodingDim)
        throw ShapeMismatch("network input: image or caption code has the wrong size");
    X.block(0, col, n, 1) = x_t;
    auto emb = time_embedding(t, T, cfg.time_dim);
    for (int i = 0; i < cfg.time_dim; ++i) X(n + i, col) = static_cast<S>(emb[static_cast<std::size_t>(i)]);
    for (int i = 0; i < kCaptionEncodingDim; ++i)
        X(n + cfg.time_dim + i, col) = static_cast<S>(caption_code[static_cast<std::size_t>(i)]);
}

/// eps_theta for a batch of input columns; output is image.size() x batch.
template <class S>
Matrix<S> forward(const DenoiserParams<S>& p, const Matrix<S>& X) {
    Matrix<S> y = detail::forward_impl<S>(p, X, nullptr);
    if (!y.allFinite()) throw NumericError("forward: non-finite network output");
    return y;
}

/// Noise predictions from raw outputs Y, given the input columns X (whose
/// leading rows hold x_t) and each column's output coefficients.
template <class S>
Matrix<S> to_noise_prediction(const Matrix<S>& Y, const Matrix<S>& X, const std::vector<OutputCoefficients>& coef) {
    if (static_cast<Eigen::Index>(coef.size()) != Y.cols() || X.cols() != Y.cols() || X.rows() < Y.rows())
        throw ShapeMismatch("to_noise_prediction: column counts differ");
    Matrix<S> E = Y;
    for (Eigen::Index j = 0; j < Y.cols(); ++j) {
        const auto& c = coef[static_cast<std::size_t>(j)];
        if (c.skip == 0.0 && c.scale == 1.0) continue;
        E.col(j) = static_cast<S>(c.scale) * Y.col(j) + static_cast<S>(c.skip) * X.col(j).head(Y.rows());
    }
    return E;
}

/// Forward-mode directional derivative: returns (y, J dX).
template <class S>
std::pair<Matrix<S>, Matrix<S>> jvp(const DenoiserParams<S>& p, const Matrix<S>& X, const Matrix<S>& dX) {
    if (X.rows() != dX.rows() || X.cols() != dX.cols()) throw ShapeMismatch("jvp: tangent shape");
    Matrix<S> a = X, da = dX;
    for (std::size_t i = 0; i < p.layers.size(); ++i) {
        const auto& l = p.layers[i];
        Matrix<S> z = l.W * a;
        z.colwise() += l.b;
        Matrix<S> dz = l.W * da;
        if (i + 1 == p.layers.size()) return {z, dz};
        da = (detail::activate_grad(z, p.config.activation).array() * dz.array()).matrix();
        a = detail::activate(z, p.config.activation);
    }
    return {a, da};
}

/// Records forward passes of trainable networks together with the cotangents
/// a scalar loss assigns to their outputs. A tape is consumed by one
/// backward() call.
template <class S>
class Tape {
public:
    using NodeId = std::size_t;

    NodeId forward(const DenoiserParams<S>& p, Matrix<S> X) {
        Node n;
        n.params = &p;
        n.output = detail::forward_impl<S>(p, X, &n.cache);
        if (!n.output.allFinite()) throw NumericError("forward: non-finite network output");
        nodes_.push_back(std::move(n));
        return nodes_.size() - 1;
    }

    [[nodiscard]] const Matrix<S>& output(NodeId id) const { return nodes_.at(id).output; }

    /// Adds dLoss/dOutput for a recorded pass.
    void seed(NodeId id, const Matrix<S>& cotangent) {
        Node& n = nodes_.at(id);
        if (cotangent.rows() != n.output.rows() || cotangent.cols() != n.output.cols())
            throw ShapeMismatch("tape seed: cotangent shape differs from output");
        if (n.cot.size() == 0)
            n.cot = cotangent;
        else
            n.cot += cotangent;
    }

    /// Adds a direct dependence of the loss on one layer's weights.
    void seed_parameter(const DenoiserParams<S>& p, std::size_t layer, const Matrix<S>& dW, const Vector<S>& db) {
        direct_.push_back({&p, layer, dW, db});
    }

    void set_root(S value) { root_ = value; }
    [[nodiscard]] std::optional<S> root() const { return root_; }
    [[nodiscard]] bool consumed() const { return consumed_; }
    [[nodiscard]] std::size_t size() const { return nodes_.size(); }

    template <class T>
    friend Gradients<T> backward(const DenoiserParams<T>& params, Tape<T>& tape);

private:
    struct Node {
        const DenoiserParams<S>* params = nullptr;
        detail::ForwardCache<S> cache;
        Matrix<S> output;
        Matrix<S> cot;
    };
    struct Direct {
        const DenoiserParams<S>* params;
        std::size_t layer;
        Matrix<S> dW;
        Vector<S> db;
    };
    std::vector<Node> nodes_;
    std::vector<Direct> direct_;
    std::optional<S> root_;
    bool consumed_ = false;
};

/// Gradient of the tape's scalar root with respect to `params`. Passes of
/// other (or frozen) networks contribute nothing.
template <class S>
Gradients<S> backward(const DenoiserParams<S>& params, Tape<S>& tape) {
    if (tape.consumed_) throw TapeError("backward: tape already consumed");
    if (!tape.root_) throw TapeError("backward: tape has no scalar root");
    tape.consumed_ = true;
    auto grads = Gradients<S>::zeros_like(params);
    if (!params.trainable) return grads;
    for (auto& d : tape.direct_) {
        if (d.params != &params) continue;
        grads.layers.at(d.layer).W += d.dW;
        grads.layers.at(d.layer).b += d.db;
    }
    for (auto& node : tape.nodes_) {
        if (node.params != &params || node.cot.size() == 0) continue;
        Matrix<S> dz = node.cot;
        for (std::size_t i = params.layers.size(); i-- > 0;) {
            const Matrix<S>& in = node.cache.inputs[i];
            grads.layers[i].W.noalias() += dz * in.transpose();
            grads.layers[i].b += dz.rowwise().sum();
            if (i == 0) break;
            Matrix<S> da = params.layers[i].W.transpose() * dz;
            dz = (da.array() * detail::activate_grad(node.cache.pre[i - 1], params.config.activation).array()).matrix();
        }
    }
    return grads;
}

}  // namespace bidpo
