// Minimal dense feed-forward network with explicit backpropagation and an
// Adam optimizer. Parameters live in one packed vector so optimizer state,
// gradient clipping and checkpointing can treat a network as a flat array.
#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lsgfn/rng.hpp"

namespace lsgfn::nn {

enum class Activation { Tanh, Relu, LeakyRelu };

inline Activation activation_from_name(const std::string& name) {
    if (name == "tanh") return Activation::Tanh;
    if (name == "relu") return Activation::Relu;
    if (name == "leaky_relu") return Activation::LeakyRelu;
    throw std::invalid_argument("unknown activation: " + name);
}

inline std::string activation_name(Activation a) {
    switch (a) {
        case Activation::Tanh: return "tanh";
        case Activation::Relu: return "relu";
        case Activation::LeakyRelu: return "leaky_relu";
    }
    return "?";
}

inline double activate(Activation a, double x) {
    switch (a) {
        case Activation::Tanh: return std::tanh(x);
        case Activation::Relu: return x > 0.0 ? x : 0.0;
        case Activation::LeakyRelu: return x > 0.0 ? x : 0.01 * x;
    }
    return x;
}

// Derivative expressed through the pre-activation value.
inline double activate_grad(Activation a, double pre) {
    switch (a) {
        case Activation::Tanh: {
            double t = std::tanh(pre);
            return 1.0 - t * t;
        }
        case Activation::Relu: return pre > 0.0 ? 1.0 : 0.0;
        case Activation::LeakyRelu: return pre > 0.0 ? 1.0 : 0.01;
    }
    return 1.0;
}

// Activation record of one forward pass. `layer_in[l]` is the input fed to
// layer l, `pre[l]` the affine output before the nonlinearity. The revision
// stamp ties the tape to the parameter vector it was computed from.
struct Tape {
    std::vector<std::vector<double>> layer_in;
    std::vector<std::vector<double>> pre;
    std::uint64_t revision = 0;
};

// Fully-connected net: dims = [input, hidden..., output]. The nonlinearity
// is applied between layers, never on the output. dims = [in, out] is a
// plain affine map.
class DenseNet {
public:
    DenseNet() = default;

    DenseNet(std::vector<int> dims, Activation act)
        : dims_(std::move(dims)), act_(act) {
        if (dims_.size() < 2) throw std::invalid_argument("DenseNet needs at least [in, out] dims");
        for (int d : dims_)
            if (d <= 0) throw std::invalid_argument("DenseNet dims must be positive");
        std::size_t total = 0;
        for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
            weight_offset_.push_back(total);
            total += static_cast<std::size_t>(dims_[l]) * dims_[l + 1];
            bias_offset_.push_back(total);
            total += static_cast<std::size_t>(dims_[l + 1]);
        }
        params_.assign(total, 0.0);
    }

    // Fan-in-scaled uniform init: U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
    void init_params(Rng& rng) {
        for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
            double bound = 1.0 / std::sqrt(static_cast<double>(dims_[l]));
            std::uniform_real_distribution<double> dist(-bound, bound);
            double* w = params_.data() + weight_offset_[l];
            std::size_t nw = static_cast<std::size_t>(dims_[l]) * dims_[l + 1];
            for (std::size_t i = 0; i < nw; ++i) w[i] = dist(rng);
            double* b = params_.data() + bias_offset_[l];
            for (int i = 0; i < dims_[l + 1]; ++i) b[i] = dist(rng);
        }
        ++revision_;
    }

    const std::vector<int>& dims() const { return dims_; }
    int input_dim() const { return dims_.front(); }
    int output_dim() const { return dims_.back(); }
    std::size_t num_layers() const { return dims_.size() - 1; }
    std::size_t num_params() const { return params_.size(); }
    Activation activation() const { return act_; }
    std::uint64_t revision() const { return revision_; }

    const std::vector<double>& params() const { return params_; }
    // Mutating access bumps the revision so stale tapes are detected.
    std::vector<double>& mutable_params() {
        ++revision_;
        return params_;
    }

    std::span<const double> weights(std::size_t layer) const {
        return {params_.data() + weight_offset_[layer],
                static_cast<std::size_t>(dims_[layer]) * dims_[layer + 1]};
    }
    std::span<const double> biases(std::size_t layer) const {
        return {params_.data() + bias_offset_[layer], static_cast<std::size_t>(dims_[layer + 1])};
    }

    std::size_t weight_offset(std::size_t layer) const { return weight_offset_[layer]; }
    std::size_t bias_offset(std::size_t layer) const { return bias_offset_[layer]; }

private:
    std::vector<int> dims_;
    Activation act_ = Activation::Tanh;
    std::vector<double> params_;
    std::vector<std::size_t> weight_offset_;
    std::vector<std::size_t> bias_offset_;
    std::uint64_t revision_ = 0;
};

namespace detail {
inline void affine(const DenseNet& net, std::size_t layer,
                   const double* in, double* out) {
    const int n_in = net.dims()[layer];
    const int n_out = net.dims()[layer + 1];
    const double* w = net.weights(layer).data();
    const double* b = net.biases(layer).data();
    for (int o = 0; o < n_out; ++o) {
        const double* row = w + static_cast<std::size_t>(o) * n_in;
        double acc = b[o];
        for (int i = 0; i < n_in; ++i) acc += row[i] * in[i];
        out[o] = acc;
    }
}
} // namespace detail

// Forward pass recording the tape needed for an exact backward pass.
inline std::vector<double> net_forward(const DenseNet& net, std::span<const double> input, Tape& tape) {
    if (static_cast<int>(input.size()) != net.input_dim())
        throw std::invalid_argument("net_forward: input dimension mismatch");
    for (double v : input)
        if (!std::isfinite(v)) throw std::invalid_argument("net_forward: non-finite input");

    const std::size_t n_layers = net.num_layers();
    tape.layer_in.assign(n_layers, {});
    tape.pre.assign(n_layers, {});
    tape.revision = net.revision();

    std::vector<double> cur(input.begin(), input.end());
    for (std::size_t l = 0; l < n_layers; ++l) {
        tape.layer_in[l] = cur;
        std::vector<double> pre(static_cast<std::size_t>(net.dims()[l + 1]));
        detail::affine(net, l, cur.data(), pre.data());
        tape.pre[l] = pre;
        if (l + 1 < n_layers)
            for (double& v : pre) v = activate(net.activation(), v);
        cur = std::move(pre);
    }
    return cur;
}

// Fast scalar-output evaluation without a tape. `scratch` is reused across
// calls to avoid allocation in sampling loops.
inline double net_eval_scalar(const DenseNet& net, std::span<const double> input,
                              std::vector<double>& scratch) {
    const std::size_t n_layers = net.num_layers();
    int max_dim = 0;
    for (int d : net.dims()) max_dim = std::max(max_dim, d);
    scratch.resize(2 * static_cast<std::size_t>(max_dim));
    double* a = scratch.data();
    double* b = scratch.data() + max_dim;
    for (int i = 0; i < net.input_dim(); ++i) a[i] = input[i];
    for (std::size_t l = 0; l < n_layers; ++l) {
        detail::affine(net, l, a, b);
        if (l + 1 < n_layers)
            for (int i = 0; i < net.dims()[l + 1]; ++i) b[i] = activate(net.activation(), b[i]);
        std::swap(a, b);
    }
    return a[0];
}

// Accumulates gradients of (output . out_grad) w.r.t. every parameter into
// `grads` (packed like net.params()). Returns nothing else; the tape must
// come from a forward pass against the current parameters.
inline void net_backward(const DenseNet& net, const Tape& tape,
                         std::span<const double> out_grad, std::vector<double>& grads) {
    if (tape.revision != net.revision())
        throw std::runtime_error("net_backward: stale tape");
    if (tape.layer_in.size() != net.num_layers())
        throw std::runtime_error("net_backward: tape/net layer mismatch");
    if (static_cast<int>(out_grad.size()) != net.output_dim())
        throw std::invalid_argument("net_backward: out_grad dimension mismatch");
    grads.resize(net.num_params());

    std::vector<double> delta(out_grad.begin(), out_grad.end());
    for (std::size_t l = net.num_layers(); l-- > 0;) {
        const int n_in = net.dims()[l];
        const int n_out = net.dims()[l + 1];
        const std::vector<double>& in = tape.layer_in[l];
        // delta currently holds d(objective)/d(post-activation of layer l);
        // fold in the activation derivative except on the output layer.
        if (l + 1 < net.num_layers())
            for (int o = 0; o < n_out; ++o)
                delta[o] *= activate_grad(net.activation(), tape.pre[l][o]);

        double* gw = grads.data() + net.weight_offset(l);
        double* gb = grads.data() + net.bias_offset(l);
        for (int o = 0; o < n_out; ++o) {
            double d = delta[o];
            if (d == 0.0) continue;
            double* row = gw + static_cast<std::size_t>(o) * n_in;
            for (int i = 0; i < n_in; ++i) row[i] += d * in[i];
            gb[o] += d;
        }

        if (l == 0) break;
        std::vector<double> prev(static_cast<std::size_t>(n_in), 0.0);
        const double* w = net.weights(l).data();
        for (int o = 0; o < n_out; ++o) {
            double d = delta[o];
            if (d == 0.0) continue;
            const double* row = w + static_cast<std::size_t>(o) * n_in;
            for (int i = 0; i < n_in; ++i) prev[i] += d * row[i];
        }
        delta = std::move(prev);
    }
}

// Adam with global gradient-norm clipping applied before the update.
struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    long long step = 0;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    explicit AdamState(std::size_t n = 0, double lr_ = 1e-3) : m(n, 0.0), v(n, 0.0), lr(lr_) {}
};

inline void adam_step(std::span<double> params, std::span<const double> grads,
                      AdamState& state, double grad_clip = 10.0) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw std::invalid_argument("adam_step: shape mismatch");
    double sq = 0.0;
    for (double g : grads) {
        if (!std::isfinite(g)) throw std::runtime_error("adam_step: non-finite gradient");
        sq += g * g;
    }
    double norm = std::sqrt(sq);
    double scale = (grad_clip > 0.0 && norm > grad_clip) ? grad_clip / norm : 1.0;

    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        double g = grads[i] * scale;
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        double mhat = state.m[i] / bc1;
        double vhat = state.v[i] / bc2;
        params[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
}

inline void adam_step(DenseNet& net, std::span<const double> grads,
                      AdamState& state, double grad_clip = 10.0) {
    adam_step(std::span<double>(net.mutable_params()), grads, state, grad_clip);
}

} // namespace lsgfn::nn
