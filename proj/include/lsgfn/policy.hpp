// Forward/backward policies in the relative-edge-flow (SSR) parametrization:
// a dense net scores the concatenated one-hot encodings of an edge's two
// states, logits are clipped and softmaxed over the de-duplicated child or
// parent set. Also holds the learnable log-partition scalar and the optional
// state-flow net used by edge-local objectives.
#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lsgfn/env.hpp"
#include "lsgfn/nn.hpp"
#include "lsgfn/rng.hpp"

namespace lsgfn {

struct Trajectory {
    std::vector<SeqState> states;  // s0 ... sn
    double log_pf = 0.0;           // sum of forward edge log-probs (unmixed)
    double log_pb = 0.0;           // sum of backward edge log-probs
    double reward = 0.0;           // R(x) of the terminal state
    double log_reward = 0.0;

    const SeqState& terminal() const { return states.back(); }
    std::size_t num_edges() const { return states.empty() ? 0 : states.size() - 1; }
};

// One edge-level distribution: probabilities over the support (children of s
// for the forward policy, parents of s' for the backward policy). Tapes and
// raw logits are kept only when the caller needs gradients.
struct EdgeDist {
    std::vector<SeqState> support;
    std::vector<double> probs;
    std::vector<double> raw_logits;  // pre-clip; empty for the uniform stand-in
    std::vector<nn::Tape> tapes;     // per-candidate; empty unless requested
    bool uniform = false;

    std::size_t find(const SeqState& s) const {
        for (std::size_t i = 0; i < support.size(); ++i)
            if (support[i].content == s.content) return i;
        throw std::runtime_error("invalid edge in path: no transition to \"" + s.content + "\"");
    }
};

// Packed gradient accumulators matching SSRPolicy's parameter groups.
struct PolicyGrads {
    std::vector<double> fw;
    std::vector<double> bw;
    std::vector<double> flow;
    double log_z = 0.0;

    void reset() {
        std::fill(fw.begin(), fw.end(), 0.0);
        std::fill(bw.begin(), bw.end(), 0.0);
        std::fill(flow.begin(), flow.end(), 0.0);
        log_z = 0.0;
    }

    void scale(double c) {
        for (double& g : fw) g *= c;
        for (double& g : bw) g *= c;
        for (double& g : flow) g *= c;
        log_z *= c;
    }
};

struct PolicyConfig {
    std::vector<int> hidden;                          // hidden layer widths
    nn::Activation activation = nn::Activation::Tanh;
    bool uniform_backward = false;                    // fixed-uniform P_B stand-in
    bool with_state_flow = false;                     // state-flow net for edge-local losses
    double logit_clip = 50.0;
    double log_z_init = 5.0;
};

class SSRPolicy {
public:
    SSRPolicy(const TokenAlphabet& alphabet, int target_length,
              const PolicyConfig& cfg, Rng& rng)
        : alphabet_(alphabet),
          target_length_(target_length),
          logit_clip_(cfg.logit_clip),
          log_z_(cfg.log_z_init),
          uniform_backward_(cfg.uniform_backward) {
        if (logit_clip_ <= 0.0) throw std::invalid_argument("logit clip must be positive");
        std::vector<int> pair_dims{pair_dim()};
        pair_dims.insert(pair_dims.end(), cfg.hidden.begin(), cfg.hidden.end());
        pair_dims.push_back(1);
        fw_net_ = nn::DenseNet(pair_dims, cfg.activation);
        fw_net_.init_params(rng);
        if (!uniform_backward_) {
            bw_net_.emplace(pair_dims, cfg.activation);
            bw_net_->init_params(rng);
        }
        if (cfg.with_state_flow) {
            std::vector<int> flow_dims{state_dim()};
            flow_dims.insert(flow_dims.end(), cfg.hidden.begin(), cfg.hidden.end());
            flow_dims.push_back(1);
            flow_net_.emplace(flow_dims, cfg.activation);
            flow_net_->init_params(rng);
        }
    }

    // One slot per position holding a one-hot over (A symbols + explicit
    // empty marker), so every partial string has a distinct encoding.
    int state_dim() const { return target_length_ * (alphabet_.size() + 1); }
    int pair_dim() const { return 2 * state_dim(); }

    void encode_state(const SeqState& s, double* out) const {
        const int A = alphabet_.size();
        std::fill(out, out + state_dim(), 0.0);
        for (int pos = 0; pos < target_length_; ++pos) {
            int slot = pos < s.length() ? alphabet_.index(s.content[pos]) : A;
            out[pos * (A + 1) + slot] = 1.0;
        }
    }

    std::vector<double> encode_pair(const SeqState& from, const SeqState& to) const {
        std::vector<double> enc(static_cast<std::size_t>(pair_dim()));
        encode_state(from, enc.data());
        encode_state(to, enc.data() + state_dim());
        return enc;
    }

    double clip_logit(double v) const {
        return std::min(std::max(v, -logit_clip_), logit_clip_);
    }

    double log_z() const { return log_z_; }
    double& log_z_ref() { return log_z_; }
    double logit_clip() const { return logit_clip_; }
    bool uniform_backward() const { return uniform_backward_; }
    bool has_state_flow() const { return flow_net_.has_value(); }

    const nn::DenseNet& fw_net() const { return fw_net_; }
    nn::DenseNet& fw_net() { return fw_net_; }
    const nn::DenseNet& bw_net() const { return require_bw(); }
    nn::DenseNet& bw_net() {
        require_bw();
        return *bw_net_;
    }
    const nn::DenseNet& flow_net() const { return require_flow(); }
    nn::DenseNet& flow_net() {
        require_flow();
        return *flow_net_;
    }

    PolicyGrads make_grads() const {
        PolicyGrads g;
        g.fw.assign(fw_net_.num_params(), 0.0);
        if (bw_net_) g.bw.assign(bw_net_->num_params(), 0.0);
        if (flow_net_) g.flow.assign(flow_net_->num_params(), 0.0);
        return g;
    }

    EdgeDist forward_dist(const SequenceEnv& env, const SeqState& s,
                          bool with_tapes = false) const {
        return edge_dist(fw_net_, s, env.children(s), /*uniform=*/false, with_tapes);
    }

    EdgeDist backward_dist(const SequenceEnv& env, const SeqState& sp,
                           bool with_tapes = false) const {
        auto parents = env.parents(sp);
        if (uniform_backward_)
            return edge_dist(fw_net_, sp, std::move(parents), /*uniform=*/true, false);
        return edge_dist(*bw_net_, sp, std::move(parents), /*uniform=*/false, with_tapes);
    }

    // d(weight * log probs[chosen]) accumulated into the matching net grads.
    // The uniform stand-in has no parameters, so it contributes nothing.
    void accumulate_logprob_grad(const EdgeDist& d, std::size_t chosen, double weight,
                                 bool forward, PolicyGrads& g) const {
        if (d.uniform) return;
        if (d.tapes.size() != d.support.size())
            throw std::runtime_error("edge distribution was computed without tapes");
        const nn::DenseNet& net = forward ? fw_net_ : *bw_net_;
        std::vector<double>& grads = forward ? g.fw : g.bw;
        for (std::size_t j = 0; j < d.support.size(); ++j) {
            // Through the softmax: d log p_k / d logit_j = [j==k] - p_j, and
            // the hard clip zeroes the gradient outside the clip range.
            if (std::abs(d.raw_logits[j]) >= logit_clip_) continue;
            double coef = weight * ((j == chosen ? 1.0 : 0.0) - d.probs[j]);
            if (coef == 0.0) continue;
            double out_grad[1] = {coef};
            nn::net_backward(net, d.tapes[j], std::span<const double>(out_grad, 1), grads);
        }
    }

    double flow_value(const SeqState& s) const {
        const nn::DenseNet& net = require_flow();
        thread_local std::vector<double> scratch;
        std::vector<double> enc(static_cast<std::size_t>(state_dim()));
        encode_state(s, enc.data());
        return nn::net_eval_scalar(net, enc, scratch);
    }

    double flow_eval(const SeqState& s, nn::Tape& tape) const {
        const nn::DenseNet& net = require_flow();
        std::vector<double> enc(static_cast<std::size_t>(state_dim()));
        encode_state(s, enc.data());
        return nn::net_forward(net, enc, tape)[0];
    }

    void accumulate_flow_grad(const nn::Tape& tape, double weight, PolicyGrads& g) const {
        double out_grad[1] = {weight};
        nn::net_backward(require_flow(), tape, std::span<const double>(out_grad, 1), g.flow);
    }

private:
    EdgeDist edge_dist(const nn::DenseNet& net, const SeqState& cond,
                       std::vector<SeqState> support, bool uniform, bool with_tapes) const {
        EdgeDist d;
        d.support = std::move(support);
        const std::size_t n = d.support.size();
        d.probs.resize(n);
        if (uniform) {
            d.uniform = true;
            std::fill(d.probs.begin(), d.probs.end(), 1.0 / static_cast<double>(n));
            return d;
        }
        d.raw_logits.resize(n);
        if (with_tapes) d.tapes.resize(n);
        thread_local std::vector<double> scratch;
        std::vector<double> enc(static_cast<std::size_t>(pair_dim()));
        encode_state(cond, enc.data());
        double max_logit = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            encode_state(d.support[j], enc.data() + state_dim());
            d.raw_logits[j] = with_tapes ? nn::net_forward(net, enc, d.tapes[j])[0]
                                         : nn::net_eval_scalar(net, enc, scratch);
            max_logit = std::max(max_logit, clip_logit(d.raw_logits[j]));
        }
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            d.probs[j] = std::exp(clip_logit(d.raw_logits[j]) - max_logit);
            sum += d.probs[j];
        }
        for (double& p : d.probs) p /= sum;
        return d;
    }

    const nn::DenseNet& require_bw() const {
        if (!bw_net_) throw std::runtime_error("backward net absent: policy uses the uniform stand-in");
        return *bw_net_;
    }
    const nn::DenseNet& require_flow() const {
        if (!flow_net_) throw std::runtime_error("missing state-flow net");
        return *flow_net_;
    }

    TokenAlphabet alphabet_;
    int target_length_;
    double logit_clip_;
    double log_z_;
    bool uniform_backward_;
    nn::DenseNet fw_net_;
    std::optional<nn::DenseNet> bw_net_;
    std::optional<nn::DenseNet> flow_net_;
};

// epsilon-noisy ancestral sampling: each step takes a uniformly random child
// with probability epsilon, otherwise samples the forward policy. log_pf is
// recorded under the *unmixed* policy probabilities either way, so stored
// trajectories stay valid off-policy training data.
inline Trajectory sample_trajectory(const SSRPolicy& policy, const SequenceEnv& env,
                                    double epsilon, Rng& rng) {
    if (epsilon < 0.0 || epsilon > 1.0)
        throw std::invalid_argument("exploration probability must be in [0, 1]");
    Trajectory traj;
    traj.states.push_back(env.initial_state());
    while (!traj.states.back().terminal()) {
        EdgeDist fd = policy.forward_dist(env, traj.states.back());
        std::size_t chosen;
        if (epsilon > 0.0 && uniform01(rng) < epsilon) {
            chosen = std::uniform_int_distribution<std::size_t>(0, fd.support.size() - 1)(rng);
        } else {
            chosen = sample_index(rng, fd.probs);
        }
        traj.log_pf += std::log(fd.probs[chosen]);
        SeqState next = fd.support[chosen];
        EdgeDist bd = policy.backward_dist(env, next);
        traj.log_pb += std::log(bd.probs[bd.find(traj.states.back())]);
        traj.states.push_back(std::move(next));
    }
    traj.log_reward = env.log_reward(traj.states.back());
    traj.reward = std::exp(traj.log_reward);
    return traj;
}

// Edge log-prob sums along a complete or partial path under the current
// parameters. Throws on any pair that is not a DAG edge.
inline std::pair<double, double> traj_logprobs(const SSRPolicy& policy, const SequenceEnv& env,
                                               const std::vector<SeqState>& states) {
    double log_pf = 0.0, log_pb = 0.0;
    for (std::size_t i = 0; i + 1 < states.size(); ++i) {
        EdgeDist fd = policy.forward_dist(env, states[i]);
        log_pf += std::log(fd.probs[fd.find(states[i + 1])]);
        EdgeDist bd = policy.backward_dist(env, states[i + 1]);
        log_pb += std::log(bd.probs[bd.find(states[i])]);
    }
    return {log_pf, log_pb};
}

// Assemble a Trajectory from a complete state path, recomputing the cached
// log-prob sums and the reward.
inline Trajectory make_trajectory(const SSRPolicy& policy, const SequenceEnv& env,
                                  std::vector<SeqState> states) {
    if (states.empty() || !states.front().initial() || !states.back().terminal())
        throw std::invalid_argument("trajectory must run from the initial state to a terminal");
    Trajectory traj;
    auto [pf, pb] = traj_logprobs(policy, env, states);
    traj.states = std::move(states);
    traj.log_pf = pf;
    traj.log_pb = pb;
    traj.log_reward = env.log_reward(traj.states.back());
    traj.reward = std::exp(traj.log_reward);
    return traj;
}

} // namespace lsgfn
