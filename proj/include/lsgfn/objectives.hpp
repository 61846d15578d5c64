// Training objectives over complete trajectories: trajectory balance, the
// edge-local detailed-balance form, lambda-weighted sub-trajectory balance,
// and the maximum-entropy variant (trajectory balance against the fixed
// uniform backward policy). Each returns the scalar loss and, when a gradient
// accumulator is supplied, adds exact gradients for every parameter group.
#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lsgfn/env.hpp"
#include "lsgfn/policy.hpp"

namespace lsgfn {

enum class ObjectiveKind { TB, DB, SubTB, MaxEnt };

inline ObjectiveKind objective_from_name(const std::string& name) {
    if (name == "tb") return ObjectiveKind::TB;
    if (name == "db") return ObjectiveKind::DB;
    if (name == "subtb") return ObjectiveKind::SubTB;
    if (name == "maxent") return ObjectiveKind::MaxEnt;
    throw std::invalid_argument("unknown objective: " + name);
}

inline std::string objective_name(ObjectiveKind k) {
    switch (k) {
        case ObjectiveKind::TB: return "tb";
        case ObjectiveKind::DB: return "db";
        case ObjectiveKind::SubTB: return "subtb";
        case ObjectiveKind::MaxEnt: return "maxent";
    }
    return "?";
}

struct ObjectiveConfig {
    ObjectiveKind kind = ObjectiveKind::TB;
    double lambda = 0.9;  // sub-trajectory geometric weight
};

inline bool objective_needs_state_flow(ObjectiveKind k) {
    return k == ObjectiveKind::DB || k == ObjectiveKind::SubTB;
}

namespace detail {

inline std::string traj_dump(const Trajectory& traj) {
    std::string out;
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
        if (i) out += " -> ";
        out += "\"" + traj.states[i].content + "\"";
    }
    out += " (log R = " + std::to_string(traj.log_reward) + ")";
    return out;
}

[[noreturn]] inline void throw_non_finite(const char* which, const Trajectory& traj) {
    throw std::runtime_error(std::string(which) +
                             ": non-finite intermediate on trajectory " + traj_dump(traj));
}

// Per-edge forward/backward distributions along a trajectory, recomputed
// under the current parameters (the cached sums in Trajectory reflect the
// parameters at sampling time and are never used for training).
struct EdgeEval {
    EdgeDist fd;
    EdgeDist bd;
    std::size_t fw_idx = 0;
    std::size_t bw_idx = 0;
    double log_pf = 0.0;
    double log_pb = 0.0;
};

inline std::vector<EdgeEval> eval_edges(const SSRPolicy& policy, const SequenceEnv& env,
                                        const std::vector<SeqState>& states, bool with_tapes) {
    std::vector<EdgeEval> edges(states.size() - 1);
    for (std::size_t t = 0; t + 1 < states.size(); ++t) {
        EdgeEval& e = edges[t];
        e.fd = policy.forward_dist(env, states[t], with_tapes);
        e.fw_idx = e.fd.find(states[t + 1]);
        e.log_pf = std::log(e.fd.probs[e.fw_idx]);
        e.bd = policy.backward_dist(env, states[t + 1], with_tapes);
        e.bw_idx = e.bd.find(states[t]);
        e.log_pb = std::log(e.bd.probs[e.bw_idx]);
    }
    return edges;
}

} // namespace detail

// (log Z + log P_F(tau) - log R(x) - log P_B(tau|x))^2.
inline double tb_loss(const SSRPolicy& policy, const SequenceEnv& env,
                      const Trajectory& traj, PolicyGrads* grads = nullptr) {
    auto edges = detail::eval_edges(policy, env, traj.states, grads != nullptr);
    double log_pf = 0.0, log_pb = 0.0;
    for (const auto& e : edges) {
        log_pf += e.log_pf;
        log_pb += e.log_pb;
    }
    double residual = policy.log_z() + log_pf - traj.log_reward - log_pb;
    if (!std::isfinite(residual)) detail::throw_non_finite("tb_loss", traj);
    if (grads) {
        double w = 2.0 * residual;
        grads->log_z += w;
        for (const auto& e : edges) {
            policy.accumulate_logprob_grad(e.fd, e.fw_idx, w, /*forward=*/true, *grads);
            policy.accumulate_logprob_grad(e.bd, e.bw_idx, -w, /*forward=*/false, *grads);
        }
    }
    return residual * residual;
}

// Sum over edges of (log F(s_t) + log P_F(s_{t+1}|s_t) - log F(s_{t+1})
// - log P_B(s_t|s_{t+1}))^2, with F(terminal) := R(x).
inline double db_loss(const SSRPolicy& policy, const SequenceEnv& env,
                      const Trajectory& traj, PolicyGrads* grads = nullptr) {
    const std::size_t n = traj.num_edges();
    auto edges = detail::eval_edges(policy, env, traj.states, grads != nullptr);

    std::vector<double> log_flow(n + 1);
    std::vector<nn::Tape> flow_tapes(grads ? n : 0);
    for (std::size_t t = 0; t < n; ++t)
        log_flow[t] = grads ? policy.flow_eval(traj.states[t], flow_tapes[t])
                            : policy.flow_value(traj.states[t]);
    log_flow[n] = traj.log_reward;

    double loss = 0.0;
    std::vector<double> residual(n);
    for (std::size_t t = 0; t < n; ++t) {
        residual[t] = log_flow[t] + edges[t].log_pf - log_flow[t + 1] - edges[t].log_pb;
        if (!std::isfinite(residual[t])) detail::throw_non_finite("db_loss", traj);
        loss += residual[t] * residual[t];
    }
    if (grads) {
        for (std::size_t t = 0; t < n; ++t) {
            double w = 2.0 * residual[t];
            policy.accumulate_flow_grad(flow_tapes[t], w, *grads);
            if (t + 1 < n) policy.accumulate_flow_grad(flow_tapes[t + 1], -w, *grads);
            policy.accumulate_logprob_grad(edges[t].fd, edges[t].fw_idx, w, true, *grads);
            policy.accumulate_logprob_grad(edges[t].bd, edges[t].bw_idx, -w, false, *grads);
        }
    }
    return loss;
}

// Geometric-weight average over all sub-trajectories i < j:
//   sum_{i<j} lambda^(j-i) * (log F(s_i) + sum log P_F - log F(s_j)
//                             - sum log P_B)^2  /  sum_{i<j} lambda^(j-i),
// with F(terminal) := R(x).
inline double subtb_loss(const SSRPolicy& policy, const SequenceEnv& env,
                         const Trajectory& traj, double lambda,
                         PolicyGrads* grads = nullptr) {
    if (lambda <= 0.0 || lambda > 1.0)
        throw std::invalid_argument("sub-trajectory weight must be in (0, 1]");
    const std::size_t n = traj.num_edges();
    auto edges = detail::eval_edges(policy, env, traj.states, grads != nullptr);

    std::vector<double> log_flow(n + 1);
    std::vector<nn::Tape> flow_tapes(grads ? n : 0);
    for (std::size_t t = 0; t < n; ++t)
        log_flow[t] = grads ? policy.flow_eval(traj.states[t], flow_tapes[t])
                            : policy.flow_value(traj.states[t]);
    log_flow[n] = traj.log_reward;

    // Prefix sums of edge log-probs make each sub-path residual O(1).
    std::vector<double> pf(n + 1, 0.0), pb(n + 1, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
        pf[t + 1] = pf[t] + edges[t].log_pf;
        pb[t + 1] = pb[t] + edges[t].log_pb;
    }

    double weight_sum = 0.0, loss_sum = 0.0;
    // Combined gradient coefficients: one per edge and one per state, so each
    // tape is backpropagated through once no matter how many sub-paths use it.
    std::vector<double> edge_coef(n, 0.0), flow_coef(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double w = 1.0;
        for (std::size_t j = i + 1; j <= n; ++j) {
            w *= lambda;  // lambda^(j-i)
            double residual = log_flow[i] - log_flow[j] + (pf[j] - pf[i]) - (pb[j] - pb[i]);
            if (!std::isfinite(residual)) detail::throw_non_finite("subtb_loss", traj);
            weight_sum += w;
            loss_sum += w * residual * residual;
            if (grads) {
                double c = 2.0 * w * residual;
                flow_coef[i] += c;
                flow_coef[j] -= c;
                for (std::size_t t = i; t < j; ++t) edge_coef[t] += c;
            }
        }
    }
    if (grads) {
        for (std::size_t t = 0; t < n; ++t) {
            policy.accumulate_flow_grad(flow_tapes[t], flow_coef[t] / weight_sum, *grads);
            policy.accumulate_logprob_grad(edges[t].fd, edges[t].fw_idx,
                                           edge_coef[t] / weight_sum, true, *grads);
            policy.accumulate_logprob_grad(edges[t].bd, edges[t].bw_idx,
                                           -edge_coef[t] / weight_sum, false, *grads);
        }
        // flow_coef[n] multiplies log R(x), which has no parameters.
    }
    return loss_sum / weight_sum;
}

inline double objective_loss(const SSRPolicy& policy, const SequenceEnv& env,
                             const Trajectory& traj, const ObjectiveConfig& cfg,
                             PolicyGrads* grads = nullptr) {
    switch (cfg.kind) {
        case ObjectiveKind::TB: return tb_loss(policy, env, traj, grads);
        case ObjectiveKind::DB: return db_loss(policy, env, traj, grads);
        case ObjectiveKind::SubTB: return subtb_loss(policy, env, traj, cfg.lambda, grads);
        case ObjectiveKind::MaxEnt:
            if (!policy.uniform_backward())
                throw std::invalid_argument(
                    "maxent objective requires the uniform backward policy");
            return tb_loss(policy, env, traj, grads);
    }
    throw std::logic_error("unreachable objective kind");
}

// Batch reduction is the mean: loss and gradients are averaged over the batch.
inline double batch_loss(const SSRPolicy& policy, const SequenceEnv& env,
                         std::span<const Trajectory> batch, const ObjectiveConfig& cfg,
                         PolicyGrads* grads = nullptr) {
    if (batch.empty()) throw std::invalid_argument("batch_loss: empty batch");
    double total = 0.0;
    for (const Trajectory& traj : batch) total += objective_loss(policy, env, traj, cfg, grads);
    double inv = 1.0 / static_cast<double>(batch.size());
    if (grads) grads->scale(inv);
    return total * inv;
}

} // namespace lsgfn
