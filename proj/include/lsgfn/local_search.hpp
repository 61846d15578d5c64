// Back-and-forth trajectory refinement: destroy the last K steps of a
// complete trajectory by sampling the backward policy, rebuild K steps with
// the pure forward policy, then keep or drop the candidate under a greedy
// (strict reward improvement) or Metropolis-Hastings filter.
//
// Backtracking walks the backward policy all the way to the initial state.
// The walk's last K edges are the destroyed segment (only those enter the
// proposal densities); the rest of the walk re-paths the retained prefix, so
// candidate and original share the exact same state prefix even though the
// junction state was resampled. The acceptance ratio
//   min[1, (R(x')/R(x)) * q(tau|tau')/q(tau'|tau)]
// with q(tau'|tau) = P_B(destroyed segment | x) * P_F(rebuilt segment) then
// leaves the reward-proportional terminal distribution invariant for any
// full-support policies: reversing a move swaps the roles of the destroyed
// and rebuilt segments, and the prefix re-pathing below the junction is
// common randomness that cancels.
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "lsgfn/env.hpp"
#include "lsgfn/policy.hpp"
#include "lsgfn/replay.hpp"
#include "lsgfn/rng.hpp"

namespace lsgfn {

enum class FilterKind { Deterministic, Stochastic };

// The conventional MH ratio uses q(tau|tau')/q(tau'|tau); the inverted
// orientation flips the proposal ratio and is kept as a regression guard
// (it fails the stationarity check and measurably skews the chain).
enum class MhOrientation { Standard, Inverted };

struct FilterRule {
    FilterKind kind = FilterKind::Deterministic;
    MhOrientation orientation = MhOrientation::Standard;
};

inline FilterKind filter_kind_from_name(const std::string& name) {
    if (name == "deterministic") return FilterKind::Deterministic;
    if (name == "stochastic") return FilterKind::Stochastic;
    throw std::invalid_argument("unknown filter kind: " + name);
}

inline std::string filter_kind_name(FilterKind k) {
    return k == FilterKind::Deterministic ? "deterministic" : "stochastic";
}

inline MhOrientation mh_orientation_from_name(const std::string& name) {
    if (name == "standard") return MhOrientation::Standard;
    if (name == "inverted") return MhOrientation::Inverted;
    throw std::invalid_argument("unknown mh orientation: " + name);
}

inline std::string mh_orientation_name(MhOrientation o) {
    return o == MhOrientation::Standard ? "standard" : "inverted";
}

struct Proposal {
    Trajectory original;             // same terminal as the input trajectory
    Trajectory candidate;
    std::size_t shared_prefix_len = 0;  // index of the junction state (n - K)
    double log_q_fwd = 0.0;          // log q(candidate | original)
    double log_q_bwd = 0.0;          // log q(original | candidate)
};

struct BacktrackResult {
    // Full resampled path s0 ... x (reversal of the backward walk); equals
    // the input states when K = 0.
    std::vector<SeqState> repathed;
    // Retained prefix s0 ... junction = first n-K+1 states of `repathed`.
    std::vector<SeqState> prefix;
    double log_pb_destroyed = 0.0;  // the K destroyed edges under P_B
    double log_pf_destroyed = 0.0;  // same edges re-scored under P_F
    double log_pf_prefix = 0.0;     // retained edges under P_F
    double log_pb_prefix = 0.0;     // retained edges under P_B
};

// Walk backward from the terminal, sampling each parent from the backward
// policy. Returns the retained prefix and the destroyed segment's log P_B;
// the prefix endpoint is resampled and may differ from the input trajectory's
// state at that depth. K = 0 keeps the trajectory untouched.
inline BacktrackResult backtrack(const SSRPolicy& policy, const SequenceEnv& env,
                                 const Trajectory& traj, int K, Rng& rng) {
    const int n = static_cast<int>(traj.num_edges());
    if (K < 0 || K > n)
        throw std::invalid_argument("backtrack depth must be in [0, trajectory length]");
    BacktrackResult res;
    if (K == 0) {
        res.repathed = traj.states;
        res.prefix = traj.states;
        return res;
    }
    std::vector<SeqState> walk;
    walk.reserve(static_cast<std::size_t>(n) + 1);
    walk.push_back(traj.terminal());
    for (int t = 0; t < n; ++t) {
        const SeqState& cur = walk.back();
        EdgeDist bd = policy.backward_dist(env, cur);
        std::size_t pick = sample_index(rng, bd.probs);
        double log_pb = std::log(bd.probs[pick]);
        EdgeDist fd = policy.forward_dist(env, bd.support[pick]);
        double log_pf = std::log(fd.probs[fd.find(cur)]);
        if (t < K) {
            res.log_pb_destroyed += log_pb;
            res.log_pf_destroyed += log_pf;
        } else {
            res.log_pb_prefix += log_pb;
            res.log_pf_prefix += log_pf;
        }
        walk.push_back(bd.support[pick]);
    }
    res.repathed.assign(walk.rbegin(), walk.rend());
    res.prefix.assign(res.repathed.begin(),
                      res.repathed.begin() + (n - K + 1));
    return res;
}

struct ReconstructResult {
    std::vector<SeqState> suffix;  // states after the prefix endpoint
    double log_pf = 0.0;           // rebuilt edges under the pure forward policy
    double log_pb = 0.0;           // same edges re-scored under P_B
};

// Sample forward from the prefix endpoint to a terminal with the pure forward
// policy (no exploration mixing: the proposal density must be the sampling
// density for the acceptance ratio to be exact).
inline ReconstructResult reconstruct(const SSRPolicy& policy, const SequenceEnv& env,
                                     const std::vector<SeqState>& prefix, Rng& rng) {
    if (prefix.empty()) throw std::invalid_argument("reconstruct needs a non-empty prefix");
    ReconstructResult res;
    SeqState cur = prefix.back();
    while (!cur.terminal()) {
        EdgeDist fd = policy.forward_dist(env, cur);
        std::size_t pick = sample_index(rng, fd.probs);
        res.log_pf += std::log(fd.probs[pick]);
        SeqState next = fd.support[pick];
        EdgeDist bd = policy.backward_dist(env, next);
        res.log_pb += std::log(bd.probs[bd.find(cur)]);
        res.suffix.push_back(next);
        cur = res.suffix.back();
    }
    return res;
}

// Destroy-and-rebuild proposal. Evaluates the candidate's reward exactly once;
// the original's reward is carried over (same terminal).
inline Proposal propose(const SSRPolicy& policy, const SequenceEnv& env,
                        const Trajectory& traj, int K, Rng& rng) {
    Proposal prop;
    const std::size_t n = traj.num_edges();
    if (K == 0) {
        prop.original = traj;
        prop.candidate = traj;
        prop.shared_prefix_len = n;
        return prop;  // identity proposal, log q terms zero
    }
    BacktrackResult back = backtrack(policy, env, traj, K, rng);
    ReconstructResult recon = reconstruct(policy, env, back.prefix, rng);

    prop.original.states = std::move(back.repathed);
    prop.original.log_pf = back.log_pf_prefix + back.log_pf_destroyed;
    prop.original.log_pb = back.log_pb_prefix + back.log_pb_destroyed;
    prop.original.reward = traj.reward;
    prop.original.log_reward = traj.log_reward;

    prop.candidate.states = std::move(back.prefix);
    prop.candidate.states.insert(prop.candidate.states.end(),
                                 recon.suffix.begin(), recon.suffix.end());
    prop.candidate.log_pf = back.log_pf_prefix + recon.log_pf;
    prop.candidate.log_pb = back.log_pb_prefix + recon.log_pb;
    prop.candidate.log_reward = env.log_reward(prop.candidate.terminal());
    prop.candidate.reward = std::exp(prop.candidate.log_reward);

    prop.shared_prefix_len = n - static_cast<std::size_t>(K);
    prop.log_q_fwd = back.log_pb_destroyed + recon.log_pf;
    prop.log_q_bwd = recon.log_pb + back.log_pf_destroyed;
    return prop;
}

// Acceptance probability of a proposal under the rule (1 or 0 for the greedy
// filter). Exposed separately from accept() so tests can check it exactly.
inline double acceptance_probability(const FilterRule& rule, const Proposal& prop) {
    const double lr_cand = prop.candidate.log_reward;
    const double lr_orig = prop.original.log_reward;
    if (rule.kind == FilterKind::Deterministic) return lr_cand > lr_orig ? 1.0 : 0.0;
    if (!std::isfinite(lr_cand)) return 0.0;  // zero-reward candidate: never accept
    double log_alpha = lr_cand - lr_orig;
    log_alpha += rule.orientation == MhOrientation::Standard
                     ? prop.log_q_bwd - prop.log_q_fwd
                     : prop.log_q_fwd - prop.log_q_bwd;
    if (!std::isfinite(log_alpha) || log_alpha >= 0.0) return 1.0;
    return std::exp(log_alpha);
}

inline bool accept(const FilterRule& rule, const Proposal& prop, Rng& rng) {
    double p = acceptance_probability(rule, prop);
    if (p >= 1.0) return true;
    if (p <= 0.0) return false;
    return uniform01(rng) < p;
}

struct RefineStats {
    long long proposals = 0;  // each proposal evaluates the reward oracle once
    long long accepted = 0;

    double rate() const {
        if (proposals == 0) return std::numeric_limits<double>::quiet_NaN();
        return static_cast<double>(accepted) / static_cast<double>(proposals);
    }
};

// One round of refinement: I sweeps over the M chains. Every candidate enters
// the dataset whether or not it is accepted; an accepted candidate replaces
// its chain, a rejected one leaves the chain's terminal unchanged (the chain
// keeps the proposal's re-pathed original, which has the same terminal).
inline RefineStats refine_batch(const SSRPolicy& policy, const SequenceEnv& env,
                                std::vector<Trajectory>& chains, int I, int K,
                                const FilterRule& rule, ReplayDataset& dataset,
                                int round, Rng& rng) {
    if (chains.empty()) throw std::invalid_argument("refine_batch needs at least one chain");
    if (I < 0) throw std::invalid_argument("refinement iteration count must be >= 0");
    RefineStats stats;
    for (int i = 0; i < I; ++i) {
        for (auto& chain : chains) {
            Proposal prop = propose(policy, env, chain, K, rng);
            bool ok = accept(rule, prop, rng);
            ++stats.proposals;
            stats.accepted += ok ? 1 : 0;
            dataset.insert(prop.candidate, round,
                           ok ? SampleOrigin::ProposalAccepted
                              : SampleOrigin::ProposalRejected);
            chain = ok ? std::move(prop.candidate) : std::move(prop.original);
        }
    }
    return stats;
}

} // namespace lsgfn
