// Evaluation metrics and the exact oracles backing them: the enumerated
// target distribution and its mean, sampler accuracy, the exact terminating
// distribution by forward dynamic programming over the state DAG, two mode
// definitions, and the sample-set summary statistics.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "lsgfn/env.hpp"
#include "lsgfn/policy.hpp"

namespace lsgfn {

// One evaluation sample: a terminal string with its reward.
struct Sample {
    std::string x;
    double reward = 0.0;
    double log_reward = 0.0;
};

inline Sample sample_from_trajectory(const Trajectory& traj) {
    return Sample{traj.terminal().content, traj.reward, traj.log_reward};
}

// Exact reward-proportional target over all terminals: p*(x) = R(x)/Z.
struct TargetOracle {
    std::vector<std::pair<SeqState, double>> terminals;
    double z = 0.0;            // sum of rewards
    double target_mean = 0.0;  // sum R^2 / sum R = E_{p*}[R]

    static TargetOracle build(const SequenceEnv& env) {
        TargetOracle t;
        t.terminals = env.enumerate_terminals();
        double sum_r = 0.0, sum_r2 = 0.0;
        for (const auto& [x, r] : t.terminals) {
            sum_r += r;
            sum_r2 += r * r;
        }
        if (!(sum_r > 0.0)) throw std::runtime_error("target oracle: all rewards are zero");
        t.z = sum_r;
        t.target_mean = sum_r2 / sum_r;
        return t;
    }

    double pstar(double reward) const { return reward / z; }
};

inline double exact_target_mean(const SequenceEnv& env) {
    return TargetOracle::build(env).target_mean;
}

// 100 * min(sample mean / target mean, 1).
inline double accuracy(const std::vector<double>& sample_rewards, double target_mean) {
    if (sample_rewards.empty()) throw std::invalid_argument("accuracy needs samples");
    if (!(target_mean > 0.0)) throw std::invalid_argument("accuracy needs target mean > 0");
    double mean = 0.0;
    for (double r : sample_rewards) mean += r;
    mean /= static_cast<double>(sample_rewards.size());
    return 100.0 * std::min(mean / target_mean, 1.0);
}

// Exact terminating distribution P_F^T(x): unit mass at the initial state
// propagated along every edge weighted by the forward policy. Processing
// states level by level (string length) respects the DAG's topological order.
inline std::map<std::string, double> exact_terminating_distribution(const SSRPolicy& policy,
                                                                    const SequenceEnv& env) {
    if (!env.enumerable()) throw std::runtime_error("environment too large to enumerate");
    std::unordered_map<std::string, double> level;
    level[std::string()] = 1.0;
    for (int len = 0; len < env.target_length(); ++len) {
        std::unordered_map<std::string, double> next;
        next.reserve(level.size() * static_cast<std::size_t>(env.alphabet().size()));
        for (const auto& [content, mass] : level) {
            SeqState s{content, env.target_length()};
            EdgeDist fd = policy.forward_dist(env, s);
            for (std::size_t j = 0; j < fd.support.size(); ++j)
                next[fd.support[j].content] += mass * fd.probs[j];
        }
        level = std::move(next);
    }
    return {level.begin(), level.end()};
}

enum class ModeKind { ThresholdSeparated, LocalOptimum };

inline ModeKind mode_kind_from_name(const std::string& name) {
    if (name == "threshold-separated") return ModeKind::ThresholdSeparated;
    if (name == "local-optimum") return ModeKind::LocalOptimum;
    throw std::invalid_argument("unknown mode kind: " + name);
}

struct ModeSpec {
    ModeKind kind = ModeKind::ThresholdSeparated;
    double reward_threshold = 0.0;  // modes must exceed this (strictly)
    int min_separation = 1;         // threshold-separated: pairwise Hamming floor
    int radius = 1;                 // local-optimum: Hamming-ball radius
};

namespace detail {

// Visit every string within Hamming distance `radius` of x (excluding x).
template <typename Fn>
inline void for_each_in_ball(const TokenAlphabet& alphabet, const std::string& x,
                             int radius, Fn&& fn) {
    std::string buf = x;
    // Choose substitution positions recursively in increasing order.
    auto recurse = [&](auto&& self, std::size_t start, int depth) -> void {
        if (depth == 0) return;
        for (std::size_t pos = start; pos < buf.size(); ++pos) {
            char saved = buf[pos];
            for (int t = 0; t < alphabet.size(); ++t) {
                char c = alphabet.symbol(t);
                if (c == saved) continue;
                buf[pos] = c;
                fn(static_cast<const std::string&>(buf));
                self(self, pos + 1, depth - 1);
            }
            buf[pos] = saved;
        }
    };
    recurse(recurse, 0, radius);
}

// Deduplicate by terminal string, keeping first occurrence order.
inline std::vector<Sample> distinct_samples(const std::vector<Sample>& samples) {
    std::vector<Sample> out;
    std::unordered_set<std::string> seen;
    out.reserve(samples.size());
    for (const auto& s : samples)
        if (seen.insert(s.x).second) out.push_back(s);
    return out;
}

} // namespace detail

// Count modes among the samples.
//
// threshold-separated: descending-reward greedy pass over the distinct
// samples; a sample becomes a new mode iff its reward strictly exceeds the
// threshold and it is at Hamming distance >= min_separation from every mode
// accepted so far.
//
// local-optimum: a distinct sample is a mode iff its reward strictly exceeds
// the threshold and no string in its Hamming ball of the given radius has a
// strictly greater reward (rewards of neighbors come from the environment).
inline int count_modes(const std::vector<Sample>& samples, const ModeSpec& spec,
                       const SequenceEnv& env) {
    if (spec.kind == ModeKind::LocalOptimum && spec.radius < 1)
        throw std::invalid_argument("local-optimum mode radius must be >= 1");
    if (spec.kind == ModeKind::ThresholdSeparated && spec.min_separation < 1)
        throw std::invalid_argument("mode separation must be >= 1");

    std::vector<Sample> distinct = detail::distinct_samples(samples);
    if (spec.kind == ModeKind::ThresholdSeparated) {
        std::sort(distinct.begin(), distinct.end(), [](const Sample& a, const Sample& b) {
            if (a.reward != b.reward) return a.reward > b.reward;
            return a.x < b.x;
        });
        std::vector<const std::string*> modes;
        for (const auto& s : distinct) {
            if (!(s.reward > spec.reward_threshold)) continue;
            bool separated = true;
            for (const std::string* m : modes)
                if (hamming(s.x, *m) < spec.min_separation) {
                    separated = false;
                    break;
                }
            if (separated) modes.push_back(&s.x);
        }
        return static_cast<int>(modes.size());
    }

    int n_modes = 0;
    for (const auto& s : distinct) {
        if (!(s.reward > spec.reward_threshold)) continue;
        bool is_peak = true;
        detail::for_each_in_ball(env.alphabet(), s.x, spec.radius, [&](const std::string& y) {
            if (!is_peak) return;
            if (env.log_reward(env.make_state(y)) > s.log_reward) is_peak = false;
        });
        if (is_peak) ++n_modes;
    }
    return n_modes;
}

// Reward value at the top-`fraction` boundary of the enumerated reward
// distribution: samples strictly above it form (approximately) the given top
// fraction. Used as the default mode threshold.
inline double reward_quantile_threshold(const TargetOracle& oracle, double fraction) {
    if (!(fraction > 0.0) || fraction >= 1.0)
        throw std::invalid_argument("quantile fraction must be in (0, 1)");
    std::vector<double> rewards;
    rewards.reserve(oracle.terminals.size());
    for (const auto& [x, r] : oracle.terminals) rewards.push_back(r);
    std::sort(rewards.begin(), rewards.end(), std::greater<>());
    std::size_t k = static_cast<std::size_t>(
        std::ceil(fraction * static_cast<double>(rewards.size())));
    k = std::min(std::max<std::size_t>(k, 1), rewards.size() - 1);
    return rewards[k];
}

struct SummaryMetrics {
    double top100_mean = 0.0;     // mean reward of the top 100 samples (or all)
    double unique_fraction = 0.0; // distinct / total
    double diversity = 0.0;       // mean pairwise Hamming over distinct samples
};

inline SummaryMetrics summary_metrics(const std::vector<Sample>& samples,
                                      std::size_t diversity_cap = 512) {
    if (samples.empty()) throw std::invalid_argument("summary metrics need samples");
    SummaryMetrics m;

    std::vector<double> rewards;
    rewards.reserve(samples.size());
    for (const auto& s : samples) rewards.push_back(s.reward);
    std::size_t k = std::min<std::size_t>(100, rewards.size());
    std::partial_sort(rewards.begin(), rewards.begin() + k, rewards.end(), std::greater<>());
    double top_sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) top_sum += rewards[i];
    m.top100_mean = top_sum / static_cast<double>(k);

    std::vector<Sample> distinct = detail::distinct_samples(samples);
    m.unique_fraction =
        static_cast<double>(distinct.size()) / static_cast<double>(samples.size());

    // Pairwise cost is quadratic, so diversity uses at most `diversity_cap`
    // distinct samples (first-occurrence order keeps the subset deterministic).
    std::size_t n = std::min(distinct.size(), diversity_cap);
    if (n >= 2) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                total += static_cast<double>(hamming(distinct[i].x, distinct[j].x));
        m.diversity = total / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
    }
    return m;
}

} // namespace lsgfn
