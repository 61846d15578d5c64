// Training orchestration: each round samples M seed trajectories with the
// epsilon-noisy forward policy, refines them with I local-search sweeps,
// then takes one optimizer step on a reward-prioritized replay batch. Every
// eval_every rounds (and at the final round) a batch of pure on-policy
// samples is drawn, accumulated, and scored; evaluation samples never enter
// the dataset or the oracle-call budget.
#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lsgfn/checkpoint.hpp"
#include "lsgfn/config.hpp"
#include "lsgfn/env.hpp"
#include "lsgfn/local_search.hpp"
#include "lsgfn/metrics.hpp"
#include "lsgfn/objectives.hpp"
#include "lsgfn/policy.hpp"
#include "lsgfn/replay.hpp"
#include "lsgfn/rng.hpp"

namespace lsgfn {

// Everything needed to score an evaluation sample set. The exact-target
// pieces exist only when the environment is enumerable.
struct MetricContext {
    std::optional<TargetOracle> oracle;
    ModeSpec threshold_spec;
    ModeSpec localopt_spec;

    static MetricContext build(const SequenceEnv& env, const RunConfig& cfg) {
        MetricContext ctx;
        ctx.threshold_spec.kind = ModeKind::ThresholdSeparated;
        ctx.threshold_spec.min_separation = cfg.mode_min_separation;
        ctx.localopt_spec.kind = ModeKind::LocalOptimum;
        ctx.localopt_spec.radius = cfg.mode_radius;
        if (env.enumerable()) {
            ctx.oracle = TargetOracle::build(env);
            double threshold = reward_quantile_threshold(*ctx.oracle, cfg.mode_quantile);
            ctx.threshold_spec.reward_threshold = threshold;
            ctx.localopt_spec.reward_threshold = threshold;
        }
        return ctx;
    }
};

struct EvalMetrics {
    double accuracy = std::numeric_limits<double>::quiet_NaN();
    int n_modes_threshold = -1;
    int n_modes_localopt = -1;
    SummaryMetrics summary;
};

inline std::vector<Sample> draw_on_policy_samples(const SSRPolicy& policy,
                                                  const SequenceEnv& env, int n, Rng& rng) {
    std::vector<Sample> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        out.push_back(sample_from_trajectory(sample_trajectory(policy, env, 0.0, rng)));
    return out;
}

inline EvalMetrics compute_eval_metrics(const std::vector<Sample>& samples,
                                        const MetricContext& ctx, const SequenceEnv& env) {
    EvalMetrics m;
    m.summary = summary_metrics(samples);
    if (ctx.oracle) {
        std::vector<double> rewards;
        rewards.reserve(samples.size());
        for (const auto& s : samples) rewards.push_back(s.reward);
        m.accuracy = accuracy(rewards, ctx.oracle->target_mean);
        m.n_modes_threshold = count_modes(samples, ctx.threshold_spec, env);
        m.n_modes_localopt = count_modes(samples, ctx.localopt_spec, env);
    }
    return m;
}

// Pure on-policy evaluation: no exploration noise and no local search.
struct EvalBundle {
    std::vector<Sample> samples;
    EvalMetrics metrics;
};

inline EvalBundle evaluate(const SSRPolicy& policy, const SequenceEnv& env, int n_samples,
                           Rng& rng, const MetricContext& ctx) {
    EvalBundle b;
    b.samples = draw_on_policy_samples(policy, env, n_samples, rng);
    b.metrics = compute_eval_metrics(b.samples, ctx, env);
    return b;
}

struct RoundLog {
    int round = 0;
    double loss = 0.0;
    double accept_rate = std::numeric_limits<double>::quiet_NaN();
    long long oracle_calls = 0;  // cumulative training-time reward evaluations
    std::size_t dataset_size = 0;
    bool evaluated = false;
    EvalMetrics eval;  // over all evaluation samples accumulated so far
};

inline const char* round_csv_header() {
    return "round,loss,accept_rate,oracle_calls,dataset_size,accuracy,"
           "n_modes_threshold,n_modes_localopt,top100_mean,unique_fraction,diversity";
}

inline void write_round_csv(const RoundLog& log, std::ostream& out) {
    out.precision(12);
    out << log.round << ',' << log.loss << ',';
    if (std::isfinite(log.accept_rate)) out << log.accept_rate;
    out << ',' << log.oracle_calls << ',' << log.dataset_size << ',';
    if (log.evaluated) {
        out << log.eval.accuracy << ',' << log.eval.n_modes_threshold << ','
            << log.eval.n_modes_localopt << ',' << log.eval.summary.top100_mean << ','
            << log.eval.summary.unique_fraction << ',' << log.eval.summary.diversity;
    } else {
        out << ",,,,,";
    }
    out << '\n';
}

struct TrainResult {
    std::vector<RoundLog> logs;
    EvalMetrics final_metrics;        // from the last evaluated round
    std::size_t eval_sample_count = 0;
    long long oracle_calls = 0;

    std::vector<double> acceptance_trace() const {
        std::vector<double> t;
        t.reserve(logs.size());
        for (const auto& l : logs) t.push_back(l.accept_rate);
        return t;
    }
};

class Trainer {
public:
    explicit Trainer(RunConfig cfg) : cfg_(std::move(cfg)), env_(build_env(cfg_)) {
        PolicyConfig pc;
        pc.hidden = cfg_.hidden;
        pc.activation = nn::activation_from_name(cfg_.activation);
        pc.uniform_backward = cfg_.objective == ObjectiveKind::MaxEnt;
        pc.with_state_flow = objective_needs_state_flow(cfg_.objective);
        pc.logit_clip = cfg_.logit_clip;
        pc.log_z_init = cfg_.log_z_init;
        Rng init_rng = make_rng(cfg_.seed, /*stream=*/1);
        policy_.emplace(env_.alphabet(), cfg_.length, pc, init_rng);
        optimizer_ = PolicyOptimizer::make(*policy_, cfg_.lr_log_z, cfg_.lr_net);
        dataset_ = ReplayDataset(static_cast<std::size_t>(cfg_.replay_capacity));
        train_rng_ = make_rng(cfg_.seed, 2);
        eval_rng_ = make_rng(cfg_.seed, 3);
        metric_ctx_ = MetricContext::build(env_, cfg_);
    }

    const RunConfig& config() const { return cfg_; }
    const SequenceEnv& env() const { return env_; }
    const SSRPolicy& policy() const { return *policy_; }
    SSRPolicy& policy() { return *policy_; }
    const PolicyOptimizer& optimizer() const { return optimizer_; }
    PolicyOptimizer& optimizer() { return optimizer_; }
    const ReplayDataset& dataset() const { return dataset_; }
    const std::vector<Sample>& eval_samples() const { return eval_samples_; }
    const MetricContext& metric_context() const { return metric_ctx_; }

    // Runs the full training loop. Optional per-round CSV stream; optional
    // checkpoint path written before rethrowing if a round fails (non-finite
    // loss or gradients).
    TrainResult run(std::ostream* csv = nullptr, const std::string& abort_checkpoint = {}) {
        cfg_.validate();
        ObjectiveConfig obj{cfg_.objective, cfg_.subtb_lambda};
        const int K = cfg_.resolved_destroy_depth();
        TrainResult result;
        result.logs.reserve(static_cast<std::size_t>(cfg_.rounds));
        if (csv) *csv << round_csv_header() << '\n';

        for (int round = 1; round <= cfg_.rounds; ++round) {
            RoundLog log;
            log.round = round;
            try {
                // Step A: seed the chains with epsilon-noisy on-policy samples.
                std::vector<Trajectory> chains;
                chains.reserve(static_cast<std::size_t>(cfg_.chains));
                for (int m = 0; m < cfg_.chains; ++m) {
                    chains.push_back(sample_trajectory(*policy_, env_, cfg_.epsilon, train_rng_));
                    ++oracle_calls_;
                    dataset_.insert(chains.back(), round, SampleOrigin::SeedSample);
                }

                // Step B: local-search refinement (no-op when ls_iterations = 0).
                RefineStats stats = refine_batch(*policy_, env_, chains, cfg_.ls_iterations, K,
                                                 cfg_.filter, dataset_, round, train_rng_);
                oracle_calls_ += stats.proposals;
                log.accept_rate = stats.rate();

                // Step C: one optimizer step on a prioritized replay batch.
                std::vector<Trajectory> batch =
                    dataset_.sample_prt(static_cast<std::size_t>(cfg_.batch_size), train_rng_);
                PolicyGrads grads = policy_->make_grads();
                log.loss = batch_loss(*policy_, env_, batch, obj, &grads);
                if (!std::isfinite(log.loss))
                    throw std::runtime_error("non-finite training loss");
                optimizer_.step(*policy_, grads);
            } catch (const std::exception& e) {
                if (!abort_checkpoint.empty())
                    save_checkpoint(abort_checkpoint, *policy_, optimizer_, cfg_);
                throw std::runtime_error("round " + std::to_string(round) + ": " + e.what());
            }

            log.oracle_calls = oracle_calls_;
            log.dataset_size = dataset_.size();

            if (round % cfg_.eval_every == 0 || round == cfg_.rounds) {
                std::vector<Sample> fresh =
                    draw_on_policy_samples(*policy_, env_, cfg_.eval_samples, eval_rng_);
                eval_samples_.insert(eval_samples_.end(), fresh.begin(), fresh.end());
                log.evaluated = true;
                log.eval = compute_eval_metrics(eval_samples_, metric_ctx_, env_);
                result.final_metrics = log.eval;
            }

            if (csv) write_round_csv(log, *csv);
            result.logs.push_back(std::move(log));
        }
        result.eval_sample_count = eval_samples_.size();
        result.oracle_calls = oracle_calls_;
        return result;
    }

private:
    static SequenceEnv build_env(RunConfig& cfg) {
        cfg.validate();
        return make_env(cfg);
    }

    RunConfig cfg_;
    SequenceEnv env_;
    std::optional<SSRPolicy> policy_;
    PolicyOptimizer optimizer_;
    ReplayDataset dataset_;
    Rng train_rng_;
    Rng eval_rng_;
    MetricContext metric_ctx_;
    std::vector<Sample> eval_samples_;
    long long oracle_calls_ = 0;
};

} // namespace lsgfn
