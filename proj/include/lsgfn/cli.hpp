// Command-line front end. Subcommands: train (full run with artifacts), eval
// (score a checkpoint), oracle (exact enumeration facts about an env),
// compare (variant sweep over seeds), modes (count modes in a sample file).
// Exit codes: 0 success, 1 runtime failure, 2 config/input error.
#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lsgfn/checkpoint.hpp"
#include "lsgfn/config.hpp"
#include "lsgfn/metrics.hpp"
#include "lsgfn/trainer.hpp"

namespace lsgfn::cli {

inline constexpr const char* kVersion = "0.1.0";

namespace detail {

inline std::string iso_timestamp() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline std::string file_hash_hex(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file for hashing: " + path);
    std::ostringstream content;
    content << in.rdbuf();
    std::ostringstream hex;
    hex << std::hex << hash_string(content.str(), 0);
    return hex.str();
}

inline std::string env_fingerprint(const RunConfig& cfg) {
    std::ostringstream fp;
    fp << cfg.alphabet << ":" << cfg.length << ":" << edge_mode_name(cfg.edge_mode) << ":";
    if (!cfg.reward_table.empty()) {
        fp << "table:" << file_hash_hex(cfg.reward_table);
    } else {
        fp << "synthetic:" << cfg.landscape_seed << ":" << cfg.landscape_modes << ":"
           << cfg.landscape_width << ":" << cfg.landscape_floor << ":"
           << cfg.landscape_separation;
    }
    fp << ":" << cfg.scale_cap << ":" << cfg.beta;
    return fp.str();
}

inline nlohmann::json summary_to_json(const SummaryMetrics& s) {
    return {{"top100_mean", s.top100_mean},
            {"unique_fraction", s.unique_fraction},
            {"diversity", s.diversity}};
}

inline nlohmann::json eval_metrics_to_json(const EvalMetrics& m) {
    nlohmann::json j = {{"n_modes_threshold", m.n_modes_threshold},
                        {"n_modes_localopt", m.n_modes_localopt},
                        {"summary", summary_to_json(m.summary)}};
    if (std::isfinite(m.accuracy)) j["accuracy"] = m.accuracy;
    return j;
}

inline nlohmann::json manifest_json(const RunConfig& cfg) {
    std::ostringstream echo;
    echo_config(cfg, echo);
    return {{"version", kVersion},
            {"config", echo.str()},
            {"config_hash", config_hash(cfg)},
            {"seed", cfg.seed},
            {"env_fingerprint", env_fingerprint(cfg)},
            {"budget_per_round", cfg.round_budget()},
            {"destroy_depth", cfg.resolved_destroy_depth()},
            {"started", iso_timestamp()}};
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(1) << '\n';
}

// Setup errors (bad config, unreadable inputs) exit 2; failures after setup
// exit 1.
template <typename Setup, typename Body>
int staged(Setup&& setup, Body&& body) {
    try {
        setup();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    try {
        body();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

inline std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        seeds.push_back(lsgfn::detail::parse_u64("seeds", lsgfn::detail::trim(item)));
    if (seeds.empty()) throw std::invalid_argument("empty seed list");
    return seeds;
}

// "name:key=value,key=value" (overrides optional).
struct Variant {
    std::string name;
    std::vector<std::pair<std::string, std::string>> overrides;
};

inline Variant parse_variant(const std::string& text) {
    Variant v;
    std::size_t colon = text.find(':');
    v.name = lsgfn::detail::trim(colon == std::string::npos ? text : text.substr(0, colon));
    if (v.name.empty()) throw std::invalid_argument("variant needs a name: \"" + text + "\"");
    if (colon == std::string::npos) return v;
    std::stringstream ss(text.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = lsgfn::detail::trim(item);
        if (item.empty()) continue;
        std::size_t eq = item.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("variant override needs key=value: \"" + item + "\"");
        v.overrides.emplace_back(lsgfn::detail::trim(item.substr(0, eq)),
                                 lsgfn::detail::trim(item.substr(eq + 1)));
    }
    return v;
}

struct MeanStd {
    double mean = 0.0;
    double stddev = 0.0;
};

inline MeanStd mean_std(const std::vector<double>& xs) {
    MeanStd ms;
    if (xs.empty()) return ms;
    ms.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - ms.mean) * (x - ms.mean);
    ms.stddev = std::sqrt(var / static_cast<double>(xs.size()));
    return ms;
}

} // namespace detail

inline int cmd_train(const std::string& config_path, const std::string& out_dir,
                     std::optional<std::uint64_t> seed_override) {
    RunConfig cfg;
    std::optional<Trainer> trainer;
    std::filesystem::path out(out_dir);
    return detail::staged(
        [&] {
            cfg = load_config(config_path);
            if (seed_override) cfg.seed = *seed_override;
            cfg.validate();
            std::filesystem::create_directories(out);
            trainer.emplace(cfg);
        },
        [&] {
            nlohmann::json manifest = detail::manifest_json(cfg);
            manifest["reward_normalization_max_raw"] = trainer->env().max_raw();
            detail::write_json(out / "manifest.json", manifest);

            std::ofstream csv(out / "rounds.csv");
            if (!csv) throw std::runtime_error("cannot write " + (out / "rounds.csv").string());
            auto t0 = std::chrono::steady_clock::now();
            TrainResult result = trainer->run(&csv, (out / "abort.ckpt.json").string());
            auto t1 = std::chrono::steady_clock::now();

            save_checkpoint((out / "checkpoint.json").string(), trainer->policy(),
                            trainer->optimizer(), cfg);

            manifest["finished"] = detail::iso_timestamp();
            detail::write_json(out / "manifest.json", manifest);

            nlohmann::json summary;
            summary["manifest"] = manifest;
            summary["final_metrics"] = detail::eval_metrics_to_json(result.final_metrics);
            summary["oracle_calls"] = result.oracle_calls;
            summary["eval_sample_count"] = result.eval_sample_count;
            summary["rounds"] = result.logs.size();
            summary["dataset_size"] =
                result.logs.empty() ? 0 : result.logs.back().dataset_size;
            summary["runtime_seconds"] =
                std::chrono::duration<double>(t1 - t0).count();
            summary["acceptance_trace"] = result.acceptance_trace();
            detail::write_json(out / "summary.json", summary);
            std::cerr << "train: wrote " << (out / "rounds.csv").string() << " ("
                      << result.logs.size() << " rounds)\n";
        });
}

inline int cmd_eval(const std::string& config_path, const std::string& checkpoint_path,
                    int n_samples, std::optional<std::uint64_t> seed_override,
                    const std::string& out_dir) {
    RunConfig cfg;
    std::optional<Trainer> trainer;
    return detail::staged(
        [&] {
            cfg = load_config(config_path);
            cfg.validate();
            trainer.emplace(cfg);
            load_checkpoint(checkpoint_path, trainer->policy(), trainer->optimizer(), cfg);
        },
        [&] {
            Rng rng = make_rng(seed_override.value_or(cfg.seed), /*stream=*/99);
            EvalBundle bundle = evaluate(trainer->policy(), trainer->env(),
                                         n_samples <= 0 ? cfg.eval_samples : n_samples, rng,
                                         trainer->metric_context());
            nlohmann::json j = detail::eval_metrics_to_json(bundle.metrics);
            j["n_samples"] = bundle.samples.size();
            if (!out_dir.empty()) {
                std::filesystem::path out(out_dir);
                std::filesystem::create_directories(out);
                std::ofstream samples_csv(out / "samples.csv");
                samples_csv << "terminal,reward\n";
                samples_csv.precision(12);
                for (const auto& s : bundle.samples)
                    samples_csv << s.x << ',' << s.reward << '\n';
                detail::write_json(out / "eval.json", j);
            }
            std::cout << j.dump(1) << '\n';
        });
}

inline int cmd_oracle(const std::string& config_path) {
    RunConfig cfg;
    std::optional<SequenceEnv> env;
    return detail::staged(
        [&] {
            cfg = load_config(config_path);
            cfg.validate();
            env.emplace(make_env(cfg));
            if (!env->enumerable())
                throw std::invalid_argument("environment too large to enumerate");
        },
        [&] {
            TargetOracle oracle = TargetOracle::build(*env);
            MetricContext ctx = MetricContext::build(*env, cfg);

            std::vector<double> rewards;
            rewards.reserve(oracle.terminals.size());
            for (const auto& [x, r] : oracle.terminals) rewards.push_back(r);
            std::sort(rewards.begin(), rewards.end());
            auto quantile = [&](double q) {
                std::size_t i = static_cast<std::size_t>(q * static_cast<double>(rewards.size() - 1));
                return rewards[i];
            };

            // Mode inventory: run both counters over the full terminal set.
            std::vector<Sample> all;
            all.reserve(oracle.terminals.size());
            for (const auto& [x, r] : oracle.terminals)
                all.push_back(Sample{x.content, r, std::log(r)});

            nlohmann::json j;
            j["n_terminals"] = oracle.terminals.size();
            j["z"] = oracle.z;
            j["target_mean"] = oracle.target_mean;
            j["reward_quantiles"] = {{"min", rewards.front()},   {"p50", quantile(0.50)},
                                     {"p90", quantile(0.90)},    {"p99", quantile(0.99)},
                                     {"p99_5", quantile(0.995)}, {"max", rewards.back()}};
            j["mode_threshold"] = ctx.threshold_spec.reward_threshold;
            j["n_modes_threshold"] = count_modes(all, ctx.threshold_spec, *env);
            j["n_modes_localopt"] = count_modes(all, ctx.localopt_spec, *env);
            if (env->reward_spec().landscape)
                j["planted_modes"] = env->reward_spec().landscape->modes;
            std::cout << j.dump(1) << '\n';
        });
}

inline int cmd_modes(const std::string& config_path, const std::string& samples_path) {
    RunConfig cfg;
    std::optional<SequenceEnv> env;
    std::vector<Sample> samples;
    return detail::staged(
        [&] {
            cfg = load_config(config_path);
            cfg.validate();
            env.emplace(make_env(cfg));
            std::ifstream in(samples_path);
            if (!in) throw std::invalid_argument("cannot open samples file: " + samples_path);
            // One terminal string per line; a trailing ",value" (as written by
            // dataset dumps and eval sample files) is ignored, as is a header.
            std::string line;
            bool first = true;
            while (std::getline(in, line)) {
                if (!line.empty() && line.back() == '\r') line.pop_back();
                std::string token = lsgfn::detail::trim(line.substr(0, line.find(',')));
                if (token.empty() || token[0] == '#') continue;
                if (first && token == "terminal") { first = false; continue; }
                first = false;
                SeqState x = env->make_state(token);
                if (!x.terminal())
                    throw std::invalid_argument("sample is not a complete sequence: " + token);
                double log_r = env->log_reward(x);
                samples.push_back(Sample{token, std::exp(log_r), log_r});
            }
            if (samples.empty()) throw std::invalid_argument("samples file has no sequences");
        },
        [&] {
            MetricContext ctx = MetricContext::build(*env, cfg);
            nlohmann::json j;
            j["n_samples"] = samples.size();
            j["mode_threshold"] = ctx.threshold_spec.reward_threshold;
            j["n_modes_threshold"] = count_modes(samples, ctx.threshold_spec, *env);
            j["n_modes_localopt"] = count_modes(samples, ctx.localopt_spec, *env);
            std::cout << j.dump(1) << '\n';
        });
}

inline int cmd_compare(const std::string& config_path, const std::vector<std::string>& variant_args,
                       const std::string& out_dir, const std::string& seeds_arg) {
    RunConfig base;
    std::vector<detail::Variant> variants;
    std::vector<std::uint64_t> seeds;
    std::vector<RunConfig> run_cfgs;
    std::filesystem::path out(out_dir);
    return detail::staged(
        [&] {
            base = load_config(config_path);
            base.validate();
            seeds = detail::parse_seed_list(seeds_arg);
            if (variant_args.empty()) throw std::invalid_argument("compare needs --variant");
            for (const auto& text : variant_args) {
                detail::Variant v = detail::parse_variant(text);
                RunConfig cfg = base;
                for (const auto& [key, value] : v.overrides) apply_config_key(cfg, key, value);
                cfg.validate();
                run_cfgs.push_back(cfg);
                variants.push_back(std::move(v));
            }
            std::filesystem::create_directories(out);
        },
        [&] {
            std::ofstream table(out / "comparison.csv");
            table << "variant,budget,accuracy_mean,accuracy_std,modes_mean,modes_std\n";
            table.precision(10);
            nlohmann::json all = nlohmann::json::array();
            for (std::size_t vi = 0; vi < variants.size(); ++vi) {
                std::vector<double> accs, modes;
                for (std::uint64_t seed : seeds) {
                    RunConfig cfg = run_cfgs[vi];
                    cfg.seed = seed;
                    std::filesystem::path run_dir =
                        out / (variants[vi].name + "-seed" + std::to_string(seed));
                    std::filesystem::create_directories(run_dir);
                    Trainer trainer(cfg);
                    std::ofstream csv(run_dir / "rounds.csv");
                    TrainResult result =
                        trainer.run(&csv, (run_dir / "abort.ckpt.json").string());
                    accs.push_back(result.final_metrics.accuracy);
                    modes.push_back(result.final_metrics.n_modes_threshold);
                    std::cerr << "compare: " << variants[vi].name << " seed " << seed
                              << " accuracy " << result.final_metrics.accuracy << " modes "
                              << result.final_metrics.n_modes_threshold << '\n';
                }
                detail::MeanStd acc = detail::mean_std(accs);
                detail::MeanStd mod = detail::mean_std(modes);
                table << variants[vi].name << ',' << run_cfgs[vi].round_budget() << ','
                      << acc.mean << ',' << acc.stddev << ',' << mod.mean << ',' << mod.stddev
                      << '\n';
                all.push_back({{"variant", variants[vi].name},
                               {"budget", run_cfgs[vi].round_budget()},
                               {"accuracy_mean", acc.mean},
                               {"accuracy_std", acc.stddev},
                               {"modes_mean", mod.mean},
                               {"modes_std", mod.stddev}});
            }
            detail::write_json(out / "comparison.json", all);
            std::cout << all.dump(1) << '\n';
        });
}

inline int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Local-search GFlowNet training laboratory"};
    app.require_subcommand(1);

    std::string config_path, out_dir, checkpoint_path, samples_path;
    std::string seeds_arg = "0,1,2";
    std::vector<std::string> variant_args;
    int n_samples = 0;
    std::optional<std::uint64_t> seed_override;
    std::uint64_t seed_value = 0;

    CLI::App* train = app.add_subcommand("train", "run a training configuration");
    train->add_option("--config", config_path, "config file")->required();
    train->add_option("--out", out_dir, "output directory")->required();
    CLI::Option* train_seed = train->add_option("--seed", seed_value, "seed override");

    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    eval_cmd->add_option("--config", config_path, "config file")->required();
    eval_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
    eval_cmd->add_option("--samples", n_samples, "number of samples");
    eval_cmd->add_option("--out", out_dir, "optional output directory");
    CLI::Option* eval_seed = eval_cmd->add_option("--seed", seed_value, "sampling seed");

    CLI::App* oracle_cmd = app.add_subcommand("oracle", "exact enumeration facts");
    oracle_cmd->add_option("--config", config_path, "config file")->required();

    CLI::App* modes_cmd = app.add_subcommand("modes", "count modes in a sample file");
    modes_cmd->add_option("--config", config_path, "config file")->required();
    modes_cmd->add_option("--samples", samples_path, "sample file (one sequence per line)")
        ->required();

    CLI::App* compare_cmd = app.add_subcommand("compare", "run variants over seeds");
    compare_cmd->add_option("--config", config_path, "base config file")->required();
    compare_cmd->add_option("--variant", variant_args, "variant: name:key=value,...")
        ->required();
    compare_cmd->add_option("--out", out_dir, "output directory")->required();
    compare_cmd->add_option("--seeds", seeds_arg, "comma-separated seeds");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (train->parsed()) {
        if (*train_seed) seed_override = seed_value;
        return cmd_train(config_path, out_dir, seed_override);
    }
    if (eval_cmd->parsed()) {
        if (*eval_seed) seed_override = seed_value;
        return cmd_eval(config_path, checkpoint_path, n_samples, seed_override, out_dir);
    }
    if (oracle_cmd->parsed()) return cmd_oracle(config_path);
    if (modes_cmd->parsed()) return cmd_modes(config_path, samples_path);
    if (compare_cmd->parsed()) return cmd_compare(config_path, variant_args, out_dir, seeds_arg);
    return 2;
}

} // namespace lsgfn::cli
