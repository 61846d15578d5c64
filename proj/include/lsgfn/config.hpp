// Run configuration: a flat key=value text format ('#' comments, blank lines
// ignored). Every key is typed and validated; unknown or duplicate keys are
// hard errors so sweep typos fail loudly instead of silently using defaults.
#pragma once

#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "lsgfn/env.hpp"
#include "lsgfn/local_search.hpp"
#include "lsgfn/objectives.hpp"

namespace lsgfn {

struct RunConfig {
    // environment
    std::string alphabet = "ACGT";
    int length = 8;
    EdgeMode edge_mode = EdgeMode::PrependAppend;
    std::string reward_table;  // path; empty selects the synthetic landscape
    std::uint64_t landscape_seed = 0;
    int landscape_modes = 8;
    double landscape_width = 1.5;
    double landscape_floor = 1e-3;
    int landscape_separation = 3;
    double scale_cap = 10.0;
    double beta = 3.0;

    // objective and policy
    ObjectiveKind objective = ObjectiveKind::TB;
    double subtb_lambda = 0.9;
    std::vector<int> hidden = {64, 64};
    std::string activation = "tanh";
    double logit_clip = 50.0;
    double log_z_init = 5.0;

    // training loop
    int rounds = 2000;         // T
    int chains = 4;            // M
    int ls_iterations = 7;     // I
    int destroy_depth = -1;    // K; negative selects floor((length+1)/2)
    double epsilon = 0.05;
    FilterRule filter;         // deterministic / stochastic + orientation
    int batch_size = 16;
    double lr_log_z = 1e-2;
    double lr_net = 1e-4;
    int eval_every = 10;
    int eval_samples = 128;
    std::uint64_t seed = 0;
    std::uint64_t replay_capacity = 0;  // 0 = unbounded

    // mode counting
    double mode_quantile = 0.005;  // top fraction defining the reward threshold
    int mode_min_separation = 3;
    int mode_radius = 1;

    int resolved_destroy_depth() const {
        return destroy_depth < 0 ? (length + 1) / 2 : destroy_depth;
    }

    long long round_budget() const {
        return static_cast<long long>(chains) * (ls_iterations + 1);
    }

    void validate() const {
        auto fail = [](const std::string& msg) { throw std::invalid_argument("config: " + msg); };
        if (alphabet.size() < 2) fail("alphabet needs at least 2 symbols");
        if (length < 1) fail("length must be >= 1");
        if (reward_table.empty() && landscape_modes < 1) fail("landscape_modes must be >= 1");
        if (reward_table.empty() && landscape_width <= 0.0) fail("landscape_width must be > 0");
        if (reward_table.empty() && landscape_floor <= 0.0) fail("landscape_floor must be > 0");
        if (scale_cap <= 0.0) fail("scale_cap must be > 0");
        if (beta < 1.0) fail("beta must be >= 1");
        if (subtb_lambda <= 0.0 || subtb_lambda > 1.0) fail("subtb_lambda must be in (0, 1]");
        for (int h : hidden)
            if (h < 1) fail("hidden widths must be >= 1");
        if (logit_clip <= 0.0) fail("logit_clip must be > 0");
        if (rounds < 1) fail("rounds must be >= 1");
        if (chains < 1) fail("chains must be >= 1");
        if (ls_iterations < 0) fail("ls_iterations must be >= 0");
        if (resolved_destroy_depth() > length) fail("destroy_depth must be <= length");
        if (epsilon < 0.0 || epsilon > 1.0) fail("epsilon must be in [0, 1]");
        if (batch_size < 1) fail("batch_size must be >= 1");
        if (lr_log_z <= 0.0 || lr_net <= 0.0) fail("learning rates must be > 0");
        if (eval_every < 1) fail("eval_every must be >= 1");
        if (eval_samples < 1) fail("eval_samples must be >= 1");
        if (mode_quantile <= 0.0 || mode_quantile >= 1.0) fail("mode_quantile must be in (0, 1)");
        if (mode_min_separation < 1) fail("mode_min_separation must be >= 1");
        if (mode_radius < 1) fail("mode_radius must be >= 1");
    }
};

namespace detail {

inline long long parse_ll(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    long long v = 0;
    try {
        v = std::stoll(value, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != value.size() || value.empty())
        throw std::invalid_argument("config key '" + key + "': bad integer \"" + value + "\"");
    return v;
}

inline int parse_int(const std::string& key, const std::string& value) {
    return static_cast<int>(parse_ll(key, value));
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    long long v = parse_ll(key, value);
    if (v < 0) throw std::invalid_argument("config key '" + key + "': must be non-negative");
    return static_cast<std::uint64_t>(v);
}

inline double parse_double(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(value, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != value.size() || value.empty())
        throw std::invalid_argument("config key '" + key + "': bad number \"" + value + "\"");
    return v;
}

inline std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
    std::vector<int> out;
    if (value.empty()) return out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(parse_int(key, item));
    return out;
}

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return {};
    std::size_t b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

} // namespace detail

inline void apply_config_key(RunConfig& cfg, const std::string& key, const std::string& value) {
    using detail::parse_double;
    using detail::parse_int;
    using detail::parse_int_list;
    using detail::parse_u64;
    if (key == "alphabet") cfg.alphabet = value;
    else if (key == "length") cfg.length = parse_int(key, value);
    else if (key == "edge_mode") cfg.edge_mode = edge_mode_from_name(value);
    else if (key == "reward_table") cfg.reward_table = value;
    else if (key == "landscape_seed") cfg.landscape_seed = parse_u64(key, value);
    else if (key == "landscape_modes") cfg.landscape_modes = parse_int(key, value);
    else if (key == "landscape_width") cfg.landscape_width = parse_double(key, value);
    else if (key == "landscape_floor") cfg.landscape_floor = parse_double(key, value);
    else if (key == "landscape_separation") cfg.landscape_separation = parse_int(key, value);
    else if (key == "scale_cap") cfg.scale_cap = parse_double(key, value);
    else if (key == "beta") cfg.beta = parse_double(key, value);
    else if (key == "objective") cfg.objective = objective_from_name(value);
    else if (key == "subtb_lambda") cfg.subtb_lambda = parse_double(key, value);
    else if (key == "hidden") cfg.hidden = parse_int_list(key, value);
    else if (key == "activation") cfg.activation = value;
    else if (key == "logit_clip") cfg.logit_clip = parse_double(key, value);
    else if (key == "log_z_init") cfg.log_z_init = parse_double(key, value);
    else if (key == "rounds") cfg.rounds = parse_int(key, value);
    else if (key == "chains") cfg.chains = parse_int(key, value);
    else if (key == "ls_iterations") cfg.ls_iterations = parse_int(key, value);
    else if (key == "destroy_depth") cfg.destroy_depth = parse_int(key, value);
    else if (key == "epsilon") cfg.epsilon = parse_double(key, value);
    else if (key == "filter") cfg.filter.kind = filter_kind_from_name(value);
    else if (key == "mh_orientation") cfg.filter.orientation = mh_orientation_from_name(value);
    else if (key == "batch_size") cfg.batch_size = parse_int(key, value);
    else if (key == "lr_log_z") cfg.lr_log_z = parse_double(key, value);
    else if (key == "lr_net") cfg.lr_net = parse_double(key, value);
    else if (key == "eval_every") cfg.eval_every = parse_int(key, value);
    else if (key == "eval_samples") cfg.eval_samples = parse_int(key, value);
    else if (key == "seed") cfg.seed = parse_u64(key, value);
    else if (key == "replay_capacity") cfg.replay_capacity = parse_u64(key, value);
    else if (key == "mode_quantile") cfg.mode_quantile = parse_double(key, value);
    else if (key == "mode_min_separation") cfg.mode_min_separation = parse_int(key, value);
    else if (key == "mode_radius") cfg.mode_radius = parse_int(key, value);
    else throw std::invalid_argument("config: unknown key '" + key + "'");
}

inline RunConfig parse_config(std::istream& in) {
    RunConfig cfg;
    std::unordered_set<std::string> seen;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string stripped = detail::trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        std::size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": expected key=value");
        std::string key = detail::trim(stripped.substr(0, eq));
        std::string value = detail::trim(stripped.substr(eq + 1));
        if (key.empty())
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": empty key");
        if (!seen.insert(key).second)
            throw std::invalid_argument("config: duplicate key '" + key + "'");
        apply_config_key(cfg, key, value);
    }
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config: " + path);
    return parse_config(in);
}

// Round-trippable echo: parse(echo(cfg)) reproduces cfg exactly.
inline void echo_config(const RunConfig& cfg, std::ostream& out) {
    auto list = [](const std::vector<int>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i)
            s += (i ? "," : "") + std::to_string(v[i]);
        return s;
    };
    out.precision(17);
    out << "alphabet=" << cfg.alphabet << '\n'
        << "length=" << cfg.length << '\n'
        << "edge_mode=" << edge_mode_name(cfg.edge_mode) << '\n'
        << "reward_table=" << cfg.reward_table << '\n'
        << "landscape_seed=" << cfg.landscape_seed << '\n'
        << "landscape_modes=" << cfg.landscape_modes << '\n'
        << "landscape_width=" << cfg.landscape_width << '\n'
        << "landscape_floor=" << cfg.landscape_floor << '\n'
        << "landscape_separation=" << cfg.landscape_separation << '\n'
        << "scale_cap=" << cfg.scale_cap << '\n'
        << "beta=" << cfg.beta << '\n'
        << "objective=" << objective_name(cfg.objective) << '\n'
        << "subtb_lambda=" << cfg.subtb_lambda << '\n'
        << "hidden=" << list(cfg.hidden) << '\n'
        << "activation=" << cfg.activation << '\n'
        << "logit_clip=" << cfg.logit_clip << '\n'
        << "log_z_init=" << cfg.log_z_init << '\n'
        << "rounds=" << cfg.rounds << '\n'
        << "chains=" << cfg.chains << '\n'
        << "ls_iterations=" << cfg.ls_iterations << '\n'
        << "destroy_depth=" << cfg.destroy_depth << '\n'
        << "epsilon=" << cfg.epsilon << '\n'
        << "filter=" << filter_kind_name(cfg.filter.kind) << '\n'
        << "mh_orientation=" << mh_orientation_name(cfg.filter.orientation) << '\n'
        << "batch_size=" << cfg.batch_size << '\n'
        << "lr_log_z=" << cfg.lr_log_z << '\n'
        << "lr_net=" << cfg.lr_net << '\n'
        << "eval_every=" << cfg.eval_every << '\n'
        << "eval_samples=" << cfg.eval_samples << '\n'
        << "seed=" << cfg.seed << '\n'
        << "replay_capacity=" << cfg.replay_capacity << '\n'
        << "mode_quantile=" << cfg.mode_quantile << '\n'
        << "mode_min_separation=" << cfg.mode_min_separation << '\n'
        << "mode_radius=" << cfg.mode_radius << '\n';
}

// Build the environment described by a validated config.
inline SequenceEnv make_env(const RunConfig& cfg) {
    TokenAlphabet alphabet(cfg.alphabet);
    RewardSpec spec;
    if (!cfg.reward_table.empty()) {
        spec = RewardSpec::tabular(load_reward_table(cfg.reward_table, alphabet, cfg.length),
                                   cfg.scale_cap, cfg.beta);
    } else {
        spec = RewardSpec::synthetic(
            SyntheticLandscape::plant(alphabet, cfg.length, cfg.landscape_seed,
                                      cfg.landscape_modes, cfg.landscape_width,
                                      cfg.landscape_floor, cfg.landscape_separation),
            cfg.scale_cap, cfg.beta);
    }
    return SequenceEnv(std::move(alphabet), cfg.length, cfg.edge_mode, std::move(spec));
}

} // namespace lsgfn
