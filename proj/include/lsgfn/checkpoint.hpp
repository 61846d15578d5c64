// Policy + optimizer checkpointing as JSON. Doubles are serialized with
// round-trip-exact formatting, so restoring a checkpoint reproduces the run
// state bit for bit. The stored config hash guards against loading a
// checkpoint into a differently-configured run.
#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lsgfn/config.hpp"
#include "lsgfn/nn.hpp"
#include "lsgfn/policy.hpp"
#include "lsgfn/rng.hpp"

namespace lsgfn {

// Adam states for every parameter group. Gradient norms are clipped per
// group before each update.
struct PolicyOptimizer {
    nn::AdamState log_z_state;
    nn::AdamState fw_state;
    nn::AdamState bw_state;
    nn::AdamState flow_state;
    double grad_clip = 10.0;

    static PolicyOptimizer make(const SSRPolicy& policy, double lr_log_z, double lr_net) {
        PolicyOptimizer opt;
        opt.log_z_state = nn::AdamState(1, lr_log_z);
        opt.fw_state = nn::AdamState(policy.fw_net().num_params(), lr_net);
        if (!policy.uniform_backward())
            opt.bw_state = nn::AdamState(policy.bw_net().num_params(), lr_net);
        if (policy.has_state_flow())
            opt.flow_state = nn::AdamState(policy.flow_net().num_params(), lr_net);
        return opt;
    }

    void step(SSRPolicy& policy, const PolicyGrads& grads) {
        double log_z_grad[1] = {grads.log_z};
        nn::adam_step(std::span<double>(&policy.log_z_ref(), 1),
                      std::span<const double>(log_z_grad, 1), log_z_state, grad_clip);
        nn::adam_step(policy.fw_net(), grads.fw, fw_state, grad_clip);
        if (!policy.uniform_backward())
            nn::adam_step(policy.bw_net(), grads.bw, bw_state, grad_clip);
        if (policy.has_state_flow())
            nn::adam_step(policy.flow_net(), grads.flow, flow_state, grad_clip);
    }
};

inline std::string config_hash(const RunConfig& cfg) {
    std::ostringstream echo;
    echo_config(cfg, echo);
    std::ostringstream hex;
    hex << std::hex << hash_string(echo.str(), 0);
    return hex.str();
}

namespace detail {

inline nlohmann::json net_to_json(const nn::DenseNet& net) {
    return nlohmann::json{{"dims", net.dims()},
                          {"activation", nn::activation_name(net.activation())},
                          {"params", net.params()}};
}

inline void net_from_json(const nlohmann::json& j, nn::DenseNet& net) {
    if (j.at("dims").get<std::vector<int>>() != net.dims() ||
        j.at("activation").get<std::string>() != nn::activation_name(net.activation()))
        throw std::runtime_error("checkpoint: network shape mismatch");
    auto params = j.at("params").get<std::vector<double>>();
    if (params.size() != net.num_params())
        throw std::runtime_error("checkpoint: parameter count mismatch");
    net.mutable_params() = std::move(params);
}

inline nlohmann::json adam_to_json(const nn::AdamState& s) {
    return nlohmann::json{{"m", s.m},     {"v", s.v},         {"step", s.step},
                          {"lr", s.lr},   {"beta1", s.beta1}, {"beta2", s.beta2},
                          {"eps", s.eps}};
}

inline void adam_from_json(const nlohmann::json& j, nn::AdamState& s) {
    auto m = j.at("m").get<std::vector<double>>();
    auto v = j.at("v").get<std::vector<double>>();
    if (m.size() != s.m.size() || v.size() != s.v.size())
        throw std::runtime_error("checkpoint: optimizer state size mismatch");
    s.m = std::move(m);
    s.v = std::move(v);
    s.step = j.at("step").get<long long>();
    s.lr = j.at("lr").get<double>();
    s.beta1 = j.at("beta1").get<double>();
    s.beta2 = j.at("beta2").get<double>();
    s.eps = j.at("eps").get<double>();
}

} // namespace detail

inline void save_checkpoint(const std::string& path, const SSRPolicy& policy,
                            const PolicyOptimizer& opt, const RunConfig& cfg) {
    nlohmann::json j;
    j["format"] = "lsgfn-checkpoint-1";
    j["config_hash"] = config_hash(cfg);
    j["log_z"] = policy.log_z();
    j["fw"] = detail::net_to_json(policy.fw_net());
    if (!policy.uniform_backward()) j["bw"] = detail::net_to_json(policy.bw_net());
    if (policy.has_state_flow()) j["flow"] = detail::net_to_json(policy.flow_net());
    j["adam"] = {{"log_z", detail::adam_to_json(opt.log_z_state)},
                 {"fw", detail::adam_to_json(opt.fw_state)}};
    if (!policy.uniform_backward()) j["adam"]["bw"] = detail::adam_to_json(opt.bw_state);
    if (policy.has_state_flow()) j["adam"]["flow"] = detail::adam_to_json(opt.flow_state);

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out << j.dump(1) << '\n';
}

inline void load_checkpoint(const std::string& path, SSRPolicy& policy,
                            PolicyOptimizer& opt, const RunConfig& cfg) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    nlohmann::json j;
    in >> j;
    if (j.at("format").get<std::string>() != "lsgfn-checkpoint-1")
        throw std::runtime_error("checkpoint: unknown format");
    if (j.at("config_hash").get<std::string>() != config_hash(cfg))
        throw std::runtime_error("checkpoint: config hash mismatch");
    policy.log_z_ref() = j.at("log_z").get<double>();
    detail::net_from_json(j.at("fw"), policy.fw_net());
    if (!policy.uniform_backward()) detail::net_from_json(j.at("bw"), policy.bw_net());
    if (policy.has_state_flow()) detail::net_from_json(j.at("flow"), policy.flow_net());
    detail::adam_from_json(j.at("adam").at("log_z"), opt.log_z_state);
    detail::adam_from_json(j.at("adam").at("fw"), opt.fw_state);
    if (!policy.uniform_backward()) detail::adam_from_json(j.at("adam").at("bw"), opt.bw_state);
    if (policy.has_state_flow()) detail::adam_from_json(j.at("adam").at("flow"), opt.flow_state);
}

} // namespace lsgfn
