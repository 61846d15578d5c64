// Walk through one local-search refinement step by hand: sample a complete
// sequence, destroy its last few construction steps by walking backward, let
// the forward policy rebuild the tail, and show the two acceptance rules on
// the resulting proposal.
#include <cstdio>

#include "lsgfn/config.hpp"
#include "lsgfn/local_search.hpp"
#include "lsgfn/trainer.hpp"

using namespace lsgfn;

static void print_traj(const char* label, const Trajectory& t) {
    std::printf("%s:", label);
    for (const auto& s : t.states) std::printf(" %s", s.content.empty() ? "-" : s.content.c_str());
    std::printf("   R=%.4f\n", t.reward);
}

int main() {
    RunConfig cfg;
    cfg.alphabet = "ACGT";
    cfg.length = 6;
    cfg.landscape_modes = 4;
    cfg.hidden = {32};
    cfg.seed = 3;
    cfg.validate();

    Trainer trainer(cfg);
    const SequenceEnv& env = trainer.env();
    Rng rng = make_rng(cfg.seed, 11);

    Trajectory seed = sample_trajectory(trainer.policy(), env, 0.0, rng);
    int depth = cfg.resolved_destroy_depth();
    Proposal prop = propose(trainer.policy(), env, seed, depth, rng);

    print_traj("current ", prop.original);
    print_traj("proposal", prop.candidate);
    std::printf("shared prefix: %d of %d states\n",
                static_cast<int>(prop.shared_prefix_len) + 1,
                static_cast<int>(prop.original.states.size()));
    std::printf("log q(fwd)=%.4f  log q(bwd)=%.4f\n", prop.log_q_fwd, prop.log_q_bwd);

    FilterRule greedy{FilterKind::Deterministic, MhOrientation::Standard};
    FilterRule mh{FilterKind::Stochastic, MhOrientation::Standard};
    std::printf("greedy accepts with probability %.4f\n",
                acceptance_probability(greedy, prop));
    std::printf("metropolis-hastings accepts with probability %.4f\n",
                acceptance_probability(mh, prop));
    return 0;
}
