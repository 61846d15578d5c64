#include <catch_amalgamated.hpp>

#include <sstream>

#include "lsgfn/config.hpp"

using namespace lsgfn;
using Catch::Matchers::ContainsSubstring;

TEST_CASE("defaults describe the flagship synthetic run") {
    RunConfig cfg;
    CHECK(cfg.alphabet == "ACGT");
    CHECK(cfg.length == 8);
    CHECK(cfg.edge_mode == EdgeMode::PrependAppend);
    CHECK(cfg.reward_table.empty());
    CHECK(cfg.landscape_modes == 8);
    CHECK(cfg.landscape_width == 1.5);
    CHECK(cfg.beta == 3.0);
    CHECK(cfg.objective == ObjectiveKind::TB);
    CHECK(cfg.hidden == std::vector<int>{64, 64});
    CHECK(cfg.rounds == 2000);
    CHECK(cfg.chains == 4);
    CHECK(cfg.ls_iterations == 7);
    CHECK(cfg.destroy_depth == -1);
    CHECK(cfg.epsilon == 0.05);
    CHECK(cfg.filter.kind == FilterKind::Deterministic);
    CHECK(cfg.filter.orientation == MhOrientation::Standard);
    CHECK(cfg.batch_size == 16);
    CHECK(cfg.eval_every == 10);
    CHECK(cfg.eval_samples == 128);
    CHECK(cfg.mode_quantile == 0.005);
    CHECK(cfg.mode_min_separation == 3);
    CHECK(cfg.mode_radius == 1);
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("destroy depth defaults to half the sequence length, rounded up") {
    RunConfig cfg;
    cfg.length = 8;
    CHECK(cfg.resolved_destroy_depth() == 4);  // floor((8+1)/2)
    cfg.length = 7;
    CHECK(cfg.resolved_destroy_depth() == 4);
    cfg.destroy_depth = 2;
    CHECK(cfg.resolved_destroy_depth() == 2);
    cfg.destroy_depth = 0;
    CHECK(cfg.resolved_destroy_depth() == 0);
}

TEST_CASE("round budget counts seed samples plus refinement proposals") {
    RunConfig cfg;
    cfg.chains = 4;
    cfg.ls_iterations = 7;
    CHECK(cfg.round_budget() == 32);  // M * (I + 1)
    cfg.chains = 32;
    cfg.ls_iterations = 0;
    CHECK(cfg.round_budget() == 32);
    cfg.chains = 2;
    cfg.ls_iterations = 15;
    CHECK(cfg.round_budget() == 32);
}

TEST_CASE("config parsing: comments, blanks, whitespace, CRLF") {
    std::istringstream in(
        "# flagship\n"
        "\n"
        "alphabet = AB\r\n"
        "  length=3  \n"
        "hidden = 16,8\n"
        "objective = subtb\n"
        "subtb_lambda = 0.8\n"
        "filter = stochastic\n"
        "mh_orientation = inverted\n"
        "epsilon=0.1\n");
    RunConfig cfg = parse_config(in);
    CHECK(cfg.alphabet == "AB");
    CHECK(cfg.length == 3);
    CHECK(cfg.hidden == std::vector<int>{16, 8});
    CHECK(cfg.objective == ObjectiveKind::SubTB);
    CHECK(cfg.subtb_lambda == 0.8);
    CHECK(cfg.filter.kind == FilterKind::Stochastic);
    CHECK(cfg.filter.orientation == MhOrientation::Inverted);
    CHECK(cfg.epsilon == 0.1);
    // Untouched keys keep their defaults.
    CHECK(cfg.rounds == 2000);
}

TEST_CASE("unknown keys are hard errors") {
    std::istringstream in("alpabet = AB\n");
    CHECK_THROWS_WITH(parse_config(in), ContainsSubstring("unknown key 'alpabet'"));
}

TEST_CASE("duplicate keys are hard errors") {
    std::istringstream in("length = 3\nlength = 4\n");
    CHECK_THROWS_WITH(parse_config(in), ContainsSubstring("duplicate key 'length'"));
}

TEST_CASE("malformed lines and values name the offender") {
    {
        std::istringstream in("length\n");
        CHECK_THROWS_WITH(parse_config(in), ContainsSubstring("line 1"));
    }
    {
        std::istringstream in("length = three\n");
        CHECK_THROWS_WITH(parse_config(in), ContainsSubstring("bad integer \"three\""));
    }
    {
        std::istringstream in("epsilon = fast\n");
        CHECK_THROWS_WITH(parse_config(in), ContainsSubstring("bad number \"fast\""));
    }
    {
        std::istringstream in("= 3\n");
        CHECK_THROWS_WITH(parse_config(in), ContainsSubstring("empty key"));
    }
    {
        std::istringstream in("seed = -1\n");
        CHECK_THROWS_WITH(parse_config(in), ContainsSubstring("non-negative"));
    }
    {
        std::istringstream in("objective = flow\n");
        CHECK_THROWS_WITH(parse_config(in), ContainsSubstring("unknown objective"));
    }
}

TEST_CASE("echoed configs parse back to the same values") {
    RunConfig cfg;
    cfg.alphabet = "AB";
    cfg.length = 5;
    cfg.landscape_width = 1.7320508075688772;  // full double precision survives
    cfg.epsilon = 0.125;
    cfg.hidden = {32};
    cfg.objective = ObjectiveKind::MaxEnt;
    cfg.filter = FilterRule{FilterKind::Stochastic, MhOrientation::Inverted};
    cfg.lr_net = 3.0000000000000001e-05;
    cfg.seed = 1234567890123ull;
    cfg.reward_table = "data/tiny_rewards.csv";

    std::ostringstream echoed;
    echo_config(cfg, echoed);
    std::istringstream back(echoed.str());
    RunConfig round = parse_config(back);

    CHECK(round.alphabet == cfg.alphabet);
    CHECK(round.length == cfg.length);
    CHECK(round.landscape_width == cfg.landscape_width);
    CHECK(round.epsilon == cfg.epsilon);
    CHECK(round.hidden == cfg.hidden);
    CHECK(round.objective == cfg.objective);
    CHECK(round.filter.kind == cfg.filter.kind);
    CHECK(round.filter.orientation == cfg.filter.orientation);
    CHECK(round.lr_net == cfg.lr_net);
    CHECK(round.seed == cfg.seed);
    CHECK(round.reward_table == cfg.reward_table);

    // Echo again: byte-identical the second time around.
    std::ostringstream echoed2;
    echo_config(round, echoed2);
    CHECK(echoed.str() == echoed2.str());
}

TEST_CASE("validation rejects out-of-range settings with the field name") {
    auto expect_fail = [](void (*tweak)(RunConfig&), const std::string& needle) {
        RunConfig cfg;
        tweak(cfg);
        CHECK_THROWS_WITH(cfg.validate(), ContainsSubstring(needle));
    };
    expect_fail([](RunConfig& c) { c.alphabet = "A"; }, "alphabet");
    expect_fail([](RunConfig& c) { c.length = 0; }, "length");
    expect_fail([](RunConfig& c) { c.landscape_modes = 0; }, "landscape_modes");
    expect_fail([](RunConfig& c) { c.landscape_width = 0.0; }, "landscape_width");
    expect_fail([](RunConfig& c) { c.beta = 0.5; }, "beta");
    expect_fail([](RunConfig& c) { c.subtb_lambda = 0.0; }, "subtb_lambda");
    expect_fail([](RunConfig& c) { c.hidden = {8, 0}; }, "hidden");
    expect_fail([](RunConfig& c) { c.rounds = 0; }, "rounds");
    expect_fail([](RunConfig& c) { c.chains = 0; }, "chains");
    expect_fail([](RunConfig& c) { c.ls_iterations = -1; }, "ls_iterations");
    expect_fail([](RunConfig& c) { c.destroy_depth = 9; }, "destroy_depth");
    expect_fail([](RunConfig& c) { c.epsilon = 1.5; }, "epsilon");
    expect_fail([](RunConfig& c) { c.batch_size = 0; }, "batch_size");
    expect_fail([](RunConfig& c) { c.lr_net = 0.0; }, "learning rates");
    expect_fail([](RunConfig& c) { c.eval_every = 0; }, "eval_every");
    expect_fail([](RunConfig& c) { c.eval_samples = 0; }, "eval_samples");
    expect_fail([](RunConfig& c) { c.mode_quantile = 1.0; }, "mode_quantile");
    expect_fail([](RunConfig& c) { c.mode_min_separation = 0; }, "mode_min_separation");
    expect_fail([](RunConfig& c) { c.mode_radius = 0; }, "mode_radius");

    // A tabular run does not validate landscape fields.
    RunConfig cfg;
    cfg.reward_table = "somewhere.csv";
    cfg.landscape_modes = 0;
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("environment construction follows the reward selection") {
    RunConfig cfg;
    cfg.alphabet = "AB";
    cfg.length = 3;
    cfg.reward_table = "data/tiny_rewards.csv";
    cfg.beta = 1.0;
    SequenceEnv env = make_env(cfg);
    CHECK(env.reward(env.make_state("AAA")) == Catch::Approx(10.0));

    cfg.reward_table.clear();
    cfg.landscape_modes = 2;
    cfg.landscape_separation = 2;
    SequenceEnv synth = make_env(cfg);
    CHECK(synth.reward_spec().landscape.has_value());
    CHECK(synth.reward_spec().landscape->modes.size() == 2);

    cfg.reward_table = "/no/such/file.csv";
    CHECK_THROWS_WITH(make_env(cfg), ContainsSubstring("cannot open reward table"));
}

TEST_CASE("missing config files name the path") {
    CHECK_THROWS_WITH(load_config("/no/such/config.conf"),
                      ContainsSubstring("/no/such/config.conf"));
}
