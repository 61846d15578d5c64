#include <catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <sstream>

#include "lsgfn/env.hpp"

using namespace lsgfn;

namespace {

std::vector<std::string> contents(const std::vector<SeqState>& states) {
    std::vector<std::string> out;
    for (const auto& s : states) out.push_back(s.content);
    return out;
}

SequenceEnv table_env(const TokenAlphabet& alphabet, int length,
                      std::unordered_map<std::string, double> table,
                      double cap = 10.0, double beta = 1.0) {
    return SequenceEnv(alphabet, length, EdgeMode::PrependAppend,
                       RewardSpec::tabular(std::move(table), cap, beta));
}

} // namespace

TEST_CASE("alphabet indexing and validation") {
    TokenAlphabet ab("ACGT");
    CHECK(ab.size() == 4);
    CHECK(ab.index('G') == 2);
    CHECK(ab.contains('T'));
    CHECK_FALSE(ab.contains('X'));
    CHECK_THROWS_AS(TokenAlphabet("AAB"), std::invalid_argument);
    CHECK_THROWS_AS(TokenAlphabet(""), std::invalid_argument);
}

TEST_CASE("hamming distance requires equal lengths") {
    CHECK(hamming("ACGT", "ACGT") == 0);
    CHECK(hamming("ACGT", "TCGA") == 2);
    CHECK_THROWS_AS(hamming("AC", "ACG"), std::invalid_argument);
}

TEST_CASE("children are prepends then appends, de-duplicated") {
    TokenAlphabet ab("AB");
    SequenceEnv env = table_env(ab, 3, {{"AAA", 1}, {"AAB", 1}, {"ABA", 1}, {"ABB", 1},
                                        {"BAA", 1}, {"BAB", 1}, {"BBA", 1}, {"BBB", 1}});

    // Prepend A, prepend B, then the appends that produce new strings.
    CHECK(contents(env.children(env.make_state("AB"))) ==
          std::vector<std::string>{"AAB", "BAB", "ABA", "ABB"});

    // "AA": prepend A and append A collide.
    CHECK(contents(env.children(env.make_state("AA"))) ==
          std::vector<std::string>{"AAA", "BAA", "AAB"});

    // Initial state: prepending and appending a symbol coincide.
    CHECK(contents(env.children(env.initial_state())) ==
          std::vector<std::string>{"A", "B"});

    CHECK_THROWS_WITH(env.children(env.make_state("AAB")),
                      Catch::Matchers::ContainsSubstring("no children of terminal state"));
}

TEST_CASE("parents are drop-first then drop-last, de-duplicated") {
    TokenAlphabet ab("AB");
    SequenceEnv env = table_env(ab, 3, {{"AAA", 1}, {"AAB", 1}, {"ABA", 1}, {"ABB", 1},
                                        {"BAA", 1}, {"BAB", 1}, {"BBA", 1}, {"BBB", 1}});

    CHECK(contents(env.parents(env.make_state("AB"))) == std::vector<std::string>{"B", "A"});
    CHECK(contents(env.parents(env.make_state("AA"))) == std::vector<std::string>{"A"});
    CHECK(contents(env.parents(env.make_state("A"))) == std::vector<std::string>{""});
    CHECK_THROWS_WITH(env.parents(env.initial_state()),
                      Catch::Matchers::ContainsSubstring("no parents of initial state"));
}

TEST_CASE("append-only mode gives a single path to each terminal") {
    TokenAlphabet ab("AB");
    SequenceEnv env(ab, 3, EdgeMode::AppendOnly,
                    RewardSpec::tabular({{"AAA", 1}, {"AAB", 1}, {"ABA", 1}, {"ABB", 1},
                                         {"BAA", 1}, {"BAB", 1}, {"BBA", 1}, {"BBB", 1}},
                                        10.0, 1.0));
    CHECK(contents(env.children(env.make_state("AB"))) ==
          std::vector<std::string>{"ABA", "ABB"});
    CHECK(contents(env.parents(env.make_state("AB"))) == std::vector<std::string>{"A"});
}

TEST_CASE("make_state validates content") {
    TokenAlphabet ab("AB");
    SequenceEnv env = table_env(ab, 3, {{"AAA", 1}, {"AAB", 1}, {"ABA", 1}, {"ABB", 1},
                                        {"BAA", 1}, {"BAB", 1}, {"BBA", 1}, {"BBB", 1}});
    CHECK(env.make_state("AB").length() == 2);
    CHECK(env.make_state("").initial());
    CHECK(env.make_state("ABA").terminal());
    CHECK_THROWS_AS(env.make_state("ABAB"), std::invalid_argument);
    CHECK_THROWS_AS(env.make_state("AXB"), std::invalid_argument);
}

TEST_CASE("tabular rewards are scaled and exponentiated in log space") {
    TokenAlphabet ab("AB");
    // max raw 8 -> scale C/max = 10/8; beta = 2.
    SequenceEnv env = table_env(ab, 1, {{"A", 8.0}, {"B", 2.0}}, 10.0, 2.0);
    CHECK(env.max_raw() == Catch::Approx(8.0));
    CHECK(env.reward(env.make_state("A")) == Catch::Approx(100.0));
    CHECK(env.reward(env.make_state("B")) == Catch::Approx(std::pow(2.0 * 10.0 / 8.0, 2.0)));
    CHECK(env.log_reward(env.make_state("B")) ==
          Catch::Approx(2.0 * (std::log(2.0) + std::log(10.0) - std::log(8.0))));
}

TEST_CASE("zero raw reward maps to log reward of -infinity") {
    TokenAlphabet ab("AB");
    SequenceEnv env = table_env(ab, 1, {{"A", 5.0}, {"B", 0.0}});
    CHECK(env.log_reward(env.make_state("B")) == -std::numeric_limits<double>::infinity());
    CHECK(env.reward(env.make_state("B")) == 0.0);
    CHECK(env.reward(env.make_state("A")) == Catch::Approx(10.0));
}

TEST_CASE("reward lookup outside the table is a hard error") {
    TokenAlphabet ab("AB");
    SequenceEnv env = table_env(ab, 2, {{"AA", 1}, {"AB", 2}, {"BA", 3}});  // BB missing
    CHECK_THROWS_WITH(env.log_reward(env.make_state("BB")),
                      Catch::Matchers::ContainsSubstring("unknown terminal object"));
    CHECK_THROWS_AS(env.log_reward(env.make_state("A")), std::invalid_argument);
}

TEST_CASE("reward table parsing") {
    TokenAlphabet ab("AB");

    SECTION("plain records") {
        std::istringstream in("AA,1.0\nAB,2.5\nBA,0.5\nBB,4\n");
        auto t = parse_reward_table(in, ab, 2);
        CHECK(t.size() == 4);
        CHECK(t.at("AB") == 2.5);
    }
    SECTION("header, comments, blank lines and CRLF are tolerated") {
        std::istringstream in("terminal,reward\r\n# comment\n\nAA,1.0\nAB,2.5\nBA,0.5\nBB,4\r\n");
        auto t = parse_reward_table(in, ab, 2);
        CHECK(t.size() == 4);
        CHECK(t.at("BB") == 4.0);
    }
    SECTION("bad symbol") {
        std::istringstream in("AX,1.0\n");
        CHECK_THROWS_WITH(parse_reward_table(in, ab, 2),
                          Catch::Matchers::ContainsSubstring("symbol not in alphabet"));
    }
    SECTION("wrong length") {
        std::istringstream in("AAA,1.0\n");
        CHECK_THROWS_WITH(parse_reward_table(in, ab, 2),
                          Catch::Matchers::ContainsSubstring("sequence length"));
    }
    SECTION("duplicate terminal") {
        std::istringstream in("AA,1.0\nAA,2.0\n");
        CHECK_THROWS_WITH(parse_reward_table(in, ab, 2),
                          Catch::Matchers::ContainsSubstring("duplicate sequence"));
    }
    SECTION("non-finite value") {
        std::istringstream in("AA,inf\n");
        CHECK_THROWS_WITH(parse_reward_table(in, ab, 2),
                          Catch::Matchers::ContainsSubstring("finite"));
    }
    SECTION("empty input") {
        std::istringstream in("# nothing here\n");
        CHECK_THROWS_WITH(parse_reward_table(in, ab, 2),
                          Catch::Matchers::ContainsSubstring("empty"));
    }
    SECTION("missing file names the path") {
        CHECK_THROWS_WITH(load_reward_table("/no/such/file.csv", ab, 2),
                          Catch::Matchers::ContainsSubstring("/no/such/file.csv"));
    }
}

TEST_CASE("enumeration is lexicographic in symbol order") {
    TokenAlphabet ab("AB");
    SequenceEnv env = table_env(ab, 2, {{"AA", 1}, {"AB", 2}, {"BA", 3}, {"BB", 4}});
    CHECK(env.num_terminals() == 4);
    CHECK(env.enumerable());

    std::vector<std::string> listed;
    std::vector<double> rewards;
    for (const auto& [state, reward] : env.enumerate_terminals()) {
        listed.push_back(state.content);
        rewards.push_back(reward);
    }
    CHECK(listed == std::vector<std::string>{"AA", "AB", "BA", "BB"});
    CHECK(rewards[3] == Catch::Approx(10.0));  // top entry scaled to the cap

    std::vector<std::string> visited;
    env.for_each_terminal([&](const std::string& x) { visited.push_back(x); });
    CHECK(visited == listed);
}

TEST_CASE("enumeration refuses oversized spaces") {
    TokenAlphabet ab("ACGT");
    SequenceEnv env(ab, 12, EdgeMode::PrependAppend,
                    RewardSpec::synthetic(SyntheticLandscape::plant(ab, 12, 0, 4, 2.0, 1e-3, 3),
                                          10.0, 1.0));
    CHECK_FALSE(env.enumerable());  // 4^12 = 16.7M > cap
    CHECK_THROWS_WITH(env.enumerate_terminals(),
                      Catch::Matchers::ContainsSubstring("environment too large to enumerate"));
}

TEST_CASE("synthetic landscape is deterministic and respects separation") {
    TokenAlphabet ab("ACGT");
    auto l1 = SyntheticLandscape::plant(ab, 8, 123, 6, 2.0, 1e-3, 3);
    auto l2 = SyntheticLandscape::plant(ab, 8, 123, 6, 2.0, 1e-3, 3);
    CHECK(l1.modes == l2.modes);
    CHECK(l1.modes.size() == 6);
    for (std::size_t i = 0; i < l1.modes.size(); ++i)
        for (std::size_t j = i + 1; j < l1.modes.size(); ++j)
            CHECK(hamming(l1.modes[i], l1.modes[j]) >= 3);

    auto l3 = SyntheticLandscape::plant(ab, 8, 124, 6, 2.0, 1e-3, 3);
    CHECK(l1.modes != l3.modes);
}

TEST_CASE("synthetic raw reward: kernel peak plus bounded jitter") {
    TokenAlphabet ab("ACGT");
    auto land = SyntheticLandscape::plant(ab, 6, 5, 3, 1.5, 1e-3, 3);
    for (const auto& m : land.modes) {
        double r = land.raw(m);
        CHECK(r > 1.0);            // kernel value 1 plus positive jitter
        CHECK(r <= 1.0 + 1e-3);    // jitter bounded by the noise floor
    }
    // Jitter is per-string deterministic.
    CHECK(land.raw("AAAAAA") == land.raw("AAAAAA"));

    // With a single planted peak the raw value decreases strictly with
    // Hamming distance: the kernel gap at width 1.5 dominates the jitter.
    auto single = SyntheticLandscape::plant(ab, 6, 7, 1, 1.5, 1e-3, 3);
    std::string mode = single.modes[0];
    std::string one = mode, two = mode;
    one[0] = mode[0] == 'A' ? 'C' : 'A';
    two[0] = one[0];
    two[1] = mode[1] == 'A' ? 'C' : 'A';
    CHECK(single.raw(mode) > single.raw(one));
    CHECK(single.raw(one) > single.raw(two));
}

TEST_CASE("impossible separation requirements fail loudly") {
    TokenAlphabet ab("AB");
    // {A,B}^2 cannot hold 5 strings pairwise >= 2 apart.
    CHECK_THROWS_WITH(SyntheticLandscape::plant(ab, 2, 0, 5, 1.0, 1e-3, 2),
                      Catch::Matchers::ContainsSubstring("separation"));
}

TEST_CASE("synthetic env normalizes by the analytic max when valid") {
    TokenAlphabet ab("ACGT");
    SequenceEnv env(ab, 8, EdgeMode::PrependAppend,
                    RewardSpec::synthetic(SyntheticLandscape::plant(ab, 8, 0, 8, 1.5, 1e-3, 3),
                                          10.0, 3.0));
    // Highest reward is the best jittered mode; after normalization the top
    // reward equals C^beta.
    double best = 0.0;
    env.for_each_terminal([&](const std::string& x) {
        best = std::max(best, env.reward(env.make_state(x)));
    });
    CHECK(best == Catch::Approx(std::pow(10.0, 3.0)).epsilon(1e-9));
}

TEST_CASE("terminal and initial state predicates") {
    SeqState s{"ACG", 3};
    CHECK(s.terminal());
    CHECK_FALSE(s.initial());
    SeqState e{"", 3};
    CHECK(e.initial());
    CHECK_FALSE(e.terminal());
    CHECK(e.length() == 0);
}
