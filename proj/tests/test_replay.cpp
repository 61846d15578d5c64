#include <catch_amalgamated.hpp>

#include <set>
#include <sstream>

#include "lsgfn/env.hpp"
#include "lsgfn/replay.hpp"

using namespace lsgfn;

namespace {

// Minimal complete trajectory carrying a chosen reward; the path itself is
// irrelevant to the dataset logic.
Trajectory traj_with_reward(const std::string& terminal, double reward) {
    Trajectory t;
    int len = static_cast<int>(terminal.size());
    t.states.push_back(SeqState{"", len});
    for (int i = 1; i <= len; ++i)
        t.states.push_back(SeqState{terminal.substr(0, static_cast<std::size_t>(i)), len});
    t.reward = reward;
    t.log_reward = std::log(reward);
    return t;
}

} // namespace

TEST_CASE("origin names") {
    CHECK(origin_name(SampleOrigin::SeedSample) == "seed-sample");
    CHECK(origin_name(SampleOrigin::ProposalAccepted) == "proposal-accepted");
    CHECK(origin_name(SampleOrigin::ProposalRejected) == "proposal-rejected");
}

TEST_CASE("insert keeps order and rejects incomplete trajectories") {
    ReplayDataset d;
    CHECK(d.empty());
    d.insert(traj_with_reward("AA", 1.0), 0, SampleOrigin::SeedSample);
    d.insert(traj_with_reward("AB", 2.0), 1, SampleOrigin::ProposalAccepted);
    CHECK(d.size() == 2);
    CHECK(d.entry(0).traj.terminal().content == "AA");
    CHECK(d.entry(1).round == 1);
    CHECK(d.entry(1).seq == 1);

    Trajectory partial;
    partial.states.push_back(SeqState{"A", 2});
    CHECK_THROWS_WITH(d.insert(partial, 0, SampleOrigin::SeedSample),
                      Catch::Matchers::ContainsSubstring("complete trajectory"));
    CHECK_THROWS_AS(d.insert(Trajectory{}, 0, SampleOrigin::SeedSample),
                    std::invalid_argument);
}

TEST_CASE("top set is the ceil(|D|/10) highest rewards") {
    ReplayDataset d;
    // |D| = 1 -> 1; |D| = 10 -> 1; |D| = 11 -> 2.
    d.insert(traj_with_reward("AA", 5.0), 0, SampleOrigin::SeedSample);
    CHECK(d.top_set_size() == 1);
    for (int i = 1; i < 10; ++i)
        d.insert(traj_with_reward("AB", 1.0 + i), 0, SampleOrigin::SeedSample);
    CHECK(d.size() == 10);
    CHECK(d.top_set_size() == 1);
    d.insert(traj_with_reward("BA", 0.5), 0, SampleOrigin::SeedSample);
    CHECK(d.top_set_size() == 2);

    // Highest rewards inserted were 10.0 ("AB", i=9) then 9.0 ("AB", i=8).
    auto top = d.top_set_indices();
    REQUIRE(top.size() == 2);
    CHECK(d.entry(top[0]).traj.reward == 10.0);
    CHECK(d.entry(top[1]).traj.reward == 9.0);
}

TEST_CASE("reward ties in the top set break toward recency") {
    ReplayDataset d;
    for (int i = 0; i < 12; ++i)
        d.insert(traj_with_reward("AA", 3.0), i, SampleOrigin::SeedSample);
    auto top = d.top_set_indices();  // ceil(1.2) = 2
    REQUIRE(top.size() == 2);
    CHECK(d.entry(top[0]).seq == 11);  // most recent first
    CHECK(d.entry(top[1]).seq == 10);
}

TEST_CASE("prioritized batches split half top-decile, half remainder") {
    ReplayDataset d;
    // 20 entries: rewards 1..20, so the top decile is {20, 19}.
    for (int i = 1; i <= 20; ++i)
        d.insert(traj_with_reward("AA", static_cast<double>(i)), 0, SampleOrigin::SeedSample);

    Rng rng = make_rng(0, 0);
    auto batch = d.sample_prt(8, rng);
    REQUIRE(batch.size() == 8);
    for (int i = 0; i < 4; ++i) CHECK(batch[static_cast<std::size_t>(i)].reward >= 19.0);
    for (int i = 4; i < 8; ++i) CHECK(batch[static_cast<std::size_t>(i)].reward < 19.0);

    // Odd batch sizes give the extra draw to the top set.
    auto odd = d.sample_prt(5, rng);
    REQUIRE(odd.size() == 5);
    for (int i = 0; i < 3; ++i) CHECK(odd[static_cast<std::size_t>(i)].reward >= 19.0);
    for (int i = 3; i < 5; ++i) CHECK(odd[static_cast<std::size_t>(i)].reward < 19.0);
}

TEST_CASE("a dataset with no remainder draws everything from the top set") {
    ReplayDataset d;
    d.insert(traj_with_reward("AA", 2.0), 0, SampleOrigin::SeedSample);  // |D|=1: top is all
    Rng rng = make_rng(1, 0);
    auto batch = d.sample_prt(4, rng);
    REQUIRE(batch.size() == 4);
    for (const auto& t : batch) CHECK(t.reward == 2.0);

    ReplayDataset empty;
    CHECK_THROWS_WITH(empty.sample_prt(4, rng),
                      Catch::Matchers::ContainsSubstring("empty dataset"));
    CHECK(d.sample_prt(0, rng).empty());
}

TEST_CASE("bounded capacity evicts the oldest entry first") {
    ReplayDataset d(3);
    d.insert(traj_with_reward("AA", 1.0), 0, SampleOrigin::SeedSample);
    d.insert(traj_with_reward("AB", 2.0), 1, SampleOrigin::SeedSample);
    d.insert(traj_with_reward("BA", 3.0), 2, SampleOrigin::SeedSample);
    d.insert(traj_with_reward("BB", 4.0), 3, SampleOrigin::SeedSample);
    REQUIRE(d.size() == 3);
    CHECK(d.entry(0).traj.terminal().content == "AB");  // "AA" evicted
    CHECK(d.entry(2).traj.terminal().content == "BB");
    // Sequence numbers keep counting across evictions.
    CHECK(d.entry(2).seq == 3);
}

TEST_CASE("dump writes one record per entry") {
    ReplayDataset d;
    d.insert(traj_with_reward("AB", 2.5), 0, SampleOrigin::SeedSample);
    d.insert(traj_with_reward("BA", 1.0), 3, SampleOrigin::ProposalRejected);
    std::ostringstream out;
    d.dump(out);
    CHECK(out.str() ==
          "terminal,reward,round,origin\n"
          "AB,2.5,0,seed-sample\n"
          "BA,1,3,proposal-rejected\n");
}

TEST_CASE("prioritized sampling is seed-reproducible") {
    ReplayDataset d;
    for (int i = 1; i <= 30; ++i)
        d.insert(traj_with_reward("AA", static_cast<double>(i % 7 + 1)), 0,
                 SampleOrigin::SeedSample);
    Rng a = make_rng(5, 2), b = make_rng(5, 2);
    auto ba = d.sample_prt(10, a);
    auto bb = d.sample_prt(10, b);
    REQUIRE(ba.size() == bb.size());
    for (std::size_t i = 0; i < ba.size(); ++i) CHECK(ba[i].reward == bb[i].reward);
}
