// Training dataset with reward-prioritized sampling: half of each batch is
// drawn from the top reward decile (rank-based, ties broken by recency), half
// from the remainder. Entries are append-ordered with optional FIFO capacity.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lsgfn/policy.hpp"
#include "lsgfn/rng.hpp"

namespace lsgfn {

enum class SampleOrigin { SeedSample, ProposalAccepted, ProposalRejected };

inline std::string origin_name(SampleOrigin o) {
    switch (o) {
        case SampleOrigin::SeedSample: return "seed-sample";
        case SampleOrigin::ProposalAccepted: return "proposal-accepted";
        case SampleOrigin::ProposalRejected: return "proposal-rejected";
    }
    return "?";
}

struct ReplayEntry {
    Trajectory traj;
    int round = 0;
    SampleOrigin origin = SampleOrigin::SeedSample;
    std::uint64_t seq = 0;  // global insertion index, for recency tie-breaks
};

class ReplayDataset {
public:
    // capacity 0 = unbounded; otherwise oldest entries are evicted FIFO.
    explicit ReplayDataset(std::size_t capacity = 0) : capacity_(capacity) {}

    void insert(Trajectory traj, int round, SampleOrigin origin) {
        if (traj.states.empty() || !traj.terminal().terminal())
            throw std::invalid_argument("replay insert needs a complete trajectory");
        entries_.push_back(ReplayEntry{std::move(traj), round, origin, next_seq_++});
        if (capacity_ > 0 && entries_.size() > capacity_) entries_.pop_front();
    }

    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    const ReplayEntry& entry(std::size_t i) const { return entries_.at(i); }

    std::size_t top_set_size() const {
        return static_cast<std::size_t>(
            std::ceil(0.1 * static_cast<double>(entries_.size())));
    }

    // Indices of the top reward decile: the ceil(0.1*|D|) highest-reward
    // entries, more recent entries winning ties.
    std::vector<std::size_t> top_set_indices() const {
        std::vector<std::size_t> order = sorted_order();
        order.resize(top_set_size());
        return order;
    }

    // Half the batch uniformly (with replacement) from the top decile, half
    // from the remainder; odd batch sizes give the extra draw to the top set,
    // and an empty remainder sends every draw to the top set.
    std::vector<Trajectory> sample_prt(std::size_t batch_size, Rng& rng) const {
        if (entries_.empty()) throw std::runtime_error("cannot sample from an empty dataset");
        if (batch_size == 0) return {};
        std::vector<std::size_t> order = sorted_order();
        const std::size_t top = top_set_size();
        const std::size_t rest = order.size() - top;

        std::size_t from_top = (batch_size + 1) / 2;
        if (rest == 0) from_top = batch_size;
        std::vector<Trajectory> batch;
        batch.reserve(batch_size);
        std::uniform_int_distribution<std::size_t> top_pick(0, top - 1);
        for (std::size_t i = 0; i < from_top; ++i)
            batch.push_back(entries_[order[top_pick(rng)]].traj);
        if (batch_size > from_top) {
            std::uniform_int_distribution<std::size_t> rest_pick(top, order.size() - 1);
            for (std::size_t i = from_top; i < batch_size; ++i)
                batch.push_back(entries_[order[rest_pick(rng)]].traj);
        }
        return batch;
    }

    // One record per entry: terminal string, reward, round, origin.
    void dump(std::ostream& out) const {
        out << "terminal,reward,round,origin\n";
        for (const auto& e : entries_)
            out << e.traj.terminal().content << ',' << e.traj.reward << ',' << e.round << ','
                << origin_name(e.origin) << '\n';
    }

private:
    // Strict total order: reward descending, then recency (seq) descending.
    std::vector<std::size_t> sorted_order() const {
        std::vector<std::size_t> order(entries_.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (entries_[a].traj.log_reward != entries_[b].traj.log_reward)
                return entries_[a].traj.log_reward > entries_[b].traj.log_reward;
            return entries_[a].seq > entries_[b].seq;
        });
        return order;
    }

    std::deque<ReplayEntry> entries_;
    std::size_t capacity_;
    std::uint64_t next_seq_ = 0;
};

} // namespace lsgfn
