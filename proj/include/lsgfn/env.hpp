// Sequence-construction MDP: states are contiguous token strings grown by
// prepend/append actions up to a fixed target length, forming a DAG rooted at
// the empty string. Rewards on terminal strings come from a tabular file or a
// synthetic planted-mode landscape and are normalized as (raw * C / max_raw)^beta,
// evaluated in log space so large exponents stay finite.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lsgfn/rng.hpp"

namespace lsgfn {

class TokenAlphabet {
public:
    TokenAlphabet() = default;

    explicit TokenAlphabet(std::string symbols) : symbols_(std::move(symbols)) {
        if (symbols_.empty()) throw std::invalid_argument("alphabet must not be empty");
        lut_.fill(-1);
        for (std::size_t i = 0; i < symbols_.size(); ++i) {
            auto c = static_cast<unsigned char>(symbols_[i]);
            if (lut_[c] >= 0) throw std::invalid_argument("alphabet symbols must be unique");
            lut_[c] = static_cast<int>(i);
        }
    }

    int size() const { return static_cast<int>(symbols_.size()); }
    char symbol(int i) const { return symbols_.at(static_cast<std::size_t>(i)); }
    const std::string& symbols() const { return symbols_; }

    bool contains(char c) const { return lut_[static_cast<unsigned char>(c)] >= 0; }

    int index(char c) const {
        int i = lut_[static_cast<unsigned char>(c)];
        if (i < 0) throw std::invalid_argument(std::string("symbol not in alphabet: '") + c + "'");
        return i;
    }

    void validate(const std::string& s) const {
        for (char c : s) (void)index(c);
    }

private:
    std::string symbols_;
    std::array<int, 256> lut_{};
};

// Partial or complete sequence. Terminal exactly when the content has reached
// the target length; the empty string is the unique initial state.
struct SeqState {
    std::string content;
    int target_length = 0;

    bool terminal() const { return static_cast<int>(content.size()) == target_length; }
    bool initial() const { return content.empty(); }
    int length() const { return static_cast<int>(content.size()); }

    friend bool operator==(const SeqState& a, const SeqState& b) {
        return a.content == b.content;
    }
    friend bool operator<(const SeqState& a, const SeqState& b) {
        return a.content < b.content;
    }
};

inline int hamming(const std::string& a, const std::string& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("hamming distance needs equal-length strings");
    int d = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) ++d;
    return d;
}

enum class EdgeMode { PrependAppend, AppendOnly };

inline EdgeMode edge_mode_from_name(const std::string& name) {
    if (name == "prepend-append") return EdgeMode::PrependAppend;
    if (name == "append-only") return EdgeMode::AppendOnly;
    throw std::invalid_argument("unknown edge mode: " + name);
}

inline std::string edge_mode_name(EdgeMode m) {
    return m == EdgeMode::PrependAppend ? "prepend-append" : "append-only";
}

// Planted-mode reward surface: raw(x) = max_j exp(-hamming(x, mode_j) / width)
// plus a per-string jitter in (0, noise_floor], deterministic in the seed. The
// jitter keeps raw values distinct without ever displacing a planted mode from
// its local peak (for any sane width the exp gap at distance 1 exceeds the
// floor). Modes are rejection-sampled to keep a minimum pairwise separation so
// each planted peak is an isolated local optimum.
struct SyntheticLandscape {
    std::uint64_t seed = 0;
    int n_modes = 0;
    double width = 1.0;
    double noise_floor = 1e-3;
    int min_separation = 3;
    std::vector<std::string> modes;

    static SyntheticLandscape plant(const TokenAlphabet& alphabet, int length,
                                    std::uint64_t seed, int n_modes, double width,
                                    double noise_floor = 1e-3, int min_separation = 3) {
        if (n_modes <= 0) throw std::invalid_argument("synthetic landscape needs n_modes >= 1");
        if (width <= 0.0) throw std::invalid_argument("synthetic landscape needs width > 0");
        if (noise_floor <= 0.0) throw std::invalid_argument("synthetic landscape needs noise_floor > 0");
        SyntheticLandscape land;
        land.seed = seed;
        land.n_modes = n_modes;
        land.width = width;
        land.noise_floor = noise_floor;
        land.min_separation = min_separation;

        Rng rng = make_rng(seed, /*stream=*/0x6d6f646573ull);
        std::uniform_int_distribution<int> pick(0, alphabet.size() - 1);
        const long long max_attempts = 10000LL * n_modes;
        long long attempts = 0;
        while (static_cast<int>(land.modes.size()) < n_modes) {
            if (++attempts > max_attempts)
                throw std::runtime_error("could not place synthetic modes with required separation");
            std::string cand(static_cast<std::size_t>(length), '?');
            for (int i = 0; i < length; ++i) cand[i] = alphabet.symbol(pick(rng));
            bool ok = true;
            for (const auto& m : land.modes)
                if (hamming(cand, m) < min_separation) { ok = false; break; }
            if (ok) land.modes.push_back(std::move(cand));
        }
        return land;
    }

    double jitter(const std::string& x) const {
        // (0, 1] from the top 53 bits of a salted string hash.
        std::uint64_t h = hash_string(x, seed ^ 0x9e3779b97f4a7c15ull);
        return static_cast<double>((h >> 11) + 1) * 0x1.0p-53;
    }

    double raw(const std::string& x) const {
        double best = 0.0;
        for (const auto& m : modes)
            best = std::max(best, std::exp(-static_cast<double>(hamming(x, m)) / width));
        return best + jitter(x) * noise_floor;
    }

    // Exact maximum without enumeration whenever the planted peaks dominate
    // the jittered off-mode ceiling exp(-1/width) + noise_floor.
    std::optional<double> analytic_max() const {
        if (std::exp(-1.0 / width) + noise_floor > 1.0) return std::nullopt;
        double best = 0.0;
        for (const auto& m : modes) best = std::max(best, raw(m));
        return best;
    }
};

// Reward configuration: exactly one of `table` / `landscape` is active.
struct RewardSpec {
    std::unordered_map<std::string, double> table;
    std::optional<SyntheticLandscape> landscape;
    double scale_cap = 1.0;
    double beta = 1.0;

    static RewardSpec tabular(std::unordered_map<std::string, double> raw,
                              double scale_cap, double beta) {
        RewardSpec spec;
        spec.table = std::move(raw);
        spec.scale_cap = scale_cap;
        spec.beta = beta;
        return spec;
    }

    static RewardSpec synthetic(SyntheticLandscape land, double scale_cap, double beta) {
        RewardSpec spec;
        spec.landscape = std::move(land);
        spec.scale_cap = scale_cap;
        spec.beta = beta;
        return spec;
    }
};

// Reward-table file: one "<sequence>,<value>" record per line, optional
// header, '#' comments and blank lines ignored. Sequences are validated
// against the alphabet and target length; values must be finite and >= 0.
inline std::unordered_map<std::string, double> parse_reward_table(
    std::istream& in, const TokenAlphabet& alphabet, int target_length) {
    std::unordered_map<std::string, double> table;
    std::string line;
    int line_no = 0;
    bool first_record = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::size_t start = line.find_first_not_of(" \t");
        if (start == std::string::npos || line[start] == '#') continue;
        std::size_t comma = line.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error("reward table line " + std::to_string(line_no) +
                                     ": expected \"<sequence>,<value>\"");
        std::string seq = line.substr(start, comma - start);
        std::string val_str = line.substr(comma + 1);
        std::size_t pos = 0;
        double value = 0.0;
        bool parsed = true;
        try {
            value = std::stod(val_str, &pos);
        } catch (const std::exception&) {
            parsed = false;
        }
        if (parsed && pos < val_str.size() &&
            val_str.find_first_not_of(" \t", pos) != std::string::npos)
            parsed = false;
        if (!parsed) {
            // An unparsable value on the first record is an optional header.
            if (first_record) { first_record = false; continue; }
            throw std::runtime_error("reward table line " + std::to_string(line_no) +
                                     ": bad value \"" + val_str + "\"");
        }
        first_record = false;
        if (static_cast<int>(seq.size()) != target_length)
            throw std::runtime_error("reward table line " + std::to_string(line_no) +
                                     ": sequence length != " + std::to_string(target_length));
        alphabet.validate(seq);
        if (!std::isfinite(value) || value < 0.0)
            throw std::runtime_error("reward table line " + std::to_string(line_no) +
                                     ": value must be finite and >= 0");
        if (!table.emplace(std::move(seq), value).second)
            throw std::runtime_error("reward table line " + std::to_string(line_no) +
                                     ": duplicate sequence");
    }
    if (table.empty()) throw std::runtime_error("reward table is empty");
    return table;
}

inline std::unordered_map<std::string, double> load_reward_table(
    const std::string& path, const TokenAlphabet& alphabet, int target_length) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open reward table: " + path);
    return parse_reward_table(in, alphabet, target_length);
}

// The MDP itself. Pure and immutable after construction; children/parents are
// de-duplicated state sets (graph edges are between state pairs, so actions
// that collide on the same string are one edge).
class SequenceEnv {
public:
    static constexpr long long kEnumerationCap = 1'000'000;

    SequenceEnv(TokenAlphabet alphabet, int target_length, EdgeMode mode, RewardSpec reward)
        : alphabet_(std::move(alphabet)),
          target_length_(target_length),
          mode_(mode),
          reward_(std::move(reward)) {
        if (target_length_ < 1) throw std::invalid_argument("target length must be >= 1");
        if (reward_.beta < 1.0) throw std::invalid_argument("reward exponent must be >= 1");
        if (reward_.scale_cap <= 0.0) throw std::invalid_argument("reward scale cap must be > 0");
        if (reward_.landscape.has_value() == !reward_.table.empty())
            throw std::invalid_argument("reward spec must be exactly one of tabular/synthetic");

        double max_raw = 0.0;
        if (reward_.landscape) {
            if (auto m = reward_.landscape->analytic_max()) {
                max_raw = *m;
            } else {
                check_enumerable();
                for_each_terminal([&](const std::string& x) {
                    max_raw = std::max(max_raw, reward_.landscape->raw(x));
                });
            }
        } else {
            for (const auto& [seq, value] : reward_.table) {
                if (static_cast<int>(seq.size()) != target_length_)
                    throw std::invalid_argument("reward table sequence length != target length");
                alphabet_.validate(seq);
                max_raw = std::max(max_raw, value);
            }
        }
        if (!(max_raw > 0.0)) throw std::invalid_argument("reward spec has no positive raw value");
        max_raw_ = max_raw;
        log_scale_ = std::log(reward_.scale_cap) - std::log(max_raw_);
    }

    const TokenAlphabet& alphabet() const { return alphabet_; }
    int target_length() const { return target_length_; }
    EdgeMode mode() const { return mode_; }
    const RewardSpec& reward_spec() const { return reward_; }
    double max_raw() const { return max_raw_; }

    SeqState initial_state() const { return SeqState{std::string(), target_length_}; }

    SeqState make_state(const std::string& content) const {
        if (static_cast<int>(content.size()) > target_length_)
            throw std::invalid_argument("state content longer than target length");
        alphabet_.validate(content);
        return SeqState{content, target_length_};
    }

    std::vector<SeqState> children(const SeqState& s) const {
        if (s.terminal()) throw std::invalid_argument("no children of terminal state");
        std::vector<SeqState> out;
        out.reserve(2 * static_cast<std::size_t>(alphabet_.size()));
        auto push_unique = [&](std::string&& content) {
            for (const auto& c : out)
                if (c.content == content) return;
            out.push_back(SeqState{std::move(content), target_length_});
        };
        if (mode_ == EdgeMode::PrependAppend)
            for (int t = 0; t < alphabet_.size(); ++t)
                push_unique(alphabet_.symbol(t) + s.content);
        for (int t = 0; t < alphabet_.size(); ++t)
            push_unique(s.content + alphabet_.symbol(t));
        return out;
    }

    std::vector<SeqState> parents(const SeqState& s) const {
        if (s.initial()) throw std::invalid_argument("no parents of initial state");
        std::vector<SeqState> out;
        if (mode_ == EdgeMode::PrependAppend) {
            out.push_back(SeqState{s.content.substr(1), target_length_});
            std::string drop_last = s.content.substr(0, s.content.size() - 1);
            if (drop_last != out.front().content)
                out.push_back(SeqState{std::move(drop_last), target_length_});
        } else {
            out.push_back(SeqState{s.content.substr(0, s.content.size() - 1), target_length_});
        }
        return out;
    }

    double raw_reward(const SeqState& x) const {
        if (!x.terminal()) throw std::invalid_argument("reward of non-terminal state");
        if (reward_.landscape) return reward_.landscape->raw(x.content);
        auto it = reward_.table.find(x.content);
        if (it == reward_.table.end())
            throw std::runtime_error("unknown terminal object: " + x.content);
        return it->second;
    }

    // log R(x) = beta * (log raw(x) + log C - log max_raw); -inf when raw = 0.
    double log_reward(const SeqState& x) const {
        double raw = raw_reward(x);
        if (raw <= 0.0) return -std::numeric_limits<double>::infinity();
        return reward_.beta * (std::log(raw) + log_scale_);
    }

    double reward(const SeqState& x) const { return std::exp(log_reward(x)); }

    long long num_terminals() const {
        long long n = 1;
        for (int i = 0; i < target_length_; ++i) {
            if (n > kEnumerationCap) return n;
            n *= alphabet_.size();
        }
        return n;
    }

    bool enumerable() const { return num_terminals() <= kEnumerationCap; }

    // All A^L terminal strings in lexicographic (token-order) order, with
    // rewards. Guarded by the enumeration cap.
    std::vector<std::pair<SeqState, double>> enumerate_terminals() const {
        check_enumerable();
        std::vector<std::pair<SeqState, double>> out;
        out.reserve(static_cast<std::size_t>(num_terminals()));
        for_each_terminal([&](const std::string& x) {
            SeqState s{x, target_length_};
            double r = reward(s);
            out.emplace_back(std::move(s), r);
        });
        return out;
    }

    template <typename Fn>
    void for_each_terminal(Fn&& fn) const {
        const int A = alphabet_.size();
        std::vector<int> idx(static_cast<std::size_t>(target_length_), 0);
        std::string buf(static_cast<std::size_t>(target_length_), alphabet_.symbol(0));
        while (true) {
            fn(static_cast<const std::string&>(buf));
            int pos = target_length_ - 1;
            while (pos >= 0 && idx[pos] == A - 1) {
                idx[pos] = 0;
                buf[pos] = alphabet_.symbol(0);
                --pos;
            }
            if (pos < 0) break;
            ++idx[pos];
            buf[pos] = alphabet_.symbol(idx[pos]);
        }
    }

private:
    void check_enumerable() const {
        if (!enumerable()) throw std::runtime_error("environment too large to enumerate");
    }

    TokenAlphabet alphabet_;
    int target_length_ = 0;
    EdgeMode mode_ = EdgeMode::PrependAppend;
    RewardSpec reward_;
    double max_raw_ = 1.0;
    double log_scale_ = 0.0;
};

} // namespace lsgfn
