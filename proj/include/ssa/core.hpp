#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace ssa {

using Vec = Eigen::VectorXd;

// Unit-norm nonnegative feature point describing the user arriving at a round.
struct Context {
    Vec features;

    int dim() const { return static_cast<int>(features.size()); }
};

// One advertiser: private valuation, submitted bid, and the latent CTR
// coefficient vector theta (P[click | x] = theta . x).
struct AgentSpec {
    int id = 0;  // 1-based
    double valuation = 0.0;
    double bid = 0.0;
    Vec theta;
};

struct ContextCorpus {
    std::vector<Context> contexts;
    // Raw integer feature values before normalization, one row per context.
    std::vector<std::vector<int>> raw;

    std::size_t size() const { return contexts.size(); }
};

// Pre-drawn Bernoulli click outcomes for every agent x round. Reading is
// side-effect-free, so two mechanisms replayed against the same tape observe
// identical realizations, including for agents they never allocate.
class ClickTape {
public:
    ClickTape() = default;
    ClickTape(int n, std::int64_t T, std::uint64_t seed, std::vector<std::uint8_t> data)
        : n_(n), T_(T), seed_(seed), data_(std::move(data)) {}

    int agents() const { return n_; }
    std::int64_t rounds() const { return T_; }
    std::uint64_t seed() const { return seed_; }

    // agent 1-based, round 1-based
    int click(int agent, std::int64_t t) const {
        return data_[static_cast<std::size_t>(agent - 1) * static_cast<std::size_t>(T_) +
                     static_cast<std::size_t>(t - 1)];
    }

    const std::vector<std::uint8_t>& bytes() const { return data_; }

private:
    int n_ = 0;
    std::int64_t T_ = 0;
    std::uint64_t seed_ = 0;
    std::vector<std::uint8_t> data_;
};

// Per-round audit record.
struct RoundRecord {
    std::int64_t t = 0;
    std::int32_t context_index = -1;  // 0-based corpus index
    std::int32_t designated = 0;      // 1-based round-robin agent for the round/batch
    std::int32_t allocated = 0;       // 1-based I_t
    std::int8_t click = 0;
    double payment = 0.0;  // payment of the allocated agent; all others pay 0
    double regret_increment = 0.0;
    double cumulative_regret = 0.0;
};

// Fully materialized simulation instance: everything a run depends on.
struct Instance {
    std::uint64_t seed = 0;  // master seed the sub-seeds were derived from
    int n = 0;
    int d = 0;
    std::int64_t T = 0;
    int values_per_feature = 0;
    ContextCorpus corpus;
    std::vector<AgentSpec> agents;
    std::vector<std::int32_t> context_sequence;  // 0-based corpus indices, length T
    ClickTape tape;

    const Context& context_at(std::int64_t t) const {  // t is 1-based
        return corpus.contexts[static_cast<std::size_t>(context_sequence[t - 1])];
    }
};

// All combinations of per-feature values drawn uniformly (distinct within a
// feature) from {0,...,100}, each point normalized to unit Euclidean norm.
// The all-zero combination is avoided by redrawing one feature's zero value.
// Throws std::invalid_argument when values_per_feature^d exceeds the cap.
ContextCorpus generate_corpus(std::uint64_t seed, int d, int values_per_feature,
                              std::int64_t combination_cap = 1000000);

// n agents with unit-normalized theta ~ U([0,1]^d), valuation ~ U(0,1],
// bid defaulting to the valuation (truthful default).
std::vector<AgentSpec> generate_agents(std::uint64_t seed, int n, int d);

// n x T Bernoulli(theta_i . x_t) table, drawn independently per (agent, round)
// from the seeded stream. Pure function of (seed, thetas, context sequence);
// bids never enter.
ClickTape generate_click_tape(std::uint64_t seed, const std::vector<AgentSpec>& agents,
                              const ContextCorpus& corpus,
                              const std::vector<std::int32_t>& context_sequence);

// Length-T i.i.d. uniform draw of corpus indices.
std::vector<std::int32_t> sample_context_sequence(std::uint64_t seed, const ContextCorpus& corpus,
                                                  std::int64_t T);

// Convenience: derive sub-seeds from a master seed and materialize everything.
Instance make_instance(std::uint64_t seed, int n, int d, std::int64_t T,
                       int values_per_feature = 4);

// Round-robin conventions. The project convention designates agent 1 in
// round 1; round_robin_shifted is the 1 + (t mod n) variant.
inline int designated_agent(std::int64_t t, int n) { return 1 + static_cast<int>((t - 1) % n); }
inline int round_robin_shifted(std::int64_t t, int n) { return 1 + static_cast<int>(t % n); }

}  // namespace ssa
