#pragma once

#include <cstdint>
#include <functional>
#include <nlohmann/json_fwd.hpp>
#include <vector>

#include "ssa/allocator.hpp"
#include "ssa/linmodel.hpp"

namespace ssa {

struct SuplinucbConfig {
    double alpha = 1.0;
    std::int64_t horizon = 0;  // T; the rule needs it upfront (thresholds 1/sqrt(T), stage count)
};

// Theorem-style learning-rate setting sqrt(0.5 * ln(2 n T / kappa)).
double calibrated_alpha(int n, std::int64_t T, double kappa);

// Scores of the agents surviving at the stage where a round terminated.
struct StageScores {
    int stage = 0;
    std::vector<int> agents;  // 1-based, ascending
    std::vector<double> estimate;
    std::vector<double> width;
    std::vector<double> ucb;
};

// Staged allocation rule over per-(agent, stage) least-squares estimators.
// Each round restarts at stage 1 with every agent alive and either
//  (a) allocates the designated agent when its stage width exceeds 2^-s and
//      records the round into that one index set (the sole learning path),
//  (b) exploits argmax b_i (est + width) when every width is below 1/sqrt(T),
//  (c) screens out agents whose bid-scaled ucb trails the best by more than
//      2^(1-s) and descends a stage when every width is below 2^-s, or
//  (d) otherwise exploits argmax among the current survivors without learning.
class SuplinucbAllocator final : public Allocator {
public:
    SuplinucbAllocator(std::vector<double> bids, int d, SuplinucbConfig cfg);

    static int stage_count(std::int64_t T);

    const std::string& name() const override { return name_; }
    AllocationDecision step(std::int64_t t, const Context& x, const ClickFn& click) override;

    nlohmann::json snapshot() const;
    void restore(const nlohmann::json& state);

    int stages() const { return stage_total_; }
    int agents() const { return n_; }
    double alpha() const { return cfg_.alpha; }
    std::int64_t horizon() const { return cfg_.horizon; }

    const LearnerState& learner(int agent, int stage) const { return learners_[cell(agent, stage)]; }
    const std::vector<std::int64_t>& index_set(int agent, int stage) const {
        return psi_[cell(agent, stage)];
    }
    // Width of the stage estimator at the moment each index-set entry was
    // recorded, parallel to index_set().
    const std::vector<double>& recorded_widths(int agent, int stage) const {
        return psi_widths_[cell(agent, stage)];
    }

    std::int64_t designated_explore_count() const { return designated_explore_count_; }
    std::int64_t global_exploit_count() const { return global_exploit_count_; }
    std::int64_t forced_exploit_count() const { return forced_exploit_count_; }
    const std::vector<std::int64_t>& forced_exploit_by_stage() const {
        return forced_exploit_by_stage_;  // index s-1
    }
    const std::vector<std::int64_t>& screen_events_by_stage() const {
        return screen_events_by_stage_;
    }

    // Observes the terminal stage's scores each round; for diagnostics/tests.
    void set_stage_probe(std::function<void(std::int64_t, const StageScores&)> probe) {
        stage_probe_ = std::move(probe);
    }

private:
    std::size_t cell(int agent, int stage) const {
        return static_cast<std::size_t>(agent - 1) * static_cast<std::size_t>(stage_total_) +
               static_cast<std::size_t>(stage - 1);
    }
    int argmax_value(const std::vector<char>& alive, const std::vector<double>& value) const;
    void emit_probe(std::int64_t t, int stage, const std::vector<char>& alive,
                    const std::vector<double>& est, const std::vector<double>& width) const;

    std::string name_ = "suplinucb-s";
    std::vector<double> bids_;
    int n_ = 0;
    int d_ = 0;
    SuplinucbConfig cfg_;
    int stage_total_ = 0;
    double exploit_width_threshold_ = 0.0;  // 1/sqrt(T)

    std::vector<LearnerState> learners_;            // n * S, cell-major
    std::vector<std::vector<std::int64_t>> psi_;    // recorded rounds per cell
    std::vector<std::vector<double>> psi_widths_;   // widths at record time per cell

    std::int64_t last_t_ = 0;
    std::int64_t designated_explore_count_ = 0;
    std::int64_t global_exploit_count_ = 0;
    std::int64_t forced_exploit_count_ = 0;
    std::vector<std::int64_t> forced_exploit_by_stage_;
    std::vector<std::int64_t> screen_events_by_stage_;

    std::function<void(std::int64_t, const StageScores&)> stage_probe_;
};

// Stage screen: survivors are the alive agents whose bid-scaled ucb is within
// 2^(1-stage) of the best alive bid-scaled ucb (inclusive).
std::vector<char> screen_survivors(const std::vector<double>& scaled_ucb,
                                   const std::vector<char>& alive, int stage);

// Empirical check of the per-cell index-set growth bound
// |psi_i^s| <= 5 * 2^s * (1 + alpha^2) * sqrt(d * |psi_i^s|).
bool index_set_growth_bound_holds(const SuplinucbAllocator& alloc, std::string* detail = nullptr);

// Empirical check that per terminal stage s,
// forced-exploit count <= (n - 1) * |Psi^s| + n  (slack n for boundary effects).
bool forced_exploit_bound_holds(const SuplinucbAllocator& alloc, std::string* detail = nullptr);

}  // namespace ssa
