#pragma once

#include <nlohmann/json_fwd.hpp>
#include <vector>

#include "ssa/allocator.hpp"
#include "ssa/linmodel.hpp"

namespace ssa {

struct ElinucbConfig {
    double alpha = 1.0;
    int batch_size = 1;  // 1 = per-round variant, > 1 = batched variant
    // Deliberately broken probe for validating the monotonicity suite's test
    // power: also updates learner and bounds during exploitation rounds.
    bool learn_on_exploit = false;
};

// Elimination-based allocation rule. Maintains a shrink-only active set and
// per-agent value-scaled confidence bounds [mu-, mu+] initialized to [0, b_i].
// On a designated agent's batch the agent is allocated for the whole batch
// and its bounds are refined once at batch end using the batch context mean;
// otherwise each round exploits argmax b_i (theta_hat_i . x) over the active
// set with no state change. Agents whose mu+ falls strictly below the best
// active mu- are removed at batch end and never return.
class ElinucbAllocator final : public Allocator {
public:
    ElinucbAllocator(std::vector<double> bids, int d, ElinucbConfig cfg);

    const std::string& name() const override { return name_; }
    AllocationDecision step(std::int64_t t, const Context& x, const ClickFn& click) override;
    void finish() override;

    nlohmann::json snapshot() const;
    void restore(const nlohmann::json& state);

    // Bound refinement: intersect [lo, hi] with the candidate interval when the
    // intersection is nonempty, otherwise collapse both ends to the midpoint of
    // the old interval. A collapsed interval (lo == hi) never moves again.
    static std::pair<double, double> refine_bounds(double lo, double hi, double cand_lo,
                                                   double cand_hi);

    // Elimination rule: drop every active agent whose upper bound is strictly
    // below the best active lower bound (evaluated before any removal).
    static std::vector<char> eliminate_rule(const std::vector<double>& lo,
                                            const std::vector<double>& hi,
                                            std::vector<char> active);

    // Introspection for tests and diagnostics.
    const std::vector<LearnerState>& learners() const { return learners_; }
    const std::vector<double>& lower_bounds() const { return mu_lo_; }
    const std::vector<double>& upper_bounds() const { return mu_hi_; }
    const std::vector<char>& active() const { return active_; }
    std::vector<int> active_set() const;
    bool is_active(int agent) const { return active_[static_cast<std::size_t>(agent - 1)] != 0; }

private:
    void end_batch(bool was_explore, int designated);
    void apply_bound_update(int j, const Vec& xbar);
    void eliminate();
    int exploit_argmax(const Vec& x) const;

    std::string name_;
    std::vector<double> bids_;
    int n_;
    int d_;
    ElinucbConfig cfg_;

    std::vector<LearnerState> learners_;
    std::vector<double> mu_lo_;
    std::vector<double> mu_hi_;
    std::vector<char> active_;

    // In-flight batch state.
    std::int64_t last_t_ = 0;
    int batch_designated_ = 0;
    bool batch_is_explore_ = false;
    bool batch_open_ = false;
    Vec batch_context_sum_;
    int batch_rounds_ = 0;
};

}  // namespace ssa
