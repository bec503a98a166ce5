#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "ssa/allocator.hpp"
#include "ssa/core.hpp"
#include "ssa/linmodel.hpp"

namespace ssa {

// ---------------------------------------------------------------------------
// Self-resampling bid transform
// ---------------------------------------------------------------------------

struct ResampleDraw {
    bool eta_one = true;  // branch taken
    double epsilon = 0.0;
};

struct ResampleOutcome {
    std::vector<double> eta;            // 1 w.p. 1-delta, else epsilon^(1/(1-delta))
    std::vector<double> modified_bids;  // y_i = eta_i * b_i
    std::vector<ResampleDraw> draws;
};

// Independent per-agent draws from the seeded stream; eta never depends on
// the bid values, so rescaling a bid rescales y and leaves eta unchanged.
ResampleOutcome resample(const std::vector<double>& bids, double delta, std::uint64_t seed);

// Realized money moved by the allocated agent this round. Pay-per-click by
// default (charges bind only on clicked rounds, matching the utility
// definition r * (v - p)); the charge_on_allocation switch charges the
// allocation itself instead.
double charge(int click, double eta, double bid, double delta, bool charge_on_allocation = false);

// ---------------------------------------------------------------------------
// Mechanisms
// ---------------------------------------------------------------------------

enum class MechanismKind { MElinucbS, MElinucbSB, MSuplinucbS, ExploreSeparated, Oracle };

const char* to_string(MechanismKind kind);
MechanismKind mechanism_from_name(const std::string& name);

struct MechanismConfig {
    double delta = 0.1;
    bool charge_on_allocation = false;
    double alpha_elinucb = 1.0;
    double alpha_suplinucb = 1.0;  // <= 0 selects the calibrated setting
    double kappa = 0.05;
    int batch_size = 100;
    std::int64_t explore_rounds = 0;  // baseline lambda; 0 selects n * ceil(T^(2/3))
    bool keep_rounds = false;
    std::vector<std::int64_t> checkpoints;  // empty -> {T}
};

struct RunReport {
    std::string mechanism;
    int n = 0;
    int d = 0;
    std::int64_t T = 0;

    std::vector<double> eta;            // empty when the mechanism does not resample
    std::vector<double> modified_bids;  // bids the allocator actually saw

    std::vector<std::int64_t> checkpoints;
    std::vector<double> regret_at;  // cumulative pseudo-regret at each checkpoint
    double final_regret = 0.0;

    std::vector<double> total_utility;      // per agent, true valuations
    std::vector<double> min_round_utility;  // per agent, min over rounds (<= 0 exposes EPIR breaks)
    std::vector<double> total_payment;      // per agent
    std::vector<std::int64_t> clicks;       // per agent, clicks on allocated rounds
    double center_utility = 0.0;
    double social_welfare = 0.0;

    std::map<std::string, std::int64_t> rule_counts;
    std::vector<RoundRecord> rounds;  // populated when keep_rounds

    // Staged-allocator diagnostics (only for m-suplinucb-s runs).
    bool has_stage_diagnostics = false;
    bool index_growth_bound_ok = true;
    bool forced_exploit_bound_ok = true;
    std::string stage_check_detail;
    std::vector<std::vector<std::int64_t>> index_set_sizes;  // [agent][stage]
};

// Resamples once at the start (bids are constant across rounds), runs the
// allocator on the modified bids against the instance's click tape, and
// computes payments, utilities, social welfare and pseudo-regret.
// bid_override replaces the submitted bids (valuations stay the instance's);
// used by the property suites to play deviations.
RunReport run_mechanism(MechanismKind kind, const Instance& inst, const MechanismConfig& cfg,
                        std::uint64_t resample_seed,
                        const std::vector<double>* bid_override = nullptr);

// ---------------------------------------------------------------------------
// Exploration-separated comparison baseline
// ---------------------------------------------------------------------------

// Free round-robin learning for the first lambda rounds, then frozen-estimate
// exploitation of argmax b_i (theta_hat_i . x) with a second-price charge on
// the estimated value.
class ExploreSeparatedAllocator final : public Allocator {
public:
    ExploreSeparatedAllocator(std::vector<double> bids, int d, std::int64_t explore_rounds,
                              std::int64_t horizon);

    const std::string& name() const override { return name_; }
    AllocationDecision step(std::int64_t t, const Context& x, const ClickFn& click) override;

    // Second-price-on-estimate charge for the agent allocated in the most
    // recent exploitation round; 0 during exploration.
    double last_price() const { return last_price_; }

private:
    std::string name_ = "explore-separated";
    std::vector<double> bids_;
    int n_;
    std::int64_t explore_rounds_;
    std::vector<LearnerState> learners_;
    double last_price_ = 0.0;
};

// Smallest k with k^3 >= T^2, i.e. ceil(T^(2/3)), times n.
std::int64_t default_explore_rounds(int n, std::int64_t T);

// Bare allocator run: no payments, no resampling. Used by the property suites
// and allocator-level regret checks. regret_bids weight the welfare benchmark.
struct AllocationRun {
    std::vector<std::int64_t> checkpoints;
    std::vector<double> regret_at;
    double final_regret = 0.0;
    std::vector<std::int64_t> clicks;               // per agent
    std::vector<std::int32_t> tracked_cum_clicks;   // per round, when track_agent > 0
};

AllocationRun run_allocation(Allocator& alloc, const Instance& inst,
                             const std::vector<double>& regret_bids, int track_agent = 0,
                             const std::vector<std::int64_t>* checkpoints = nullptr);

// Factory used by the CLI and the suites ("elinucb-s", "elinucb-sb",
// "suplinucb-s", "oracle", "broken-probe").
struct AllocatorParams {
    double alpha_elinucb = 1.0;
    double alpha_suplinucb = 1.0;  // <= 0 selects the calibrated setting
    double kappa = 0.05;
    int batch_size = 100;
    std::int64_t horizon = 0;
};

std::unique_ptr<Allocator> make_allocator(const std::string& kind, const Instance& inst,
                                          const std::vector<double>& bids,
                                          const AllocatorParams& params);

}  // namespace ssa
