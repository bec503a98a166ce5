#pragma once

#include <cstdint>
#include <functional>
#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

#include "ssa/core.hpp"
#include "ssa/mechanism.hpp"

namespace ssa {

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

struct ExperimentConfig {
    int n = 7;
    int d = 4;
    std::int64_t T = 100000;
    int values_per_feature = 4;
    int iterations = 10;
    std::uint64_t seed = 1;
    bool fixed_agents = false;  // default: redraw agents (and corpus) per iteration
    std::vector<std::string> mechanisms{"m-elinucb-sb", "m-suplinucb-s", "explore-separated"};
    double alpha_elinucb = 1.0;
    double alpha_suplinucb = 1.0;  // <= 0 selects the calibrated setting
    double kappa = 0.05;
    int batch_size = 100;
    double delta = 0.05;
    bool charge_on_allocation = false;
    std::int64_t explore_rounds = 0;  // baseline lambda; 0 = n * ceil(T^(2/3))
    int workers = 0;                  // 0 = hardware concurrency
    std::string rounds_csv = "first";  // none | first | all
};

// Named presets: "paper-full" (T=1e6, 40 iterations; long-running),
// "paper-desk" (T=1e5, 10 iterations), "ci" (T=1e4, 3 iterations).
ExperimentConfig experiment_preset(const std::string& name);

nlohmann::json experiment_config_to_json(const ExperimentConfig& cfg);
// Throws std::invalid_argument naming the offending field.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);

// Geometric checkpoint grid: powers of two up to T, plus T itself.
std::vector<std::int64_t> make_checkpoints(std::int64_t T);

// Eq.-style welfare gap of round t's allocation, from true thetas and the
// instance's submitted bids. Always >= 0.
double pseudo_regret_increment(const Instance& inst, std::int64_t t, int allocated);

// ---------------------------------------------------------------------------
// Experiment runner
// ---------------------------------------------------------------------------

struct RegretCurve {
    std::string mechanism;
    std::vector<std::int64_t> checkpoints;
    std::vector<std::vector<double>> per_iteration;  // [iteration][checkpoint]
    std::vector<double> mean;
    std::vector<double> se;
    double final_mean = 0.0;
    double final_se = 0.0;
};

struct ExperimentResult {
    ExperimentConfig config;
    std::vector<RegretCurve> curves;                  // one per mechanism
    std::vector<RunReport> first_iteration_reports;   // one per mechanism
    bool stage_checks_ok = true;                      // staged-allocator run validations
    std::string stage_check_detail;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Single-instance run of each configured mechanism (used with pre-generated
// instance files); reports are in mechanism order.
std::vector<RunReport> run_on_instance(const Instance& inst, const ExperimentConfig& cfg);

// Writes curves.csv, curve_mean.csv, summary.json and per-round CSVs under
// out_dir (created if missing).
void write_experiment_artifacts(const ExperimentResult& result, const std::string& out_dir);

// ---------------------------------------------------------------------------
// Batch-size sweep
// ---------------------------------------------------------------------------

struct BsSweepConfig {
    std::vector<int> bs_values{1, 5, 10, 25, 50, 75, 100, 125, 150};
    int n = 7;
    int d = 4;
    std::int64_t T = 10000;
    int values_per_feature = 4;
    int iterations = 10;
    std::uint64_t seed = 1;
    double alpha_elinucb = 1.0;
    double delta = 0.05;
    int workers = 0;
};

struct BsSweepResult {
    std::vector<int> bs_values;
    std::vector<double> mean_final_regret;
    std::vector<double> se_final_regret;
};

BsSweepResult bs_sweep(const BsSweepConfig& cfg);
void write_bs_sweep_artifacts(const BsSweepConfig& cfg, const BsSweepResult& result,
                              const std::string& out_dir);

// ---------------------------------------------------------------------------
// Monotonicity suite
// ---------------------------------------------------------------------------

struct MonotoneSuiteConfig {
    int instances = 100;
    std::vector<int> n_values{2, 3, 4, 5};
    std::vector<int> d_values{2, 4};
    std::int64_t T = 2000;
    int values_per_feature = 4;
    std::vector<double> bid_grid{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    std::vector<std::string> allocators{"elinucb-s", "elinucb-sb", "suplinucb-s"};
    double alpha_elinucb = 1.0;
    double alpha_suplinucb = 0.0;  // 0 = calibrated per instance
    double kappa = 0.05;
    int batch_size = 100;
    std::uint64_t seed = 7021;
    int workers = 0;
};

struct MonotoneViolation {
    std::uint64_t instance_seed = 0;
    int n = 0;
    int d = 0;
    std::string allocator;
    int agent = 0;
    double bid_low = 0.0;
    double bid_high = 0.0;
    std::int64_t first_round = 0;
    std::int64_t clicks_low = 0;   // cumulative clicks at first_round under bid_low
    std::int64_t clicks_high = 0;  // cumulative clicks at first_round under bid_high
};

struct MonotoneSuiteResult {
    std::int64_t instances_checked = 0;
    std::int64_t comparisons = 0;  // adjacent (agent, bid pair) replays compared
    std::vector<MonotoneViolation> violations;
};

// For every instance, allocator, agent and adjacent bid pair: coupled replay
// on the identical tape, asserting prefix-wise that cumulative clicks never
// decrease when the bid rises. Violations are report content, not errors.
MonotoneSuiteResult monotonicity_suite(const MonotoneSuiteConfig& cfg);

nlohmann::json monotone_report_to_json(const MonotoneSuiteConfig& cfg,
                                       const MonotoneSuiteResult& result);

// ---------------------------------------------------------------------------
// EPIC / EPIR suite
// ---------------------------------------------------------------------------

struct EpicSuiteConfig {
    int instances = 100;
    std::vector<int> n_values{2, 3, 4, 5};
    std::vector<int> d_values{2, 4};
    std::int64_t T = 600;
    int values_per_feature = 4;
    int resample_seeds = 200;
    std::vector<std::string> mechanisms{"m-elinucb-sb", "m-suplinucb-s"};
    double delta = 0.1;
    double alpha_elinucb = 1.0;
    double alpha_suplinucb = 0.0;  // 0 = calibrated
    double kappa = 0.05;
    int batch_size = 20;
    std::uint64_t seed = 9177;
    int workers = 0;
};

struct EpicCell {
    std::uint64_t instance_seed = 0;
    std::string mechanism;
    int agent = 0;
    double truthful_bid = 0.0;
    double deviant_bid = 0.0;
    double mean_diff = 0.0;  // mean over paired resampling seeds of (truthful - deviant) utility
    double se_diff = 0.0;
    bool dominance_ok = true;  // mean_diff >= -3 * se_diff
};

struct EpirViolation {
    std::uint64_t instance_seed = 0;
    std::string mechanism;
    int agent = 0;
    double min_round_utility = 0.0;
    std::uint64_t resample_seed = 0;
};

struct EpicSuiteResult {
    std::vector<EpicCell> cells;
    std::vector<EpirViolation> epir_violations;
    std::int64_t truthful_runs = 0;

    std::int64_t epic_failures() const {
        std::int64_t k = 0;
        for (const auto& c : cells)
            if (!c.dominance_ok) ++k;
        return k;
    }
};

// EPIR: exact nonnegativity of every truthful agent's per-round utility,
// including non-deviators inside deviation runs. EPIC: paired seed-averaged
// dominance of the truthful bid against each grid deviation within 3 SE.
EpicSuiteResult epic_epir_suite(const EpicSuiteConfig& cfg);

nlohmann::json epic_report_to_json(const EpicSuiteConfig& cfg, const EpicSuiteResult& result);

// The five bid deviations played against a truthful valuation v.
std::vector<double> epic_deviations(double v);

// ---------------------------------------------------------------------------
// Worker pool
// ---------------------------------------------------------------------------

// Runs fn(0..jobs-1) on up to `workers` threads (0 = hardware concurrency).
// Job outputs must go to preallocated slots so results are deterministic
// regardless of scheduling. Exceptions are collected and rethrown.
void parallel_for(int jobs, int workers, const std::function<void(int)>& fn);

}  // namespace ssa
