#include "ssa/simharness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <limits>
#include <mutex>
#include <nlohmann/json.hpp>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "ssa/io.hpp"
#include "ssa/rng.hpp"
#include "ssa/stats.hpp"
#include "ssa/suplinucb.hpp"

namespace ssa {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Worker pool
// ---------------------------------------------------------------------------

void parallel_for(int jobs, int workers, const std::function<void(int)>& fn) {
    if (jobs <= 0) return;
    if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
    workers = std::max(1, std::min(workers, jobs));
    if (workers == 1) {
        for (int k = 0; k < jobs; ++k) fn(k);
        return;
    }
    std::atomic<int> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const int k = next.fetch_add(1);
                if (k >= jobs) return;
                try {
                    fn(k);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

ExperimentConfig experiment_preset(const std::string& name) {
    ExperimentConfig cfg;
    if (name == "paper-full") {
        cfg.T = 1000000;
        cfg.iterations = 40;
    } else if (name == "paper-desk") {
        cfg.T = 100000;
        cfg.iterations = 10;
    } else if (name == "ci") {
        cfg.T = 10000;
        cfg.iterations = 3;
    } else {
        throw std::invalid_argument("unknown preset: " + name);
    }
    return cfg;
}

json experiment_config_to_json(const ExperimentConfig& cfg) {
    return json{{"schema_version", 1},
                {"n", cfg.n},
                {"d", cfg.d},
                {"T", cfg.T},
                {"values_per_feature", cfg.values_per_feature},
                {"iterations", cfg.iterations},
                {"seed", cfg.seed},
                {"fixed_agents", cfg.fixed_agents},
                {"mechanisms", cfg.mechanisms},
                {"alpha_elinucb", cfg.alpha_elinucb},
                {"alpha_suplinucb", cfg.alpha_suplinucb},
                {"kappa", cfg.kappa},
                {"batch_size", cfg.batch_size},
                {"delta", cfg.delta},
                {"charge_on_allocation", cfg.charge_on_allocation},
                {"explore_rounds", cfg.explore_rounds},
                {"workers", cfg.workers},
                {"rounds_csv", cfg.rounds_csv}};
}

namespace {

template <typename T>
T get_field(const json& j, const char* field, const T& fallback) {
    if (!j.contains(field)) return fallback;
    try {
        return j.at(field).get<T>();
    } catch (const json::exception&) {
        throw std::invalid_argument(std::string("config: invalid value for field '") + field + "'");
    }
}

void reject_unknown_fields(const json& j, std::initializer_list<const char*> known) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        const bool ok = std::any_of(known.begin(), known.end(),
                                    [&](const char* k) { return it.key() == k; });
        if (!ok) throw std::invalid_argument("config: unknown field '" + it.key() + "'");
    }
}

}  // namespace

ExperimentConfig experiment_config_from_json(const json& j) {
    if (!j.is_object()) throw std::invalid_argument("config: root must be a JSON object");
    reject_unknown_fields(j, {"schema_version", "preset", "n", "d", "T", "values_per_feature",
                              "iterations", "seed", "fixed_agents", "mechanisms", "alpha_elinucb",
                              "alpha_suplinucb", "kappa", "batch_size", "delta",
                              "charge_on_allocation", "explore_rounds", "workers", "rounds_csv"});
    const int version = get_field<int>(j, "schema_version", 1);
    if (version != 1)
        throw std::invalid_argument("config: unsupported value for field 'schema_version'");
    ExperimentConfig cfg;
    if (j.contains("preset")) cfg = experiment_preset(j.at("preset").get<std::string>());
    cfg.n = get_field<int>(j, "n", cfg.n);
    cfg.d = get_field<int>(j, "d", cfg.d);
    cfg.T = get_field<std::int64_t>(j, "T", cfg.T);
    cfg.values_per_feature = get_field<int>(j, "values_per_feature", cfg.values_per_feature);
    cfg.iterations = get_field<int>(j, "iterations", cfg.iterations);
    cfg.seed = get_field<std::uint64_t>(j, "seed", cfg.seed);
    cfg.fixed_agents = get_field<bool>(j, "fixed_agents", cfg.fixed_agents);
    cfg.mechanisms = get_field<std::vector<std::string>>(j, "mechanisms", cfg.mechanisms);
    cfg.alpha_elinucb = get_field<double>(j, "alpha_elinucb", cfg.alpha_elinucb);
    cfg.alpha_suplinucb = get_field<double>(j, "alpha_suplinucb", cfg.alpha_suplinucb);
    cfg.kappa = get_field<double>(j, "kappa", cfg.kappa);
    cfg.batch_size = get_field<int>(j, "batch_size", cfg.batch_size);
    cfg.delta = get_field<double>(j, "delta", cfg.delta);
    cfg.charge_on_allocation = get_field<bool>(j, "charge_on_allocation", cfg.charge_on_allocation);
    cfg.explore_rounds = get_field<std::int64_t>(j, "explore_rounds", cfg.explore_rounds);
    cfg.workers = get_field<int>(j, "workers", cfg.workers);
    cfg.rounds_csv = get_field<std::string>(j, "rounds_csv", cfg.rounds_csv);

    if (cfg.n < 2) throw std::invalid_argument("config: field 'n' must be >= 2");
    if (cfg.d < 1) throw std::invalid_argument("config: field 'd' must be >= 1");
    if (cfg.T < 2) throw std::invalid_argument("config: field 'T' must be >= 2");
    if (cfg.iterations < 1) throw std::invalid_argument("config: field 'iterations' must be >= 1");
    if (cfg.batch_size < 1) throw std::invalid_argument("config: field 'batch_size' must be >= 1");
    if (!(cfg.delta > 0.0 && cfg.delta < 1.0))
        throw std::invalid_argument("config: field 'delta' must be in (0, 1)");
    if (cfg.mechanisms.empty())
        throw std::invalid_argument("config: field 'mechanisms' must be nonempty");
    for (const auto& m : cfg.mechanisms) mechanism_from_name(m);  // throws on unknown names
    if (cfg.rounds_csv != "none" && cfg.rounds_csv != "first" && cfg.rounds_csv != "all")
        throw std::invalid_argument("config: field 'rounds_csv' must be none|first|all");
    return cfg;
}

std::vector<std::int64_t> make_checkpoints(std::int64_t T) {
    std::vector<std::int64_t> cps;
    for (std::int64_t c = 1; c < T; c *= 2) cps.push_back(c);
    cps.push_back(T);
    return cps;
}

double pseudo_regret_increment(const Instance& inst, std::int64_t t, int allocated) {
    const Context& x = inst.context_at(t);
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& a : inst.agents) best = std::max(best, a.bid * a.theta.dot(x.features));
    const auto& agent = inst.agents[static_cast<std::size_t>(allocated - 1)];
    return best - agent.bid * agent.theta.dot(x.features);
}

// ---------------------------------------------------------------------------
// Experiment runner
// ---------------------------------------------------------------------------

namespace {

Instance make_iteration_instance(const ExperimentConfig& cfg, int iteration) {
    const std::uint64_t iter_seed = mix_seed(cfg.seed, 100 + static_cast<std::uint64_t>(iteration));
    if (!cfg.fixed_agents) return make_instance(iter_seed, cfg.n, cfg.d, cfg.T,
                                                cfg.values_per_feature);
    // Fixed-agents mode: agents drawn once from the master seed, contexts and
    // tape still fresh per iteration.
    Instance inst;
    inst.seed = iter_seed;
    inst.n = cfg.n;
    inst.d = cfg.d;
    inst.T = cfg.T;
    inst.values_per_feature = cfg.values_per_feature;
    inst.corpus = generate_corpus(mix_seed(iter_seed, 1), cfg.d, cfg.values_per_feature);
    inst.agents = generate_agents(mix_seed(cfg.seed, 2), cfg.n, cfg.d);
    inst.context_sequence = sample_context_sequence(mix_seed(iter_seed, 3), inst.corpus, cfg.T);
    inst.tape = generate_click_tape(mix_seed(iter_seed, 4), inst.agents, inst.corpus,
                                    inst.context_sequence);
    return inst;
}

MechanismConfig mechanism_config_for(const ExperimentConfig& cfg,
                                     const std::vector<std::int64_t>& checkpoints,
                                     bool keep_rounds) {
    MechanismConfig mc;
    mc.delta = cfg.delta;
    mc.charge_on_allocation = cfg.charge_on_allocation;
    mc.alpha_elinucb = cfg.alpha_elinucb;
    mc.alpha_suplinucb = cfg.alpha_suplinucb;
    mc.kappa = cfg.kappa;
    mc.batch_size = cfg.batch_size;
    mc.explore_rounds = cfg.explore_rounds;
    mc.keep_rounds = keep_rounds;
    mc.checkpoints = checkpoints;
    return mc;
}

}  // namespace

std::vector<RunReport> run_on_instance(const Instance& inst, const ExperimentConfig& cfg) {
    const auto checkpoints = make_checkpoints(inst.T);
    std::vector<RunReport> reports;
    reports.reserve(cfg.mechanisms.size());
    const std::uint64_t resample_seed = mix_seed(inst.seed, 7);
    for (const auto& name : cfg.mechanisms) {
        const MechanismConfig mc =
            mechanism_config_for(cfg, checkpoints, cfg.rounds_csv != "none");
        reports.push_back(run_mechanism(mechanism_from_name(name), inst, mc, resample_seed));
    }
    return reports;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    const auto checkpoints = make_checkpoints(cfg.T);
    const std::size_t n_mech = cfg.mechanisms.size();

    ExperimentResult result;
    result.config = cfg;
    result.curves.resize(n_mech);
    result.first_iteration_reports.resize(n_mech);
    for (std::size_t m = 0; m < n_mech; ++m) {
        result.curves[m].mechanism = cfg.mechanisms[m];
        result.curves[m].checkpoints = checkpoints;
        result.curves[m].per_iteration.assign(static_cast<std::size_t>(cfg.iterations), {});
    }

    std::vector<std::string> iteration_errors(static_cast<std::size_t>(cfg.iterations));
    std::vector<std::vector<RunReport>> iter_reports(static_cast<std::size_t>(cfg.iterations));

    parallel_for(cfg.iterations, cfg.workers, [&](int it) {
        try {
            const Instance inst = make_iteration_instance(cfg, it);
            const std::uint64_t resample_seed = mix_seed(mix_seed(cfg.seed, 100 + static_cast<std::uint64_t>(it)), 7);
            std::vector<RunReport> reports;
            reports.reserve(n_mech);
            for (std::size_t m = 0; m < n_mech; ++m) {
                const bool keep =
                    (cfg.rounds_csv == "all") || (cfg.rounds_csv == "first" && it == 0);
                const MechanismConfig mc = mechanism_config_for(cfg, checkpoints, keep);
                reports.push_back(run_mechanism(mechanism_from_name(cfg.mechanisms[m]), inst, mc,
                                                resample_seed));
            }
            iter_reports[static_cast<std::size_t>(it)] = std::move(reports);
        } catch (const std::exception& e) {
            iteration_errors[static_cast<std::size_t>(it)] = e.what();
        }
    });

    std::string failures;
    for (int it = 0; it < cfg.iterations; ++it)
        if (!iteration_errors[static_cast<std::size_t>(it)].empty())
            failures += "iteration " + std::to_string(it) + ": " +
                        iteration_errors[static_cast<std::size_t>(it)] + "; ";
    if (!failures.empty()) throw std::runtime_error("run_experiment failed: " + failures);

    for (int it = 0; it < cfg.iterations; ++it) {
        for (std::size_t m = 0; m < n_mech; ++m) {
            RunReport& rep = iter_reports[static_cast<std::size_t>(it)][m];
            result.curves[m].per_iteration[static_cast<std::size_t>(it)] = rep.regret_at;
            if (rep.has_stage_diagnostics &&
                (!rep.index_growth_bound_ok || !rep.forced_exploit_bound_ok)) {
                result.stage_checks_ok = false;
                result.stage_check_detail += "iteration " + std::to_string(it) + " " +
                                             rep.mechanism + ": " + rep.stage_check_detail + "; ";
            }
            if (it == 0) result.first_iteration_reports[m] = std::move(rep);
        }
    }

    for (auto& curve : result.curves) {
        const std::size_t n_cp = curve.checkpoints.size();
        curve.mean.assign(n_cp, 0.0);
        curve.se.assign(n_cp, 0.0);
        for (std::size_t c = 0; c < n_cp; ++c) {
            std::vector<double> vals;
            vals.reserve(curve.per_iteration.size());
            for (const auto& row : curve.per_iteration) vals.push_back(row[c]);
            curve.mean[c] = stats::mean(vals);
            curve.se[c] = stats::stderr_mean(vals);
        }
        curve.final_mean = curve.mean.back();
        curve.final_se = curve.se.back();
    }
    return result;
}

void write_experiment_artifacts(const ExperimentResult& result, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    {
        std::ostringstream out;
        out << "mechanism,iteration,checkpoint,cumulative_regret\n";
        for (const auto& curve : result.curves)
            for (std::size_t it = 0; it < curve.per_iteration.size(); ++it)
                for (std::size_t c = 0; c < curve.checkpoints.size(); ++c)
                    out << curve.mechanism << ',' << it << ',' << curve.checkpoints[c] << ','
                        << format_double(curve.per_iteration[it][c]) << '\n';
        write_text_file((fs::path(out_dir) / "curves.csv").string(), out.str());
    }
    {
        std::ostringstream out;
        out << "mechanism,checkpoint,mean_regret,stderr,iterations\n";
        for (const auto& curve : result.curves)
            for (std::size_t c = 0; c < curve.checkpoints.size(); ++c)
                out << curve.mechanism << ',' << curve.checkpoints[c] << ','
                    << format_double(curve.mean[c]) << ',' << format_double(curve.se[c]) << ','
                    << curve.per_iteration.size() << '\n';
        write_text_file((fs::path(out_dir) / "curve_mean.csv").string(), out.str());
    }
    {
        json mechs = json::array();
        for (std::size_t m = 0; m < result.curves.size(); ++m) {
            const auto& curve = result.curves[m];
            std::vector<double> finals;
            for (const auto& row : curve.per_iteration) finals.push_back(row.back());
            json jm{{"name", curve.mechanism},
                    {"final_regret_mean", curve.final_mean},
                    {"final_regret_se", curve.final_se},
                    {"per_iteration_final", finals}};
            if (m < result.first_iteration_reports.size())
                jm["first_iteration"] = run_report_to_json(result.first_iteration_reports[m]);
            mechs.push_back(std::move(jm));
        }
        json summary{{"schema_version", 1},
                     {"config", experiment_config_to_json(result.config)},
                     {"stage_checks_ok", result.stage_checks_ok},
                     {"stage_check_detail", result.stage_check_detail},
                     {"mechanisms", std::move(mechs)}};
        write_text_file((fs::path(out_dir) / "summary.json").string(), summary.dump(2));
    }
    if (result.config.rounds_csv != "none") {
        for (const auto& rep : result.first_iteration_reports)
            if (!rep.rounds.empty())
                write_rounds_csv(rep.rounds, (fs::path(out_dir) /
                                              ("rounds_" + rep.mechanism + "_iter0.csv"))
                                                 .string());
    }
}

// ---------------------------------------------------------------------------
// Batch-size sweep
// ---------------------------------------------------------------------------

BsSweepResult bs_sweep(const BsSweepConfig& cfg) {
    BsSweepResult result;
    result.bs_values = cfg.bs_values;
    const int jobs = static_cast<int>(cfg.bs_values.size()) * cfg.iterations;
    std::vector<double> finals(static_cast<std::size_t>(jobs), 0.0);
    parallel_for(jobs, cfg.workers, [&](int k) {
        const int b = k / cfg.iterations;
        const int it = k % cfg.iterations;
        const std::uint64_t iter_seed =
            mix_seed(cfg.seed, 100 + static_cast<std::uint64_t>(it));
        const Instance inst =
            make_instance(iter_seed, cfg.n, cfg.d, cfg.T, cfg.values_per_feature);
        MechanismConfig mc;
        mc.delta = cfg.delta;
        mc.alpha_elinucb = cfg.alpha_elinucb;
        mc.batch_size = cfg.bs_values[static_cast<std::size_t>(b)];
        const RunReport rep =
            run_mechanism(MechanismKind::MElinucbSB, inst, mc, mix_seed(iter_seed, 7));
        finals[static_cast<std::size_t>(k)] = rep.final_regret;
    });
    for (std::size_t b = 0; b < cfg.bs_values.size(); ++b) {
        std::vector<double> vals(finals.begin() + static_cast<std::ptrdiff_t>(b) * cfg.iterations,
                                 finals.begin() +
                                     static_cast<std::ptrdiff_t>(b + 1) * cfg.iterations);
        result.mean_final_regret.push_back(stats::mean(vals));
        result.se_final_regret.push_back(stats::stderr_mean(vals));
    }
    return result;
}

void write_bs_sweep_artifacts(const BsSweepConfig& cfg, const BsSweepResult& result,
                              const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::ostringstream out;
    out << "bs,mean_final_regret,stderr,iterations\n";
    for (std::size_t b = 0; b < result.bs_values.size(); ++b)
        out << result.bs_values[b] << ',' << format_double(result.mean_final_regret[b]) << ','
            << format_double(result.se_final_regret[b]) << ',' << cfg.iterations << '\n';
    write_text_file((fs::path(out_dir) / "bs_sweep.csv").string(), out.str());
}

// ---------------------------------------------------------------------------
// Monotonicity suite
// ---------------------------------------------------------------------------

namespace {

Instance make_grid_instance(std::uint64_t suite_seed, int index, const std::vector<int>& n_values,
                            const std::vector<int>& d_values, std::int64_t T,
                            int values_per_feature) {
    const int n = n_values[static_cast<std::size_t>(index) % n_values.size()];
    const int d = d_values[(static_cast<std::size_t>(index) / n_values.size()) % d_values.size()];
    const std::uint64_t seed = mix_seed(suite_seed, 500 + static_cast<std::uint64_t>(index));
    return make_instance(seed, n, d, T, values_per_feature);
}

AllocatorParams allocator_params_for(const MonotoneSuiteConfig& cfg, const Instance& inst) {
    AllocatorParams p;
    p.alpha_elinucb = cfg.alpha_elinucb;
    p.alpha_suplinucb = cfg.alpha_suplinucb > 0.0
                            ? cfg.alpha_suplinucb
                            : calibrated_alpha(inst.n, inst.T, cfg.kappa);
    p.kappa = cfg.kappa;
    p.batch_size = cfg.batch_size;
    p.horizon = inst.T;
    return p;
}

}  // namespace

MonotoneSuiteResult monotonicity_suite(const MonotoneSuiteConfig& cfg) {
    const int jobs = cfg.instances * static_cast<int>(cfg.allocators.size());
    std::vector<MonotoneSuiteResult> partial(static_cast<std::size_t>(jobs));

    parallel_for(jobs, cfg.workers, [&](int k) {
        const int inst_ix = k / static_cast<int>(cfg.allocators.size());
        const auto& allocator_kind =
            cfg.allocators[static_cast<std::size_t>(k) % cfg.allocators.size()];
        const Instance inst = make_grid_instance(cfg.seed, inst_ix, cfg.n_values, cfg.d_values,
                                                 cfg.T, cfg.values_per_feature);
        const AllocatorParams params = allocator_params_for(cfg, inst);
        MonotoneSuiteResult& out = partial[static_cast<std::size_t>(k)];

        std::vector<double> base_bids(static_cast<std::size_t>(inst.n));
        for (int i = 0; i < inst.n; ++i)
            base_bids[static_cast<std::size_t>(i)] = inst.agents[static_cast<std::size_t>(i)].bid;

        for (int agent = 1; agent <= inst.n; ++agent) {
            std::vector<std::vector<std::int32_t>> traces;
            traces.reserve(cfg.bid_grid.size());
            for (double level : cfg.bid_grid) {
                std::vector<double> bids = base_bids;
                bids[static_cast<std::size_t>(agent - 1)] = level;
                auto alloc = make_allocator(allocator_kind, inst, bids, params);
                traces.push_back(run_allocation(*alloc, inst, bids, agent).tracked_cum_clicks);
            }
            for (std::size_t g = 0; g + 1 < cfg.bid_grid.size(); ++g) {
                ++out.comparisons;
                const auto& low = traces[g];
                const auto& high = traces[g + 1];
                for (std::int64_t t = 0; t < inst.T; ++t) {
                    if (high[static_cast<std::size_t>(t)] < low[static_cast<std::size_t>(t)]) {
                        out.violations.push_back(MonotoneViolation{
                            inst.seed, inst.n, inst.d, allocator_kind, agent, cfg.bid_grid[g],
                            cfg.bid_grid[g + 1], t + 1, low[static_cast<std::size_t>(t)],
                            high[static_cast<std::size_t>(t)]});
                        break;  // first violating prefix is enough per pair
                    }
                }
            }
        }
    });

    MonotoneSuiteResult result;
    result.instances_checked = cfg.instances;
    for (auto& p : partial) {
        result.comparisons += p.comparisons;
        result.violations.insert(result.violations.end(), p.violations.begin(),
                                 p.violations.end());
    }
    return result;
}

nlohmann::json monotone_report_to_json(const MonotoneSuiteConfig& cfg,
                                       const MonotoneSuiteResult& result) {
    json violations = json::array();
    for (const auto& v : result.violations) {
        // Reproduction bundle: the violating instance regenerates from its
        // seed; embed it whole so the bundle is self-contained.
        const Instance inst = [&] {
            for (int ix = 0; ix < cfg.instances; ++ix) {
                Instance candidate = make_grid_instance(cfg.seed, ix, cfg.n_values, cfg.d_values,
                                                        cfg.T, cfg.values_per_feature);
                if (candidate.seed == v.instance_seed) return candidate;
            }
            throw std::logic_error("violation instance seed not found in grid");
        }();
        violations.push_back(json{{"instance_seed", v.instance_seed},
                                  {"n", v.n},
                                  {"d", v.d},
                                  {"allocator", v.allocator},
                                  {"agent", v.agent},
                                  {"bid_low", v.bid_low},
                                  {"bid_high", v.bid_high},
                                  {"first_round", v.first_round},
                                  {"clicks_low", v.clicks_low},
                                  {"clicks_high", v.clicks_high},
                                  {"reproduction", {{"instance", instance_to_json(inst)}}}});
    }
    return json{{"schema_version", 1},
                {"suite", "monotonicity"},
                {"instances_checked", result.instances_checked},
                {"comparisons", result.comparisons},
                {"violation_count", result.violations.size()},
                {"violations", std::move(violations)},
                {"config",
                 {{"instances", cfg.instances},
                  {"n_values", cfg.n_values},
                  {"d_values", cfg.d_values},
                  {"T", cfg.T},
                  {"bid_grid", cfg.bid_grid},
                  {"allocators", cfg.allocators},
                  {"alpha_elinucb", cfg.alpha_elinucb},
                  {"alpha_suplinucb", cfg.alpha_suplinucb},
                  {"kappa", cfg.kappa},
                  {"batch_size", cfg.batch_size},
                  {"seed", cfg.seed}}}};
}

// ---------------------------------------------------------------------------
// EPIC / EPIR suite
// ---------------------------------------------------------------------------

std::vector<double> epic_deviations(double v) {
    return {0.0, 0.5 * v, 0.8 * v, std::min(1.0, 1.25 * v), std::min(1.0, 1.5 * v)};
}

EpicSuiteResult epic_epir_suite(const EpicSuiteConfig& cfg) {
    const int jobs = cfg.instances * static_cast<int>(cfg.mechanisms.size());
    std::vector<EpicSuiteResult> partial(static_cast<std::size_t>(jobs));

    parallel_for(jobs, cfg.workers, [&](int k) {
        const int inst_ix = k / static_cast<int>(cfg.mechanisms.size());
        const auto& mech_name =
            cfg.mechanisms[static_cast<std::size_t>(k) % cfg.mechanisms.size()];
        const MechanismKind kind = mechanism_from_name(mech_name);
        const Instance inst = make_grid_instance(cfg.seed, inst_ix, cfg.n_values, cfg.d_values,
                                                 cfg.T, cfg.values_per_feature);
        EpicSuiteResult& out = partial[static_cast<std::size_t>(k)];

        MechanismConfig mc;
        mc.delta = cfg.delta;
        mc.alpha_elinucb = cfg.alpha_elinucb;
        mc.alpha_suplinucb = cfg.alpha_suplinucb > 0.0
                                 ? cfg.alpha_suplinucb
                                 : calibrated_alpha(inst.n, inst.T, cfg.kappa);
        mc.kappa = cfg.kappa;
        mc.batch_size = cfg.batch_size;

        const int deviator = 1 + inst_ix % inst.n;
        const double truthful_bid = inst.agents[static_cast<std::size_t>(deviator - 1)].valuation;

        std::vector<std::uint64_t> seeds(static_cast<std::size_t>(cfg.resample_seeds));
        for (int s = 0; s < cfg.resample_seeds; ++s)
            seeds[static_cast<std::size_t>(s)] =
                mix_seed(inst.seed, 1000 + static_cast<std::uint64_t>(s));

        // Truthful baseline; also the EPIR source for every agent.
        std::vector<double> truthful_utility(seeds.size(), 0.0);
        for (std::size_t s = 0; s < seeds.size(); ++s) {
            const RunReport rep = run_mechanism(kind, inst, mc, seeds[s]);
            ++out.truthful_runs;
            truthful_utility[s] = rep.total_utility[static_cast<std::size_t>(deviator - 1)];
            for (int i = 1; i <= inst.n; ++i)
                if (rep.min_round_utility[static_cast<std::size_t>(i - 1)] < 0.0)
                    out.epir_violations.push_back(EpirViolation{
                        inst.seed, mech_name, i,
                        rep.min_round_utility[static_cast<std::size_t>(i - 1)], seeds[s]});
        }

        for (double dev_bid : epic_deviations(truthful_bid)) {
            std::vector<double> bids(static_cast<std::size_t>(inst.n));
            for (int i = 0; i < inst.n; ++i)
                bids[static_cast<std::size_t>(i)] =
                    inst.agents[static_cast<std::size_t>(i)].bid;
            bids[static_cast<std::size_t>(deviator - 1)] = dev_bid;

            std::vector<double> diffs(seeds.size(), 0.0);
            for (std::size_t s = 0; s < seeds.size(); ++s) {
                const RunReport rep = run_mechanism(kind, inst, mc, seeds[s], &bids);
                diffs[s] = truthful_utility[s] -
                           rep.total_utility[static_cast<std::size_t>(deviator - 1)];
                // EPIR also holds for the truthful agents irrespective of the
                // deviator's bid.
                for (int i = 1; i <= inst.n; ++i)
                    if (i != deviator &&
                        rep.min_round_utility[static_cast<std::size_t>(i - 1)] < 0.0)
                        out.epir_violations.push_back(EpirViolation{
                            inst.seed, mech_name, i,
                            rep.min_round_utility[static_cast<std::size_t>(i - 1)], seeds[s]});
            }
            EpicCell cell;
            cell.instance_seed = inst.seed;
            cell.mechanism = mech_name;
            cell.agent = deviator;
            cell.truthful_bid = truthful_bid;
            cell.deviant_bid = dev_bid;
            cell.mean_diff = stats::mean(diffs);
            cell.se_diff = stats::stderr_mean(diffs);
            cell.dominance_ok = cell.mean_diff >= -3.0 * cell.se_diff;
            out.cells.push_back(std::move(cell));
        }
    });

    EpicSuiteResult result;
    for (auto& p : partial) {
        result.truthful_runs += p.truthful_runs;
        result.cells.insert(result.cells.end(), p.cells.begin(), p.cells.end());
        result.epir_violations.insert(result.epir_violations.end(), p.epir_violations.begin(),
                                      p.epir_violations.end());
    }
    return result;
}

nlohmann::json epic_report_to_json(const EpicSuiteConfig& cfg, const EpicSuiteResult& result) {
    json cells = json::array();
    for (const auto& c : result.cells)
        cells.push_back(json{{"instance_seed", c.instance_seed},
                             {"mechanism", c.mechanism},
                             {"agent", c.agent},
                             {"truthful_bid", c.truthful_bid},
                             {"deviant_bid", c.deviant_bid},
                             {"mean_diff", c.mean_diff},
                             {"se_diff", c.se_diff},
                             {"dominance_ok", c.dominance_ok}});
    json epir = json::array();
    for (const auto& v : result.epir_violations)
        epir.push_back(json{{"instance_seed", v.instance_seed},
                            {"mechanism", v.mechanism},
                            {"agent", v.agent},
                            {"min_round_utility", v.min_round_utility},
                            {"resample_seed", v.resample_seed}});
    return json{{"schema_version", 1},
                {"suite", "epic-epir"},
                {"truthful_runs", result.truthful_runs},
                {"epic_cells", result.cells.size()},
                {"epic_failures", result.epic_failures()},
                {"epir_violations", std::move(epir)},
                {"cells", std::move(cells)},
                {"config",
                 {{"instances", cfg.instances},
                  {"n_values", cfg.n_values},
                  {"d_values", cfg.d_values},
                  {"T", cfg.T},
                  {"resample_seeds", cfg.resample_seeds},
                  {"mechanisms", cfg.mechanisms},
                  {"delta", cfg.delta},
                  {"alpha_elinucb", cfg.alpha_elinucb},
                  {"alpha_suplinucb", cfg.alpha_suplinucb},
                  {"batch_size", cfg.batch_size},
                  {"seed", cfg.seed}}}};
}

}  // namespace ssa
