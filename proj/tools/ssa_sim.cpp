#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <nlohmann/json.hpp>

#include "ssa/io.hpp"
#include "ssa/simharness.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitViolation = 2;

std::string default_out(const std::string& subcommand) {
    if (const char* root = std::getenv("SSA_SIM_OUT_ROOT"))
        return (fs::path(root) / subcommand).string();
    return (fs::path("out") / subcommand).string();
}

ssa::ExperimentConfig load_experiment_config(const std::string& config_path,
                                             const std::string& preset) {
    if (!config_path.empty()) {
        const json j = json::parse(ssa::read_text_file(config_path));
        return ssa::experiment_config_from_json(j);
    }
    if (!preset.empty()) return ssa::experiment_preset(preset);
    return ssa::ExperimentConfig{};
}

struct RunOptions {
    std::string config_path, preset, instance_path, out;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int workers = -1;
    double delta = -1.0;
    int bs = 0;
    std::vector<std::string> mechanisms;
};

int cmd_run(const RunOptions& opt) {
    ssa::ExperimentConfig cfg = load_experiment_config(opt.config_path, opt.preset);
    if (opt.seed_set) cfg.seed = opt.seed;
    if (opt.workers >= 0) cfg.workers = opt.workers;
    if (opt.delta > 0.0) cfg.delta = opt.delta;
    if (opt.bs > 0) cfg.batch_size = opt.bs;
    if (!opt.mechanisms.empty()) cfg.mechanisms = opt.mechanisms;
    // Re-validate after flag overrides.
    cfg = ssa::experiment_config_from_json(ssa::experiment_config_to_json(cfg));

    const std::string out = opt.out.empty() ? default_out("run") : opt.out;
    std::ostringstream line;
    line << "RESULT run";
    if (!opt.instance_path.empty()) {
        const ssa::Instance inst = ssa::read_instance(opt.instance_path);
        const auto reports = ssa::run_on_instance(inst, cfg);
        fs::create_directories(out);
        json summary{{"schema_version", 1},
                     {"config", ssa::experiment_config_to_json(cfg)},
                     {"instance", opt.instance_path},
                     {"mechanisms", json::array()}};
        for (const auto& rep : reports) {
            summary["mechanisms"].push_back(ssa::run_report_to_json(rep));
            if (!rep.rounds.empty())
                ssa::write_rounds_csv(rep.rounds,
                                      (fs::path(out) / ("rounds_" + rep.mechanism + ".csv"))
                                          .string());
            line << ' ' << rep.mechanism << '=' << ssa::format_double(rep.final_regret);
        }
        ssa::write_text_file((fs::path(out) / "summary.json").string(), summary.dump(2));
    } else {
        const ssa::ExperimentResult result = ssa::run_experiment(cfg);
        ssa::write_experiment_artifacts(result, out);
        for (const auto& curve : result.curves)
            line << ' ' << curve.mechanism << '=' << ssa::format_double(curve.final_mean);
        if (!result.stage_checks_ok) {
            std::cerr << "stage diagnostics failed: " << result.stage_check_detail << "\n";
            std::cout << line.str() << " stage_checks=failed\n";
            return kExitViolation;
        }
    }
    std::cout << line.str() << "\n";
    return kExitOk;
}

int cmd_gen_instance(std::uint64_t seed, int n, int d, std::int64_t T, int vpf,
                     const std::string& out) {
    const ssa::Instance inst = ssa::make_instance(seed, n, d, T, vpf);
    const std::string path =
        out.empty() ? (default_out("instances") + "/instance_" + std::to_string(seed) + ".json")
                    : out;
    fs::create_directories(fs::path(path).parent_path());
    ssa::write_instance(inst, path);
    std::cout << "RESULT gen-instance path=" << path << " n=" << n << " d=" << d << " T=" << T
              << "\n";
    return kExitOk;
}

int cmd_sweep_bs(ssa::BsSweepConfig cfg, const std::string& out) {
    const auto result = ssa::bs_sweep(cfg);
    ssa::write_bs_sweep_artifacts(cfg, result, out.empty() ? default_out("sweep-bs") : out);
    std::ostringstream line;
    line << "RESULT sweep-bs";
    for (std::size_t b = 0; b < result.bs_values.size(); ++b)
        line << ' ' << result.bs_values[b] << '='
             << ssa::format_double(result.mean_final_regret[b]);
    std::cout << line.str() << "\n";
    return kExitOk;
}

int cmd_suite_monotone(const ssa::MonotoneSuiteConfig& cfg, const std::string& out) {
    const auto result = ssa::monotonicity_suite(cfg);
    const std::string dir = out.empty() ? default_out("suite-monotone") : out;
    fs::create_directories(dir);
    ssa::write_text_file((fs::path(dir) / "monotone_report.json").string(),
                         ssa::monotone_report_to_json(cfg, result).dump(2));
    std::cout << "RESULT suite-monotone violations=" << result.violations.size()
              << " comparisons=" << result.comparisons << "\n";
    return result.violations.empty() ? kExitOk : kExitViolation;
}

int cmd_suite_epic(const ssa::EpicSuiteConfig& cfg, const std::string& out, bool epir_only) {
    const auto result = ssa::epic_epir_suite(cfg);
    const std::string dir = out.empty() ? default_out(epir_only ? "suite-epir" : "suite-epic") : out;
    fs::create_directories(dir);
    ssa::write_text_file((fs::path(dir) / "epic_epir_report.json").string(),
                         ssa::epic_report_to_json(cfg, result).dump(2));
    if (epir_only) {
        std::cout << "RESULT suite-epir epir_violations=" << result.epir_violations.size()
                  << " truthful_runs=" << result.truthful_runs << "\n";
        return result.epir_violations.empty() ? kExitOk : kExitViolation;
    }
    std::cout << "RESULT suite-epic epic_failures=" << result.epic_failures()
              << " epir_violations=" << result.epir_violations.size()
              << " cells=" << result.cells.size() << "\n";
    return (result.epic_failures() == 0 && result.epir_violations.empty()) ? kExitOk
                                                                           : kExitViolation;
}

int cmd_report(const std::string& in) {
    const json j = json::parse(ssa::read_text_file(in));
    if (j.contains("mechanisms")) {
        std::cout << "experiment summary (" << in << ")\n";
        for (const auto& jm : j.at("mechanisms")) {
            std::cout << "  " << jm.at("name").get<std::string>()
                      << ": final regret mean=" << jm.at("final_regret_mean").get<double>()
                      << " se=" << jm.at("final_regret_se").get<double>() << "\n";
        }
    } else if (j.contains("suite")) {
        std::cout << "suite report (" << j.at("suite").get<std::string>() << ")\n";
        if (j.contains("violation_count"))
            std::cout << "  violations: " << j.at("violation_count").get<std::int64_t>() << "\n";
        if (j.contains("epic_failures"))
            std::cout << "  epic failures: " << j.at("epic_failures").get<std::int64_t>() << "\n";
        if (j.contains("epir_violations"))
            std::cout << "  epir violations: " << j.at("epir_violations").size() << "\n";
    } else {
        std::cout << j.dump(2) << "\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Truthful contextual-bandit auction simulator for single-slot sponsored search"};
    app.require_subcommand(1);

    // run
    RunOptions run_opt;
    auto* run = app.add_subcommand("run", "Run a mechanism experiment and write artifacts");
    run->add_option("--config", run_opt.config_path, "Experiment config JSON");
    run->add_option("--preset", run_opt.preset, "Named preset: paper-full | paper-desk | ci");
    run->add_option("--instance", run_opt.instance_path, "Pre-generated instance JSON");
    run->add_option("--out", run_opt.out, "Output directory");
    run->add_option("--seed", run_opt.seed, "Master seed override")
        ->each([&](const std::string&) { run_opt.seed_set = true; });
    run->add_option("--workers", run_opt.workers, "Worker threads (0 = hardware)");
    run->add_option("--delta", run_opt.delta, "Resampling parameter override");
    run->add_option("--bs", run_opt.bs, "Batch size override");
    run->add_option("--mechanisms", run_opt.mechanisms, "Mechanism list override");

    // gen-instance
    std::uint64_t gen_seed = 1;
    int gen_n = 7, gen_d = 4, gen_vpf = 4;
    std::int64_t gen_T = 10000;
    std::string gen_out;
    auto* gen = app.add_subcommand("gen-instance", "Generate a reproducible instance file");
    gen->add_option("--seed", gen_seed, "Instance seed");
    gen->add_option("--n", gen_n, "Number of agents");
    gen->add_option("--d", gen_d, "Context dimension");
    gen->add_option("--T", gen_T, "Rounds");
    gen->add_option("--vpf", gen_vpf, "Values per feature");
    gen->add_option("--out", gen_out, "Output file path");

    // sweep-bs
    ssa::BsSweepConfig sweep_cfg;
    std::string sweep_out;
    auto* sweep = app.add_subcommand("sweep-bs", "Batch-size sweep for the batched mechanism");
    sweep->add_option("--bs", sweep_cfg.bs_values, "Batch sizes to sweep");
    sweep->add_option("--T", sweep_cfg.T, "Rounds per run");
    sweep->add_option("--iterations", sweep_cfg.iterations, "Iterations per batch size");
    sweep->add_option("--seed", sweep_cfg.seed, "Master seed");
    sweep->add_option("--delta", sweep_cfg.delta, "Resampling parameter");
    sweep->add_option("--workers", sweep_cfg.workers, "Worker threads");
    sweep->add_option("--out", sweep_out, "Output directory");

    // suite-monotone
    ssa::MonotoneSuiteConfig mono_cfg;
    std::string mono_out;
    auto* mono = app.add_subcommand("suite-monotone", "Ex-post monotonicity property suite");
    mono->add_option("--instances", mono_cfg.instances, "Instance count");
    mono->add_option("--T", mono_cfg.T, "Rounds per replay");
    mono->add_option("--allocator", mono_cfg.allocators,
                     "Allocators (elinucb-s, elinucb-sb, suplinucb-s, oracle, broken-probe)");
    mono->add_option("--seed", mono_cfg.seed, "Suite seed");
    mono->add_option("--bs", mono_cfg.batch_size, "Batch size for elinucb-sb");
    mono->add_option("--workers", mono_cfg.workers, "Worker threads");
    mono->add_option("--out", mono_out, "Output directory");

    // suite-epic / suite-epir
    ssa::EpicSuiteConfig epic_cfg;
    std::string epic_out;
    auto* epic = app.add_subcommand("suite-epic", "EPIC statistical dominance suite (and EPIR)");
    auto* epir = app.add_subcommand("suite-epir", "EPIR exact nonnegativity suite");
    for (auto* cmd : {epic, epir}) {
        cmd->add_option("--instances", epic_cfg.instances, "Instance count");
        cmd->add_option("--T", epic_cfg.T, "Rounds per run");
        cmd->add_option("--seeds", epic_cfg.resample_seeds, "Resampling seeds per estimate");
        cmd->add_option("--mechanisms", epic_cfg.mechanisms, "Mechanisms under test");
        cmd->add_option("--delta", epic_cfg.delta, "Resampling parameter");
        cmd->add_option("--seed", epic_cfg.seed, "Suite seed");
        cmd->add_option("--bs", epic_cfg.batch_size, "Batch size for m-elinucb-sb");
        cmd->add_option("--workers", epic_cfg.workers, "Worker threads");
        cmd->add_option("--out", epic_out, "Output directory");
    }

    // report
    std::string report_in;
    auto* report = app.add_subcommand("report", "Pretty-print a summary or suite report");
    report->add_option("--in", report_in, "Report JSON path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfigError;
    }

    try {
        if (run->parsed()) return cmd_run(run_opt);
        if (gen->parsed()) return cmd_gen_instance(gen_seed, gen_n, gen_d, gen_T, gen_vpf, gen_out);
        if (sweep->parsed()) return cmd_sweep_bs(sweep_cfg, sweep_out);
        if (mono->parsed()) return cmd_suite_monotone(mono_cfg, mono_out);
        if (epic->parsed()) return cmd_suite_epic(epic_cfg, epic_out, false);
        if (epir->parsed()) return cmd_suite_epic(epic_cfg, epic_out, true);
        if (report->parsed()) return cmd_report(report_in);
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfigError;
    }
    return kExitConfigError;
}
