#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <nlohmann/json.hpp>

#include "ssa/io.hpp"
#include "ssa/simharness.hpp"
#include "ssa/stats.hpp"

using namespace ssa;
namespace fs = std::filesystem;

namespace {

Instance two_agent_instance(double ctr1, double ctr2, std::int64_t T) {
    Instance inst;
    inst.seed = 1;
    inst.n = 2;
    inst.d = 2;
    inst.T = T;
    inst.values_per_feature = 1;
    Vec e1(2);
    e1 << 1.0, 0.0;
    inst.corpus.contexts.push_back(Context{e1});
    inst.corpus.raw.push_back({1, 0});
    for (int i = 0; i < 2; ++i) {
        const double ctr = i == 0 ? ctr1 : ctr2;
        Vec theta(2);
        theta << ctr, std::sqrt(std::max(0.0, 1.0 - ctr * ctr));
        inst.agents.push_back(AgentSpec{i + 1, 1.0, 1.0, theta});
    }
    inst.context_sequence.assign(static_cast<std::size_t>(T), 0);
    inst.tape = generate_click_tape(9, inst.agents, inst.corpus, inst.context_sequence);
    return inst;
}

}  // namespace

TEST_CASE("checkpoint grid: powers of two plus the horizon, no duplicate") {
    CHECK(make_checkpoints(10) == std::vector<std::int64_t>{1, 2, 4, 8, 10});
    CHECK(make_checkpoints(8) == std::vector<std::int64_t>{1, 2, 4, 8});
    CHECK(make_checkpoints(1) == std::vector<std::int64_t>{1});
}

TEST_CASE("pseudo-regret increment from the simulation oracle") {
    const Instance inst = two_agent_instance(0.6, 0.4, 10);
    CHECK(pseudo_regret_increment(inst, 1, 1) == doctest::Approx(0.0));
    CHECK(pseudo_regret_increment(inst, 1, 2) == doctest::Approx(0.2).epsilon(1e-9));

    // Degenerate competitor: theta_2 = 0, so allocating agent 1 is free and
    // allocating agent 2 costs the full expected value of agent 1.
    Instance degenerate = two_agent_instance(0.6, 0.0, 10);
    degenerate.agents[1].theta.setZero();
    degenerate.tape = generate_click_tape(9, degenerate.agents, degenerate.corpus,
                                          degenerate.context_sequence);
    CHECK(pseudo_regret_increment(degenerate, 1, 1) == doctest::Approx(0.0));
    CHECK(pseudo_regret_increment(degenerate, 1, 2) == doctest::Approx(0.6).epsilon(1e-9));
}

TEST_CASE("experiment presets pin the paper defaults") {
    const auto full = experiment_preset("paper-full");
    CHECK(full.n == 7);
    CHECK(full.d == 4);
    CHECK(full.T == 1000000);
    CHECK(full.iterations == 40);
    CHECK(full.batch_size == 100);
    CHECK(full.alpha_elinucb == 1.0);
    CHECK(full.values_per_feature == 4);
    const auto desk = experiment_preset("paper-desk");
    CHECK(desk.T == 100000);
    CHECK(desk.iterations == 10);
    const auto ci = experiment_preset("ci");
    CHECK(ci.T == 10000);
    CHECK(ci.iterations == 3);
    CHECK_THROWS_AS(experiment_preset("nope"), std::invalid_argument);
}

TEST_CASE("config parsing names the offending field") {
    using nlohmann::json;
    const json good{{"preset", "ci"}, {"n", 3}, {"mechanisms", json::array({"oracle"})}};
    const ExperimentConfig cfg = experiment_config_from_json(good);
    CHECK(cfg.n == 3);
    CHECK(cfg.T == 10000);

    const auto expect_message_contains = [](const json& j, const std::string& needle) {
        try {
            experiment_config_from_json(j);
            FAIL_CHECK("expected config error mentioning " << needle);
        } catch (const std::invalid_argument& e) {
            CHECK_MESSAGE(std::string(e.what()).find(needle) != std::string::npos, e.what());
        }
    };
    expect_message_contains(json{{"delta", 1.5}}, "delta");
    expect_message_contains(json{{"iterations", 0}}, "iterations");
    expect_message_contains(json{{"rounds_csv", "sometimes"}}, "rounds_csv");
    expect_message_contains(json{{"not_a_field", 1}}, "not_a_field");
    expect_message_contains(json{{"T", "many"}}, "T");
    CHECK_THROWS(experiment_config_from_json(json{{"mechanisms", json::array({"m-regret"})}}));

    const ExperimentConfig round = experiment_config_from_json(
        experiment_config_to_json(experiment_preset("paper-desk")));
    CHECK(round.T == 100000);
    CHECK(round.mechanisms == experiment_preset("paper-desk").mechanisms);
}

TEST_CASE("oracle mechanism produces a flat zero curve") {
    ExperimentConfig cfg;
    cfg.n = 3;
    cfg.d = 2;
    cfg.T = 300;
    cfg.iterations = 2;
    cfg.mechanisms = {"oracle"};
    cfg.rounds_csv = "none";
    cfg.workers = 1;
    const auto result = run_experiment(cfg);
    REQUIRE(result.curves.size() == 1);
    for (const auto& row : result.curves[0].per_iteration)
        for (double r : row) CHECK(r == 0.0);
}

TEST_CASE("regret curves are non-decreasing in t") {
    ExperimentConfig cfg;
    cfg.n = 4;
    cfg.d = 2;
    cfg.T = 2000;
    cfg.iterations = 2;
    cfg.batch_size = 20;
    cfg.mechanisms = {"m-elinucb-sb", "m-suplinucb-s", "explore-separated"};
    cfg.rounds_csv = "none";
    cfg.workers = 2;
    const auto result = run_experiment(cfg);
    for (const auto& curve : result.curves)
        for (const auto& row : curve.per_iteration)
            for (std::size_t c = 1; c < row.size(); ++c) CHECK(row[c] >= row[c - 1] - 1e-12);
    CHECK(result.stage_checks_ok);
}

TEST_CASE("reproducibility: identical config and seeds give identical artifacts") {
    ExperimentConfig cfg;
    cfg.n = 3;
    cfg.d = 2;
    cfg.T = 500;
    cfg.iterations = 2;
    cfg.batch_size = 10;
    cfg.seed = 77;
    cfg.mechanisms = {"m-elinucb-sb", "explore-separated"};
    cfg.workers = 4;  // output must not depend on scheduling

    const fs::path dir_a = fs::path("harness_repro_a");
    const fs::path dir_b = fs::path("harness_repro_b");
    write_experiment_artifacts(run_experiment(cfg), dir_a.string());
    cfg.workers = 1;
    write_experiment_artifacts(run_experiment(cfg), dir_b.string());
    for (const char* name : {"curves.csv", "curve_mean.csv", "summary.json"}) {
        const std::string a = read_text_file((dir_a / name).string());
        const std::string b = read_text_file((dir_b / name).string());
        CHECK_MESSAGE(a == b, name);
    }
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
}

TEST_CASE("aggregation: mean curve re-derivable from per-iteration curves") {
    ExperimentConfig cfg;
    cfg.n = 3;
    cfg.d = 2;
    cfg.T = 400;
    cfg.iterations = 3;
    cfg.batch_size = 10;
    cfg.mechanisms = {"m-elinucb-sb"};
    cfg.rounds_csv = "none";
    cfg.workers = 2;
    const auto result = run_experiment(cfg);
    const auto& curve = result.curves[0];
    for (std::size_t c = 0; c < curve.checkpoints.size(); ++c) {
        double sum = 0.0;
        for (const auto& row : curve.per_iteration) sum += row[c];
        CHECK(curve.mean[c] ==
              doctest::Approx(sum / static_cast<double>(cfg.iterations)).epsilon(1e-12));
    }
}

TEST_CASE("run_on_instance runs every configured mechanism once") {
    const Instance inst = make_instance(888, 3, 2, 200, 3);
    ExperimentConfig cfg;
    cfg.mechanisms = {"oracle", "m-elinucb-s"};
    cfg.batch_size = 10;
    const auto reports = run_on_instance(inst, cfg);
    REQUIRE(reports.size() == 2);
    CHECK(reports[0].mechanism == "oracle");
    CHECK(reports[0].final_regret == 0.0);
    CHECK(reports[1].mechanism == "m-elinucb-s");
}

TEST_CASE("bs sweep returns one aggregate per batch size") {
    BsSweepConfig cfg;
    cfg.bs_values = {1, 25};
    cfg.T = 1500;
    cfg.iterations = 2;
    cfg.n = 4;
    cfg.d = 2;
    cfg.workers = 2;
    const auto result = bs_sweep(cfg);
    REQUIRE(result.bs_values.size() == 2);
    for (double m : result.mean_final_regret) {
        CHECK(std::isfinite(m));
        CHECK(m >= 0.0);
    }
}

TEST_CASE("epic deviation grid is five bids in [0,1] including zero") {
    const auto devs = epic_deviations(0.6);
    REQUIRE(devs.size() == 5);
    CHECK(devs[0] == 0.0);
    for (double b : devs) {
        CHECK(b >= 0.0);
        CHECK(b <= 1.0);
    }
    CHECK(devs[1] < 0.6);   // underbid
    CHECK(devs[3] > 0.6);   // overbid
    const auto clamped = epic_deviations(0.95);
    for (double b : clamped) CHECK(b <= 1.0);
}

TEST_CASE("parallel_for: deterministic slots and exception propagation") {
    std::vector<int> out(64, 0);
    parallel_for(64, 8, [&](int k) { out[static_cast<std::size_t>(k)] = k * k; });
    for (int k = 0; k < 64; ++k) CHECK(out[static_cast<std::size_t>(k)] == k * k);
    CHECK_THROWS_AS(parallel_for(8, 4,
                                 [&](int k) {
                                     if (k == 5) throw std::runtime_error("boom");
                                 }),
                    std::runtime_error);
}

TEST_CASE("monotone suite report carries a reproduction bundle per violation") {
    MonotoneSuiteConfig cfg;
    cfg.instances = 2;
    cfg.T = 200;
    cfg.allocators = {"oracle"};
    cfg.workers = 1;
    const auto result = monotonicity_suite(cfg);
    CHECK(result.violations.empty());  // the oracle allocator is monotone
    const auto report = monotone_report_to_json(cfg, result);
    CHECK(report.at("violation_count").get<std::size_t>() == 0);
    CHECK(report.at("suite").get<std::string>() == "monotonicity");
}
