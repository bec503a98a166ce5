#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ssa/elinucb.hpp"
#include "ssa/mechanism.hpp"
#include "ssa/rng.hpp"
#include "ssa/simharness.hpp"
#include "ssa/stats.hpp"

using namespace ssa;

namespace {

std::vector<double> instance_bids(const Instance& inst) {
    std::vector<double> bids;
    for (const auto& a : inst.agents) bids.push_back(a.bid);
    return bids;
}

std::uint64_t find_all_eta_one_seed(const std::vector<double>& bids, double delta) {
    for (std::uint64_t seed = 0; seed < 10000; ++seed) {
        const auto rs = resample(bids, delta, seed);
        if (std::all_of(rs.draws.begin(), rs.draws.end(),
                        [](const ResampleDraw& d) { return d.eta_one; }))
            return seed;
    }
    throw std::logic_error("no all-eta-one seed found");
}

std::vector<int> allocation_trace(MechanismKind kind, const Instance& inst,
                                  const MechanismConfig& cfg, std::uint64_t seed,
                                  const std::vector<double>* bids = nullptr) {
    MechanismConfig keep = cfg;
    keep.keep_rounds = true;
    const RunReport rep = run_mechanism(kind, inst, keep, seed, bids);
    std::vector<int> agents;
    for (const auto& r : rep.rounds) agents.push_back(r.allocated);
    return agents;
}

}  // namespace

TEST_CASE("resample: branch bookkeeping matches the draw record") {
    std::vector<double> bids(1000, 0.5);
    const double delta = 0.3;
    const auto rs = resample(bids, delta, 42);
    bool saw_one = false, saw_lowered = false;
    for (std::size_t i = 0; i < bids.size(); ++i) {
        if (rs.draws[i].eta_one) {
            saw_one = true;
            CHECK(rs.eta[i] == 1.0);
            CHECK(rs.modified_bids[i] == bids[i]);
        } else {
            saw_lowered = true;
            CHECK(rs.eta[i] ==
                  doctest::Approx(std::pow(rs.draws[i].epsilon, 1.0 / (1.0 - delta)))
                      .epsilon(1e-12));
            CHECK(rs.eta[i] > 0.0);
            CHECK(rs.eta[i] < 1.0);
            CHECK(rs.modified_bids[i] == doctest::Approx(rs.eta[i] * bids[i]).epsilon(1e-12));
        }
        CHECK(rs.modified_bids[i] <= bids[i]);
    }
    CHECK(saw_one);
    CHECK(saw_lowered);
    // delta = 1/2, epsilon = 1/4 on the lowered branch: eta = 1/16.
    CHECK(std::pow(0.25, 1.0 / (1.0 - 0.5)) == doctest::Approx(0.0625).epsilon(1e-15));
}

TEST_CASE("resample: eta is independent of the bid values") {
    std::vector<double> bids{0.2, 0.5, 0.9, 0.1, 0.7};
    const auto a = resample(bids, 0.4, 7);
    std::vector<double> doubled;
    for (double b : bids) doubled.push_back(std::min(1.0, 2.0 * b));
    const auto b = resample(doubled, 0.4, 7);
    CHECK(a.eta == b.eta);
    for (std::size_t i = 0; i < bids.size(); ++i)
        CHECK(b.modified_bids[i] == doctest::Approx(a.eta[i] * doubled[i]).epsilon(1e-15));
    CHECK_THROWS_AS(resample(bids, 0.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(resample(bids, 1.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(resample({-0.1}, 0.5, 1), std::invalid_argument);
}

TEST_CASE("resample distribution: branch rate and conditional uniformity") {
    const double delta = 0.1;
    std::vector<double> bids(100000, 1.0);
    const auto rs = resample(bids, delta, 2024);
    std::int64_t ones = 0;
    std::vector<double> unwound;  // eta^(1-delta) should be U(0,1) when eta < 1
    for (std::size_t i = 0; i < bids.size(); ++i) {
        if (rs.draws[i].eta_one)
            ++ones;
        else
            unwound.push_back(std::pow(rs.eta[i], 1.0 - delta));
    }
    const auto [lo, hi] =
        stats::binomial_acceptance_interval(static_cast<std::int64_t>(bids.size()), 1.0 - delta,
                                            0.01);
    CHECK(lo == 89755);  // frozen exact interval for Binomial(1e5, 0.9) at 1%
    CHECK(hi == 90244);
    CHECK(ones >= lo);
    CHECK(ones <= hi);
    const double d = stats::ks_statistic_uniform(unwound);
    CHECK(stats::ks_pvalue(d, unwound.size()) > 0.01);
}

TEST_CASE("charge: multiplier branches and the click factor") {
    CHECK(charge(1, 1.0, 0.7, 0.2) == doctest::Approx(0.7));
    CHECK(charge(1, 0.5, 0.5, 0.2) == doctest::Approx(0.5 * (1.0 - 5.0)));  // -2.0 rebate
    CHECK(charge(0, 1.0, 0.7, 0.2) == 0.0);
    CHECK(charge(0, 0.5, 0.7, 0.2) == 0.0);
    // Charge-on-allocation alternative ignores the click.
    CHECK(charge(0, 1.0, 0.7, 0.2, true) == doctest::Approx(0.7));
}

TEST_CASE("all-eta-one truthful run: clicked charged rounds net exactly zero") {
    const Instance inst = make_instance(500, 4, 3, 600, 3);
    const auto seed = find_all_eta_one_seed(instance_bids(inst), 0.1);
    MechanismConfig cfg;
    cfg.delta = 0.1;
    cfg.batch_size = 10;
    const RunReport rep = run_mechanism(MechanismKind::MElinucbSB, inst, cfg, seed);
    for (int i = 0; i < inst.n; ++i) {
        CHECK(rep.total_utility[static_cast<std::size_t>(i)] == 0.0);
        CHECK(rep.min_round_utility[static_cast<std::size_t>(i)] == 0.0);
    }
    CHECK(rep.eta == std::vector<double>(static_cast<std::size_t>(inst.n), 1.0));
}

TEST_CASE("oracle mechanism has zero regret at every checkpoint") {
    const Instance inst = make_instance(501, 5, 4, 1000, 4);
    MechanismConfig cfg;
    cfg.checkpoints = make_checkpoints(inst.T);
    const RunReport rep = run_mechanism(MechanismKind::Oracle, inst, cfg, 1);
    for (double r : rep.regret_at) CHECK(r == 0.0);
    CHECK(rep.final_regret == 0.0);
}

TEST_CASE("run reports: payments only for allocated, regret increments nonnegative") {
    const Instance inst = make_instance(502, 3, 2, 400, 4);
    MechanismConfig cfg;
    cfg.keep_rounds = true;
    cfg.batch_size = 5;
    const RunReport rep = run_mechanism(MechanismKind::MElinucbSB, inst, cfg, 3);
    REQUIRE(rep.rounds.size() == static_cast<std::size_t>(inst.T));
    double cum = 0.0;
    std::int64_t rule_total = 0;
    for (const auto& [rule, count] : rep.rule_counts) rule_total += count;
    CHECK(rule_total == inst.T);
    for (const auto& r : rep.rounds) {
        CHECK(r.allocated >= 1);
        CHECK(r.allocated <= inst.n);
        CHECK(r.regret_increment >= -1e-12);
        cum += r.regret_increment;
        CHECK(r.cumulative_regret == doctest::Approx(cum).epsilon(1e-9));
        // Non-allocated agents pay zero by construction: the record carries
        // only the allocated agent's payment.
        if (r.click == 0) CHECK(r.payment == 0.0);  // pay-per-click default
    }
}

TEST_CASE("exploration-separated baseline edge behavior") {
    const Instance inst = make_instance(503, 3, 2, 300, 4);
    // lambda = T: every round is free round-robin exploration.
    {
        MechanismConfig cfg;
        cfg.explore_rounds = inst.T;
        cfg.keep_rounds = true;
        const RunReport rep = run_mechanism(MechanismKind::ExploreSeparated, inst, cfg, 1);
        CHECK(rep.rule_counts.at("explore") == inst.T);
        for (const auto& r : rep.rounds) {
            CHECK(r.payment == 0.0);
            CHECK(r.allocated == designated_agent(r.t, inst.n));
        }
    }
    // lambda = 0: pure exploitation on zero priors, ties to the lowest index.
    {
        MechanismConfig cfg;
        cfg.explore_rounds = -1;  // sentinel below zero is rejected
        CHECK_THROWS(run_mechanism(MechanismKind::ExploreSeparated, inst, cfg, 1));
    }
    {
        ExploreSeparatedAllocator alloc({0.5, 0.5, 0.5}, 2, 0, 10);
        Vec x(2);
        x << 1.0, 0.0;
        const auto dec = alloc.step(1, Context{x}, [](int) { return 1; });
        CHECK(dec.agent == 1);
        CHECK(dec.phase == Phase::Exploitation);
    }
    // lambda > T is infeasible.
    CHECK_THROWS_AS(ExploreSeparatedAllocator({0.5, 0.5}, 2, 11, 10), std::invalid_argument);
}

TEST_CASE("default exploration budget is n * ceil(T^(2/3)) exactly") {
    CHECK(default_explore_rounds(7, 1000000) == 70000);
    CHECK(default_explore_rounds(7, 100000) == 7 * 2155);
    CHECK(default_explore_rounds(2, 8) == 2 * 4);
    CHECK(default_explore_rounds(3, 27) == 3 * 9);
    CHECK(default_explore_rounds(3, 28) == 3 * 10);  // 9^3 = 729 < 784
}

TEST_CASE("common bid scaling leaves elimination-allocator traces unchanged") {
    const Instance inst = make_instance(504, 4, 4, 800, 4);
    const auto bids = instance_bids(inst);
    std::vector<double> scaled;
    for (double b : bids) scaled.push_back(0.5 * b);
    for (const char* kind : {"elinucb-s", "elinucb-sb", "oracle"}) {
        AllocatorParams params;
        params.batch_size = 25;
        auto a = make_allocator(kind, inst, bids, params);
        auto b = make_allocator(kind, inst, scaled, params);
        std::vector<int> trace_a, trace_b;
        for (std::int64_t t = 1; t <= inst.T; ++t) {
            const ClickFn click = [&](int agent) { return inst.tape.click(agent, t); };
            trace_a.push_back(a->step(t, inst.context_at(t), click).agent);
            trace_b.push_back(b->step(t, inst.context_at(t), click).agent);
        }
        CHECK_MESSAGE(trace_a == trace_b, kind);
    }
}

TEST_CASE("a deviation cannot help in expectation (small grid smoke)") {
    EpicSuiteConfig cfg;
    cfg.instances = 4;
    cfg.resample_seeds = 40;
    cfg.T = 250;
    cfg.batch_size = 10;
    cfg.workers = 2;
    const auto result = epic_epir_suite(cfg);
    CHECK(result.cells.size() == 4 * 2 * 5);  // instances x mechanisms x deviations
    CHECK(result.epic_failures() == 0);
    CHECK(result.epir_violations.empty());
    CHECK(result.truthful_runs == 4 * 2 * 40);
}

TEST_CASE("an instance with one agent is rejected") {
    Instance inst = make_instance(505, 2, 2, 50, 3);
    inst.n = 1;
    MechanismConfig cfg;
    CHECK_THROWS_AS(run_mechanism(MechanismKind::Oracle, inst, cfg, 1), std::invalid_argument);
}

TEST_CASE("mechanism names round-trip") {
    for (const char* name :
         {"m-elinucb-s", "m-elinucb-sb", "m-suplinucb-s", "explore-separated", "oracle"})
        CHECK(std::string(to_string(mechanism_from_name(name))) == name);
    CHECK_THROWS_AS(mechanism_from_name("m-regret"), std::invalid_argument);
}

TEST_CASE("deviation runs keep the true valuation for utility accounting") {
    const Instance inst = make_instance(506, 3, 2, 300, 4);
    MechanismConfig cfg;
    cfg.batch_size = 10;
    std::vector<double> deviated = instance_bids(inst);
    deviated[0] = 0.0;  // zero-bid deviation is legal at the allocator level
    const RunReport rep = run_mechanism(MechanismKind::MElinucbSB, inst, cfg, 11, &deviated);
    CHECK(rep.total_utility[0] >= 0.0);  // pays nothing, keeps click value
    CHECK(rep.min_round_utility[0] >= 0.0);
}
