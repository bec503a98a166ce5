#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <nlohmann/json.hpp>

#include "ssa/elinucb.hpp"
#include "ssa/mechanism.hpp"
#include "ssa/rng.hpp"
#include "ssa/simharness.hpp"

using namespace ssa;

namespace {

Context ctx2(double a, double b) {
    Vec x(2);
    x << a, b;
    return Context{x};
}

const ClickFn always_click = [](int) { return 1; };

struct Trace {
    std::vector<int> agents;
    std::vector<Phase> phases;

    bool operator==(const Trace& other) const {
        return agents == other.agents && phases == other.phases;
    }
};

Trace run_trace(Allocator& alloc, const Instance& inst) {
    Trace tr;
    for (std::int64_t t = 1; t <= inst.T; ++t) {
        const auto dec = alloc.step(t, inst.context_at(t),
                                    [&](int agent) { return inst.tape.click(agent, t); });
        tr.agents.push_back(dec.agent);
        tr.phases.push_back(dec.phase);
    }
    alloc.finish();
    return tr;
}

}  // namespace

TEST_CASE("refine_bounds follows the intersect-or-collapse rule") {
    CHECK(ElinucbAllocator::refine_bounds(0.2, 0.8, 0.3, 0.6) == std::pair{0.3, 0.6});
    const auto collapsed = ElinucbAllocator::refine_bounds(0.2, 0.4, 0.5, 0.9);
    CHECK(collapsed.first == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(collapsed.second == doctest::Approx(0.3).epsilon(1e-12));
    // Equal endpoints count as an empty intersection: collapse.
    const auto touching = ElinucbAllocator::refine_bounds(0.2, 0.5, 0.5, 0.9);
    CHECK(touching.first == doctest::Approx(0.35).epsilon(1e-12));
    CHECK(touching.second == touching.first);
    // A collapsed interval never moves again.
    CHECK(ElinucbAllocator::refine_bounds(0.3, 0.3, 0.0, 1.0) == std::pair{0.3, 0.3});
}

TEST_CASE("eliminate_rule drops strictly dominated agents only") {
    const std::vector<double> lo{0.6, 0.1};
    const std::vector<double> hi{0.9, 0.5};
    const auto active = ElinucbAllocator::eliminate_rule(lo, hi, {1, 1});
    CHECK(active == std::vector<char>{1, 0});

    // Overlapping intervals: nobody leaves.
    CHECK(ElinucbAllocator::eliminate_rule({0.2, 0.3}, {0.6, 0.5}, {1, 1}) ==
          std::vector<char>{1, 1});

    // The max-lower-bound agent always survives.
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> rlo(4), rhi(4);
        for (int i = 0; i < 4; ++i) {
            rlo[static_cast<std::size_t>(i)] = rng.unit();
            rhi[static_cast<std::size_t>(i)] = rlo[static_cast<std::size_t>(i)] + rng.unit();
        }
        const std::size_t best =
            static_cast<std::size_t>(std::max_element(rlo.begin(), rlo.end()) - rlo.begin());
        CHECK(ElinucbAllocator::eliminate_rule(rlo, rhi, {1, 1, 1, 1})[best] == 1);
    }
}

TEST_CASE("exploit argmax picks the best bid-scaled estimate, ties to lowest index") {
    CHECK(argmax_lowest_index({0.4 * 0.5, 0.8 * 0.3}) == 2);  // 0.24 > 0.20
    CHECK(argmax_lowest_index({0.3, 0.3, 0.1}) == 1);
    const std::vector<char> alive{0, 1, 1};
    CHECK(argmax_lowest_index({9.0, 0.1, 0.1}, &alive) == 2);
    const std::vector<char> none{0};
    CHECK_THROWS(argmax_lowest_index({1.0}, &none));
}

TEST_CASE("deterministic explore/eliminate/exploit flow") {
    // bids (1, 0.001), constant context e1, every click 1: agent 2's tiny
    // upper bound falls below agent 1's lower bound after agent 1's second
    // exploration, and later rounds designated to agent 2 become pure
    // exploitation of agent 1.
    ElinucbAllocator alloc({1.0, 0.001}, 2, ElinucbConfig{1.0, 1, false});
    const Context x = ctx2(1.0, 0.0);

    auto d1 = alloc.step(1, x, always_click);
    CHECK(d1.agent == 1);
    CHECK(d1.phase == Phase::Exploration);
    CHECK(d1.learned);
    CHECK(alloc.is_active(2));

    auto d2 = alloc.step(2, x, always_click);
    CHECK(d2.agent == 2);
    CHECK(d2.phase == Phase::Exploration);

    auto d3 = alloc.step(3, x, always_click);
    CHECK(d3.agent == 1);
    // After t=3: theta_1 = 2/3, width sqrt(1/3); lcb = 2/3 - 0.5774 > 0.001.
    CHECK_FALSE(alloc.is_active(2));
    CHECK(alloc.lower_bounds()[0] ==
          doctest::Approx(2.0 / 3.0 - std::sqrt(1.0 / 3.0)).epsilon(1e-9));

    const auto learners_before = alloc.learners();
    const auto lo_before = alloc.lower_bounds();
    const auto hi_before = alloc.upper_bounds();
    auto d4 = alloc.step(4, x, always_click);  // designated agent 2 is inactive
    CHECK(d4.agent == 1);
    CHECK(d4.phase == Phase::Exploitation);
    CHECK_FALSE(d4.learned);
    CHECK(alloc.learners() == learners_before);  // exploitation purity
    CHECK(alloc.lower_bounds() == lo_before);
    CHECK(alloc.upper_bounds() == hi_before);
}

TEST_CASE("batched bound update uses the batch context mean") {
    // bs=2: one explore batch of agent 1 with contexts e1 (click) and e2 (no
    // click). Hand computation: A = diag(2,2), c = e1, theta = (1/2, 0);
    // xbar = (1/2, 1/2): estimate 1/4, quadform 1/4, width 1/2 at alpha 1,
    // so the value interval becomes [0, 3/4].
    ElinucbAllocator alloc({1.0, 1.0}, 2, ElinucbConfig{1.0, 2, false});
    auto d1 = alloc.step(1, ctx2(1.0, 0.0), always_click);
    CHECK(d1.agent == 1);
    CHECK(alloc.upper_bounds()[0] == 1.0);  // bound update only at batch end
    auto d2 = alloc.step(2, ctx2(0.0, 1.0), [](int) { return 0; });
    CHECK(d2.agent == 1);
    CHECK(alloc.lower_bounds()[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(alloc.upper_bounds()[0] == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(alloc.upper_bounds()[1] == 1.0);  // other agent untouched
}

TEST_CASE("inactive designated batch leaves every learner and bound unchanged") {
    // Eliminate agent 2 quickly, then drive a full batch designated to it.
    ElinucbAllocator alloc({1.0, 0.001}, 2, ElinucbConfig{1.0, 3, false});
    const Context x = ctx2(1.0, 0.0);
    std::int64_t t = 1;
    for (; t <= 6; ++t) alloc.step(t, x, always_click);  // batches for agents 1 and 2
    for (; alloc.is_active(2); ++t) alloc.step(t, x, always_click);
    // Align to the next batch designated to the (now inactive) agent 2.
    while ((((t - 1) / 3) % 2) != 1 || (t - 1) % 3 != 0) alloc.step(t++, x, always_click);
    const auto learners_before = alloc.learners();
    const auto lo_before = alloc.lower_bounds();
    const auto hi_before = alloc.upper_bounds();
    for (int k = 0; k < 3; ++k) {
        const auto dec = alloc.step(t++, x, always_click);
        CHECK(dec.phase == Phase::Exploitation);
        CHECK(dec.designated == 2);
        CHECK(dec.agent == 1);
    }
    CHECK(alloc.learners() == learners_before);
    CHECK(alloc.lower_bounds() == lo_before);
    CHECK(alloc.upper_bounds() == hi_before);
}

TEST_CASE("bs=1 batched variant equals the per-round variant") {
    const Instance inst = make_instance(901, 4, 3, 400, 3);
    std::vector<double> bids;
    for (const auto& a : inst.agents) bids.push_back(a.bid);
    ElinucbAllocator per_round(bids, inst.d, ElinucbConfig{1.0, 1, false});
    auto factory = make_allocator("elinucb-s", inst, bids, AllocatorParams{});
    CHECK(run_trace(per_round, inst) == run_trace(*factory, inst));
}

TEST_CASE("claims: coupled replays under a raised bid") {
    for (std::uint64_t seed : {11u, 12u, 13u, 14u}) {
        const Instance inst = make_instance(seed, 4, 2, 800, 4);
        std::vector<double> base;
        for (const auto& a : inst.agents) base.push_back(a.bid);
        const int raised = 1 + static_cast<int>(seed % 4);
        std::vector<double> low_bids = base, high_bids = base;
        low_bids[static_cast<std::size_t>(raised - 1)] = 0.3;
        high_bids[static_cast<std::size_t>(raised - 1)] = 0.7;

        ElinucbAllocator low(low_bids, inst.d, ElinucbConfig{1.0, 1, false});
        ElinucbAllocator high(high_bids, inst.d, ElinucbConfig{1.0, 1, false});

        std::vector<double> prev_lo_low(4, -1.0), prev_hi_low(4, 2.0);
        for (std::int64_t t = 1; t <= inst.T; ++t) {
            const ClickFn click = [&](int agent) { return inst.tape.click(agent, t); };
            low.step(t, inst.context_at(t), click);
            high.step(t, inst.context_at(t), click);

            for (int i = 1; i <= 4; ++i) {
                const std::size_t k = static_cast<std::size_t>(i - 1);
                // Claim: lower bounds never decrease, upper bounds never
                // increase (checked on the low-bid run).
                if (t > 1) {
                    CHECK(low.lower_bounds()[k] >= prev_lo_low[k] - 1e-12);
                    CHECK(low.upper_bounds()[k] <= prev_hi_low[k] + 1e-12);
                }
                prev_lo_low[k] = low.lower_bounds()[k];
                prev_hi_low[k] = low.upper_bounds()[k];

                // Claim: survival is monotone in the agent's own bid.
                if (i == raised && low.is_active(i)) CHECK(high.is_active(i));
            }
            if (low.is_active(raised) && high.is_active(raised)) {
                // Claim: active sets only shrink when the bid rises.
                for (int i = 1; i <= 4; ++i)
                    if (high.is_active(i)) CHECK(low.is_active(i));
                // Claim: bid-normalized bounds match across the coupled runs.
                for (int i = 1; i <= 4; ++i) {
                    const std::size_t k = static_cast<std::size_t>(i - 1);
                    if (!(low.is_active(i) && high.is_active(i))) continue;
                    const double bl = low_bids[k], bh = high_bids[k];
                    CHECK(low.lower_bounds()[k] / bl ==
                          doctest::Approx(high.lower_bounds()[k] / bh).epsilon(1e-9));
                    CHECK(low.upper_bounds()[k] / bl ==
                          doctest::Approx(high.upper_bounds()[k] / bh).epsilon(1e-9));
                }
            }
        }
    }
}

TEST_CASE("monotone prefix clicks on a small random grid") {
    MonotoneSuiteConfig cfg;
    cfg.instances = 8;
    cfg.T = 500;
    cfg.allocators = {"elinucb-s", "elinucb-sb"};
    cfg.workers = 2;
    const auto result = monotonicity_suite(cfg);
    CHECK(result.comparisons > 0);
    CHECK(result.violations.empty());
}

TEST_CASE("broken probe learns during exploitation") {
    ElinucbAllocator probe({1.0, 0.001}, 2, ElinucbConfig{1.0, 1, true});
    const Context x = ctx2(1.0, 0.0);
    std::int64_t t = 1;
    for (; probe.is_active(2); ++t) probe.step(t, x, always_click);
    const auto obs_before = probe.learners()[0].observations();
    const auto dec = probe.step(t, x, always_click);
    CHECK(dec.phase == Phase::Exploitation);
    CHECK(dec.learned);
    CHECK(probe.learners()[0].observations() == obs_before + 1);
    CHECK(probe.name() == "broken-probe");
}

TEST_CASE("snapshot and restore resume bit-identically") {
    const Instance inst = make_instance(902, 3, 2, 180, 4);
    std::vector<double> bids;
    for (const auto& a : inst.agents) bids.push_back(a.bid);

    ElinucbAllocator full(bids, inst.d, ElinucbConfig{1.0, 7, false});
    nlohmann::json snap;
    Trace tail_full;
    for (std::int64_t t = 1; t <= inst.T; ++t) {
        const ClickFn click = [&](int agent) { return inst.tape.click(agent, t); };
        const auto dec = full.step(t, inst.context_at(t), click);
        if (t == 100) snap = full.snapshot();
        if (t > 100) {
            tail_full.agents.push_back(dec.agent);
            tail_full.phases.push_back(dec.phase);
        }
    }

    ElinucbAllocator resumed(bids, inst.d, ElinucbConfig{1.0, 7, false});
    resumed.restore(snap);
    Trace tail_resumed;
    for (std::int64_t t = 101; t <= inst.T; ++t) {
        const ClickFn click = [&](int agent) { return inst.tape.click(agent, t); };
        const auto dec = resumed.step(t, inst.context_at(t), click);
        tail_resumed.agents.push_back(dec.agent);
        tail_resumed.phases.push_back(dec.phase);
    }
    CHECK(tail_full == tail_resumed);
    CHECK(full.snapshot().dump() == resumed.snapshot().dump());
}
