#include "ssa/mechanism.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ssa/elinucb.hpp"
#include "ssa/rng.hpp"
#include "ssa/suplinucb.hpp"

namespace ssa {

ResampleOutcome resample(const std::vector<double>& bids, double delta, std::uint64_t seed) {
    if (!(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("resample: delta must be in (0, 1)");
    for (double b : bids)
        if (b < 0.0) throw std::invalid_argument("resample: bids must be nonnegative");
    Rng rng(seed);
    ResampleOutcome out;
    out.eta.reserve(bids.size());
    out.modified_bids.reserve(bids.size());
    out.draws.reserve(bids.size());
    for (double b : bids) {
        const double epsilon = rng.unit();
        const bool eta_one = rng.unit() < 1.0 - delta;
        const double eta = eta_one ? 1.0 : std::pow(epsilon, 1.0 / (1.0 - delta));
        out.eta.push_back(eta);
        out.modified_bids.push_back(eta * b);
        out.draws.push_back(ResampleDraw{eta_one, epsilon});
    }
    return out;
}

double charge(int click, double eta, double bid, double delta, bool charge_on_allocation) {
    const double base = (eta == 1.0) ? bid : bid * (1.0 - 1.0 / delta);
    return charge_on_allocation ? base : click * base;
}

const char* to_string(MechanismKind kind) {
    switch (kind) {
        case MechanismKind::MElinucbS: return "m-elinucb-s";
        case MechanismKind::MElinucbSB: return "m-elinucb-sb";
        case MechanismKind::MSuplinucbS: return "m-suplinucb-s";
        case MechanismKind::ExploreSeparated: return "explore-separated";
        case MechanismKind::Oracle: return "oracle";
    }
    return "unknown";
}

MechanismKind mechanism_from_name(const std::string& name) {
    if (name == "m-elinucb-s") return MechanismKind::MElinucbS;
    if (name == "m-elinucb-sb") return MechanismKind::MElinucbSB;
    if (name == "m-suplinucb-s") return MechanismKind::MSuplinucbS;
    if (name == "explore-separated") return MechanismKind::ExploreSeparated;
    if (name == "oracle") return MechanismKind::Oracle;
    throw std::invalid_argument("unknown mechanism: " + name);
}

std::int64_t default_explore_rounds(int n, std::int64_t T) {
    // ceil(T^(2/3)) exactly: smallest k with k^3 >= T^2.
    std::int64_t k = static_cast<std::int64_t>(
        std::llround(std::pow(static_cast<double>(T), 2.0 / 3.0)));
    k = std::max<std::int64_t>(k - 2, 1);
    const auto cube_ge = [&](std::int64_t v) {
        return static_cast<__int128>(v) * v * v >= static_cast<__int128>(T) * T;
    };
    while (!cube_ge(k)) ++k;
    while (k > 1 && cube_ge(k - 1)) --k;
    return static_cast<std::int64_t>(n) * k;
}

ExploreSeparatedAllocator::ExploreSeparatedAllocator(std::vector<double> bids, int d,
                                                     std::int64_t explore_rounds,
                                                     std::int64_t horizon)
    : bids_(std::move(bids)),
      n_(static_cast<int>(bids_.size())),
      explore_rounds_(explore_rounds) {
    if (explore_rounds_ > horizon)
        throw std::invalid_argument(
            "ExploreSeparatedAllocator: exploration rounds exceed the horizon");
    if (explore_rounds_ < 0)
        throw std::invalid_argument("ExploreSeparatedAllocator: negative exploration rounds");
    learners_.assign(static_cast<std::size_t>(n_), LearnerState(d));
}

AllocationDecision ExploreSeparatedAllocator::step(std::int64_t t, const Context& x,
                                                   const ClickFn& click) {
    AllocationDecision dec;
    dec.designated = designated_agent(t, n_);
    if (t <= explore_rounds_) {
        dec.agent = dec.designated;
        dec.click = click(dec.agent);
        dec.phase = Phase::Exploration;
        dec.rule = SelectRule::Explore;
        dec.learned = true;
        learners_[static_cast<std::size_t>(dec.agent - 1)].update(x.features, dec.click);
        last_price_ = 0.0;
        return dec;
    }
    std::vector<double> values(static_cast<std::size_t>(n_));
    for (int i = 1; i <= n_; ++i)
        values[static_cast<std::size_t>(i - 1)] =
            bids_[static_cast<std::size_t>(i - 1)] *
            learners_[static_cast<std::size_t>(i - 1)].estimate().dot(x.features);
    int best = 1;
    for (int i = 2; i <= n_; ++i)
        if (values[static_cast<std::size_t>(i - 1)] > values[static_cast<std::size_t>(best - 1)])
            best = i;
    double second_value = 0.0;
    for (int i = 1; i <= n_; ++i)
        if (i != best)
            second_value = std::max(second_value, values[static_cast<std::size_t>(i - 1)]);
    dec.agent = best;
    dec.click = click(best);
    dec.phase = Phase::Exploitation;
    dec.rule = SelectRule::Exploit;
    last_price_ = std::max(0.0, second_value);
    return dec;
}

std::unique_ptr<Allocator> make_allocator(const std::string& kind, const Instance& inst,
                                          const std::vector<double>& bids,
                                          const AllocatorParams& params) {
    const std::int64_t horizon = params.horizon > 0 ? params.horizon : inst.T;
    if (kind == "elinucb-s")
        return std::make_unique<ElinucbAllocator>(bids, inst.d,
                                                  ElinucbConfig{params.alpha_elinucb, 1, false});
    if (kind == "elinucb-sb")
        return std::make_unique<ElinucbAllocator>(
            bids, inst.d, ElinucbConfig{params.alpha_elinucb, params.batch_size, false});
    if (kind == "broken-probe")
        return std::make_unique<ElinucbAllocator>(bids, inst.d,
                                                  ElinucbConfig{params.alpha_elinucb, 1, true});
    if (kind == "suplinucb-s") {
        const double alpha = params.alpha_suplinucb > 0.0
                                 ? params.alpha_suplinucb
                                 : calibrated_alpha(inst.n, horizon, params.kappa);
        return std::make_unique<SuplinucbAllocator>(bids, inst.d,
                                                    SuplinucbConfig{alpha, horizon});
    }
    if (kind == "oracle") {
        std::vector<Vec> thetas;
        thetas.reserve(inst.agents.size());
        for (const auto& a : inst.agents) thetas.push_back(a.theta);
        return std::make_unique<OracleAllocator>(bids, std::move(thetas));
    }
    throw std::invalid_argument("unknown allocator: " + kind);
}

namespace {

// Per-(agent, corpus-index) bid-weighted expected values plus the per-index
// best, so regret increments are table lookups.
struct ValueTable {
    std::vector<std::vector<double>> value;  // [agent][ctx]
    std::vector<double> best;                // [ctx]

    ValueTable(const Instance& inst, const std::vector<double>& bids) {
        const std::size_t n = inst.agents.size();
        const std::size_t m = inst.corpus.size();
        value.assign(n, std::vector<double>(m, 0.0));
        best.assign(m, -std::numeric_limits<double>::infinity());
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < m; ++c) {
                value[i][c] = bids[i] * inst.agents[i].theta.dot(inst.corpus.contexts[c].features);
                best[c] = std::max(best[c], value[i][c]);
            }
    }

    double increment(std::int32_t ctx, int allocated) const {
        return best[static_cast<std::size_t>(ctx)] -
               value[static_cast<std::size_t>(allocated - 1)][static_cast<std::size_t>(ctx)];
    }
};

void validate_instance(const Instance& inst) {
    if (inst.n < 2) throw std::invalid_argument("instance: n must be >= 2");
    if (static_cast<std::int64_t>(inst.context_sequence.size()) != inst.T)
        throw std::invalid_argument("instance: context sequence length != T");
    if (inst.tape.agents() != inst.n || inst.tape.rounds() != inst.T)
        throw std::invalid_argument("instance: click tape dimensions mismatch");
}

}  // namespace

RunReport run_mechanism(MechanismKind kind, const Instance& inst, const MechanismConfig& cfg,
                        std::uint64_t resample_seed, const std::vector<double>* bid_override) {
    validate_instance(inst);
    const int n = inst.n;

    std::vector<double> bids(static_cast<std::size_t>(n));
    std::vector<double> valuations(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        bids[static_cast<std::size_t>(i)] =
            bid_override ? (*bid_override)[static_cast<std::size_t>(i)]
                         : inst.agents[static_cast<std::size_t>(i)].bid;
        valuations[static_cast<std::size_t>(i)] =
            inst.agents[static_cast<std::size_t>(i)].valuation;
    }

    RunReport rep;
    rep.mechanism = to_string(kind);
    rep.n = n;
    rep.d = inst.d;
    rep.T = inst.T;

    const bool resampled = kind == MechanismKind::MElinucbS || kind == MechanismKind::MElinucbSB ||
                           kind == MechanismKind::MSuplinucbS;
    std::vector<double> alloc_bids = bids;
    if (resampled) {
        ResampleOutcome rs = resample(bids, cfg.delta, resample_seed);
        rep.eta = rs.eta;
        alloc_bids = rs.modified_bids;
    }
    rep.modified_bids = alloc_bids;

    std::unique_ptr<Allocator> alloc;
    ExploreSeparatedAllocator* baseline = nullptr;
    SuplinucbAllocator* staged = nullptr;
    AllocatorParams params;
    params.alpha_elinucb = cfg.alpha_elinucb;
    params.alpha_suplinucb = cfg.alpha_suplinucb;
    params.kappa = cfg.kappa;
    params.batch_size = cfg.batch_size;
    params.horizon = inst.T;
    switch (kind) {
        case MechanismKind::MElinucbS: alloc = make_allocator("elinucb-s", inst, alloc_bids, params); break;
        case MechanismKind::MElinucbSB: alloc = make_allocator("elinucb-sb", inst, alloc_bids, params); break;
        case MechanismKind::MSuplinucbS: {
            alloc = make_allocator("suplinucb-s", inst, alloc_bids, params);
            staged = static_cast<SuplinucbAllocator*>(alloc.get());
            break;
        }
        case MechanismKind::ExploreSeparated: {
            const std::int64_t lambda =
                cfg.explore_rounds > 0 ? cfg.explore_rounds : default_explore_rounds(n, inst.T);
            auto b = std::make_unique<ExploreSeparatedAllocator>(alloc_bids, inst.d, lambda, inst.T);
            baseline = b.get();
            alloc = std::move(b);
            break;
        }
        case MechanismKind::Oracle: alloc = make_allocator("oracle", inst, alloc_bids, params); break;
    }

    const ValueTable table(inst, bids);
    rep.checkpoints = cfg.checkpoints.empty() ? std::vector<std::int64_t>{inst.T} : cfg.checkpoints;
    rep.regret_at.assign(rep.checkpoints.size(), 0.0);
    rep.total_utility.assign(static_cast<std::size_t>(n), 0.0);
    rep.min_round_utility.assign(static_cast<std::size_t>(n), 0.0);
    rep.total_payment.assign(static_cast<std::size_t>(n), 0.0);
    rep.clicks.assign(static_cast<std::size_t>(n), 0);
    if (cfg.keep_rounds) rep.rounds.reserve(static_cast<std::size_t>(inst.T));

    double cum_regret = 0.0;
    std::size_t next_cp = 0;
    for (std::int64_t t = 1; t <= inst.T; ++t) {
        const std::int32_t ctx = inst.context_sequence[static_cast<std::size_t>(t - 1)];
        const Context& x = inst.corpus.contexts[static_cast<std::size_t>(ctx)];
        const ClickFn click_fn = [&](int agent) { return inst.tape.click(agent, t); };
        const AllocationDecision dec = alloc->step(t, x, click_fn);
        const std::size_t a = static_cast<std::size_t>(dec.agent - 1);

        double payment = 0.0;
        switch (kind) {
            case MechanismKind::MElinucbS:
            case MechanismKind::MElinucbSB:
            case MechanismKind::MSuplinucbS:
                payment = charge(dec.click, rep.eta[a], bids[a], cfg.delta,
                                 cfg.charge_on_allocation);
                break;
            case MechanismKind::ExploreSeparated:
                payment = cfg.charge_on_allocation ? baseline->last_price()
                                                   : dec.click * baseline->last_price();
                break;
            case MechanismKind::Oracle: payment = 0.0; break;
        }

        const double utility = cfg.charge_on_allocation
                                   ? dec.click * valuations[a] - payment
                                   : dec.click * (valuations[a] - (dec.click ? payment : 0.0));
        rep.total_utility[a] += utility;
        rep.min_round_utility[a] = std::min(rep.min_round_utility[a], utility);
        rep.total_payment[a] += payment;
        rep.clicks[a] += dec.click;
        rep.center_utility += payment;
        rep.social_welfare += dec.click * valuations[a];
        ++rep.rule_counts[to_string(dec.rule)];

        const double inc = table.increment(ctx, dec.agent);
        cum_regret += inc;
        if (cfg.keep_rounds)
            rep.rounds.push_back(RoundRecord{t, ctx, dec.designated, dec.agent,
                                             static_cast<std::int8_t>(dec.click), payment, inc,
                                             cum_regret});
        while (next_cp < rep.checkpoints.size() && rep.checkpoints[next_cp] == t) {
            rep.regret_at[next_cp] = cum_regret;
            ++next_cp;
        }
    }
    alloc->finish();
    while (next_cp < rep.checkpoints.size()) rep.regret_at[next_cp++] = cum_regret;
    rep.final_regret = cum_regret;

    if (staged) {
        rep.has_stage_diagnostics = true;
        std::string detail;
        rep.index_growth_bound_ok = index_set_growth_bound_holds(*staged, &detail);
        if (!rep.index_growth_bound_ok) rep.stage_check_detail = detail;
        rep.forced_exploit_bound_ok = forced_exploit_bound_holds(*staged, &detail);
        if (!rep.forced_exploit_bound_ok) rep.stage_check_detail += detail;
        rep.index_set_sizes.assign(static_cast<std::size_t>(n), {});
        for (int i = 1; i <= n; ++i) {
            auto& row = rep.index_set_sizes[static_cast<std::size_t>(i - 1)];
            for (int s = 1; s <= staged->stages(); ++s)
                row.push_back(static_cast<std::int64_t>(staged->index_set(i, s).size()));
        }
    }
    return rep;
}

AllocationRun run_allocation(Allocator& alloc, const Instance& inst,
                             const std::vector<double>& regret_bids, int track_agent,
                             const std::vector<std::int64_t>* checkpoints) {
    validate_instance(inst);
    const ValueTable table(inst, regret_bids);
    AllocationRun run;
    run.checkpoints = checkpoints ? *checkpoints : std::vector<std::int64_t>{inst.T};
    run.regret_at.assign(run.checkpoints.size(), 0.0);
    run.clicks.assign(static_cast<std::size_t>(inst.n), 0);
    if (track_agent > 0) run.tracked_cum_clicks.reserve(static_cast<std::size_t>(inst.T));

    double cum_regret = 0.0;
    std::int32_t tracked = 0;
    std::size_t next_cp = 0;
    for (std::int64_t t = 1; t <= inst.T; ++t) {
        const std::int32_t ctx = inst.context_sequence[static_cast<std::size_t>(t - 1)];
        const Context& x = inst.corpus.contexts[static_cast<std::size_t>(ctx)];
        const ClickFn click_fn = [&](int agent) { return inst.tape.click(agent, t); };
        const AllocationDecision dec = alloc.step(t, x, click_fn);
        run.clicks[static_cast<std::size_t>(dec.agent - 1)] += dec.click;
        if (track_agent > 0) {
            if (dec.agent == track_agent) tracked += dec.click;
            run.tracked_cum_clicks.push_back(tracked);
        }
        cum_regret += table.increment(ctx, dec.agent);
        while (next_cp < run.checkpoints.size() && run.checkpoints[next_cp] == t) {
            run.regret_at[next_cp] = cum_regret;
            ++next_cp;
        }
    }
    alloc.finish();
    while (next_cp < run.checkpoints.size()) run.regret_at[next_cp++] = cum_regret;
    run.final_regret = cum_regret;
    return run;
}

}  // namespace ssa
