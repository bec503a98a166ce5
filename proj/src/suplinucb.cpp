#include "ssa/suplinucb.hpp"

#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <sstream>
#include <stdexcept>

namespace ssa {

using nlohmann::json;

double calibrated_alpha(int n, std::int64_t T, double kappa) {
    if (n < 1 || T < 1 || kappa <= 0.0 || kappa >= 1.0)
        throw std::invalid_argument("calibrated_alpha: bad parameters");
    return std::sqrt(0.5 * std::log(2.0 * static_cast<double>(n) * static_cast<double>(T) / kappa));
}

int SuplinucbAllocator::stage_count(std::int64_t T) {
    if (T < 2) throw std::invalid_argument("stage_count: T must be >= 2");
    return std::max(1, static_cast<int>(std::ceil(std::log(static_cast<double>(T)))));
}

SuplinucbAllocator::SuplinucbAllocator(std::vector<double> bids, int d, SuplinucbConfig cfg)
    : bids_(std::move(bids)), n_(static_cast<int>(bids_.size())), d_(d), cfg_(cfg) {
    if (n_ < 1) throw std::invalid_argument("SuplinucbAllocator: need at least one agent");
    if (n_ > 32) throw std::invalid_argument("SuplinucbAllocator: at most 32 agents");
    if (cfg_.alpha < 0.0) throw std::invalid_argument("SuplinucbAllocator: alpha >= 0");
    stage_total_ = stage_count(cfg_.horizon);
    exploit_width_threshold_ = 1.0 / std::sqrt(static_cast<double>(cfg_.horizon));
    const std::size_t cells = static_cast<std::size_t>(n_) * static_cast<std::size_t>(stage_total_);
    learners_.assign(cells, LearnerState(d_));
    psi_.assign(cells, {});
    psi_widths_.assign(cells, {});
    forced_exploit_by_stage_.assign(static_cast<std::size_t>(stage_total_), 0);
    screen_events_by_stage_.assign(static_cast<std::size_t>(stage_total_), 0);
}

int SuplinucbAllocator::argmax_value(const std::vector<char>& alive,
                                     const std::vector<double>& value) const {
    return argmax_lowest_index(value, &alive);
}

std::vector<char> screen_survivors(const std::vector<double>& scaled_ucb,
                                   const std::vector<char>& alive, int stage) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < scaled_ucb.size(); ++i)
        if (alive[i]) best = std::max(best, scaled_ucb[i]);
    const double cutoff = best - std::ldexp(1.0, 1 - stage);  // 2^(1-s)
    std::vector<char> out(alive);
    for (std::size_t i = 0; i < scaled_ucb.size(); ++i)
        if (out[i] && !(scaled_ucb[i] >= cutoff)) out[i] = 0;
    return out;
}

void SuplinucbAllocator::emit_probe(std::int64_t t, int stage, const std::vector<char>& alive,
                                    const std::vector<double>& est,
                                    const std::vector<double>& width) const {
    if (!stage_probe_) return;
    StageScores s;
    s.stage = stage;
    for (int i = 1; i <= n_; ++i) {
        if (!alive[static_cast<std::size_t>(i - 1)]) continue;
        s.agents.push_back(i);
        s.estimate.push_back(est[static_cast<std::size_t>(i - 1)]);
        s.width.push_back(width[static_cast<std::size_t>(i - 1)]);
        s.ucb.push_back(est[static_cast<std::size_t>(i - 1)] + width[static_cast<std::size_t>(i - 1)]);
    }
    stage_probe_(t, s);
}

AllocationDecision SuplinucbAllocator::step(std::int64_t t, const Context& x,
                                            const ClickFn& click) {
    if (t != last_t_ + 1)
        throw std::invalid_argument("SuplinucbAllocator: rounds must be consecutive from 1");
    last_t_ = t;

    const int j = designated_agent(t, n_);
    std::vector<char> alive(static_cast<std::size_t>(n_), 1);  // A-hat_1 = N, reset every round
    std::vector<double> est(static_cast<std::size_t>(n_), 0.0);
    std::vector<double> width(static_cast<std::size_t>(n_), 0.0);
    std::vector<double> scaled_ucb(static_cast<std::size_t>(n_), 0.0);

    AllocationDecision dec;
    dec.designated = j;

    auto survivors_mask = [&]() {
        std::uint32_t mask = 0;
        for (int i = 1; i <= n_; ++i)
            if (alive[static_cast<std::size_t>(i - 1)]) mask |= (1u << (i - 1));
        return mask;
    };

    for (int s = 1; s <= stage_total_; ++s) {
        const double stage_threshold = std::ldexp(1.0, -s);  // 2^-s
        bool all_below_exploit = true;
        bool all_below_stage = true;
        for (int i = 1; i <= n_; ++i) {
            const std::size_t k = static_cast<std::size_t>(i - 1);
            if (!alive[k]) continue;
            const ConfidenceScore sc = learners_[cell(i, s)].score(x.features, cfg_.alpha);
            est[k] = sc.estimate;
            width[k] = sc.width;
            scaled_ucb[k] = bids_[k] * sc.ucb;
            if (sc.width > exploit_width_threshold_) all_below_exploit = false;
            if (sc.width > stage_threshold) all_below_stage = false;
        }

        const std::size_t jk = static_cast<std::size_t>(j - 1);
        if (alive[jk] && width[jk] > stage_threshold) {
            dec.agent = j;
            dec.click = click(j);
            dec.phase = Phase::Exploration;
            dec.rule = SelectRule::DesignatedExplore;
            dec.learned = true;
            dec.survivors_mask = survivors_mask();
            psi_[cell(j, s)].push_back(t);
            psi_widths_[cell(j, s)].push_back(width[jk]);
            learners_[cell(j, s)].update(x.features, dec.click);
            ++designated_explore_count_;
            emit_probe(t, s, alive, est, width);
            return dec;
        }
        if (all_below_exploit) {
            dec.agent = argmax_value(alive, scaled_ucb);
            dec.click = click(dec.agent);
            dec.phase = Phase::Exploitation;
            dec.rule = SelectRule::GlobalExploit;
            dec.survivors_mask = survivors_mask();
            ++global_exploit_count_;
            emit_probe(t, s, alive, est, width);
            return dec;
        }
        if (all_below_stage) {
            alive = screen_survivors(scaled_ucb, alive, s);
            ++screen_events_by_stage_[static_cast<std::size_t>(s - 1)];
            continue;
        }
        dec.agent = argmax_value(alive, scaled_ucb);
        dec.click = click(dec.agent);
        dec.phase = Phase::Exploitation;
        dec.rule = SelectRule::ForcedExploit;
        dec.survivors_mask = survivors_mask();
        ++forced_exploit_count_;
        ++forced_exploit_by_stage_[static_cast<std::size_t>(s - 1)];
        emit_probe(t, s, alive, est, width);
        return dec;
    }
    // Unreachable: at stage S every width <= 2^-S <= 1/sqrt(T), so the
    // global-exploit branch fires first.
    throw std::logic_error("SuplinucbAllocator: stage loop exceeded S without selecting");
}

bool index_set_growth_bound_holds(const SuplinucbAllocator& alloc, std::string* detail) {
    const double alpha = alloc.alpha();
    for (int i = 1; i <= alloc.agents(); ++i) {
        for (int s = 1; s <= alloc.stages(); ++s) {
            const double size = static_cast<double>(alloc.index_set(i, s).size());
            if (size == 0.0) continue;
            const double bound = 5.0 * std::ldexp(1.0, s) * (1.0 + alpha * alpha) *
                                 std::sqrt(static_cast<double>(alloc.learner(i, s).dim()) * size);
            if (size > bound) {
                if (detail) {
                    std::ostringstream os;
                    os << "agent " << i << " stage " << s << ": |psi|=" << size
                       << " exceeds bound " << bound;
                    *detail = os.str();
                }
                return false;
            }
        }
    }
    return true;
}

bool forced_exploit_bound_holds(const SuplinucbAllocator& alloc, std::string* detail) {
    for (int s = 1; s <= alloc.stages(); ++s) {
        std::int64_t stage_psi = 0;
        for (int i = 1; i <= alloc.agents(); ++i)
            stage_psi += static_cast<std::int64_t>(alloc.index_set(i, s).size());
        const std::int64_t forced = alloc.forced_exploit_by_stage()[static_cast<std::size_t>(s - 1)];
        const std::int64_t bound =
            static_cast<std::int64_t>(alloc.agents() - 1) * stage_psi + alloc.agents();
        if (forced > bound) {
            if (detail) {
                std::ostringstream os;
                os << "stage " << s << ": forced-exploit count " << forced << " exceeds bound "
                   << bound << " (|Psi^s|=" << stage_psi << ")";
                *detail = os.str();
            }
            return false;
        }
    }
    return true;
}

nlohmann::json SuplinucbAllocator::snapshot() const {
    json cells = json::array();
    for (int i = 1; i <= n_; ++i) {
        for (int s = 1; s <= stage_total_; ++s) {
            const auto& l = learners_[cell(i, s)];
            json jl{{"agent", i},
                    {"stage", s},
                    {"observations", l.observations()},
                    {"psi", psi_[cell(i, s)]},
                    {"psi_widths", psi_widths_[cell(i, s)]},
                    {"response", std::vector<double>(l.response().data(),
                                                     l.response().data() + l.response().size())}};
            json gram = json::array(), inv = json::array(), theta = json::array();
            for (Eigen::Index r = 0; r < l.gram().rows(); ++r)
                for (Eigen::Index c = 0; c < l.gram().cols(); ++c) {
                    gram.push_back(l.gram()(r, c));
                    inv.push_back(l.gram_inverse()(r, c));
                }
            for (Eigen::Index r = 0; r < l.estimate().size(); ++r)
                theta.push_back(l.estimate()(r));
            jl["gram"] = std::move(gram);
            jl["inv"] = std::move(inv);
            jl["theta"] = std::move(theta);
            cells.push_back(std::move(jl));
        }
    }
    return json{{"kind", name_},
                {"last_t", last_t_},
                {"bids", bids_},
                {"horizon", cfg_.horizon},
                {"alpha", cfg_.alpha},
                {"counts",
                 {{"designated_explore", designated_explore_count_},
                  {"global_exploit", global_exploit_count_},
                  {"forced_exploit", forced_exploit_count_},
                  {"forced_by_stage", forced_exploit_by_stage_},
                  {"screens_by_stage", screen_events_by_stage_}}},
                {"cells", std::move(cells)}};
}

void SuplinucbAllocator::restore(const nlohmann::json& state) {
    if (state.at("kind").get<std::string>() != name_)
        throw std::invalid_argument("SuplinucbAllocator::restore: allocator kind mismatch");
    last_t_ = state.at("last_t").get<std::int64_t>();
    bids_ = state.at("bids").get<std::vector<double>>();
    n_ = static_cast<int>(bids_.size());
    cfg_.horizon = state.at("horizon").get<std::int64_t>();
    cfg_.alpha = state.at("alpha").get<double>();
    stage_total_ = stage_count(cfg_.horizon);
    exploit_width_threshold_ = 1.0 / std::sqrt(static_cast<double>(cfg_.horizon));
    const auto& counts = state.at("counts");
    designated_explore_count_ = counts.at("designated_explore").get<std::int64_t>();
    global_exploit_count_ = counts.at("global_exploit").get<std::int64_t>();
    forced_exploit_count_ = counts.at("forced_exploit").get<std::int64_t>();
    forced_exploit_by_stage_ = counts.at("forced_by_stage").get<std::vector<std::int64_t>>();
    screen_events_by_stage_ = counts.at("screens_by_stage").get<std::vector<std::int64_t>>();

    const std::size_t cells_n =
        static_cast<std::size_t>(n_) * static_cast<std::size_t>(stage_total_);
    learners_.assign(cells_n, LearnerState(d_));
    psi_.assign(cells_n, {});
    psi_widths_.assign(cells_n, {});
    for (const auto& jl : state.at("cells")) {
        const int i = jl.at("agent").get<int>();
        const int s = jl.at("stage").get<int>();
        const auto gram_flat = jl.at("gram").get<std::vector<double>>();
        const auto inv_flat = jl.at("inv").get<std::vector<double>>();
        const auto theta_flat = jl.at("theta").get<std::vector<double>>();
        const auto resp = jl.at("response").get<std::vector<double>>();
        const int d = static_cast<int>(theta_flat.size());
        Eigen::MatrixXd gram(d, d), inv(d, d);
        std::size_t pos = 0;
        for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c, ++pos) {
                gram(r, c) = gram_flat[pos];
                inv(r, c) = inv_flat[pos];
            }
        Vec cvec(d), theta(d);
        for (int r = 0; r < d; ++r) {
            cvec[r] = resp[static_cast<std::size_t>(r)];
            theta[r] = theta_flat[static_cast<std::size_t>(r)];
        }
        learners_[cell(i, s)] = LearnerState::from_parts(std::move(gram), std::move(inv),
                                                         std::move(cvec), std::move(theta),
                                                         jl.at("observations").get<std::int64_t>());
        psi_[cell(i, s)] = jl.at("psi").get<std::vector<std::int64_t>>();
        psi_widths_[cell(i, s)] = jl.at("psi_widths").get<std::vector<double>>();
    }
}

}  // namespace ssa
