#include "ssa/elinucb.hpp"

#include <algorithm>
#include <limits>
#include <nlohmann/json.hpp>
#include <stdexcept>

namespace ssa {

using nlohmann::json;

namespace {

json vec_to_json(const Vec& v) {
    return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Vec vec_from_json(const json& j) {
    const auto vals = j.get<std::vector<double>>();
    Vec v(static_cast<Eigen::Index>(vals.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = vals[static_cast<std::size_t>(i)];
    return v;
}

json mat_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd mat_from_json(const json& j) {
    const auto rows = j.get<std::vector<std::vector<double>>>();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(rows.empty() ? 0 : rows.front().size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            m(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    return m;
}

json learner_to_json(const LearnerState& s) {
    return json{{"gram", mat_to_json(s.gram())},
                {"inv", mat_to_json(s.gram_inverse())},
                {"response", vec_to_json(s.response())},
                {"theta", vec_to_json(s.estimate())},
                {"observations", s.observations()}};
}

LearnerState learner_from_json(const json& j) {
    return LearnerState::from_parts(mat_from_json(j.at("gram")), mat_from_json(j.at("inv")),
                                    vec_from_json(j.at("response")), vec_from_json(j.at("theta")),
                                    j.at("observations").get<std::int64_t>());
}

}  // namespace

ElinucbAllocator::ElinucbAllocator(std::vector<double> bids, int d, ElinucbConfig cfg)
    : bids_(std::move(bids)), n_(static_cast<int>(bids_.size())), d_(d), cfg_(cfg) {
    if (n_ < 1) throw std::invalid_argument("ElinucbAllocator: need at least one agent");
    if (cfg_.batch_size < 1) throw std::invalid_argument("ElinucbAllocator: batch_size >= 1");
    if (cfg_.alpha < 0.0) throw std::invalid_argument("ElinucbAllocator: alpha >= 0");
    name_ = cfg_.learn_on_exploit ? "broken-probe"
                                  : (cfg_.batch_size == 1 ? "elinucb-s" : "elinucb-sb");
    learners_.assign(static_cast<std::size_t>(n_), LearnerState(d_));
    mu_hi_ = bids_;
    mu_lo_.assign(static_cast<std::size_t>(n_), 0.0);
    active_.assign(static_cast<std::size_t>(n_), 1);
    batch_context_sum_ = Vec::Zero(d_);
}

std::vector<int> ElinucbAllocator::active_set() const {
    std::vector<int> out;
    for (int i = 1; i <= n_; ++i)
        if (is_active(i)) out.push_back(i);
    return out;
}

int ElinucbAllocator::exploit_argmax(const Vec& x) const {
    std::vector<double> values(static_cast<std::size_t>(n_), 0.0);
    for (int i = 1; i <= n_; ++i)
        values[static_cast<std::size_t>(i - 1)] =
            bids_[static_cast<std::size_t>(i - 1)] *
            learners_[static_cast<std::size_t>(i - 1)].estimate().dot(x);
    return argmax_lowest_index(values, &active_);
}

AllocationDecision ElinucbAllocator::step(std::int64_t t, const Context& x, const ClickFn& click) {
    if (t != last_t_ + 1)
        throw std::invalid_argument("ElinucbAllocator: rounds must be consecutive from 1");
    last_t_ = t;

    const int bs = cfg_.batch_size;
    const std::int64_t batch_index = (t - 1) / bs + 1;
    const int pos = static_cast<int>((t - 1) % bs);

    if (pos == 0) {
        batch_designated_ = designated_agent(batch_index, n_);
        batch_is_explore_ = is_active(batch_designated_);
        batch_context_sum_.setZero();
        batch_rounds_ = 0;
        batch_open_ = true;
    }

    AllocationDecision dec;
    dec.designated = batch_designated_;

    if (batch_is_explore_) {
        const int j = batch_designated_;
        if (!is_active(j)) throw std::logic_error("ElinucbAllocator: exploring inactive agent");
        dec.agent = j;
        dec.click = click(j);
        dec.phase = Phase::Exploration;
        dec.rule = SelectRule::Explore;
        dec.learned = true;
        learners_[static_cast<std::size_t>(j - 1)].update(x.features, dec.click);
        batch_context_sum_ += x.features;
        ++batch_rounds_;
    } else {
        dec.agent = exploit_argmax(x.features);
        dec.click = click(dec.agent);
        dec.phase = Phase::Exploitation;
        dec.rule = SelectRule::Exploit;
        if (cfg_.learn_on_exploit) {
            // Probe only: exploitation-time learning, which the real rule
            // forbids. Used to validate the monotonicity suite's power.
            learners_[static_cast<std::size_t>(dec.agent - 1)].update(x.features, dec.click);
            apply_bound_update(dec.agent, x.features);
            dec.learned = true;
        }
    }

    if (pos == bs - 1) end_batch(batch_is_explore_, batch_designated_);
    return dec;
}

void ElinucbAllocator::finish() {
    if (batch_open_) end_batch(batch_is_explore_, batch_designated_);
}

void ElinucbAllocator::end_batch(bool was_explore, int designated) {
    if (was_explore && batch_rounds_ > 0)
        apply_bound_update(designated, batch_context_sum_ / batch_rounds_);
    eliminate();
    batch_open_ = false;
}

std::pair<double, double> ElinucbAllocator::refine_bounds(double lo, double hi, double cand_lo,
                                                          double cand_hi) {
    if (!(lo < hi)) return {lo, hi};  // a collapsed interval never moves again
    const double new_lo = std::max(lo, cand_lo);
    const double new_hi = std::min(hi, cand_hi);
    if (new_lo < new_hi) return {new_lo, new_hi};
    const double mid = 0.5 * (lo + hi);
    return {mid, mid};
}

void ElinucbAllocator::apply_bound_update(int j, const Vec& xbar) {
    double& lo = mu_lo_[static_cast<std::size_t>(j - 1)];
    double& hi = mu_hi_[static_cast<std::size_t>(j - 1)];
    const ConfidenceScore sc = learners_[static_cast<std::size_t>(j - 1)].score(xbar, cfg_.alpha);
    const auto [new_lo, new_hi] =
        refine_bounds(lo, hi, bids_[static_cast<std::size_t>(j - 1)] * sc.lcb,
                      bids_[static_cast<std::size_t>(j - 1)] * sc.ucb);
    lo = new_lo;
    hi = new_hi;
}

std::vector<char> ElinucbAllocator::eliminate_rule(const std::vector<double>& lo,
                                                   const std::vector<double>& hi,
                                                   std::vector<char> active) {
    double best_lo = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < lo.size(); ++i)
        if (active[i]) best_lo = std::max(best_lo, lo[i]);
    for (std::size_t i = 0; i < hi.size(); ++i)
        if (active[i] && hi[i] < best_lo) active[i] = 0;
    return active;
}

void ElinucbAllocator::eliminate() {
    active_ = eliminate_rule(mu_lo_, mu_hi_, active_);
    if (std::none_of(active_.begin(), active_.end(), [](char a) { return a != 0; }))
        throw std::logic_error("ElinucbAllocator: eliminated every agent");
}

nlohmann::json ElinucbAllocator::snapshot() const {
    json learners = json::array();
    for (const auto& l : learners_) learners.push_back(learner_to_json(l));
    return json{{"kind", name_},
                {"last_t", last_t_},
                {"bids", bids_},
                {"mu_lo", mu_lo_},
                {"mu_hi", mu_hi_},
                {"active", std::vector<int>(active_.begin(), active_.end())},
                {"learners", std::move(learners)},
                {"batch",
                 {{"designated", batch_designated_},
                  {"is_explore", batch_is_explore_},
                  {"open", batch_open_},
                  {"context_sum", vec_to_json(batch_context_sum_)},
                  {"rounds", batch_rounds_}}}};
}

void ElinucbAllocator::restore(const nlohmann::json& state) {
    if (state.at("kind").get<std::string>() != name_)
        throw std::invalid_argument("ElinucbAllocator::restore: allocator kind mismatch");
    last_t_ = state.at("last_t").get<std::int64_t>();
    bids_ = state.at("bids").get<std::vector<double>>();
    mu_lo_ = state.at("mu_lo").get<std::vector<double>>();
    mu_hi_ = state.at("mu_hi").get<std::vector<double>>();
    const auto act = state.at("active").get<std::vector<int>>();
    active_.assign(act.begin(), act.end());
    learners_.clear();
    for (const auto& l : state.at("learners")) learners_.push_back(learner_from_json(l));
    const auto& b = state.at("batch");
    batch_designated_ = b.at("designated").get<int>();
    batch_is_explore_ = b.at("is_explore").get<bool>();
    batch_open_ = b.at("open").get<bool>();
    batch_context_sum_ = vec_from_json(b.at("context_sum"));
    batch_rounds_ = b.at("rounds").get<int>();
    n_ = static_cast<int>(bids_.size());
}

}  // namespace ssa
