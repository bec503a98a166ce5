#include "ssa/allocator.hpp"

#include <limits>
#include <stdexcept>

namespace ssa {

int argmax_lowest_index(const std::vector<double>& values, const std::vector<char>* alive) {
    int best = 0;
    double best_value = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (alive && !(*alive)[i]) continue;
        if (values[i] > best_value) {  // strict: ties keep the lowest index
            best_value = values[i];
            best = static_cast<int>(i) + 1;
        }
    }
    if (best == 0) throw std::logic_error("argmax_lowest_index: no eligible candidate");
    return best;
}

const char* to_string(SelectRule rule) {
    switch (rule) {
        case SelectRule::Explore: return "explore";
        case SelectRule::Exploit: return "exploit";
        case SelectRule::DesignatedExplore: return "designated-explore";
        case SelectRule::GlobalExploit: return "global-exploit";
        case SelectRule::ForcedExploit: return "forced-exploit";
    }
    return "unknown";
}

OracleAllocator::OracleAllocator(std::vector<double> bids, std::vector<Vec> thetas)
    : bids_(std::move(bids)), thetas_(std::move(thetas)) {
    if (bids_.empty() || bids_.size() != thetas_.size())
        throw std::invalid_argument("OracleAllocator: bids/thetas size mismatch");
}

AllocationDecision OracleAllocator::step(std::int64_t /*t*/, const Context& x,
                                         const ClickFn& click) {
    int best = 0;
    double best_value = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < bids_.size(); ++i) {
        const double value = bids_[i] * thetas_[i].dot(x.features);
        if (value > best_value) {
            best_value = value;
            best = static_cast<int>(i) + 1;
        }
    }
    AllocationDecision dec;
    dec.agent = best;
    dec.click = click(best);
    dec.phase = Phase::Exploitation;
    dec.rule = SelectRule::Exploit;
    return dec;
}

}  // namespace ssa
