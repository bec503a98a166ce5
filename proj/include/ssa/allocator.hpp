#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ssa/core.hpp"

namespace ssa {

enum class Phase { Exploration, Exploitation };

// Finer selection tag; the first two are used by the elimination allocators,
// the last three by the staged allocator.
enum class SelectRule { Explore, Exploit, DesignatedExplore, GlobalExploit, ForcedExploit };

const char* to_string(SelectRule rule);

struct AllocationDecision {
    int agent = 0;  // 1-based I_t
    int click = 0;
    Phase phase = Phase::Exploitation;
    SelectRule rule = SelectRule::Exploit;
    bool learned = false;  // any learner/bound/index-set mutation this round
    int designated = 0;
    // Staged allocator only: bitmask (bit i-1) of agents surviving every
    // screen applied this round; 0 when not applicable.
    std::uint32_t survivors_mask = 0;
};

// Returns the realized click (0/1) of a 1-based agent for the current round.
using ClickFn = std::function<int(int)>;

// 1-based index of the largest value, ties to the lowest index; `alive`, when
// given, restricts the candidates. Throws if no candidate is eligible.
int argmax_lowest_index(const std::vector<double>& values, const std::vector<char>* alive = nullptr);

// Uniform step interface consumed by the harness: one call per round, rounds
// are 1-based and strictly increasing. finish() flushes any pending
// batch-level state at end of run.
class Allocator {
public:
    virtual ~Allocator() = default;
    virtual const std::string& name() const = 0;
    virtual AllocationDecision step(std::int64_t t, const Context& x, const ClickFn& click) = 0;
    virtual void finish() {}
};

// Clairvoyant benchmark: allocates argmax_i b_i * (theta_i . x) with ties to
// the lowest index. Never learns.
class OracleAllocator final : public Allocator {
public:
    OracleAllocator(std::vector<double> bids, std::vector<Vec> thetas);

    const std::string& name() const override { return name_; }
    AllocationDecision step(std::int64_t t, const Context& x, const ClickFn& click) override;

private:
    std::string name_ = "oracle";
    std::vector<double> bids_;
    std::vector<Vec> thetas_;
};

}  // namespace ssa
