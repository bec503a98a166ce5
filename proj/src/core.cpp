#include "ssa/core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ssa/rng.hpp"

namespace ssa {

namespace {

bool contains(const std::vector<int>& vals, int v) {
    return std::find(vals.begin(), vals.end(), v) != vals.end();
}

int draw_distinct_value(Rng& rng, const std::vector<int>& taken, bool allow_zero) {
    for (;;) {
        const int v = rng.uniform_int(0, 100);
        if (!allow_zero && v == 0) continue;
        if (!contains(taken, v)) return v;
    }
}

}  // namespace

ContextCorpus generate_corpus(std::uint64_t seed, int d, int values_per_feature,
                              std::int64_t combination_cap) {
    if (d < 1) throw std::invalid_argument("generate_corpus: d must be >= 1");
    if (values_per_feature < 1)
        throw std::invalid_argument("generate_corpus: values_per_feature must be >= 1");
    if (values_per_feature > 101)
        throw std::invalid_argument("generate_corpus: at most 101 distinct values in {0..100}");
    if (static_cast<double>(d) * std::log(static_cast<double>(values_per_feature)) >
        std::log(static_cast<double>(combination_cap)) + 1e-12)
        throw std::invalid_argument("generate_corpus: combination count exceeds cap");

    Rng rng(seed);
    std::vector<std::vector<int>> feature_values(static_cast<std::size_t>(d));
    for (auto& vals : feature_values) {
        vals.reserve(static_cast<std::size_t>(values_per_feature));
        for (int k = 0; k < values_per_feature; ++k)
            vals.push_back(draw_distinct_value(rng, vals, /*allow_zero=*/true));
    }
    // If every feature drew a 0, the all-zero combination would be
    // unnormalizable; replace feature 0's zero with a fresh nonzero value.
    const bool all_have_zero = std::all_of(feature_values.begin(), feature_values.end(),
                                           [](const auto& vals) { return contains(vals, 0); });
    if (all_have_zero) {
        auto& vals = feature_values.front();
        *std::find(vals.begin(), vals.end(), 0) =
            draw_distinct_value(rng, vals, /*allow_zero=*/false);
    }

    std::int64_t count = 1;
    for (int f = 0; f < d; ++f) count *= values_per_feature;

    ContextCorpus corpus;
    corpus.contexts.reserve(static_cast<std::size_t>(count));
    corpus.raw.reserve(static_cast<std::size_t>(count));
    for (std::int64_t idx = 0; idx < count; ++idx) {
        std::vector<int> raw(static_cast<std::size_t>(d));
        std::int64_t rem = idx;
        for (int f = d - 1; f >= 0; --f) {  // feature 0 is the most significant digit
            raw[static_cast<std::size_t>(f)] =
                feature_values[static_cast<std::size_t>(f)]
                              [static_cast<std::size_t>(rem % values_per_feature)];
            rem /= values_per_feature;
        }
        Vec x(d);
        for (int f = 0; f < d; ++f) x[f] = raw[static_cast<std::size_t>(f)];
        x /= x.norm();
        corpus.contexts.push_back(Context{std::move(x)});
        corpus.raw.push_back(std::move(raw));
    }
    return corpus;
}

std::vector<AgentSpec> generate_agents(std::uint64_t seed, int n, int d) {
    if (n < 2) throw std::invalid_argument("generate_agents: n must be >= 2");
    if (d < 1) throw std::invalid_argument("generate_agents: d must be >= 1");
    Rng rng(seed);
    std::vector<AgentSpec> agents;
    agents.reserve(static_cast<std::size_t>(n));
    for (int i = 1; i <= n; ++i) {
        Vec theta(d);
        do {
            for (int f = 0; f < d; ++f) theta[f] = rng.unit();
        } while (theta.norm() == 0.0);
        theta /= theta.norm();
        double v = rng.unit();
        while (v == 0.0) v = rng.unit();
        agents.push_back(AgentSpec{i, v, v, std::move(theta)});
    }
    return agents;
}

ClickTape generate_click_tape(std::uint64_t seed, const std::vector<AgentSpec>& agents,
                              const ContextCorpus& corpus,
                              const std::vector<std::int32_t>& context_sequence) {
    if (context_sequence.empty())
        throw std::invalid_argument("generate_click_tape: empty context sequence");
    const int n = static_cast<int>(agents.size());
    const std::int64_t T = static_cast<std::int64_t>(context_sequence.size());
    Rng rng(seed);

    // CTRs repeat per corpus index; precompute per agent.
    std::vector<std::vector<double>> ctr(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        ctr[static_cast<std::size_t>(i)].resize(corpus.size());
        for (std::size_t c = 0; c < corpus.size(); ++c)
            ctr[static_cast<std::size_t>(i)][c] =
                agents[static_cast<std::size_t>(i)].theta.dot(corpus.contexts[c].features);
    }

    std::vector<std::uint8_t> data(static_cast<std::size_t>(n) * static_cast<std::size_t>(T));
    std::size_t pos = 0;
    for (int i = 0; i < n; ++i)
        for (std::int64_t t = 0; t < T; ++t)
            data[pos++] = rng.bernoulli(
                ctr[static_cast<std::size_t>(i)][static_cast<std::size_t>(context_sequence
                                                                              [static_cast<
                                                                                  std::size_t>(t)])])
                              ? 1
                              : 0;
    return ClickTape(n, T, seed, std::move(data));
}

std::vector<std::int32_t> sample_context_sequence(std::uint64_t seed, const ContextCorpus& corpus,
                                                  std::int64_t T) {
    if (corpus.size() == 0)
        throw std::invalid_argument("sample_context_sequence: empty corpus");
    if (T < 1) throw std::invalid_argument("sample_context_sequence: T must be >= 1");
    Rng rng(seed);
    std::vector<std::int32_t> seq(static_cast<std::size_t>(T));
    for (auto& ix : seq) ix = static_cast<std::int32_t>(rng.below(corpus.size()));
    return seq;
}

Instance make_instance(std::uint64_t seed, int n, int d, std::int64_t T, int values_per_feature) {
    Instance inst;
    inst.seed = seed;
    inst.n = n;
    inst.d = d;
    inst.T = T;
    inst.values_per_feature = values_per_feature;
    inst.corpus = generate_corpus(mix_seed(seed, 1), d, values_per_feature);
    inst.agents = generate_agents(mix_seed(seed, 2), n, d);
    inst.context_sequence = sample_context_sequence(mix_seed(seed, 3), inst.corpus, T);
    inst.tape = generate_click_tape(mix_seed(seed, 4), inst.agents, inst.corpus,
                                    inst.context_sequence);
    return inst;
}

}  // namespace ssa
