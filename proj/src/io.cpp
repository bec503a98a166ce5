#include "ssa/io.hpp"

#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <stdexcept>

namespace ssa {

using nlohmann::json;

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

json vec_json(const Vec& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Vec vec_from(const json& j) {
    const auto vals = j.get<std::vector<double>>();
    Vec v(static_cast<Eigen::Index>(vals.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = vals[static_cast<std::size_t>(i)];
    return v;
}

std::string tape_row_string(const ClickTape& tape, int agent) {
    std::string row(static_cast<std::size_t>(tape.rounds()), '0');
    for (std::int64_t t = 1; t <= tape.rounds(); ++t)
        if (tape.click(agent, t)) row[static_cast<std::size_t>(t - 1)] = '1';
    return row;
}

}  // namespace

json instance_to_json(const Instance& inst) {
    json contexts = json::array();
    for (std::size_t c = 0; c < inst.corpus.size(); ++c)
        contexts.push_back(json{{"raw", inst.corpus.raw[c]},
                                {"features", vec_json(inst.corpus.contexts[c].features)}});
    json agents = json::array();
    for (const auto& a : inst.agents)
        agents.push_back(json{{"id", a.id},
                              {"valuation", a.valuation},
                              {"bid", a.bid},
                              {"theta", vec_json(a.theta)}});
    json tape_rows = json::array();
    for (int i = 1; i <= inst.n; ++i) tape_rows.push_back(tape_row_string(inst.tape, i));
    return json{{"schema_version", kInstanceSchemaVersion},
                {"seed", inst.seed},
                {"n", inst.n},
                {"d", inst.d},
                {"T", inst.T},
                {"values_per_feature", inst.values_per_feature},
                {"contexts", std::move(contexts)},
                {"agents", std::move(agents)},
                {"context_sequence", inst.context_sequence},
                {"tape", {{"seed", inst.tape.seed()}, {"rows", std::move(tape_rows)}}}};
}

Instance instance_from_json(const json& j) {
    const int version = j.at("schema_version").get<int>();
    if (version != kInstanceSchemaVersion)
        throw std::invalid_argument("instance file: unsupported schema_version " +
                                    std::to_string(version));
    Instance inst;
    inst.seed = j.at("seed").get<std::uint64_t>();
    inst.n = j.at("n").get<int>();
    inst.d = j.at("d").get<int>();
    inst.T = j.at("T").get<std::int64_t>();
    inst.values_per_feature = j.at("values_per_feature").get<int>();
    for (const auto& jc : j.at("contexts")) {
        inst.corpus.raw.push_back(jc.at("raw").get<std::vector<int>>());
        inst.corpus.contexts.push_back(Context{vec_from(jc.at("features"))});
    }
    for (const auto& ja : j.at("agents"))
        inst.agents.push_back(AgentSpec{ja.at("id").get<int>(), ja.at("valuation").get<double>(),
                                        ja.at("bid").get<double>(), vec_from(ja.at("theta"))});
    inst.context_sequence = j.at("context_sequence").get<std::vector<std::int32_t>>();
    const auto rows = j.at("tape").at("rows").get<std::vector<std::string>>();
    if (static_cast<int>(rows.size()) != inst.n)
        throw std::invalid_argument("instance file: tape row count != n");
    std::vector<std::uint8_t> data;
    data.reserve(rows.size() * static_cast<std::size_t>(inst.T));
    for (const auto& row : rows) {
        if (static_cast<std::int64_t>(row.size()) != inst.T)
            throw std::invalid_argument("instance file: tape row length != T");
        for (char ch : row) {
            if (ch != '0' && ch != '1')
                throw std::invalid_argument("instance file: tape rows must be 0/1 strings");
            data.push_back(ch == '1' ? 1 : 0);
        }
    }
    inst.tape = ClickTape(inst.n, inst.T, j.at("tape").at("seed").get<std::uint64_t>(),
                          std::move(data));
    return inst;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_instance(const Instance& inst, const std::string& path) {
    write_text_file(path, instance_to_json(inst).dump());
}

Instance read_instance(const std::string& path) {
    return instance_from_json(json::parse(read_text_file(path)));
}

void write_rounds_csv(const std::vector<RoundRecord>& rounds, const std::string& path) {
    std::ostringstream out;
    out << "t,context_index,allocated,click,payment,regret_increment,cumulative_regret\n";
    for (const auto& r : rounds)
        out << r.t << ',' << r.context_index << ',' << r.allocated << ','
            << static_cast<int>(r.click) << ',' << format_double(r.payment) << ','
            << format_double(r.regret_increment) << ',' << format_double(r.cumulative_regret)
            << '\n';
    write_text_file(path, out.str());
}

json run_report_to_json(const RunReport& rep) {
    json j{{"mechanism", rep.mechanism},
           {"n", rep.n},
           {"d", rep.d},
           {"T", rep.T},
           {"final_regret", rep.final_regret},
           {"checkpoints", rep.checkpoints},
           {"regret_at", rep.regret_at},
           {"total_utility", rep.total_utility},
           {"min_round_utility", rep.min_round_utility},
           {"total_payment", rep.total_payment},
           {"clicks", rep.clicks},
           {"center_utility", rep.center_utility},
           {"social_welfare", rep.social_welfare},
           {"rule_counts", rep.rule_counts}};
    if (!rep.eta.empty()) j["eta"] = rep.eta;
    if (!rep.modified_bids.empty()) j["modified_bids"] = rep.modified_bids;
    if (rep.has_stage_diagnostics) {
        j["stage_diagnostics"] = json{{"index_growth_bound_ok", rep.index_growth_bound_ok},
                                      {"forced_exploit_bound_ok", rep.forced_exploit_bound_ok},
                                      {"detail", rep.stage_check_detail},
                                      {"index_set_sizes", rep.index_set_sizes}};
    }
    return j;
}

}  // namespace ssa
