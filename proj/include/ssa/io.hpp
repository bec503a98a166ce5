#pragma once

#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

#include "ssa/core.hpp"
#include "ssa/mechanism.hpp"

namespace ssa {

// Versioned JSON instance file: seeds, dimensions, raw and normalized values,
// context sequence and the full click tape, so a run is reproducible from the
// file alone.
inline constexpr int kInstanceSchemaVersion = 1;

nlohmann::json instance_to_json(const Instance& inst);
Instance instance_from_json(const nlohmann::json& j);

void write_instance(const Instance& inst, const std::string& path);
Instance read_instance(const std::string& path);

// Per-round CSV: t,context_index,allocated,click,payment,regret_increment,
// cumulative_regret. Doubles are printed with "%.17g" so identical runs give
// byte-identical files.
void write_rounds_csv(const std::vector<RoundRecord>& rounds, const std::string& path);

std::string format_double(double v);

nlohmann::json run_report_to_json(const RunReport& rep);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace ssa
