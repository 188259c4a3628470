#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "afrelay/scenario.hpp"
#include "afrelay_tools/csv.hpp"
#include "afrelay_tools/experiment.hpp"

namespace afr::tools {

inline constexpr const char* kToolVersion = "0.1.0";

struct RunContext {
    ScenarioConfig scenario;
    ExperimentSpec experiment;
    std::string source_label;  // "preset fig2" or the scenario path
    std::uint64_t seed = 1;
    std::ostream* log = nullptr;  // per-point failures are reported here
};

// Loads a scenario file and its experiment block; preset names resolve against `preset_dir`.
RunContext load_context(const std::string& path, const std::string& label);
std::string preset_path(const std::string& preset_dir, const std::string& name);

// Column orders are part of the output contract; see the README for their meaning.
const std::vector<std::string>& rate_columns();
const std::vector<std::string>& ber_columns();
const std::vector<std::string>& decoupling_columns();
std::vector<std::string> distance_columns(const std::vector<int>& hop_counts);

CsvDocument cmd_rate(const RunContext& ctx);
CsvDocument cmd_distance(const RunContext& ctx);
CsvDocument cmd_ber(const RunContext& ctx);
CsvDocument cmd_decoupling(const RunContext& ctx);

// Emits a matplotlib script that plots a CSV written by `command`.
std::string plot_script(const std::string& command, const std::string& csv_path);

}  // namespace afr::tools
