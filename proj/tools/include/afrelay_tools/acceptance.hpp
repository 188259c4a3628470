#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

#include "afrelay/scenario.hpp"

namespace afr::tools {

struct CriterionResult {
    int id = 0;  // 0 for the scenario-specific check
    std::string name;
    bool passed = false;
    std::string summary;               // measured values against their tolerances
    std::vector<std::string> details;  // per-point observations, reported but not judged
    double seconds = 0.0;
    nlohmann::json data;
};

struct AcceptanceOptions {
    bool quick = false;   // fixed-point, oracle, identity and I-MMSE checks only
    std::uint64_t seed = 1;
    std::vector<int> only;  // run these criteria (all when empty)
};

std::vector<int> criterion_ids(const AcceptanceOptions& opts);
std::string criterion_name(int id);
CriterionResult run_criterion(int id, const AcceptanceOptions& opts);

// Fixed-point residual and stationarity of every branch for each prior/detector pair of a scenario.
CriterionResult check_scenario(const ScenarioConfig& sc);

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts,
                                            const std::function<void(const CriterionResult&)>& on_done = {});

std::string format_line(const CriterionResult& r);
nlohmann::json to_json(const std::vector<CriterionResult>& results, const AcceptanceOptions& opts);

}  // namespace afr::tools
