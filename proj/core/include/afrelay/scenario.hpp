#pragma once

#include <optional>
#include <string>
#include <vector>

#include "afrelay/constellation.hpp"
#include "afrelay/detector.hpp"
#include "afrelay/network.hpp"

namespace afr {

// Network part of a scenario file. Keys: hops, antennas, snr_db, beta, channel_norm,
// constellation, detector, pathloss {distances, exponent, base_snr_db}.
struct ScenarioConfig {
    NetworkConfig network;
    std::vector<std::string> constellations;  // first one is the default prior
    std::vector<std::string> detectors;
    std::optional<PathlossModel> pathloss;
    std::string source;  // original text, for hashing and re-parsing of experiment keys

    Constellation prior() const { return constellation_from_name(constellations.front()); }
};

// Throws ConfigError naming the key (and line, when known).
ScenarioConfig parse_scenario(const std::string& text);
ScenarioConfig load_scenario(const std::string& path);

// FNV-1a of the scenario text, as 16 hex digits.
std::string config_hash(const std::string& text);

}  // namespace afr
