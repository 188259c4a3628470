#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "afrelay/network.hpp"
#include "afrelay/scenario.hpp"

namespace afr::tools {

enum class SweepVariable { Rho1Db, RhoAllDb, Distance, AntennasUniform };
enum class SweepDirection { Up, Down, Both };

struct SweepSpec {
    SweepVariable variable = SweepVariable::Rho1Db;
    std::vector<double> grid;
    SweepDirection direction = SweepDirection::Up;
};

// Throws ConfigError unless the grid is nonempty and strictly monotone (and integral for antennas).
SweepSpec make_sweep(SweepVariable variable, std::vector<double> grid,
                     SweepDirection direction = SweepDirection::Up);

SweepVariable sweep_variable_from_name(const std::string& name);
std::string to_string(SweepVariable v);
SweepDirection direction_from_name(const std::string& name);
std::string to_string(SweepDirection d);

// "a:b:step" (inclusive) or "a,b,c".
std::vector<double> parse_grid(const std::string& text);
std::vector<double> arithmetic_grid(double from, double to, double step);

enum class Engine { Replica, Mc, Both };
Engine engine_from_name(const std::string& name);

struct McSettings {
    bool enabled = false;
    // Which priors (rate) or detectors (ber) are simulated; unset means all, an empty list none.
    std::optional<std::vector<std::string>> constellations;
    std::optional<std::vector<std::string>> detectors;
    int realizations = 1000;                  // Gaussian log-det average, lower bound
    int discrete_realizations = 200;
    int noise_draws = 200;
    int trials = 500;                         // ber / decoupling channel draws
    int vectors_per_trial = 100;
};

// The `experiment:` block of a scenario file; everything else is the network description.
struct ExperimentSpec {
    SweepSpec sweep;
    std::vector<std::string> modes{"jdd"};  // jdd, sd
    bool tdma = true;
    // rho_all_db: rho_k = rho_scale[k] * rho (default all ones)
    std::vector<double> rho_scale;
    // distance: hop counts to compare
    std::vector<int> hop_counts;
    // Optional series over the first-hop SNR (dB), e.g. the two families of an antenna sweep.
    std::vector<double> series_rho1_db;
    Engine engine = Engine::Replica;
    McSettings mc;
};

// Reads the `experiment:` block (defaults when absent; the sweep must then be set by the caller).
ExperimentSpec parse_experiment(const std::string& scenario_text);
void validate(const ExperimentSpec& spec, const ScenarioConfig& sc);

// Network at one sweep value (the series value, when present, fixes rho_1 first).
NetworkConfig network_at(const ScenarioConfig& sc, const ExperimentSpec& spec, double x);
NetworkConfig network_at(const ScenarioConfig& sc, const ExperimentSpec& spec, double x, double series_rho1_db);

// Deterministic per-point seed derived from the master seed.
std::uint64_t point_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index);

}  // namespace afr::tools
