#include "afrelay_tools/experiment.hpp"

#include <cmath>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "afrelay/errors.hpp"
#include "afrelay/math.hpp"
#include "afrelay/mc/rng.hpp"

namespace afr::tools {

namespace {

template <class T>
T read(const YAML::Node& node, const std::string& key)
{
    try {
        return node.as<T>();
    } catch (const YAML::Exception&) {
        std::string where = "key 'experiment." + key + "'";
        if (node.Mark().line >= 0)
            where += " (line " + std::to_string(node.Mark().line + 1) + ")";
        throw ConfigError(where + ": invalid value");
    }
}

template <class T>
std::vector<T> read_list(const YAML::Node& node, const std::string& key)
{
    std::vector<T> out;
    if (node.IsNull())
        return out;
    if (node.IsSequence())
        for (const auto& item : node)
            out.push_back(read<T>(item, key));
    else
        out.push_back(read<T>(node, key));
    return out;
}

}  // namespace

SweepSpec make_sweep(SweepVariable variable, std::vector<double> grid, SweepDirection direction)
{
    if (grid.empty())
        throw ConfigError("sweep grid must not be empty");
    for (double v : grid)
        if (!std::isfinite(v))
            throw ConfigError("sweep grid values must be finite");
    if (grid.size() > 1) {
        const bool up = grid[1] > grid[0];
        for (std::size_t i = 1; i < grid.size(); ++i)
            if (up ? !(grid[i] > grid[i - 1]) : !(grid[i] < grid[i - 1]))
                throw ConfigError("sweep grid must be strictly monotone");
    }
    if (variable == SweepVariable::AntennasUniform)
        for (double v : grid)
            if (v != std::round(v) || v < 1)
                throw ConfigError("antenna sweep values must be positive integers");
    if (variable == SweepVariable::Distance)
        for (double v : grid)
            if (v <= 0)
                throw ConfigError("distance sweep values must be positive");
    return {variable, std::move(grid), direction};
}

SweepVariable sweep_variable_from_name(const std::string& name)
{
    if (name == "rho1_db")
        return SweepVariable::Rho1Db;
    if (name == "rho_all_db")
        return SweepVariable::RhoAllDb;
    if (name == "distance")
        return SweepVariable::Distance;
    if (name == "antennas_uniform")
        return SweepVariable::AntennasUniform;
    throw ConfigError("unknown sweep variable '" + name + "'");
}

std::string to_string(SweepVariable v)
{
    switch (v) {
    case SweepVariable::Rho1Db: return "rho1_db";
    case SweepVariable::RhoAllDb: return "rho_all_db";
    case SweepVariable::Distance: return "distance";
    case SweepVariable::AntennasUniform: return "antennas_uniform";
    }
    return "?";
}

SweepDirection direction_from_name(const std::string& name)
{
    if (name == "up")
        return SweepDirection::Up;
    if (name == "down")
        return SweepDirection::Down;
    if (name == "both")
        return SweepDirection::Both;
    throw ConfigError("unknown sweep direction '" + name + "' (expected up, down or both)");
}

std::string to_string(SweepDirection d)
{
    switch (d) {
    case SweepDirection::Up: return "up";
    case SweepDirection::Down: return "down";
    case SweepDirection::Both: return "both";
    }
    return "?";
}

std::vector<double> arithmetic_grid(double from, double to, double step)
{
    if (!(step > 0))
        throw ConfigError("grid step must be positive");
    const double span = std::abs(to - from);
    const long n = std::lround(std::floor(span / step + 1e-9));
    const double dir = to >= from ? 1.0 : -1.0;
    std::vector<double> out;
    for (long i = 0; i <= n; ++i) {
        double v = from + dir * static_cast<double>(i) * step;
        // Snap round-off so that grid values print cleanly.
        const double r = std::round(v * 1e9) / 1e9;
        out.push_back(r);
    }
    return out;
}

std::vector<double> parse_grid(const std::string& text)
{
    auto number = [&](const std::string& s) {
        std::size_t used = 0;
        double v = 0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != s.size())
            throw ConfigError("bad grid value '" + s + "' in '" + text + "'");
        return v;
    };
    if (text.find_first_not_of(" \t") == std::string::npos)
        throw ConfigError("empty grid");
    std::vector<std::string> parts;
    const char sep = text.find(':') != std::string::npos ? ':' : ',';
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, sep);)
        parts.push_back(p);
    if (sep == ':') {
        if (parts.size() != 3)
            throw ConfigError("grid range must be from:to:step, got '" + text + "'");
        return arithmetic_grid(number(parts[0]), number(parts[1]), number(parts[2]));
    }
    std::vector<double> out;
    for (const auto& p : parts)
        out.push_back(number(p));
    return out;
}

Engine engine_from_name(const std::string& name)
{
    if (name == "replica")
        return Engine::Replica;
    if (name == "mc")
        return Engine::Mc;
    if (name == "both")
        return Engine::Both;
    throw ConfigError("unknown engine '" + name + "' (expected replica, mc or both)");
}

ExperimentSpec parse_experiment(const std::string& scenario_text)
{
    ExperimentSpec spec;
    YAML::Node root;
    try {
        root = YAML::Load(scenario_text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError(std::string("scenario parse error: ") + e.what());
    }
    const YAML::Node ex = root["experiment"];
    if (!ex)
        return spec;
    if (!ex.IsMap())
        throw ConfigError("key 'experiment': expected a mapping");

    if (const auto m = ex["mode"]) {
        spec.modes = read_list<std::string>(m, "mode");
        for (const auto& s : spec.modes)
            if (s != "jdd" && s != "sd")
                throw ConfigError("key 'experiment.mode': unknown mode '" + s + "'");
    }
    if (const auto t = ex["tdma"])
        spec.tdma = read<bool>(t, "tdma");
    if (const auto s = ex["rho_scale"])
        spec.rho_scale = read_list<double>(s, "rho_scale");
    if (const auto h = ex["hop_counts"])
        spec.hop_counts = read_list<int>(h, "hop_counts");
    if (const auto s = ex["series_rho1_db"])
        spec.series_rho1_db = read_list<double>(s, "series_rho1_db");
    if (const auto e = ex["engine"])
        spec.engine = engine_from_name(read<std::string>(e, "engine"));

    if (const auto sw = ex["sweep"]) {
        const auto var = sweep_variable_from_name(read<std::string>(sw["variable"], "sweep.variable"));
        std::vector<double> grid;
        if (const auto v = sw["values"])
            grid = read_list<double>(v, "sweep.values");
        else if (sw["from"] && sw["to"] && sw["step"])
            grid = arithmetic_grid(read<double>(sw["from"], "sweep.from"), read<double>(sw["to"], "sweep.to"),
                                   read<double>(sw["step"], "sweep.step"));
        else
            throw ConfigError("key 'experiment.sweep': needs 'values' or 'from', 'to' and 'step'");
        auto dir = SweepDirection::Up;
        if (const auto d = sw["direction"])
            dir = direction_from_name(read<std::string>(d, "sweep.direction"));
        spec.sweep = make_sweep(var, std::move(grid), dir);
    }

    if (const auto mc = ex["mc"]) {
        auto& m = spec.mc;
        m.enabled = mc["enabled"] ? read<bool>(mc["enabled"], "mc.enabled") : true;
        if (mc["constellations"])
            m.constellations = read_list<std::string>(mc["constellations"], "mc.constellations");
        if (mc["detectors"])
            m.detectors = read_list<std::string>(mc["detectors"], "mc.detectors");
        if (mc["realizations"])
            m.realizations = read<int>(mc["realizations"], "mc.realizations");
        if (mc["discrete_realizations"])
            m.discrete_realizations = read<int>(mc["discrete_realizations"], "mc.discrete_realizations");
        if (mc["noise_draws"])
            m.noise_draws = read<int>(mc["noise_draws"], "mc.noise_draws");
        if (mc["trials"])
            m.trials = read<int>(mc["trials"], "mc.trials");
        if (mc["vectors_per_trial"])
            m.vectors_per_trial = read<int>(mc["vectors_per_trial"], "mc.vectors_per_trial");
    }
    return spec;
}

void validate(const ExperimentSpec& spec, const ScenarioConfig& sc)
{
    make_sweep(spec.sweep.variable, spec.sweep.grid, spec.sweep.direction);
    if (!spec.rho_scale.empty() && static_cast<int>(spec.rho_scale.size()) != sc.network.K)
        throw ConfigError("key 'experiment.rho_scale': expected " + std::to_string(sc.network.K) + " entries");
    for (double s : spec.rho_scale)
        if (!(s > 0))
            throw ConfigError("key 'experiment.rho_scale': entries must be positive");
    for (int k : spec.hop_counts)
        if (k < 1)
            throw ConfigError("key 'experiment.hop_counts': entries must be at least 1");
    const auto& m = spec.mc;
    if (m.realizations < 1 || m.discrete_realizations < 1 || m.noise_draws < 1 || m.vectors_per_trial < 1)
        throw ConfigError("key 'experiment.mc': counts must be positive");
    if (m.trials < 1 && (spec.engine != Engine::Replica || m.enabled))
        throw ConfigError("key 'experiment.mc.trials': Monte Carlo needs at least one trial");
    if (spec.sweep.variable == SweepVariable::Distance && !sc.pathloss)
        throw ConfigError("distance sweeps need a 'pathloss' block");
}

NetworkConfig network_at(const ScenarioConfig& sc, const ExperimentSpec& spec, double x)
{
    const NetworkConfig& base = sc.network;
    switch (spec.sweep.variable) {
    case SweepVariable::Rho1Db: {
        auto rho = base.rho;
        rho[0] = db_to_linear(x);
        return with_rho(base, rho);
    }
    case SweepVariable::RhoAllDb: {
        std::vector<double> rho(base.K);
        for (int k = 0; k < base.K; ++k)
            rho[k] = (spec.rho_scale.empty() ? 1.0 : spec.rho_scale[k]) * db_to_linear(x);
        return with_rho(base, rho);
    }
    case SweepVariable::AntennasUniform:
        return with_uniform_antennas(base, static_cast<int>(std::lround(x)));
    case SweepVariable::Distance: {
        if (!sc.pathloss)
            throw ConfigError("distance sweeps need a 'pathloss' block");
        return apply_pathloss(base, equidistant(base.K, x, sc.pathloss->exponent, sc.pathloss->base_snr));
    }
    }
    return base;
}

NetworkConfig network_at(const ScenarioConfig& sc, const ExperimentSpec& spec, double x, double series_rho1_db)
{
    ScenarioConfig shifted = sc;
    auto rho = sc.network.rho;
    rho[0] = db_to_linear(series_rho1_db);
    shifted.network = with_rho(sc.network, rho);
    return network_at(shifted, spec, x);
}

std::uint64_t point_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index)
{
    using mc::splitmix64;
    return splitmix64(splitmix64(master ^ splitmix64(stream)) + index);
}

}  // namespace afr::tools
