#include "afrelay/scenario.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "afrelay/errors.hpp"
#include "afrelay/math.hpp"

namespace afr {

namespace {

[[noreturn]] void fail(const YAML::Node& node, const std::string& key, const std::string& msg)
{
    std::string where = "key '" + key + "'";
    if (node.IsDefined() && node.Mark().line >= 0)
        where += " (line " + std::to_string(node.Mark().line + 1) + ")";
    throw ConfigError(where + ": " + msg);
}

template <class T>
T as(const YAML::Node& node, const std::string& key)
{
    try {
        return node.as<T>();
    } catch (const YAML::Exception& e) {
        fail(node, key, "invalid value");
    }
}

template <class T>
std::vector<T> scalar_or_list(const YAML::Node& node, const std::string& key, std::size_t n)
{
    if (node.IsSequence()) {
        std::vector<T> out;
        for (const auto& item : node)
            out.push_back(as<T>(item, key));
        if (out.size() != n)
            fail(node, key, "expected " + std::to_string(n) + " entries, got " + std::to_string(out.size()));
        return out;
    }
    if (node.IsScalar())
        return std::vector<T>(n, as<T>(node, key));
    fail(node, key, "expected a scalar or a list");
}

std::vector<std::string> names(const YAML::Node& node, const std::string& key, const std::string& fallback)
{
    if (!node)
        return {fallback};
    std::vector<std::string> out;
    if (node.IsSequence()) {
        for (const auto& item : node)
            out.push_back(as<std::string>(item, key));
    } else {
        out.push_back(as<std::string>(node, key));
    }
    if (out.empty())
        fail(node, key, "list must not be empty");
    return out;
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& text)
{
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError(std::string("scenario parse error: ") + e.what());
    }
    if (!root.IsMap())
        throw ConfigError("scenario must be a key-value mapping");

    const YAML::Node hops = root["hops"];
    if (!hops)
        throw ConfigError("key 'hops' is required");
    const int K = as<int>(hops, "hops");
    if (K < 1)
        fail(hops, "hops", "must be at least 1");

    const YAML::Node ant = root["antennas"];
    if (!ant)
        throw ConfigError("key 'antennas' is required");
    std::vector<int> M = scalar_or_list<int>(ant, "antennas", K + 1);

    ScenarioConfig sc;
    sc.source = text;
    std::vector<double> rho(K, 1.0);
    if (const YAML::Node pl = root["pathloss"]) {
        if (!pl.IsMap())
            fail(pl, "pathloss", "expected a mapping");
        PathlossModel model;
        if (!pl["distances"])
            fail(pl, "pathloss.distances", "required");
        model.distances = scalar_or_list<double>(pl["distances"], "pathloss.distances", K);
        model.exponent = pl["exponent"] ? as<double>(pl["exponent"], "pathloss.exponent") : 4.0;
        if (!pl["base_snr_db"])
            fail(pl, "pathloss.base_snr_db", "required");
        model.base_snr = db_to_linear(as<double>(pl["base_snr_db"], "pathloss.base_snr_db"));
        sc.pathloss = model;
    } else {
        const YAML::Node snr = root["snr_db"];
        if (!snr)
            throw ConfigError("key 'snr_db' is required when no pathloss model is given");
        for (int k = 0; auto v : scalar_or_list<double>(snr, "snr_db", K))
            rho[k++] = db_to_linear(v);
    }

    BetaMode mode = BetaMode::Auto;
    std::vector<double> beta;
    if (const YAML::Node b = root["beta"]) {
        if (b.IsScalar()) {
            const auto s = as<std::string>(b, "beta");
            if (s == "auto")
                mode = BetaMode::Auto;
            else if (s == "auto_all")
                mode = BetaMode::AutoAll;
            else
                fail(b, "beta", "expected 'auto', 'auto_all' or a list");
        } else {
            mode = BetaMode::Explicit;
            beta = scalar_or_list<double>(b, "beta", K);
        }
    }

    ChannelNorm norm = ChannelNorm::TransmitSide;
    if (const YAML::Node cn = root["channel_norm"]) {
        const auto s = as<std::string>(cn, "channel_norm");
        if (s == "transmit" || s == "transmit_side")
            norm = ChannelNorm::TransmitSide;
        else if (s == "receive" || s == "receive_side")
            norm = ChannelNorm::ReceiveSide;
        else
            fail(cn, "channel_norm", "expected 'transmit' or 'receive'");
    }

    try {
        sc.network = build_network(K, M, rho, mode, norm, beta);
        if (sc.pathloss)
            sc.network = apply_pathloss(sc.network, *sc.pathloss);
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("scenario: ") + e.what());
    }

    sc.constellations = names(root["constellation"], "constellation", "gaussian");
    for (const auto& n : sc.constellations)
        try {
            constellation_from_name(n);
        } catch (const ConfigError&) {
            fail(root["constellation"], "constellation", "unknown constellation '" + n + "'");
        }
    sc.detectors = names(root["detector"], "detector", "jdd");
    for (const auto& n : sc.detectors)
        try {
            detector_from_name(n, Constellation::gaussian());
        } catch (const ConfigError&) {
            fail(root["detector"], "detector", "unknown detector '" + n + "'");
        }
    return sc;
}

ScenarioConfig load_scenario(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open scenario file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

std::string config_hash(const std::string& text)
{
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace afr
