#include "afrelay_tools/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <Eigen/Core>
#include <boost/version.hpp>

#include "afrelay/errors.hpp"
#include "afrelay/math.hpp"
#include "afrelay/mc/estimators.hpp"
#include "afrelay/mc/parallel.hpp"
#include "afrelay/performance.hpp"
#include "afrelay/scalar_channel.hpp"

namespace afr::tools {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string versions()
{
    std::ostringstream ss;
    ss << "afrelay " << kToolVersion << "; eigen " << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.'
       << EIGEN_MINOR_VERSION << "; boost " << BOOST_VERSION / 100000 << '.' << BOOST_VERSION / 100 % 1000 << '.'
       << BOOST_VERSION % 100;
    return ss.str();
}

CsvDocument start(const RunContext& ctx, const std::string& command, std::vector<std::string> columns)
{
    CsvDocument doc;
    doc.add_meta("afrelay", kToolVersion);
    doc.add_meta("command", command);
    doc.add_meta("scenario", ctx.source_label);
    doc.add_meta("config_hash", config_hash(ctx.scenario.source));
    doc.add_meta("seed", std::to_string(ctx.seed));
    doc.add_meta("sweep", to_string(ctx.experiment.sweep.variable) + " (" +
                              std::to_string(ctx.experiment.sweep.grid.size()) + " points, " +
                              to_string(ctx.experiment.sweep.direction) + ")");
    doc.add_meta("tdma", ctx.experiment.tdma ? "1/K" : "off");
    doc.add_meta("units", "rates in nats and bits per source antenna per channel use");
    doc.add_meta("versions", versions());
    doc.columns = std::move(columns);
    return doc;
}

void report(const RunContext& ctx, const std::string& what, const std::exception& e)
{
    if (ctx.log)
        *ctx.log << "warning: " << what << ": " << e.what() << '\n';
}

bool selected(const std::optional<std::vector<std::string>>& list, const std::string& name)
{
    return !list || std::find(list->begin(), list->end(), name) != list->end();
}

bool enumerable(const Constellation& c, int M0)
{
    double n = 1;
    for (int i = 0; i < M0; ++i)
        n *= static_cast<double>(c.size());
    return n <= static_cast<double>(mc::kEnumerationLimit);
}

struct Series {
    std::string label;
    bool shifted = false;
    double rho1_db = 0;
};

std::vector<Series> series_of(const ExperimentSpec& spec)
{
    if (spec.series_rho1_db.empty())
        return {{"base", false, 0}};
    std::vector<Series> out;
    for (double v : spec.series_rho1_db)
        out.push_back({"rho1_db=" + fmt(v), true, v});
    return out;
}

NetworkConfig network_for(const RunContext& ctx, const Series& s, double x)
{
    return s.shifted ? network_at(ctx.scenario, ctx.experiment, x, s.rho1_db)
                     : network_at(ctx.scenario, ctx.experiment, x);
}

struct RatePoint {
    double rate = kNaN, free_energy = kNaN, loss = kNaN;
    int branches = 0;
    bool converged = false;
};

struct RateCombo {
    std::string constellation, mode, detector;
};

RatePoint replica_rate(const NetworkConfig& cfg, const Constellation& prior, const RateCombo& combo, bool tdma)
{
    RatePoint p;
    const double f = tdma_factor(cfg, tdma);
    if (combo.mode == "jdd") {
        const JddResult r = jdd_analysis(cfg, prior);
        p.rate = r.rate * f;
        p.loss = sd_loss(r, cfg) * f;
        p.free_energy = r.source_branch.free_energy;
        p.branches = r.branch_count;
        p.converged = r.source_branch.converged && r.noise_branch.converged;
    } else {
        const DetectorSpec det = detector_from_name(combo.detector, prior);
        const BranchSet set = solve_branches(cfg, det, prior);
        const SolutionBranch& b = set.stable();
        p.rate = sd_rate_scalar(cfg.gain(), b.state.eta[0], prior) * f;
        p.free_energy = b.free_energy;
        p.branches = static_cast<int>(set.branches.size());
        p.converged = b.converged;
    }
    return p;
}

}  // namespace

std::string preset_path(const std::string& preset_dir, const std::string& name)
{
    namespace fs = std::filesystem;
    fs::path p = fs::path(preset_dir) / (name + ".yaml");
    if (!fs::exists(p))
        throw ConfigError("unknown preset '" + name + "' (looked for " + p.string() + ")");
    return p.string();
}

RunContext load_context(const std::string& path, const std::string& label)
{
    RunContext ctx;
    ctx.scenario = load_scenario(path);
    ctx.experiment = parse_experiment(ctx.scenario.source);
    ctx.source_label = label;
    return ctx;
}

const std::vector<std::string>& rate_columns()
{
    static const std::vector<std::string> cols{
        "series",     "x",          "constellation",  "mode",         "detector",
        "rate_nats",  "rate_bits",  "branch_count",   "free_energy",  "converged",
        "loss_nats",  "loss_bits",  "mc_rate_nats",   "mc_rate_bits", "mc_std_error_nats",
        "mc_trials"};
    return cols;
}

const std::vector<std::string>& ber_columns()
{
    static const std::vector<std::string> cols{
        "detector",       "x",                    "replica_ber",     "branch_count",   "free_energy",
        "converged",      "mc_ber",               "mc_std_error",    "mc_binomial_std_error",
        "mc_bits",        "lower_bound",          "up_ber",          "up_free_energy", "down_ber",
        "down_free_energy", "minf_ber",           "minf_free_energy"};
    return cols;
}

const std::vector<std::string>& decoupling_columns()
{
    static const std::vector<std::string> cols{
        "detector",  "x",        "eta1",          "samples",     "mse",          "mse_std_error",
        "pred_mse",  "z_mse",    "est_power",     "est_power_std_error",         "pred_est_power",
        "cross_re",  "cross_re_std_error",        "pred_cross_re", "cross_im",   "cross_im_std_error",
        "pred_cross_im"};
    return cols;
}

std::vector<std::string> distance_columns(const std::vector<int>& hop_counts)
{
    std::vector<std::string> cols{"distance"};
    for (int K : hop_counts) {
        cols.push_back("rate_k" + std::to_string(K) + "_nats");
        cols.push_back("rate_k" + std::to_string(K) + "_bits");
        cols.push_back("converged_k" + std::to_string(K));
    }
    cols.insert(cols.end(), {"best_hops", "best_rate_nats", "best_rate_bits"});
    return cols;
}

CsvDocument cmd_rate(const RunContext& ctx)
{
    const auto& spec = ctx.experiment;
    validate(spec, ctx.scenario);
    CsvDocument doc = start(ctx, "rate", rate_columns());

    std::vector<RateCombo> combos;
    for (const auto& c : ctx.scenario.constellations)
        for (const auto& mode : spec.modes) {
            if (mode == "jdd") {
                combos.push_back({c, "jdd", "jdd"});
                continue;
            }
            bool any = false;
            for (const auto& d : ctx.scenario.detectors)
                if (d != "jdd") {
                    combos.push_back({c, "sd", d});
                    any = true;
                }
            if (!any)
                combos.push_back({c, "sd", "map"});
        }

    const auto series = series_of(spec);
    const auto& grid = spec.sweep.grid;
    const std::size_t n = series.size() * combos.size() * grid.size();
    std::vector<RatePoint> points(n);
    auto unpack = [&](std::size_t i, std::size_t& s, std::size_t& c, std::size_t& x) {
        x = i % grid.size();
        c = i / grid.size() % combos.size();
        s = i / grid.size() / combos.size();
    };
    parallel_for(n, [&](std::size_t i) {
        std::size_t s, c, x;
        unpack(i, s, c, x);
        try {
            const NetworkConfig cfg = network_for(ctx, series[s], grid[x]);
            points[i] = replica_rate(cfg, constellation_from_name(combos[c].constellation), combos[c], spec.tdma);
        } catch (const Error& e) {
            report(ctx, "rate at x=" + fmt(grid[x]), e);
        }
    });

    // Monte Carlo reference for JDD rows; channel draws are shared across priors at each point.
    std::vector<mc::McEstimate> mc_est(n);
    std::vector<bool> has_mc(n, false);
    if (spec.mc.enabled) {
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t s, c, x;
            unpack(i, s, c, x);
            const auto& combo = combos[c];
            if (combo.mode != "jdd" || !selected(spec.mc.constellations, combo.constellation))
                continue;
            const NetworkConfig cfg = network_for(ctx, series[s], grid[x]);
            const Constellation prior = constellation_from_name(combo.constellation);
            const std::uint64_t seed = point_seed(ctx.seed, s, x);
            try {
                if (prior.is_gaussian()) {
                    mc_est[i] = mc::mc_mi_gaussian(cfg, spec.mc.realizations, seed);
                } else if (enumerable(prior, cfg.M[0])) {
                    mc_est[i] = mc::mc_mi_discrete(cfg, prior, spec.mc.discrete_realizations,
                                                   spec.mc.noise_draws, seed);
                } else {
                    if (ctx.log)
                        *ctx.log << "note: " << combo.constellation << " with M0=" << cfg.M[0]
                                 << " exceeds the enumeration limit; no MC rate at x=" << fmt(grid[x]) << '\n';
                    continue;
                }
                has_mc[i] = true;
            } catch (const Error& e) {
                report(ctx, "MC rate at x=" + fmt(grid[x]), e);
            }
        }
    }

    for (std::size_t i = 0; i < n; ++i) {
        std::size_t s, c, x;
        unpack(i, s, c, x);
        const NetworkConfig cfg = network_for(ctx, series[s], grid[x]);
        const double f = tdma_factor(cfg, spec.tdma);
        const auto& p = points[i];
        const double mc_rate = has_mc[i] ? mc_est[i].mean * f : kNaN;
        doc.add_row({series[s].label, fmt(grid[x]), combos[c].constellation, combos[c].mode, combos[c].detector,
                     fmt(p.rate), fmt(nats_to_bits(p.rate)), fmt(p.branches), fmt(p.free_energy), fmt(p.converged),
                     fmt(p.loss), fmt(nats_to_bits(p.loss)), fmt(mc_rate), fmt(nats_to_bits(mc_rate)),
                     fmt(has_mc[i] ? mc_est[i].std_error * f : kNaN), fmt(has_mc[i] ? mc_est[i].trials : 0)});
    }
    return doc;
}

CsvDocument cmd_distance(const RunContext& ctx)
{
    const auto& spec = ctx.experiment;
    if (spec.sweep.variable != SweepVariable::Distance)
        throw ConfigError("the distance command needs a 'distance' sweep");
    validate(spec, ctx.scenario);
    std::vector<int> hops = spec.hop_counts;
    if (hops.empty())
        hops.push_back(ctx.scenario.network.K);
    CsvDocument doc = start(ctx, "distance", distance_columns(hops));

    const auto& base = ctx.scenario.network;
    const auto& pl = *ctx.scenario.pathloss;
    const Constellation prior = ctx.scenario.prior();
    const std::string mode = spec.modes.front();
    std::string det_name = "map";
    for (const auto& d : ctx.scenario.detectors)
        if (d != "jdd") {
            det_name = d;
            break;
        }
    const RateCombo combo{prior.name(), mode, mode == "jdd" ? "jdd" : det_name};
    const BetaMode beta_mode = base.beta_mode == BetaMode::Explicit ? BetaMode::Auto : base.beta_mode;

    const auto& grid = spec.sweep.grid;
    const std::size_t n = hops.size() * grid.size();
    std::vector<RatePoint> points(n);
    parallel_for(n, [&](std::size_t i) {
        const int K = hops[i / grid.size()];
        const double d = grid[i % grid.size()];
        try {
            NetworkConfig cfg = build_network(K, std::vector<int>(K + 1, base.M[0]), std::vector<double>(K, 1.0),
                                              beta_mode, base.channel_norm);
            cfg = apply_pathloss(cfg, equidistant(K, d, pl.exponent, pl.base_snr));
            points[i] = replica_rate(cfg, prior, combo, spec.tdma);
        } catch (const Error& e) {
            report(ctx, "distance " + fmt(d) + " with K=" + std::to_string(K), e);
        }
    });

    for (std::size_t x = 0; x < grid.size(); ++x) {
        std::vector<std::string> row{fmt(grid[x])};
        int best = 0;
        double best_rate = kNaN;
        for (std::size_t h = 0; h < hops.size(); ++h) {
            const auto& p = points[h * grid.size() + x];
            row.push_back(fmt(p.rate));
            row.push_back(fmt(nats_to_bits(p.rate)));
            row.push_back(fmt(p.converged));
            if (!std::isnan(p.rate) && (std::isnan(best_rate) || p.rate > best_rate)) {
                best_rate = p.rate;
                best = hops[h];
            }
        }
        row.push_back(fmt(best));
        row.push_back(fmt(best_rate));
        row.push_back(fmt(nats_to_bits(best_rate)));
        doc.add_row(std::move(row));
    }
    return doc;
}

CsvDocument cmd_ber(const RunContext& ctx)
{
    const auto& spec = ctx.experiment;
    validate(spec, ctx.scenario);
    const Constellation prior = ctx.scenario.prior();
    if (!prior.is_qpsk())
        throw ConfigError("the ber command needs constellation: qpsk");
    CsvDocument doc = start(ctx, "ber", ber_columns());

    std::vector<std::string> dets;
    for (const auto& d : ctx.scenario.detectors)
        dets.push_back(d == "jdd" ? "map" : d);
    const auto& grid = spec.sweep.grid;
    std::vector<NetworkConfig> nets;
    for (double x : grid)
        nets.push_back(network_at(ctx.scenario, spec, x));

    const bool replica = spec.engine != Engine::Mc;
    const bool simulate = spec.engine != Engine::Replica;
    const std::size_t n = dets.size() * grid.size();

    struct Point {
        double ber = kNaN, free_energy = kNaN;
        int branches = 0;
        bool converged = false;
        bool has_mc = false;
        mc::BerEstimate mc;
        double up_ber = kNaN, up_f = kNaN, down_ber = kNaN, down_f = kNaN, minf_ber = kNaN, minf_f = kNaN;
    };
    std::vector<Point> pts(n);

    if (replica) {
        parallel_for(n, [&](std::size_t i) {
            const std::size_t x = i % grid.size();
            try {
                const DetectorSpec det = detector_from_name(dets[i / grid.size()], prior);
                const BranchSet set = solve_branches(nets[x], det, prior);
                const auto& b = set.stable();
                pts[i].ber = ber_from_eta(nets[x], b.state.eta[0]);
                pts[i].free_energy = b.free_energy;
                pts[i].branches = static_cast<int>(set.branches.size());
                pts[i].converged = b.converged;
            } catch (const Error& e) {
                report(ctx, dets[i / grid.size()] + " BER at x=" + fmt(grid[x]), e);
            }
        });
        if (spec.sweep.direction == SweepDirection::Both) {
            // Warm-started sweeps follow the grid in SNR order, which is sequential by nature.
            const bool increasing = grid.size() < 2 || grid[1] > grid[0];
            std::vector<NetworkConfig> ordered = nets;
            if (!increasing)
                std::reverse(ordered.begin(), ordered.end());
            for (std::size_t d = 0; d < dets.size(); ++d) {
                try {
                    const DetectorSpec det = detector_from_name(dets[d], prior);
                    const auto up = hysteresis_sweep(ordered, det, prior, afr::SweepDirection::Up);
                    const auto down = hysteresis_sweep(ordered, det, prior, afr::SweepDirection::Down);
                    for (std::size_t j = 0; j < grid.size(); ++j) {
                        const std::size_t x = increasing ? j : grid.size() - 1 - j;
                        auto& p = pts[d * grid.size() + x];
                        p.up_ber = ber_from_eta(nets[x], up[j].continued.state.eta[0]);
                        p.up_f = up[j].continued.free_energy;
                        p.down_ber = ber_from_eta(nets[x], down[j].continued.state.eta[0]);
                        p.down_f = down[j].continued.free_energy;
                        p.minf_ber = ber_from_eta(nets[x], up[j].min_f.state.eta[0]);
                        p.minf_f = up[j].min_f.free_energy;
                    }
                } catch (const Error& e) {
                    report(ctx, dets[d] + " hysteresis sweep", e);
                }
            }
        }
    }

    std::vector<double> lower(grid.size(), kNaN);
    if (simulate) {
        for (std::size_t x = 0; x < grid.size(); ++x) {
            const std::uint64_t seed = point_seed(ctx.seed, 0, x);
            lower[x] = mc::mc_lower_bound(nets[x], spec.mc.trials, seed);
            for (std::size_t d = 0; d < dets.size(); ++d) {
                if (!selected(spec.mc.detectors, dets[d]))
                    continue;
                const DetectorSpec det = detector_from_name(dets[d], prior);
                if (!det.linear() && !enumerable(prior, nets[x].M[0])) {
                    if (ctx.log)
                        *ctx.log << "note: " << dets[d] << " with M0=" << nets[x].M[0]
                                 << " exceeds the enumeration limit; no MC BER\n";
                    continue;
                }
                try {
                    auto& p = pts[d * grid.size() + x];
                    p.mc = mc::mc_ber(nets[x], det, prior, spec.mc.trials, seed, spec.mc.vectors_per_trial);
                    p.has_mc = true;
                } catch (const Error& e) {
                    report(ctx, dets[d] + " MC BER at x=" + fmt(grid[x]), e);
                }
            }
        }
    }

    for (std::size_t d = 0; d < dets.size(); ++d)
        for (std::size_t x = 0; x < grid.size(); ++x) {
            const auto& p = pts[d * grid.size() + x];
            doc.add_row({dets[d], fmt(grid[x]), fmt(p.ber), fmt(p.branches), fmt(p.free_energy), fmt(p.converged),
                         fmt(p.has_mc ? p.mc.estimate.mean : kNaN), fmt(p.has_mc ? p.mc.estimate.std_error : kNaN),
                         fmt(p.has_mc ? p.mc.binomial_std_error : kNaN), fmt(p.has_mc ? p.mc.bits : 0LL),
                         fmt(lower[x]), fmt(p.up_ber), fmt(p.up_f), fmt(p.down_ber), fmt(p.down_f),
                         fmt(p.minf_ber), fmt(p.minf_f)});
        }
    return doc;
}

CsvDocument cmd_decoupling(const RunContext& ctx)
{
    const auto& spec = ctx.experiment;
    validate(spec, ctx.scenario);
    if (spec.mc.trials < 1)
        throw ConfigError("key 'experiment.mc.trials': decoupling needs at least one trial");
    CsvDocument doc = start(ctx, "decoupling", decoupling_columns());
    const Constellation prior = ctx.scenario.prior();
    const auto& grid = spec.sweep.grid;
    for (const auto& name : ctx.scenario.detectors) {
        const DetectorSpec det = detector_from_name(name == "jdd" ? "map" : name, prior);
        for (std::size_t x = 0; x < grid.size(); ++x) {
            const NetworkConfig cfg = network_at(ctx.scenario, spec, grid[x]);
            try {
                const auto r = mc::mc_decoupling(cfg, det, prior, spec.mc.trials, point_seed(ctx.seed, 0, x),
                                                 spec.mc.vectors_per_trial);
                const double z = (r.mse.mean - r.pred_mse) / r.mse.std_error;
                doc.add_row({name, fmt(grid[x]), fmt(r.eta1), fmt(r.samples), fmt(r.mse.mean),
                             fmt(r.mse.std_error), fmt(r.pred_mse), fmt(z), fmt(r.est_power.mean),
                             fmt(r.est_power.std_error), fmt(r.pred_est_power), fmt(r.cross_re.mean),
                             fmt(r.cross_re.std_error), fmt(r.pred_cross_re), fmt(r.cross_im.mean),
                             fmt(r.cross_im.std_error), fmt(r.pred_cross_im)});
            } catch (const Error& e) {
                report(ctx, name + " decoupling at x=" + fmt(grid[x]), e);
                std::vector<std::string> row{name, fmt(grid[x])};
                row.resize(decoupling_columns().size(), "nan");
                row[3] = "0";
                doc.add_row(std::move(row));
            }
        }
    }
    return doc;
}

}  // namespace afr::tools
