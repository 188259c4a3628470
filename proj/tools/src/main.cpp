#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"

#include "afrelay/errors.hpp"
#include "afrelay/mc/parallel.hpp"
#include "afrelay_tools/acceptance.hpp"
#include "afrelay_tools/commands.hpp"

namespace {

using namespace afr::tools;

struct Globals {
    std::uint64_t seed = 1;
    int threads = 0;
    std::string out;
    std::string preset;
    std::string preset_dir = AFRELAY_DEFAULT_PRESET_DIR;
};

struct Overrides {
    std::string scenario;
    std::string grid;
    std::string direction;
    std::vector<std::string> modes;
    std::vector<int> hops;
    std::string engine;
    std::optional<int> trials;
    std::optional<int> realizations;
    std::optional<int> vectors;
    std::optional<bool> mc;
    std::string plot_script;
};

RunContext context(const Globals& g, const Overrides& o)
{
    RunContext ctx;
    if (!o.scenario.empty() && !g.preset.empty())
        throw afr::ConfigError("give either a scenario file or --preset, not both");
    if (!o.scenario.empty())
        ctx = load_context(o.scenario, o.scenario);
    else if (!g.preset.empty())
        ctx = load_context(preset_path(g.preset_dir, g.preset), "preset " + g.preset);
    else
        throw afr::ConfigError("no scenario: pass a scenario file or --preset fig2..fig8");
    auto& ex = ctx.experiment;
    if (!o.grid.empty() || !o.direction.empty())
        ex.sweep = make_sweep(ex.sweep.variable, o.grid.empty() ? ex.sweep.grid : parse_grid(o.grid),
                              o.direction.empty() ? ex.sweep.direction : direction_from_name(o.direction));
    if (!o.modes.empty())
        ex.modes = o.modes;
    if (!o.hops.empty())
        ex.hop_counts = o.hops;
    if (!o.engine.empty())
        ex.engine = engine_from_name(o.engine);
    if (o.trials)
        ex.mc.trials = *o.trials;
    if (o.realizations) {
        ex.mc.realizations = *o.realizations;
        ex.mc.discrete_realizations = *o.realizations;
    }
    if (o.vectors)
        ex.mc.vectors_per_trial = *o.vectors;
    if (o.mc)
        ex.mc.enabled = *o.mc;
    ctx.seed = g.seed;
    ctx.log = &std::cerr;
    return ctx;
}

void emit(const Globals& g, const Overrides& o, const std::string& command, const CsvDocument& doc)
{
    if (g.out.empty() || g.out == "-") {
        write_csv(std::cout, doc);
    } else {
        std::ofstream f(g.out);
        if (!f)
            throw afr::Error("cannot write '" + g.out + "'");
        write_csv(f, doc);
    }
    if (!o.plot_script.empty()) {
        std::ofstream f(o.plot_script);
        if (!f)
            throw afr::Error("cannot write '" + o.plot_script + "'");
        f << plot_script(command, g.out.empty() ? "out.csv" : g.out);
    }
}

void scenario_options(CLI::App* sub, Overrides& o)
{
    sub->add_option("scenario", o.scenario, "Scenario YAML file (or use --preset)");
    sub->add_option("--grid", o.grid, "Sweep grid override, from:to:step or a,b,c");
    sub->add_option("--plot-script", o.plot_script, "Also write a matplotlib script for the CSV");
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Large-system analysis of multi-hop amplify-and-forward MIMO relay channels"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    Overrides o;
    app.add_option("--seed", g.seed, "Master seed for Monte Carlo runs")->capture_default_str();
    app.add_option("--threads", g.threads, "Worker threads (0 = hardware concurrency)")->capture_default_str();
    app.add_option("--out", g.out, "Output file (CSV, or JSON for validate); stdout when omitted");
    app.add_option("--preset", g.preset, "Checked-in scenario: fig2 ... fig8")
        ->check(CLI::IsMember({"fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "decoupling"}));
    app.add_option("--preset-dir", g.preset_dir, "Directory holding the preset files")->capture_default_str();
    app.set_version_flag("--version", std::string("afrelay ") + kToolVersion);

    auto* rate = app.add_subcommand("rate", "Achievable rate (JDD or separate decoding) over a sweep");
    scenario_options(rate, o);
    rate->add_option("--mode", o.modes, "jdd and/or sd")->check(CLI::IsMember({"jdd", "sd"}));
    rate->add_flag("--mc,!--no-mc", o.mc, "Toggle the Monte Carlo reference");
    rate->add_option("--realizations", o.realizations, "Channel realizations per MC point");

    auto* distance = app.add_subcommand("distance", "Rate versus source-destination distance for several hop counts");
    scenario_options(distance, o);
    distance->add_option("--hops", o.hops, "Hop counts to compare");

    auto* ber_cmd = app.add_subcommand("ber", "Uncoded QPSK bit error rate per detector");
    scenario_options(ber_cmd, o);
    ber_cmd->add_option("--engine", o.engine, "replica, mc or both")->check(CLI::IsMember({"replica", "mc", "both"}));
    ber_cmd->add_option("--trials", o.trials, "Channel realizations per MC point");
    ber_cmd->add_option("--vectors", o.vectors, "Transmitted vectors per realization");
    ber_cmd->add_option("--direction", o.direction, "up, down or both (hysteresis columns)")
        ->check(CLI::IsMember({"up", "down", "both"}));

    auto* dec = app.add_subcommand("decoupling", "Per-stream moments of the detector output vs the scalar channel");
    scenario_options(dec, o);
    dec->add_option("--trials", o.trials, "Channel realizations per point");
    dec->add_option("--vectors", o.vectors, "Transmitted vectors per realization");

    auto* val = app.add_subcommand("validate", "Run the acceptance suite and print one line per criterion");
    AcceptanceOptions aopts;
    std::string val_scenario;
    val->add_option("scenario", val_scenario, "Also check fixed-point fidelity on this scenario");
    val->add_flag("--quick", aopts.quick, "Fixed-point, oracle, identity and I-MMSE checks only");
    val->add_option("--only", aopts.only, "Run only these criterion numbers")->check(CLI::Range(1, 10));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        afr::set_default_threads(g.threads > 0 ? g.threads : static_cast<int>(std::thread::hardware_concurrency()));
        if (rate->parsed())
            emit(g, o, "rate", cmd_rate(context(g, o)));
        else if (distance->parsed())
            emit(g, o, "distance", cmd_distance(context(g, o)));
        else if (ber_cmd->parsed())
            emit(g, o, "ber", cmd_ber(context(g, o)));
        else if (dec->parsed())
            emit(g, o, "decoupling", cmd_decoupling(context(g, o)));
        else if (val->parsed()) {
            aopts.seed = g.seed;
            std::optional<afr::ScenarioConfig> sc;
            if (!val_scenario.empty())
                sc = afr::load_scenario(val_scenario);
            else if (!g.preset.empty())
                sc = afr::load_scenario(preset_path(g.preset_dir, g.preset));
            std::vector<CriterionResult> results;
            auto print = [&](const CriterionResult& r) {
                std::cout << format_line(r) << std::endl;
                results.push_back(r);
            };
            if (sc)
                print(check_scenario(*sc));
            run_acceptance(aopts, print);
            const auto report = to_json(results, aopts);
            if (!g.out.empty()) {
                std::ofstream f(g.out);
                if (!f)
                    throw afr::Error("cannot write '" + g.out + "'");
                f << report.dump(2) << '\n';
            }
            int failed = 0;
            for (const auto& r : results)
                failed += !r.passed;
            std::cout << (failed ? "FAILED " : "PASSED ") << results.size() - failed << "/" << results.size()
                      << std::endl;
            return failed ? 1 : 0;
        }
    } catch (const afr::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const afr::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
