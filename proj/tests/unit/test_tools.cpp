#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "afrelay/errors.hpp"
#include "afrelay/mc/parallel.hpp"
#include "afrelay_tools/commands.hpp"

#ifndef AFRELAY_TEST_PRESET_DIR
#error "AFRELAY_TEST_PRESET_DIR must point at the checked-in presets"
#endif

namespace afr::tools {
namespace {

RunContext context(const std::string& text, std::uint64_t seed = 1)
{
    RunContext ctx;
    ctx.scenario = parse_scenario(text);
    ctx.experiment = parse_experiment(text);
    ctx.source_label = "test";
    ctx.seed = seed;
    return ctx;
}

const char* kSmallRate = R"(
hops: 2
antennas: 4
snr_db: [0, 10]
constellation: [gaussian, qpsk]
detector: [jdd, lmmse]
experiment:
  mode: [jdd, sd]
  sweep: {variable: rho1_db, values: [0, 10]}
  mc:
    realizations: 20
    discrete_realizations: 4
    noise_draws: 4
)";

TEST(Csv, RoundTrip)
{
    CsvDocument doc;
    doc.add_meta("seed", "7");
    doc.add_meta("units", "nats: per antenna");
    doc.columns = {"x", "y", "label"};
    doc.add_row({fmt(0.1), fmt(1.0 / 3.0), "a"});
    doc.add_row({fmt(std::nan("")), fmt(12LL), "b"});
    const auto back = parse_csv(to_string(doc));
    EXPECT_EQ(back.meta, doc.meta);
    EXPECT_EQ(back.columns, doc.columns);
    EXPECT_EQ(back.rows, doc.rows);
    EXPECT_EQ(back.number(0, "x"), 0.1);
    EXPECT_EQ(back.number(0, "y"), 1.0 / 3.0);
    EXPECT_TRUE(std::isnan(back.number(1, "x")));
    EXPECT_EQ(back.text(1, "label"), "b");
    EXPECT_EQ(to_string(doc).rfind("# seed: 7\n", 0), 0u);
}

TEST(Csv, RejectsMalformedRows)
{
    CsvDocument doc;
    doc.columns = {"a", "b"};
    EXPECT_THROW(doc.add_row({"1"}), Error);
    EXPECT_THROW(doc.add_row({"1", "x,y"}), Error);
    EXPECT_THROW(doc.column("c"), Error);
    EXPECT_EQ(fmt(true), "1");
    EXPECT_EQ(fmt(-std::numeric_limits<double>::infinity()), "-inf");
}

TEST(Grid, Parsing)
{
    EXPECT_EQ(parse_grid("0:10:5"), (std::vector<double>{0, 5, 10}));
    EXPECT_EQ(parse_grid("1,2.5,4"), (std::vector<double>{1, 2.5, 4}));
    EXPECT_EQ(parse_grid("-10:30:10").size(), 5u);
    EXPECT_EQ(arithmetic_grid(0, 1, 0.1).back(), 1.0);
    EXPECT_THROW(parse_grid(""), ConfigError);
    EXPECT_THROW(parse_grid("0:10:0"), ConfigError);
}

TEST(Grid, SweepValidation)
{
    EXPECT_THROW(make_sweep(SweepVariable::Rho1Db, {}), ConfigError);
    EXPECT_THROW(make_sweep(SweepVariable::Rho1Db, {0, 5, 5}), ConfigError);
    EXPECT_THROW(make_sweep(SweepVariable::Rho1Db, {0, std::nan("")}), ConfigError);
    EXPECT_THROW(make_sweep(SweepVariable::AntennasUniform, {2, 2.5}), ConfigError);
    EXPECT_THROW(make_sweep(SweepVariable::AntennasUniform, {0, 1}), ConfigError);
    EXPECT_THROW(make_sweep(SweepVariable::Distance, {0, 1}), ConfigError);
    EXPECT_NO_THROW(make_sweep(SweepVariable::RhoAllDb, {10, 5, 0}, SweepDirection::Down));
    EXPECT_EQ(sweep_variable_from_name("rho_all_db"), SweepVariable::RhoAllDb);
    EXPECT_THROW(sweep_variable_from_name("snr"), ConfigError);
    EXPECT_EQ(direction_from_name("both"), SweepDirection::Both);
}

TEST(Experiment, Validation)
{
    auto ctx = context(R"(
hops: 1
antennas: 4
snr_db: 0
constellation: qpsk
detector: lmmse
experiment:
  engine: mc
  sweep: {variable: rho1_db, values: [0]}
  mc: {trials: 0}
)");
    EXPECT_THROW(validate(ctx.experiment, ctx.scenario), ConfigError);
    ctx = context("hops: 1\nantennas: 4\nsnr_db: 0\nexperiment:\n  sweep: {variable: distance, values: [1, 2]}\n");
    EXPECT_THROW(validate(ctx.experiment, ctx.scenario), ConfigError);
    // rho_scale needs one entry per hop
    ctx = context("hops: 2\nantennas: 4\nsnr_db: 0\nexperiment:\n  rho_scale: [1]\n"
                  "  sweep: {variable: rho1_db, values: [0]}\n");
    EXPECT_THROW(validate(ctx.experiment, ctx.scenario), ConfigError);
    EXPECT_EQ(engine_from_name("both"), Engine::Both);
    EXPECT_THROW(engine_from_name("fast"), ConfigError);
}

TEST(Experiment, NetworkAtAppliesTheSweep)
{
    const auto ctx = context("hops: 2\nantennas: 4\nsnr_db: [3, 7]\nexperiment:\n"
                             "  rho_scale: [1, 0.5]\n  sweep: {variable: rho_all_db, values: [10]}\n");
    const auto cfg = network_at(ctx.scenario, ctx.experiment, 10.0);
    EXPECT_NEAR(cfg.rho[0], 10.0, 1e-12);
    EXPECT_NEAR(cfg.rho[1], 5.0, 1e-12);
    EXPECT_NE(point_seed(1, 0, 0), point_seed(1, 0, 1));
    EXPECT_NE(point_seed(1, 0, 0), point_seed(1, 1, 0));
    EXPECT_EQ(point_seed(3, 2, 1), point_seed(3, 2, 1));
}

TEST(Presets, AllParseAndValidate)
{
    for (const char* name : {"fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "decoupling"}) {
        SCOPED_TRACE(name);
        const auto ctx = load_context(preset_path(AFRELAY_TEST_PRESET_DIR, name), name);
        EXPECT_NO_THROW(validate(ctx.experiment, ctx.scenario));
    }
    EXPECT_THROW(preset_path(AFRELAY_TEST_PRESET_DIR, "fig9"), ConfigError);
}

TEST(Presets, FigureSettings)
{
    const auto dir = std::string(AFRELAY_TEST_PRESET_DIR);
    const auto f2 = load_context(preset_path(dir, "fig2"), "fig2");
    EXPECT_EQ(f2.scenario.network.K, 3);
    EXPECT_EQ(f2.scenario.network.M, (std::vector<int>{8, 8, 8, 8}));
    EXPECT_EQ(f2.experiment.sweep.grid.front(), -10.0);
    EXPECT_EQ(f2.experiment.sweep.grid.back(), 30.0);
    const auto f4 = load_context(preset_path(dir, "fig4"), "fig4");
    EXPECT_TRUE(f4.scenario.pathloss.has_value());
    EXPECT_EQ(f4.experiment.hop_counts, (std::vector<int>{1, 2, 3}));
    const auto f6 = load_context(preset_path(dir, "fig6"), "fig6");
    EXPECT_EQ(f6.scenario.network.M, (std::vector<int>{4, 6, 8, 12}));
    EXPECT_EQ(f6.experiment.rho_scale, (std::vector<double>{1, 0.7, 0.5}));
    const auto f8 = load_context(preset_path(dir, "fig8"), "fig8");
    EXPECT_EQ(f8.scenario.network.M, (std::vector<int>{10, 9, 8, 7}));
    EXPECT_EQ(f8.experiment.sweep.direction, SweepDirection::Both);
}

TEST(Commands, MissingScenarioFile)
{
    EXPECT_THROW(load_context("/nonexistent/scenario.yaml", "x"), ConfigError);
}

TEST(Commands, RateOutputIsReproducibleAcrossThreadCounts)
{
    const int saved = default_threads();
    set_default_threads(1);
    const auto a = cmd_rate(context(kSmallRate, 9));
    const auto b = cmd_rate(context(kSmallRate, 9));
    set_default_threads(3);
    const auto c = cmd_rate(context(kSmallRate, 9));
    set_default_threads(saved);
    EXPECT_EQ(a.columns, rate_columns());
    EXPECT_EQ(body_string(a), body_string(b));
    EXPECT_EQ(body_string(a), body_string(c));
    EXPECT_NE(body_string(a), body_string(cmd_rate(context(kSmallRate, 10))));
    // 2 points x 2 constellations x (jdd + sd lmmse)
    EXPECT_EQ(a.rows.size(), 8u);
}

TEST(Commands, RateRowsAreConsistent)
{
    const auto doc = cmd_rate(context(kSmallRate));
    for (std::size_t r = 0; r < doc.rows.size(); ++r) {
        EXPECT_NEAR(doc.number(r, "rate_bits"), doc.number(r, "rate_nats") / std::log(2.0), 1e-12);
        EXPECT_EQ(doc.text(r, "converged"), "1");
        if (doc.text(r, "mode") == "jdd") {
            EXPECT_GE(doc.number(r, "loss_nats"), -1e-9);
            EXPECT_GT(doc.number(r, "mc_trials"), 0);
        }
    }
}

TEST(Commands, DistanceEnvelope)
{
    const char* text = R"(
hops: 3
antennas: 8
pathloss: {distances: [1, 1, 1], exponent: 4, base_snr_db: 10}
constellation: qpsk
experiment:
  hop_counts: [1, 2, 3]
  sweep: {variable: distance, values: [0.5, 4]}
)";
    const auto doc = cmd_distance(context(text));
    ASSERT_EQ(doc.rows.size(), 2u);
    EXPECT_EQ(doc.number(0, "best_hops"), 1);
    EXPECT_GT(doc.number(1, "best_hops"), 1);
    for (std::size_t r = 0; r < 2; ++r) {
        const double best = doc.number(r, "best_rate_nats");
        for (int k : {1, 2, 3})
            EXPECT_LE(doc.number(r, "rate_k" + std::to_string(k) + "_nats"), best);
    }
    auto single = context(text);
    single.experiment.hop_counts = {2};
    const auto one = cmd_distance(single);
    for (std::size_t r = 0; r < one.rows.size(); ++r) {
        EXPECT_EQ(one.number(r, "best_hops"), 2);
        EXPECT_EQ(one.number(r, "best_rate_nats"), one.number(r, "rate_k2_nats"));
    }
}

TEST(Commands, BerHysteresisColumns)
{
    const char* text = R"(
hops: 3
antennas: [10, 9, 8, 7]
snr_db: 0
constellation: qpsk
detector: map
experiment:
  sweep: {variable: rho_all_db, values: [10, 17, 18.5, 20], direction: both}
)";
    const auto doc = cmd_ber(context(text));
    ASSERT_EQ(doc.rows.size(), 4u);
    bool differ = false;
    for (std::size_t r = 0; r < doc.rows.size(); ++r) {
        const double up = doc.number(r, "up_ber"), down = doc.number(r, "down_ber");
        EXPECT_TRUE(std::isfinite(up) && std::isfinite(down));
        EXPECT_LE(doc.number(r, "minf_free_energy"), std::min(doc.number(r, "up_free_energy"),
                                                              doc.number(r, "down_free_energy")) + 1e-12);
        differ = differ || std::abs(up - down) > 1e-4;
    }
    EXPECT_TRUE(differ);
    EXPECT_NEAR(doc.number(0, "up_ber"), doc.number(0, "down_ber"), 1e-10);
}

TEST(Commands, BerNeedsQpsk)
{
    EXPECT_THROW(cmd_ber(context("hops: 1\nantennas: 4\nsnr_db: 0\nconstellation: gaussian\ndetector: lmmse\n"
                                 "experiment:\n  sweep: {variable: rho1_db, values: [0]}\n")),
                 ConfigError);
}

TEST(Commands, PlotScriptReferencesTheCsv)
{
    for (const char* cmd : {"rate", "distance", "ber", "decoupling"}) {
        const auto s = plot_script(cmd, "out/run.csv");
        EXPECT_NE(s.find("matplotlib"), std::string::npos);
        EXPECT_NE(s.find("out/run.csv"), std::string::npos);
    }
}

}  // namespace
}  // namespace afr::tools
