#include <wsnprio/config.hpp>

#include <gtest/gtest.h>

using namespace wsnprio;

namespace
{
    std::size_t error_line(const std::string &text)
    {
        try
        {
            parse_config_text(text);
        }
        catch (const ConfigError &e)
        {
            return e.line();
        }
        ADD_FAILURE() << "expected ConfigError for:\n" << text;
        return 0;
    }
} // namespace

TEST(Config, EmptyTextGivesDefaults)
{
    const auto c = parse_config_text("");
    EXPECT_EQ(c, SimConfig{});
    EXPECT_EQ(c.nodes, 32u);
    EXPECT_EQ(c.k_max, 3u);
    EXPECT_EQ(c.edca.retry_limit, 7);
    EXPECT_EQ(c.counts, (std::vector<std::size_t>{32, 64, 128, 256}));
}

TEST(Config, ParsesSectionsAndTables)
{
    const auto c = parse_config_text(R"(
# comment
[run]
seed = 42
nodes = 64
terrain_m = 750 600
sink = 10 20
mode = baseline   # trailing comment
duration_s = 12.5

[edca]
0 2 3 7
3 9 31 1023

[traffic]
1 4.5 0.002 exp:2000

[grid]
p1 0 100 0.001 exp
p1 2 50 0.002 det

[output]
svg = yes
)");
    EXPECT_EQ(c.seed, 42u);
    EXPECT_EQ(c.nodes, 64u);
    EXPECT_EQ(c.terrain.width_m, 750.0);
    EXPECT_EQ(c.terrain.height_m, 600.0);
    ASSERT_TRUE(std::holds_alternative<SinkAt>(c.sink));
    EXPECT_EQ(c.mode, RunModes::Baseline);
    EXPECT_EQ(c.duration_s, 12.5);
    EXPECT_EQ(c.edca.classes[0].cw_max, 7);
    EXPECT_EQ(c.edca.classes[3].aifs_slots, 9);
    EXPECT_EQ(c.loads[1].lambda_pps, 4.5);
    EXPECT_NEAR(c.loads[1].second_moment_service_s2, 2 * 0.002 * 0.002, 1e-18);
    ASSERT_EQ(c.grid.size(), 2u);
    EXPECT_EQ(service_shape(c.grid[1].load), ServiceShape::Deterministic);
    EXPECT_TRUE(c.svg);
}

TEST(Config, EchoRoundTrips)
{
    const auto c = parse_config_text(R"(
[run]
seed = 3
sink = corner
[traffic]
0 3.3333333333333335 0.000704 fixed:1024
[grid]
a 0 123.456 0.001 exp
a 3 7 0.01 det
[sweep]
counts = 10 20
terrains_m = 100 200
load_scale = 0.25 3
)");
    const auto text = echo_config(c);
    const auto back = parse_config_text(text);
    EXPECT_EQ(back, c);
    EXPECT_EQ(echo_config(back), text);
}

TEST(Config, ErrorsCarryLineNumbers)
{
    EXPECT_EQ(error_line("[run]\nseed = 1\nbogus = 2\n"), 3u);
    EXPECT_EQ(error_line("[nope]\n"), 1u);
    EXPECT_EQ(error_line("seed = 1\n"), 1u);
    EXPECT_EQ(error_line("[run]\n\nseed =\n"), 3u);
    EXPECT_EQ(error_line("[run]\nnodes = x\n"), 2u);
    EXPECT_EQ(error_line("[edca]\n0 2 3\n"), 2u);
    EXPECT_EQ(error_line("[edca]\n0 2 3 7\n0 2 3 7\n"), 3u);
    EXPECT_EQ(error_line("[traffic]\n4 1 1 fixed:10\n"), 2u);
    EXPECT_EQ(error_line("[traffic]\n0 1 1 gamma:10\n"), 2u);
    EXPECT_EQ(error_line("[grid]\np 0 1 1 exp\np 0 2 1 exp\n"), 3u);
    EXPECT_EQ(error_line("[run\n"), 1u);
}

TEST(Config, SemanticChecks)
{
    EXPECT_THROW(parse_config_text("[run]\nnodes = 1\n"), ConfigError);
    EXPECT_THROW(parse_config_text("[run]\nwarmup_fraction = 1\n"), ConfigError);
    EXPECT_THROW(parse_config_text("[edca]\n0 2 4 7\n"), ConfigError);
    EXPECT_THROW(parse_config_text("[routing]\nk_max = 0\n"), ConfigError);
    EXPECT_THROW(parse_config_text("[routing]\nalpha = 1.5\n"), ConfigError);
    EXPECT_THROW(parse_config_text("[sweep]\ncounts = 32 32\n"), ConfigError);
    EXPECT_THROW(parse_config_text("[traffic]\n0 -1 0.001 fixed:10\n"), ConfigError);
}

TEST(Config, SweepCellScalesLoad)
{
    const auto c = parse_config_text("[sweep]\ncounts = 32 64 128\nload_scale = 2 0.5\n");
    const auto a = c.for_count(32);
    EXPECT_EQ(a.nodes, 32u);
    EXPECT_EQ(a.terrain.width_m, 500.0);
    EXPECT_NEAR(a.loads[0].lambda_pps, 16.0, 1e-12);
    EXPECT_NEAR(c.for_count(64).loads[3].lambda_pps, 4.0, 1e-12);
    EXPECT_EQ(c.for_count(64).terrain.width_m, 750.0);
    EXPECT_EQ(c.for_count(128).loads[1].lambda_pps, 8.0); // no paired entry
    EXPECT_TRUE(a.load_scale.empty());
    EXPECT_NEAR(a.scenario().warmup_s, 0.1 * a.duration_s, 1e-12);
    EXPECT_THROW(parse_config_text("[sweep]\nload_scale = 1 0\n"), ConfigError);
}

TEST(Config, TerrainPairedWithCount)
{
    const SimConfig c;
    EXPECT_EQ(c.terrain_for(128).width_m, 1000.0);
    EXPECT_EQ(c.terrain_for(256).height_m, 1500.0);
    EXPECT_EQ(c.terrain_for(17).width_m, c.terrain.width_m);
}

TEST(RunModes, Names)
{
    EXPECT_EQ(parse_run_modes("both"), RunModes::Both);
    EXPECT_THROW(parse_run_modes("fast"), std::invalid_argument);
    EXPECT_EQ(modes_of(RunModes::Both).size(), 2u);
    EXPECT_EQ(run_modes_name(RunModes::Priority), "priority");
}
