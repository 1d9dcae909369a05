#include <wsnprio/wsnprio.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace wsnprio;
namespace fs = std::filesystem;

namespace
{
    std::string slurp(const fs::path &p)
    {
        std::ifstream f(p, std::ios::binary);
        std::ostringstream os;
        os << f.rdbuf();
        return os.str();
    }

    fs::path scratch(const std::string &name)
    {
        const auto p = fs::temp_directory_path() / ("wsnprio_test_" + name);
        fs::remove_all(p);
        return p;
    }

    SimConfig small_run(const fs::path &dir)
    {
        SimConfig c;
        c.nodes = 12;
        c.duration_s = 3.0;
        c.out_dir = dir.string();
        return c;
    }
} // namespace

TEST(RunId, Format)
{
    EXPECT_EQ(make_run_id(Mode::Baseline, 64, 7), "baseline-n64-s7");
}

TEST(CmdRun, WritesCsvAndConfigPerMode)
{
    const auto dir = scratch("run");
    auto cfg = small_run(dir);
    cfg.svg = true;
    std::ostringstream out, err;
    ASSERT_EQ(cmd_run(cfg, out, err), kExitOk) << err.str();
    for (const char *id : {"priority-n12-s1", "baseline-n12-s1"})
    {
        const auto csv = slurp(dir / (std::string("run_") + id + ".csv"));
        EXPECT_EQ(csv.substr(0, kRunCsvHeader.size()), kRunCsvHeader);
        const auto echo = parse_config_text(slurp(dir / (std::string("run_") + id + ".cfg")));
        EXPECT_EQ(echo.nodes, 12u);
    }
    const auto svg = slurp(dir / "fig_12.svg");
    EXPECT_EQ(svg.rfind("<svg", 0), 0u);
    EXPECT_NE(svg.find("</svg>"), std::string::npos);
}

TEST(CmdRun, RepeatIsByteIdentical)
{
    const auto a = scratch("rep_a"), b = scratch("rep_b");
    std::ostringstream out, err;
    ASSERT_EQ(cmd_run(small_run(a), out, err), kExitOk);
    ASSERT_EQ(cmd_run(small_run(b), out, err), kExitOk);
    for (const char *f : {"run_priority-n12-s1.csv", "run_baseline-n12-s1.csv"})
        EXPECT_EQ(slurp(a / f), slurp(b / f));
}

TEST(CmdRun, MissingTopologyFile)
{
    auto cfg = small_run(scratch("notopo"));
    cfg.topology_file = "/nonexistent/topo.txt";
    std::ostringstream out, err;
    EXPECT_EQ(cmd_run(cfg, out, err), kExitRuntime);
}

TEST(CmdRun, MalformedTopologyFile)
{
    const auto dir = scratch("badtopo");
    fs::create_directories(dir);
    {
        std::ofstream f(dir / "t.txt");
        f << "0 1 1 0\n1 oops 2 1\n";
    }
    auto cfg = small_run(dir);
    cfg.topology_file = (dir / "t.txt").string();
    std::ostringstream out, err;
    EXPECT_EQ(cmd_run(cfg, out, err), kExitConfig);
    EXPECT_NE(err.str().find("2"), std::string::npos);
}

TEST(CmdValidate, EmptyGrid)
{
    SimConfig cfg;
    cfg.out_dir = scratch("val_empty").string();
    std::ostringstream out, err;
    EXPECT_EQ(cmd_validate(cfg, out, err), kExitConfig);
}

TEST(CmdValidate, StablePointPassesSaturatedFlagged)
{
    SimConfig cfg;
    cfg.out_dir = scratch("val").string();
    cfg.departures = 200000;
    cfg.grid = {{"mm1", exponential_service(PriorityClass{0}, 500, 1e-3)},
                {"sat", exponential_service(PriorityClass{0}, 600, 1e-3)},
                {"sat", exponential_service(PriorityClass{3}, 3000, 1e-3)}};
    std::ostringstream out, err;
    EXPECT_EQ(cmd_validate(cfg, out, err), kExitOk) << out.str() << err.str();
    const auto rows = run_validation(cfg);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0].status, RowStatus::Ok);
    EXPECT_EQ(rows[1].status, RowStatus::Ok);
    EXPECT_EQ(rows[2].status, RowStatus::Saturated);
    EXPECT_FALSE(rows[2].analytic);
    const auto csv = slurp(fs::path(cfg.out_dir) / "validate.csv");
    EXPECT_NE(csv.find("Saturated"), std::string::npos);
}

TEST(CmdValidate, BreachExitsWithToleranceCode)
{
    SimConfig cfg;
    cfg.out_dir = scratch("val_breach").string();
    cfg.departures = 2000;
    cfg.tolerance = 1e-6;
    cfg.grid = {{"p", exponential_service(PriorityClass{0}, 500, 1e-3)}};
    std::ostringstream out, err;
    EXPECT_EQ(cmd_validate(cfg, out, err), kExitTolerance);
}

TEST(CmdSweep, DuplicateCounts)
{
    SimConfig cfg;
    cfg.out_dir = scratch("sw_dup").string();
    std::ostringstream out, err;
    EXPECT_EQ(cmd_sweep(cfg, {16, 16}, out, err), kExitConfig);
    EXPECT_EQ(cmd_sweep(cfg, {}, out, err), kExitConfig);
}

TEST(CmdSweep, PairsAndSummaries)
{
    SimConfig cfg;
    cfg.out_dir = scratch("sw").string();
    cfg.duration_s = 2.0;
    cfg.seeds = 3;
    cfg.workers = 3;
    cfg.svg = true;
    std::ostringstream out, err;
    ASSERT_EQ(cmd_sweep(cfg, {10, 14}, out, err), kExitOk) << err.str();
    EXPECT_NE(out.str().find("ordering nodes=10 strict_share_order="), std::string::npos);
    EXPECT_NE(out.str().find("ordering nodes=14 "), std::string::npos);
    const fs::path dir(cfg.out_dir);
    for (const char *f : {"sweep.csv", "fig_10.svg", "fig_14.svg", "fig_delay.svg"})
        EXPECT_TRUE(fs::exists(dir / f)) << f;

    std::istringstream csv(slurp(dir / "sweep.csv"));
    std::string line;
    int rows = -1;
    while (std::getline(csv, line))
        ++rows;
    EXPECT_EQ(rows, 2 * 3 * 2 * 4);
}

TEST(CmdSweep, ThreadCountDoesNotChangeResults)
{
    SimConfig cfg;
    cfg.duration_s = 2.0;
    cfg.seeds = 2;
    cfg.workers = 1;
    const auto one = run_sweep(cfg, {12});
    cfg.workers = 4;
    const auto four = run_sweep(cfg, {12});
    ASSERT_EQ(one.cells.size(), four.cells.size());
    for (std::size_t i = 0; i < one.cells.size(); ++i)
    {
        ASSERT_TRUE(one.cells[i].report && four.cells[i].report);
        std::ostringstream a, b;
        write_run_csv(a, std::span<const RunReport>(&*one.cells[i].report, 1));
        write_run_csv(b, std::span<const RunReport>(&*four.cells[i].report, 1));
        EXPECT_EQ(a.str(), b.str());
    }
}

TEST(Svg, EscapesAndHandlesNan)
{
    const auto bar = bar_chart_svg("a < b & c", "y", {"s1"}, {BarGroup{"g", {0.5}}});
    EXPECT_NE(bar.find("a &lt; b &amp; c"), std::string::npos);
    const auto line = line_chart_svg("t", "x", "y", {1, 2, 3}, {LineSeries{"s", {1.0, std::nan(""), 2.0}}});
    EXPECT_EQ(line.find("nan"), std::string::npos);
    EXPECT_NE(line.find("</svg>"), std::string::npos);
}
