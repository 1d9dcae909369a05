#include <wsnprio/metrics.hpp>

#include <gtest/gtest.h>

#include <sstream>

using namespace wsnprio;

TEST(Share, EqualBits)
{
    const auto s = bandwidth_share(PerClass<std::uint64_t>{100, 100, 100, 100});
    ASSERT_FALSE(s.no_traffic);
    for (double v : s.share)
        EXPECT_DOUBLE_EQ(v, 0.25);
    EXPECT_FALSE(strictly_ordered(s));
}

TEST(Share, NoTraffic)
{
    const auto s = bandwidth_share(PerClass<std::uint64_t>{0, 0, 0, 0});
    EXPECT_TRUE(s.no_traffic);
    EXPECT_FALSE(strictly_ordered(s));
}

TEST(Share, SumsToOneAndOrders)
{
    RngStream rng(9, "test/share");
    for (int i = 0; i < 1000; ++i)
    {
        PerClass<std::uint64_t> bits{};
        for (auto &b : bits)
            b = rng.uniform_int(0, 1'000'000);
        const auto s = bandwidth_share(bits);
        if (s.no_traffic)
            continue;
        double sum = 0;
        for (double v : s.share)
            sum += v;
        ASSERT_NEAR(sum, 1.0, 1e-12);
        const bool expect = bits[0] > bits[1] && bits[1] > bits[2] && bits[2] > bits[3];
        ASSERT_EQ(strictly_ordered(s), expect);
    }
}

TEST(Delay, MeanAndEmpty)
{
    ClassMetrics m(1, PriorityClass{0});
    EXPECT_THROW(mean_delay(m), NoSamples);
    EXPECT_THROW(p95_delay(m), NoSamples);
    m.record_delivery(100, 0.010);
    m.record_delivery(100, 0.020);
    m.record_delivery(100, 0.030);
    EXPECT_NEAR(mean_delay(m), 0.020, 1e-15);
    EXPECT_EQ(m.delivered_bits, 300u);
}

TEST(Reservoir, NearestRankPercentile)
{
    DelayReservoir r(1, "x");
    for (int i = 1; i <= 100; ++i)
        r.add(i);
    EXPECT_EQ(r.percentile(0.95), 95.0);
    EXPECT_EQ(r.percentile(1.0), 100.0);
    EXPECT_EQ(r.percentile(0.001), 1.0);
}

TEST(Reservoir, UniformSampleOfLongStream)
{
    // Percentiles of a long uniform ramp stay close to the exact values.
    DelayReservoir r(3, "ramp");
    const int n = 200000;
    for (int i = 0; i < n; ++i)
        r.add(static_cast<double>(i) / n);
    EXPECT_EQ(r.size(), DelayReservoir::kCapacity);
    EXPECT_EQ(r.seen(), static_cast<std::uint64_t>(n));
    EXPECT_NEAR(r.percentile(0.5), 0.5, 0.03);
    EXPECT_NEAR(r.percentile(0.95), 0.95, 0.02);
}

TEST(Little, ExactSystem)
{
    // Deterministic D/D/1: one arrival per second, sojourn 0.4 s, so L = 0.4.
    LittleInputs in{0.4, 100, 100.0, 0.4, 0.4};
    const auto r = littles_law_check(in);
    EXPECT_FALSE(r.no_traffic);
    EXPECT_NEAR(r.relative_error, 0.0, 1e-12);
    EXPECT_FALSE(r.low_confidence);
}

TEST(Little, NoDepartures)
{
    EXPECT_TRUE(littles_law_check(LittleInputs{0.0, 0, 10.0, 0.0, 0.0}).no_traffic);
}

TEST(Little, ShortWindowFlagged)
{
    const auto r = littles_law_check(LittleInputs{1.0, 5, 5.0, 1.0, 1.0});
    EXPECT_TRUE(r.low_confidence);
    EXPECT_NEAR(r.relative_error, 0.0, 1e-12);
}

TEST(Little, ErrorFormula)
{
    const auto r = littles_law_check(LittleInputs{2.0, 100, 10.0, 0.25, 0.0});
    EXPECT_NEAR(r.relative_error, 0.25, 1e-12); // |2 - 10 * 0.25| / 2
}

TEST(Conservation, Holds)
{
    Conservation c;
    c.generated = {10, 5, 0, 3};
    c.delivered = {7, 5, 0, 1};
    c.dropped = {2, 0, 0, 1};
    c.in_flight = {1, 0, 0, 1};
    EXPECT_TRUE(c.holds());
    ++c.delivered[3];
    EXPECT_FALSE(c.holds());
}

namespace
{
    RunReport sample_report()
    {
        RunReport r;
        r.run_id = "priority-n4-s1";
        r.mode = "priority";
        r.nodes = 4;
        r.terrain = Terrain{500, 500};
        r.seed = 1;
        r.classes = make_class_metrics(1);
        r.classes[0].record_delivery(1024, 0.002);
        r.classes[0].record_delivery(1024, 0.004);
        r.classes[1].record_delivery(1024, 0.001);
        r.classes[2].drops_by_cause[static_cast<std::size_t>(DropCause::NoRoute)] = 3;
        r.shares = bandwidth_share(r.classes);
        return r;
    }
} // namespace

TEST(Csv, RunLayout)
{
    const auto r = sample_report();
    std::ostringstream os;
    write_run_csv(os, std::span<const RunReport>(&r, 1));
    const std::string expected = std::string(kRunCsvHeader) +
                                 "\n"
                                 "priority-n4-s1,priority,4,500x500,1,0,2,2048,0.6666666667,0.003,0.004,0,0,0\n"
                                 "priority-n4-s1,priority,4,500x500,1,1,1,1024,0.3333333333,0.001,0.001,0,0,0\n"
                                 "priority-n4-s1,priority,4,500x500,1,2,0,0,0,NA,NA,0,0,3\n"
                                 "priority-n4-s1,priority,4,500x500,1,3,0,0,0,NA,NA,0,0,0\n";
    EXPECT_EQ(os.str(), expected);
}

TEST(Csv, SweepLayout)
{
    const auto r = sample_report();
    std::ostringstream os;
    write_sweep_csv(os, std::span<const RunReport>(&r, 1));
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, kSweepCsvHeader);
    std::getline(is, line);
    EXPECT_EQ(line, "4,500x500,priority,1,0,2,2048,0.6666666667,0.003,0.004,0,0,0");
    int rows = 1;
    while (std::getline(is, line))
        ++rows;
    EXPECT_EQ(rows, 4);
}

TEST(Csv, UnwritablePath)
{
    EXPECT_THROW(export_csv(sample_report(), "/nonexistent-dir/x.csv"), IoError);
}

TEST(Csv, RepeatIsByteIdentical)
{
    const auto r = sample_report();
    std::ostringstream a, b;
    write_run_csv(a, std::span<const RunReport>(&r, 1));
    write_run_csv(b, std::span<const RunReport>(&r, 1));
    EXPECT_EQ(a.str(), b.str());
}
