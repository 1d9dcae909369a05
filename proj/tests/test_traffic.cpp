#include <wsnprio/traffic.hpp>

#include <gtest/gtest.h>

#include <algorithm>

using namespace wsnprio;

TEST(Interarrival, MeanMatchesRate)
{
    RngStream rng(2, "traffic/0");
    const auto spec = exponential_service(PriorityClass{0}, 2.0, 1e-3);
    double sum = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i)
        sum += next_interarrival(spec, rng);
    EXPECT_NEAR(sum / n, 0.5, 0.5 * 0.02);
}

TEST(Interarrival, ZeroRate)
{
    RngStream rng(2, "traffic/3");
    EXPECT_THROW(next_interarrival(exponential_service(PriorityClass{3}, 0.0, 1.0), rng), ZeroRate);
}

TEST(Interarrival, SameStateSameDelta)
{
    RngStream a(6, "traffic/1"), b(6, "traffic/1");
    const auto spec = exponential_service(PriorityClass{1}, 3.0, 1e-3);
    EXPECT_EQ(next_interarrival(spec, a), next_interarrival(spec, b));
}

TEST(Interarrival, KolmogorovSmirnovAgainstExponential)
{
    RngStream rng(12, "traffic/2");
    const double lambda = 5.0;
    const auto spec = exponential_service(PriorityClass{2}, lambda, 1e-3);
    const int n = 10000;
    std::vector<double> x(n);
    for (auto &v : x)
        v = next_interarrival(spec, rng);
    std::sort(x.begin(), x.end());
    double d = 0;
    for (int i = 0; i < n; ++i)
    {
        const double f = 1.0 - std::exp(-lambda * x[i]);
        d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    // Asymptotic critical value at alpha = 0.01.
    EXPECT_LT(d, 1.628 / std::sqrt(static_cast<double>(n)));
}

TEST(MakePacket, FixedSize)
{
    RngStream rng(1, "traffic/0");
    ClassLoadSpec spec{PriorityClass{2}, 1.0, 1e-3, 1e-6, FixedSize{1024}};
    for (int i = 0; i < 100; ++i)
    {
        const Packet p = make_packet(i, 3, 0, spec, 2.5, rng);
        EXPECT_EQ(p.size_bits, 1024u);
        EXPECT_EQ(p.cls, PriorityClass{2});
        EXPECT_EQ(p.created_at, 2.5);
        EXPECT_EQ(p.src, 3u);
        EXPECT_EQ(p.dst, 0u);
    }
}

TEST(MakePacket, ExponentialSizeMean)
{
    RngStream rng(1, "traffic/1");
    ClassLoadSpec spec{PriorityClass{1}, 1.0, 1e-3, 2e-6, ExponentialSize{8000}};
    double sum = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i)
    {
        const Packet p = make_packet(i, 1, 0, spec, 0.0, rng);
        ASSERT_GT(p.size_bits, 0u);
        ASSERT_EQ(p.cls, PriorityClass{1});
        sum += p.size_bits;
    }
    EXPECT_NEAR(sum / n, 8000.0, 8000.0 * 0.02);
}

TEST(MakePacket, SourceEqualsSink)
{
    RngStream rng(1, "traffic/0");
    EXPECT_THROW(make_packet(0, 4, 4, ClassLoadSpec{}, 0.0, rng), std::invalid_argument);
}

TEST(ClassLoadSpec, Invariants)
{
    EXPECT_NO_THROW(deterministic_service(PriorityClass{0}, 0.0, 0.3).validate());
    EXPECT_THROW((ClassLoadSpec{PriorityClass{0}, -1.0, 1.0, 2.0, FixedSize{}}.validate()), std::invalid_argument);
    EXPECT_THROW((ClassLoadSpec{PriorityClass{0}, 1.0, 0.0, 2.0, FixedSize{}}.validate()), std::invalid_argument);
    EXPECT_THROW((ClassLoadSpec{PriorityClass{0}, 1.0, 1.0, 0.5, FixedSize{}}.validate()), std::invalid_argument);
}

TEST(OfferedLoad, ConvergesToLambdaTimesService)
{
    // Long-run offered work per unit time of a source with exponential sizes.
    const double lambda = 20.0, bitrate = 2e6, mean_bits = 4000;
    ClassLoadSpec spec{PriorityClass{0}, lambda, mean_bits / bitrate, 2 * std::pow(mean_bits / bitrate, 2),
                       ExponentialSize{mean_bits}};
    RngStream rng(4, "traffic/0");
    double t = 0, work = 0;
    const double horizon = 5000;
    while (true)
    {
        t += next_interarrival(spec, rng);
        if (t > horizon)
            break;
        work += draw_size(spec.size_dist, rng) / bitrate;
    }
    const double rho = lambda * spec.mean_service_s;
    EXPECT_NEAR(work / horizon, rho, 0.03 * rho);
}
