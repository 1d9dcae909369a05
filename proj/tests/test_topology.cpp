#include <wsnprio/topology.hpp>

#include <gtest/gtest.h>

#include <sstream>

using namespace wsnprio;

TEST(DeployRandom, EmptyDeployment)
{
    RngStream rng(1, "topology");
    EXPECT_TRUE(deploy_random(0, Terrain{}, rng).empty());
}

TEST(DeployRandom, PositionsWithinBounds)
{
    for (std::uint64_t seed = 1; seed <= 20; ++seed)
    {
        for (std::size_t n : {32u, 64u, 128u, 256u})
        {
            const Terrain t{500.0 + 100.0 * static_cast<double>(seed % 3), 500.0};
            RngStream rng(seed, "topology");
            const auto pos = deploy_random(n, t, rng);
            ASSERT_EQ(pos.size(), n);
            for (const auto &p : pos)
            {
                ASSERT_GE(p.x_m, 0.0);
                ASSERT_LE(p.x_m, t.width_m);
                ASSERT_GE(p.y_m, 0.0);
                ASSERT_LE(p.y_m, t.height_m);
            }
        }
    }
}

TEST(DeployRandom, Deterministic)
{
    RngStream a(11, "topology"), b(11, "topology");
    EXPECT_EQ(deploy_random(32, Terrain{}, a), deploy_random(32, Terrain{}, b));
}

TEST(Terrain, RejectsNonPositive)
{
    EXPECT_THROW((Terrain{0.0, 10.0}.validate()), std::invalid_argument);
    EXPECT_THROW((Terrain{10.0, -1.0}.validate()), std::invalid_argument);
}

TEST(BuildGraph, ZeroDistanceConnected)
{
    const auto g = build_graph({{0, 5, 5}, {1, 5, 5}}, RadioModel{});
    EXPECT_TRUE(g.linked(0, 1));
}

TEST(BuildGraph, ClosedBoundary)
{
    RadioModel r;
    const auto g = build_graph({{0, 0, 0}, {1, r.comm_range_m, 0}, {2, r.comm_range_m, r.interference_range_m}}, r);
    EXPECT_TRUE(g.linked(0, 1));
    EXPECT_TRUE(g.interferes(1, 2));
    EXPECT_FALSE(g.linked(1, 2));
}

TEST(BuildGraph, CollinearPath)
{
    RadioModel r;
    const double s = 0.9 * r.comm_range_m;
    const auto g = build_graph({{0, 0, 0}, {1, s, 0}, {2, 2 * s, 0}}, r);
    EXPECT_TRUE(g.linked(0, 1));
    EXPECT_TRUE(g.linked(1, 2));
    EXPECT_FALSE(g.linked(0, 2)); // 1.8 x range
    EXPECT_TRUE(g.interferes(0, 2)); // but within 550 m
}

TEST(BuildGraph, SymmetricAndCommSubsetOfInterference)
{
    RngStream rng(3, "topology");
    const auto pos = deploy_random(80, Terrain{1000, 1000}, rng);
    const auto g = build_graph(pos, RadioModel{});
    for (NodeId u = 0; u < pos.size(); ++u)
    {
        for (NodeId v = 0; v < pos.size(); ++v)
        {
            if (u == v)
                continue;
            const double d = distance(pos[u], pos[v]);
            ASSERT_EQ(g.linked(u, v), g.linked(v, u));
            ASSERT_EQ(g.linked(u, v), d <= 250.0);
            ASSERT_EQ(g.interferes(u, v), d <= 550.0);
            if (g.linked(u, v))
                ASSERT_TRUE(g.interferes(u, v));
        }
        ASSERT_TRUE(std::is_sorted(g.neighbors(u).begin(), g.neighbors(u).end()));
    }
}

TEST(BuildGraph, LargerRangeNeverRemovesEdges)
{
    RngStream rng(4, "topology");
    const auto pos = deploy_random(60, Terrain{800, 800}, rng);
    RadioModel small, large;
    small.comm_range_m = 150;
    large.comm_range_m = 300;
    const auto gs = build_graph(pos, small);
    const auto gl = build_graph(pos, large);
    for (NodeId u = 0; u < pos.size(); ++u)
        for (NodeId v : gs.neighbors(u))
            EXPECT_TRUE(gl.linked(u, v));
}

TEST(PlaceSink, CenterOfSymmetricSquare)
{
    std::vector<NodePosition> pos{{0, 0, 0}, {1, 100, 0}, {2, 0, 100}, {3, 100, 100}};
    const NodeId s = place_sink(pos, Terrain{100, 100}, SinkAtCenter{});
    ASSERT_EQ(s, 4u);
    EXPECT_DOUBLE_EQ(pos[s].x_m, 50.0);
    EXPECT_DOUBLE_EQ(pos[s].y_m, 50.0);
}

TEST(PlaceSink, ExplicitAndCorner)
{
    std::vector<NodePosition> pos{{0, 10, 10}};
    const NodeId s = place_sink(pos, Terrain{}, SinkAt{0, 0});
    EXPECT_EQ(pos[s].x_m, 0.0);
    EXPECT_EQ(pos[s].y_m, 0.0);
    const NodeId c = place_sink(pos, Terrain{}, SinkAtCorner{});
    EXPECT_EQ(pos[c].x_m, 0.0);
}

TEST(PlaceSink, EmptyDeployment)
{
    std::vector<NodePosition> pos;
    EXPECT_THROW(place_sink(pos, Terrain{}, SinkAtCenter{}), EmptyTopology);
}

TEST(RandomTopology, NodeCountIncludesSink)
{
    const auto t = make_random_topology(32, Terrain{}, SinkAtCenter{}, 5);
    EXPECT_EQ(t.nodes.size(), 32u);
    EXPECT_EQ(t.sink, 31u);
}

TEST(TopologyFile, RoundTrip)
{
    const auto t = make_random_topology(16, Terrain{700, 700}, SinkAtCenter{}, 8);
    std::stringstream ss;
    write_topology(ss, t);
    const auto back = read_topology(ss, t.terrain);
    EXPECT_EQ(back.nodes, t.nodes);
    EXPECT_EQ(back.sink, t.sink);
}

TEST(TopologyFile, ReportsLineOfError)
{
    std::istringstream bad("# header\n0 1 2 0\n1 3 x 1\n");
    try
    {
        read_topology(bad, Terrain{});
        FAIL() << "expected TopologyFormatError";
    }
    catch (const TopologyFormatError &e)
    {
        EXPECT_EQ(e.line(), 3u);
    }
    std::istringstream nosink("0 1 2 0\n");
    EXPECT_THROW(read_topology(nosink, Terrain{}), TopologyFormatError);
}
