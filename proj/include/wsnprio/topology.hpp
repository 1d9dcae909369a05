#pragma once

// Random deployment over a rectangular terrain, sink placement, and the
// communication / interference graphs derived from node positions.

#include "simcore.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <variant>

namespace wsnprio
{
    struct Terrain
    {
        double width_m = 500.0;
        double height_m = 500.0;

        void validate() const
        {
            if (!(width_m > 0.0) || !(height_m > 0.0))
                throw std::invalid_argument("terrain dimensions must be positive");
        }
    };

    struct NodePosition
    {
        NodeId node = kNoNode;
        double x_m = 0.0;
        double y_m = 0.0;

        bool operator==(const NodePosition &) const = default;
    };

    struct RadioModel
    {
        double comm_range_m = 250.0;
        double interference_range_m = 550.0;
        double bitrate_bps = 2.0e6;
        double propagation_speed_mps = 3.0e8;

        void validate() const
        {
            if (!(comm_range_m > 0.0) || !(interference_range_m >= comm_range_m))
                throw std::invalid_argument("radio: need 0 < comm_range <= interference_range");
            if (!(bitrate_bps > 0.0) || !(propagation_speed_mps > 0.0))
                throw std::invalid_argument("radio: bitrate and propagation speed must be positive");
        }
    };

    class EmptyTopology : public std::runtime_error
    {
    public:
        EmptyTopology() : std::runtime_error("topology has no nodes") {}
    };

    inline std::vector<NodePosition> deploy_random(std::size_t n, const Terrain &terrain, RngStream &rng)
    {
        terrain.validate();
        std::vector<NodePosition> out;
        out.reserve(n);
        for (std::size_t i = 0; i < n; ++i)
        {
            const double x = rng.next_uniform() * terrain.width_m;
            const double y = rng.next_uniform() * terrain.height_m;
            out.push_back({static_cast<NodeId>(i), x, y});
        }
        return out;
    }

    inline double distance(const NodePosition &a, const NodePosition &b) noexcept
    {
        return std::hypot(a.x_m - b.x_m, a.y_m - b.y_m);
    }

    struct Neighbor
    {
        NodeId node = kNoNode;
        double distance_m = 0.0;
    };

    /// Undirected graphs over node ids. Communication edges are a subset of
    /// interference edges; both use the closed boundary (distance <= range).
    class ConnectivityGraph
    {
    public:
        ConnectivityGraph() = default;

        ConnectivityGraph(const std::vector<NodePosition> &positions, const RadioModel &radio)
        {
            radio.validate();
            const std::size_t n = positions.size();
            for (std::size_t i = 0; i < n; ++i)
            {
                if (positions[i].node != i)
                    throw std::invalid_argument("node ids must be dense and match their index");
            }
            comm_.resize(n);
            interf_.resize(n);
            for (std::size_t i = 0; i < n; ++i)
            {
                for (std::size_t j = i + 1; j < n; ++j)
                {
                    const double d = distance(positions[i], positions[j]);
                    if (d <= radio.interference_range_m)
                    {
                        interf_[i].push_back({static_cast<NodeId>(j), d});
                        interf_[j].push_back({static_cast<NodeId>(i), d});
                    }
                    if (d <= radio.comm_range_m)
                    {
                        comm_[i].push_back(static_cast<NodeId>(j));
                        comm_[j].push_back(static_cast<NodeId>(i));
                    }
                }
            }
        }

        std::size_t size() const noexcept { return comm_.size(); }

        /// Sorted ascending.
        const std::vector<NodeId> &neighbors(NodeId u) const { return comm_.at(u); }
        const std::vector<Neighbor> &interferers(NodeId u) const { return interf_.at(u); }

        bool linked(NodeId u, NodeId v) const
        {
            if (u >= comm_.size() || v >= comm_.size())
                return false;
            const auto &adj = comm_[u];
            return std::binary_search(adj.begin(), adj.end(), v);
        }

        bool interferes(NodeId u, NodeId v) const
        {
            if (u >= interf_.size())
                return false;
            return std::any_of(interf_[u].begin(), interf_[u].end(), [v](const Neighbor &n) { return n.node == v; });
        }

        /// Removes the communication edge u-v (both directions). Used to model edits to a loaded topology.
        void remove_link(NodeId u, NodeId v)
        {
            auto drop = [](std::vector<NodeId> &adj, NodeId x) { adj.erase(std::remove(adj.begin(), adj.end(), x), adj.end()); };
            drop(comm_.at(u), v);
            drop(comm_.at(v), u);
        }

    private:
        std::vector<std::vector<NodeId>> comm_;
        std::vector<std::vector<Neighbor>> interf_;
    };

    inline ConnectivityGraph build_graph(const std::vector<NodePosition> &positions, const RadioModel &radio)
    {
        return ConnectivityGraph(positions, radio);
    }

    // ---------------------------------------------------------------------
    // Sink placement

    struct SinkAtCenter
    {
    };
    struct SinkAtCorner
    {
    };
    struct SinkAt
    {
        double x_m = 0.0;
        double y_m = 0.0;
    };
    using SinkPolicy = std::variant<SinkAtCenter, SinkAtCorner, SinkAt>;

    /// Appends a dedicated sink node at the location chosen by `policy` and
    /// returns its id.
    inline NodeId place_sink(std::vector<NodePosition> &positions, const Terrain &terrain, const SinkPolicy &policy)
    {
        if (positions.empty())
            throw EmptyTopology();
        NodePosition sink{static_cast<NodeId>(positions.size()), 0.0, 0.0};
        if (std::holds_alternative<SinkAtCenter>(policy))
        {
            sink.x_m = terrain.width_m / 2.0;
            sink.y_m = terrain.height_m / 2.0;
        }
        else if (const auto *at = std::get_if<SinkAt>(&policy))
        {
            sink.x_m = at->x_m;
            sink.y_m = at->y_m;
        }
        positions.push_back(sink);
        return sink.node;
    }

    struct Topology
    {
        Terrain terrain;
        std::vector<NodePosition> nodes;
        NodeId sink = kNoNode;
    };

    /// `node_count` includes the sink: node_count - 1 sensors are deployed at random.
    inline Topology make_random_topology(std::size_t node_count, const Terrain &terrain, const SinkPolicy &policy,
                                         std::uint64_t seed)
    {
        if (node_count < 2)
            throw std::invalid_argument("a topology needs at least one sensor and the sink");
        RngStream rng(seed, "topology");
        Topology t{terrain, deploy_random(node_count - 1, terrain, rng), kNoNode};
        t.sink = place_sink(t.nodes, terrain, policy);
        return t;
    }

    // ---------------------------------------------------------------------
    // Plain-text node table: `node_id x_m y_m is_sink`, '#' comments.

    class TopologyFormatError : public std::runtime_error
    {
    public:
        TopologyFormatError(std::size_t line, const std::string &what)
            : std::runtime_error("topology line " + std::to_string(line) + ": " + what), line_(line)
        {
        }
        std::size_t line() const noexcept { return line_; }

    private:
        std::size_t line_;
    };

    inline void write_topology(std::ostream &os, const Topology &t)
    {
        os << "# node_id x_m y_m is_sink\n";
        os.precision(17);
        for (const auto &p : t.nodes)
            os << p.node << ' ' << p.x_m << ' ' << p.y_m << ' ' << (p.node == t.sink ? 1 : 0) << '\n';
    }

    inline Topology read_topology(std::istream &is, const Terrain &terrain)
    {
        Topology t{terrain, {}, kNoNode};
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(is, line))
        {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos)
                line.erase(hash);
            std::istringstream ls(line);
            long long id;
            double x, y;
            int sink;
            if (!(ls >> id))
                continue; // blank
            if (!(ls >> x >> y >> sink))
                throw TopologyFormatError(lineno, "expected `node_id x_m y_m is_sink`");
            std::string extra;
            if (ls >> extra)
                throw TopologyFormatError(lineno, "trailing field '" + extra + "'");
            if (id != static_cast<long long>(t.nodes.size()))
                throw TopologyFormatError(lineno, "node ids must be consecutive from 0");
            if (sink != 0 && sink != 1)
                throw TopologyFormatError(lineno, "is_sink must be 0 or 1");
            if (sink == 1)
            {
                if (t.sink != kNoNode)
                    throw TopologyFormatError(lineno, "more than one sink");
                t.sink = static_cast<NodeId>(id);
            }
            t.nodes.push_back({static_cast<NodeId>(id), x, y});
        }
        if (t.nodes.empty())
            throw EmptyTopology();
        if (t.sink == kNoNode)
            throw TopologyFormatError(lineno, "no sink designated");
        return t;
    }
} // namespace wsnprio
