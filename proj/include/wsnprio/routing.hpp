#pragma once

// Node-disjoint multipath source routing with smoothed delay feedback, and the
// single-path, class-blind baseline.

#include "queueing.hpp"
#include "simcore.hpp"
#include "topology.hpp"

#include <deque>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

namespace wsnprio
{
    enum class RoutingMode
    {
        Priority,
        Baseline,
    };

    struct Route
    {
        std::vector<NodeId> hops; // source first, sink last
        std::optional<double> est_delay_s;
        SimTime last_updated = 0.0;

        std::size_t hop_count() const noexcept { return hops.empty() ? 0 : hops.size() - 1; }
    };

    class NoRoute : public std::runtime_error
    {
    public:
        NoRoute(NodeId src, NodeId dst)
            : std::runtime_error("no route from " + std::to_string(src) + " to " + std::to_string(dst))
        {
        }
    };

    inline bool loop_free(const Route &r)
    {
        std::vector<NodeId> sorted = r.hops;
        std::sort(sorted.begin(), sorted.end());
        return std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end();
    }

    inline bool follows_edges(const Route &r, const ConnectivityGraph &g)
    {
        for (std::size_t i = 1; i < r.hops.size(); ++i)
        {
            if (!g.linked(r.hops[i - 1], r.hops[i]))
                return false;
        }
        return true;
    }

    /// True when no interior node appears in two routes.
    inline bool pairwise_disjoint(const std::vector<Route> &routes)
    {
        std::vector<NodeId> interior;
        for (const auto &r : routes)
        {
            for (std::size_t i = 1; i + 1 < r.hops.size(); ++i)
                interior.push_back(r.hops[i]);
        }
        std::sort(interior.begin(), interior.end());
        return std::adjacent_find(interior.begin(), interior.end()) == interior.end();
    }

    namespace detail
    {
        // BFS over the communication graph, skipping removed nodes and the
        // direct src-dst edge when `skip_direct` is set. Neighbors are visited in
        // ascending id order, so the result is deterministic.
        inline std::optional<std::vector<NodeId>> shortest_path(const ConnectivityGraph &g, NodeId src, NodeId dst,
                                                                const std::vector<char> &removed, bool skip_direct)
        {
            std::vector<NodeId> parent(g.size(), kNoNode);
            std::vector<char> seen(g.size(), 0);
            std::deque<NodeId> frontier{src};
            seen[src] = 1;
            while (!frontier.empty())
            {
                const NodeId u = frontier.front();
                frontier.pop_front();
                for (NodeId v : g.neighbors(u))
                {
                    if (seen[v] || removed[v])
                        continue;
                    if (skip_direct && u == src && v == dst)
                        continue;
                    seen[v] = 1;
                    parent[v] = u;
                    if (v == dst)
                    {
                        std::vector<NodeId> path{dst};
                        for (NodeId x = dst; x != src;)
                        {
                            x = parent[x];
                            path.push_back(x);
                        }
                        std::reverse(path.begin(), path.end());
                        return path;
                    }
                    frontier.push_back(v);
                }
            }
            return std::nullopt;
        }
    } // namespace detail

    /// Iterated shortest-path extraction: take the shortest path, remove its
    /// interior nodes, repeat. A direct src-sink edge is used at most once.
    inline std::vector<Route> discover_disjoint_paths(const ConnectivityGraph &g, NodeId src, NodeId sink,
                                                      std::size_t k_max)
    {
        if (src == sink)
            throw std::invalid_argument("discover_disjoint_paths: source equals sink");
        if (src >= g.size() || sink >= g.size())
            throw std::out_of_range("discover_disjoint_paths: unknown node");
        std::vector<Route> out;
        std::vector<char> removed(g.size(), 0);
        bool direct_used = false;
        while (out.size() < k_max)
        {
            auto path = detail::shortest_path(g, src, sink, removed, direct_used);
            if (!path)
                break;
            if (path->size() == 2)
                direct_used = true;
            for (std::size_t i = 1; i + 1 < path->size(); ++i)
                removed[(*path)[i]] = 1;
            out.push_back(Route{std::move(*path), std::nullopt, 0.0});
        }
        if (out.empty())
            throw NoRoute(src, sink);
        return out;
    }

    /// Priority mode: minimum delay estimate, then fewer hops, then lower first-hop
    /// id. A route without an estimate yet counts as zero delay so every
    /// alternate gets probed. Baseline mode: fewest hops.
    inline std::size_t select_route(const std::vector<Route> &routes, RoutingMode mode)
    {
        if (routes.empty())
            throw std::invalid_argument("select_route: empty route set");
        auto first_hop = [](const Route &r) { return r.hops.size() > 1 ? r.hops[1] : kNoNode; };
        std::size_t best = 0;
        for (std::size_t i = 1; i < routes.size(); ++i)
        {
            const Route &a = routes[i];
            const Route &b = routes[best];
            bool better;
            if (mode == RoutingMode::Priority)
            {
                const double da = a.est_delay_s.value_or(0.0);
                const double db = b.est_delay_s.value_or(0.0);
                if (da != db)
                    better = da < db;
                else if (a.hop_count() != b.hop_count())
                    better = a.hop_count() < b.hop_count();
                else
                    better = first_hop(a) < first_hop(b);
            }
            else
            {
                if (a.hop_count() != b.hop_count())
                    better = a.hop_count() < b.hop_count();
                else
                    better = first_hop(a) < first_hop(b);
            }
            if (better)
                best = i;
        }
        return best;
    }

    /// Exponential smoothing; the first observation initializes the estimate.
    inline void update_delay_estimate(Route &r, double observed_delay_s, double alpha, SimTime now)
    {
        if (!r.est_delay_s)
            r.est_delay_s = observed_delay_s;
        else
            r.est_delay_s = (1.0 - alpha) * *r.est_delay_s + alpha * observed_delay_s;
        r.last_updated = now;
    }

    /// Removes and returns a uniformly chosen packet, ignoring class.
    inline Packet baseline_scheduler_pick(std::deque<Packet> &queue, RngStream &rng)
    {
        if (queue.empty())
            throw std::invalid_argument("baseline_scheduler_pick: empty queue");
        const auto i = static_cast<std::ptrdiff_t>(rng.uniform_int(0, queue.size() - 1));
        Packet p = std::move(queue[static_cast<std::size_t>(i)]);
        queue.erase(queue.begin() + i);
        return p;
    }

    /// Per-source route sets toward one sink, discovered on first use.
    class RouteCache
    {
    public:
        RouteCache() = default;
        RouteCache(std::size_t nodes, NodeId sink, RoutingMode mode, std::size_t k_max, double alpha)
            : sink_(sink), mode_(mode), k_max_(mode == RoutingMode::Baseline ? 1 : k_max), alpha_(alpha),
              routes_(nodes), discovered_(nodes, 0)
        {
            if (k_max == 0)
                throw std::invalid_argument("k_max must be >= 1");
            if (!(alpha > 0.0 && alpha <= 1.0))
                throw std::invalid_argument("alpha must be in (0, 1]");
        }

        RoutingMode mode() const noexcept { return mode_; }
        NodeId sink() const noexcept { return sink_; }
        double alpha() const noexcept { return alpha_; }

        /// Empty when the source cannot reach the sink.
        const std::vector<Route> &routes_for(NodeId src, const ConnectivityGraph &g)
        {
            if (!discovered_.at(src))
            {
                discovered_[src] = 1;
                try
                {
                    routes_[src] = discover_disjoint_paths(g, src, sink_, k_max_);
                }
                catch (const NoRoute &)
                {
                    routes_[src].clear();
                }
            }
            return routes_[src];
        }

        const std::vector<Route> &cached(NodeId src) const { return routes_.at(src); }
        Route &route(NodeId src, std::size_t index) { return routes_.at(src).at(index); }

        /// Index of the route for the next packet from `src`, or nullopt (NoRoute).
        std::optional<std::size_t> select(NodeId src, const ConnectivityGraph &g)
        {
            const auto &rs = routes_for(src, g);
            if (rs.empty())
                return std::nullopt;
            return select_route(rs, mode_);
        }

        void feedback(NodeId src, std::size_t index, double observed_delay_s, SimTime now)
        {
            if (mode_ == RoutingMode::Priority)
                update_delay_estimate(route(src, index), observed_delay_s, alpha_, now);
        }

        /// One line per route: `src: n1>n2>...>sink est_delay_ms`.
        void dump(std::ostream &os) const
        {
            for (std::size_t s = 0; s < routes_.size(); ++s)
            {
                for (const auto &r : routes_[s])
                    os << format_route(r) << '\n';
            }
        }

        static std::string format_route(const Route &r)
        {
            std::ostringstream os;
            os << (r.hops.empty() ? kNoNode : r.hops.front()) << ": ";
            for (std::size_t i = 0; i < r.hops.size(); ++i)
                os << (i ? ">" : "") << r.hops[i];
            os << ' ';
            if (r.est_delay_s)
                os << std::fixed << std::setprecision(3) << *r.est_delay_s * 1e3;
            else
                os << "NA";
            return os.str();
        }

    private:
        NodeId sink_ = kNoNode;
        RoutingMode mode_ = RoutingMode::Priority;
        std::size_t k_max_ = 3;
        double alpha_ = 0.3;
        std::vector<std::vector<Route>> routes_;
        std::vector<char> discovered_;
    };
} // namespace wsnprio
