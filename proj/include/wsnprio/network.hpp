#pragma once

// Packet-level wireless network simulation: per-class sources, per-node queues,
// contention MAC over a shared channel, and source routing to a single sink.

#include "mac.hpp"
#include "metrics.hpp"
#include "queueing.hpp"
#include "routing.hpp"
#include "simcore.hpp"
#include "topology.hpp"
#include "traffic.hpp"

#include <functional>
#include <unordered_map>

namespace wsnprio
{
    enum class Mode
    {
        Priority,
        Baseline,
    };

    inline std::string_view mode_name(Mode m) { return m == Mode::Priority ? "priority" : "baseline"; }

    struct ScenarioParams
    {
        RadioModel radio;
        double frame_overhead_s = 192e-6;
        EdcaParams edca;
        AccessParams baseline_access = kDcfAccess;
        PerClass<ClassLoadSpec> loads{exponential_service(PriorityClass{0}, 1.0, 1e-3),
                                      exponential_service(PriorityClass{1}, 1.0, 1e-3),
                                      exponential_service(PriorityClass{2}, 1.0, 1e-3),
                                      exponential_service(PriorityClass{3}, 1.0, 1e-3)};
        std::size_t queue_capacity_per_class = kDefaultClassCapacity;
        std::size_t baseline_queue_capacity = 4 * kDefaultClassCapacity;
        std::size_t k_max = 3;
        double alpha = 0.3;
        SimTime warmup_s = 0.0;
        /// Per-node class enable mask; empty means every sensor hosts all four sources.
        std::vector<PerClass<bool>> source_mask;
    };

    struct TxObservation
    {
        const Transmission &tx;
        bool sender_sensed_busy;
    };

    class NetworkSim
    {
    public:
        NetworkSim(Topology topology, ScenarioParams params, Mode mode, std::uint64_t seed)
            : topo_(std::move(topology)), params_(std::move(params)), mode_(mode), seed_(seed),
              graph_(topo_.nodes, params_.radio), channel_(topo_.nodes.size()),
              routes_(topo_.nodes.size(), topo_.sink,
                      mode == Mode::Priority ? RoutingMode::Priority : RoutingMode::Baseline, params_.k_max,
                      params_.alpha),
              backoff_rng_(seed, "backoff"), scheduler_rng_(seed, "scheduler"), metrics_(make_class_metrics(seed))
        {
            if (topo_.sink >= topo_.nodes.size())
                throw std::invalid_argument("sink is not a node of the topology");
            params_.edca.validate();
            if (!params_.source_mask.empty() && params_.source_mask.size() != topo_.nodes.size())
                throw std::invalid_argument("source mask must cover every node");
            for (const auto &l : params_.loads)
                l.validate();
            for (std::size_t c = 0; c < traffic_rng_.size(); ++c)
                traffic_rng_[c].emplace(seed, "traffic/" + std::to_string(c));

            const std::size_t n = topo_.nodes.size();
            nodes_.reserve(n);
            for (std::size_t i = 0; i < n; ++i)
            {
                nodes_.emplace_back(static_cast<NodeId>(i), params_);
                auto &mac = nodes_.back().mac;
                mac.current_cw = access_params(PriorityClass{0}).cw_min;
            }
            if (params_.warmup_s > 0.0)
                engine_.schedule(params_.warmup_s, EventKind::MetricSample);
            else
                warm_ = true;
        }

        // --- setup ---------------------------------------------------------

        /// Schedules the first arrival of every enabled (node, class) source.
        void start_traffic()
        {
            for (NodeId n = 0; n < nodes_.size(); ++n)
            {
                if (n == topo_.sink)
                    continue;
                for (auto c : PriorityClass::all())
                {
                    if (!source_enabled(n, c) || params_.loads[c.index()].lambda_pps <= 0.0)
                        continue;
                    // Sources are independent, so each (node, class) pair draws its
                    // first gap from the class stream in a fixed order.
                    const SimTime gap = next_interarrival(params_.loads[c.index()], *traffic_rng_[c.index()]);
                    engine_.schedule(gap, EventKind::PacketArrival, {n, static_cast<std::uint32_t>(c.level()), 0, 0});
                }
            }
        }

        /// One packet of the given size created at `at` (no follow-up arrivals).
        void inject(NodeId src, PriorityClass c, std::uint32_t bits, SimTime at)
        {
            if (src == topo_.sink || src >= nodes_.size())
                throw std::invalid_argument("inject: invalid source");
            if (bits == 0)
                throw std::invalid_argument("inject: size must be positive");
            engine_.schedule(at, EventKind::PacketArrival, {src, static_cast<std::uint32_t>(c.level()), bits, 0});
        }

        RunSummary run_until(SimTime end)
        {
            auto summary = engine_.run_until(end, [this](const SimEvent &ev) { dispatch(ev); });
            integrate_to(engine_.now());
            return summary;
        }

        // --- observation ---------------------------------------------------

        std::function<void(const TxObservation &)> on_tx_start;
        std::function<void(const Packet &, SimTime)> on_delivery;

        SimTime now() const noexcept { return engine_.now(); }
        Mode mode() const noexcept { return mode_; }
        const Topology &topology() const noexcept { return topo_; }
        const ConnectivityGraph &graph() const noexcept { return graph_; }
        ConnectivityGraph &mutable_graph() noexcept { return graph_; }
        const MacState &mac_state(NodeId n) const { return nodes_.at(n).mac; }
        const ChannelState &channel() const noexcept { return channel_; }
        const std::vector<Transmission> &transmissions() const noexcept { return txs_; }
        RouteCache &routes() noexcept { return routes_; }
        const ClassMetricsSet &metrics() const noexcept { return metrics_; }
        const PriorityQueueBank &bank(NodeId n) const { return nodes_.at(n).bank; }
        const SingleQueue &single_queue(NodeId n) const { return nodes_.at(n).single; }

        /// Whole-run counts, with in-flight packets found by scanning every
        /// queue, MAC buffer and the air.
        Conservation conservation() const
        {
            Conservation c = totals_;
            c.in_flight = {};
            auto count = [&](const Packet &p) { ++c.in_flight[p.cls.index()]; };
            for (const auto &n : nodes_)
            {
                for (auto cls : PriorityClass::all())
                    for (const auto &p : n.bank.queue(cls))
                        count(p);
                for (const auto &p : n.single.items())
                    count(p);
                if (n.frame)
                    count(*n.frame);
            }
            for (const auto &[id, p] : in_air_)
                count(p);
            return c;
        }

        /// Steady-state report over [warmup, now].
        RunReport report(std::string run_id) const
        {
            RunReport r;
            r.run_id = std::move(run_id);
            r.mode = std::string(mode_name(mode_));
            r.nodes = nodes_.size();
            r.terrain = topo_.terrain;
            r.seed = seed_;
            r.classes = metrics_;
            r.duration_s = std::max(0.0, engine_.now() - params_.warmup_s);
            for (std::size_t c = 0; c < r.classes.size(); ++c)
            {
                r.classes[c].time_avg_queue_len = r.duration_s > 0.0 ? queue_area_[c] / r.duration_s : 0.0;
                r.classes[c].time_avg_in_system = r.duration_s > 0.0 ? system_area_[c] / r.duration_s : 0.0;
            }
            r.shares = bandwidth_share(r.classes);
            r.conservation = conservation();
            return r;
        }

    private:
        struct Node
        {
            Node(NodeId id, const ScenarioParams &p)
                : bank(id, p.queue_capacity_per_class), single(id, p.baseline_queue_capacity)
            {
            }
            PriorityQueueBank bank;
            SingleQueue single;
            MacState mac;
            std::optional<Packet> frame; // dequeued frame being (re)transmitted
            bool transmitting = false;
        };

        bool source_enabled(NodeId n, PriorityClass c) const
        {
            return params_.source_mask.empty() || params_.source_mask[n][c.index()];
        }

        const AccessParams &access_params(PriorityClass c) const
        {
            return mode_ == Mode::Priority ? params_.edca.of(c) : params_.baseline_access;
        }

        bool queue_empty(const Node &n) const { return mode_ == Mode::Priority ? n.bank.empty() : n.single.empty(); }

        // --- bookkeeping -----------------------------------------------------

        void integrate_to(SimTime t)
        {
            if (!warm_ || t <= last_integral_)
            {
                last_integral_ = std::max(last_integral_, t);
                return;
            }
            const double dt = t - last_integral_;
            for (std::size_t c = 0; c < queue_area_.size(); ++c)
            {
                queue_area_[c] += static_cast<double>(queued_[c]) * dt;
                system_area_[c] += static_cast<double>(in_system_[c]) * dt;
            }
            last_integral_ = t;
        }

        void queued_delta(PriorityClass c, int d)
        {
            integrate_to(engine_.now());
            queued_[c.index()] = static_cast<std::uint64_t>(static_cast<std::int64_t>(queued_[c.index()]) + d);
        }

        /// A packet leaves the network (delivered or dropped).
        void depart(PriorityClass c, SimTime created_at)
        {
            const SimTime now = engine_.now();
            integrate_to(now);
            --in_system_[c.index()];
            if (warm_)
            {
                auto &m = metrics_[c.index()];
                ++m.departures;
                m.sum_sojourn_s += now - std::max(created_at, params_.warmup_s);
            }
        }

        void drop(PriorityClass c, SimTime created_at, DropCause cause)
        {
            ++totals_.dropped[c.index()];
            if (warm_)
                ++metrics_[c.index()].drops_by_cause[static_cast<std::size_t>(cause)];
            depart(c, created_at);
        }

        // --- dispatch ---------------------------------------------------------

        void dispatch(const SimEvent &ev)
        {
            switch (ev.kind)
            {
            case EventKind::PacketArrival:
                on_arrival(ev.payload.node, PriorityClass{static_cast<int>(ev.payload.aux)},
                           static_cast<std::uint32_t>(ev.payload.ref));
                break;
            case EventKind::ChannelIdleCheck:
            case EventKind::BackoffExpiry:
                on_access(ev.payload.node, ev.payload.epoch);
                break;
            case EventKind::TxEnd:
                on_tx_end(ev.payload.ref);
                break;
            case EventKind::RxComplete:
                on_rx_complete(ev.payload.node, ev.payload.ref);
                break;
            case EventKind::AckTimeout:
                on_ack(ev.payload.node, ev.payload.aux != 0);
                break;
            case EventKind::MetricSample:
                integrate_to(engine_.now());
                warm_ = true;
                last_integral_ = engine_.now();
                break;
            case EventKind::TxStart:
            case EventKind::SimEnd:
                break;
            }
        }

        // --- traffic and forwarding -----------------------------------------

        void on_arrival(NodeId src, PriorityClass c, std::uint32_t injected_bits)
        {
            const SimTime now = engine_.now();
            const auto &spec = params_.loads[c.index()];
            Packet p;
            if (injected_bits == 0)
            {
                auto &rng = *traffic_rng_[c.index()];
                engine_.schedule(now + next_interarrival(spec, rng), EventKind::PacketArrival,
                                 {src, static_cast<std::uint32_t>(c.level()), 0, 0});
                p = make_packet(next_packet_id_++, src, topo_.sink, spec, now, rng);
            }
            else
            {
                p.id = next_packet_id_++;
                p.cls = c;
                p.src = src;
                p.dst = topo_.sink;
                p.size_bits = injected_bits;
                p.created_at = now;
            }
            ++totals_.generated[c.index()];
            integrate_to(now);
            ++in_system_[c.index()];

            const auto route = routes_.select(src, graph_);
            if (!route)
            {
                drop(p.cls, p.created_at, DropCause::NoRoute);
                return;
            }
            p.route_index = static_cast<std::uint16_t>(*route);
            p.hop_index = 0;
            forward(src, std::move(p));
        }

        /// Admits a packet held by `node` into its queue, toward the next hop of its route.
        void forward(NodeId node, Packet p)
        {
            const auto &hops = routes_.cached(p.src).at(p.route_index).hops;
            const std::size_t next = static_cast<std::size_t>(p.hop_index) + 1;
            if (next >= hops.size() || !graph_.linked(node, hops[next]))
            {
                drop(p.cls, p.created_at, DropCause::NoRoute);
                return;
            }
            const PriorityClass c = p.cls;
            const SimTime created = p.created_at;
            auto &n = nodes_[node];
            const auto outcome = mode_ == Mode::Priority ? n.bank.enqueue(std::move(p), engine_.now())
                                                         : n.single.enqueue(std::move(p), engine_.now());
            if (outcome == EnqueueOutcome::Dropped)
            {
                drop(c, created, DropCause::QueueOverflow);
                return;
            }
            queued_delta(c, +1);
            kick(node);
        }

        void deliver(Packet p)
        {
            const SimTime now = engine_.now();
            p.hop_trace.push_back({topo_.sink, now, now});
            const double delay = now - p.created_at;
            ++totals_.delivered[p.cls.index()];
            if (warm_)
                metrics_[p.cls.index()].record_delivery(p.size_bits, delay);
            routes_.feedback(p.src, p.route_index, delay, now);
            depart(p.cls, p.created_at);
            if (on_delivery)
                on_delivery(p, now);
        }

        // --- MAC ----------------------------------------------------------------

        /// Class whose access parameters govern the next attempt, if any frame is pending.
        std::optional<PriorityClass> select_next_frame(const Node &n) const
        {
            if (n.frame)
                return n.frame->cls;
            if (mode_ == Mode::Priority)
            {
                const Packet *head = n.bank.peek_highest();
                return head ? std::optional(head->cls) : std::nullopt;
            }
            return n.single.empty() ? std::nullopt : std::optional(n.single.items().front().cls);
        }

        /// Starts contention if the node is idle and has something to send.
        void kick(NodeId id)
        {
            auto &n = nodes_[id];
            if (n.mac.phase != MacPhase::Idle)
                return;
            const auto cls = select_next_frame(n);
            if (!cls)
                return;
            if (!n.mac.active_class || *n.mac.active_class != *cls)
            {
                n.mac.active_class = *cls;
                n.mac.current_cw = std::clamp(n.mac.current_cw, access_params(*cls).cw_min, access_params(*cls).cw_max);
                if (n.mac.retry_count == 0)
                    n.mac.current_cw = access_params(*cls).cw_min;
            }
            begin_contention(id);
        }

        /// AIFS defer followed by the remaining backoff, counted only while idle.
        void begin_contention(NodeId id)
        {
            auto &n = nodes_[id];
            auto &mac = n.mac;
            const SimTime now = engine_.now();
            ++mac.epoch;
            if (channel_.any_audible(id))
            {
                if (mac.backoff_remaining_slots == 0)
                    mac.backoff_remaining_slots = draw_backoff(mac.current_cw, backoff_rng_);
                mac.phase = MacPhase::Deferring;
                return;
            }
            const PriorityClass cls = *mac.active_class;
            mac.countdown_start = std::max(mac.idle_since, now) + aifs(cls);
            mac.access_at = mac.countdown_start + mac.backoff_remaining_slots * params_.edca.slot_time_s;
            mac.phase = mac.backoff_remaining_slots > 0 ? MacPhase::BackingOff : MacPhase::Sensing;
            engine_.schedule(mac.access_at,
                             mac.backoff_remaining_slots > 0 ? EventKind::BackoffExpiry : EventKind::ChannelIdleCheck,
                             {id, 0, 0, mac.epoch});
        }

        double aifs(PriorityClass c) const { return access_params(c).aifs_slots * params_.edca.slot_time_s; }

        /// A transmission started at `t` reaches this node after `delay`.
        void sense_busy(NodeId id, SimTime t, SimTime delay)
        {
            auto &mac = nodes_[id].mac;
            if (mac.phase != MacPhase::Sensing && mac.phase != MacPhase::BackingOff)
                return;
            const SimTime sensed_at = t + delay;
            if (mac.access_at <= sensed_at)
                return; // the attempt fires before the signal arrives
            if (sensed_at > mac.countdown_start)
            {
                const auto elapsed =
                    static_cast<int>(std::floor((sensed_at - mac.countdown_start) / params_.edca.slot_time_s + 1e-9));
                mac.backoff_remaining_slots -= std::min(elapsed, mac.backoff_remaining_slots);
            }
            if (mac.backoff_remaining_slots == 0)
                mac.backoff_remaining_slots = draw_backoff(mac.current_cw, backoff_rng_);
            ++mac.epoch;
            mac.phase = MacPhase::Deferring;
        }

        void sense_idle(NodeId id, SimTime idle_at)
        {
            auto &n = nodes_[id];
            n.mac.idle_since = std::max(n.mac.idle_since, idle_at);
            if (n.mac.phase == MacPhase::Deferring)
                begin_contention(id);
        }

        void on_access(NodeId id, std::uint64_t epoch)
        {
            auto &n = nodes_[id];
            if (epoch != n.mac.epoch || (n.mac.phase != MacPhase::Sensing && n.mac.phase != MacPhase::BackingOff))
                return;
            start_tx(id);
        }

        void start_tx(NodeId id)
        {
            auto &n = nodes_[id];
            const SimTime now = engine_.now();
            const bool sensed_busy = channel_.senses_busy(id, now);
            if (!n.frame)
            {
                std::optional<Packet> p;
                if (mode_ == Mode::Priority)
                    p = n.bank.dequeue_highest(now);
                else
                {
                    p = baseline_scheduler_pick(n.single.items(), scheduler_rng_);
                    if (!p->hop_trace.empty())
                        p->hop_trace.back().dequeued = now;
                }
                queued_delta(p->cls, -1);
                n.frame = std::move(p);
                if (*n.mac.active_class != n.frame->cls)
                {
                    // A more urgent packet arrived during contention; it goes out now
                    // under its own class.
                    n.mac.active_class = n.frame->cls;
                    n.mac.current_cw = access_params(n.frame->cls).cw_min;
                }
            }
            const Packet &p = *n.frame;
            const auto &hops = routes_.cached(p.src).at(p.route_index).hops;
            const NodeId dst = hops.at(static_cast<std::size_t>(p.hop_index) + 1);

            Transmission tx;
            tx.id = txs_.size();
            tx.src = id;
            tx.dst = dst;
            tx.start = now;
            tx.end = now + transmission_time(p, params_.radio, params_.frame_overhead_s);
            tx.cls = p.cls;
            if (nodes_[dst].transmitting)
                tx.corrupted = true;
            // Half duplex: starting to send spoils anything this node was receiving.
            for (const auto &s : channel_.at(id))
            {
                if (s.dst == id && s.end > now)
                    txs_[s.tx].corrupted = true;
            }
            for (const auto &nb : graph_.interferers(id))
            {
                auto &heard = channel_.at(nb.node);
                bool overlap = false;
                for (const auto &s : heard)
                {
                    if (s.end <= now)
                        continue;
                    overlap = true;
                    if (s.dst == nb.node)
                        txs_[s.tx].corrupted = true;
                }
                if (nb.node == dst && (overlap || nodes_[dst].transmitting))
                    tx.corrupted = true;
                const SimTime delay = nb.distance_m / params_.radio.propagation_speed_mps;
                heard.push_back({tx.id, id, dst, tx.start, tx.end, delay});
            }
            txs_.push_back(tx);

            n.transmitting = true;
            n.mac.phase = MacPhase::Transmitting;
            n.mac.backoff_remaining_slots = 0;
            ++n.mac.epoch;
            engine_.schedule(tx.end, EventKind::TxEnd, {id, 0, tx.id, 0});

            if (on_tx_start)
                on_tx_start(TxObservation{txs_.back(), sensed_busy});

            for (const auto &nb : graph_.interferers(id))
                sense_busy(nb.node, now, nb.distance_m / params_.radio.propagation_speed_mps);
        }

        void on_tx_end(std::uint64_t tx_id)
        {
            const Transmission tx = txs_[tx_id];
            auto &n = nodes_[tx.src];
            n.transmitting = false;
            n.mac.phase = MacPhase::WaitingAck;
            if (!channel_.any_audible(tx.src))
                n.mac.idle_since = std::max(n.mac.idle_since, tx.end);

            for (const auto &nb : graph_.interferers(tx.src))
            {
                channel_.remove(nb.node, tx_id);
                if (!channel_.any_audible(nb.node) && !nodes_[nb.node].transmitting)
                    sense_idle(nb.node, tx.end + nb.distance_m / params_.radio.propagation_speed_mps);
            }

            if (!tx.corrupted)
            {
                const double d = distance(topo_.nodes[tx.src], topo_.nodes[tx.dst]);
                in_air_.emplace(tx_id, std::move(*n.frame));
                n.frame.reset();
                engine_.schedule(tx.end + d / params_.radio.propagation_speed_mps, EventKind::RxComplete,
                                 {tx.dst, 0, tx_id, 0});
            }
            engine_.schedule(tx.end + params_.edca.sifs_s, EventKind::AckTimeout,
                             {tx.src, tx.corrupted ? 0u : 1u, tx_id, 0});
        }

        void on_rx_complete(NodeId at, std::uint64_t tx_id)
        {
            auto it = in_air_.find(tx_id);
            Packet p = std::move(it->second);
            in_air_.erase(it);
            if (at == topo_.sink)
            {
                deliver(std::move(p));
                return;
            }
            ++p.hop_index;
            forward(at, std::move(p));
        }

        void on_ack(NodeId id, bool success)
        {
            auto &n = nodes_[id];
            auto &mac = n.mac;
            const PriorityClass cls = *mac.active_class;
            const auto &ap = access_params(cls);
            if (success)
            {
                mac.retry_count = 0;
                mac.current_cw = ap.cw_min;
            }
            else if (on_tx_failure(mac, ap, params_.edca.retry_limit) == FailureAction::Drop)
            {
                Packet p = std::move(*n.frame);
                n.frame.reset();
                drop(p.cls, p.created_at, DropCause::MacRetryExceeded);
            }
            // Backoff after every attempt, successful or not.
            mac.backoff_remaining_slots = draw_backoff(mac.current_cw, backoff_rng_);
            mac.phase = MacPhase::Idle;
            kick(id);
        }

        Topology topo_;
        ScenarioParams params_;
        Mode mode_;
        std::uint64_t seed_;
        ConnectivityGraph graph_;
        ChannelState channel_;
        RouteCache routes_;
        EventEngine engine_;
        PerClass<std::optional<RngStream>> traffic_rng_;
        RngStream backoff_rng_;
        RngStream scheduler_rng_;
        std::vector<Node> nodes_;
        std::vector<Transmission> txs_;
        std::unordered_map<std::uint64_t, Packet> in_air_;
        std::uint64_t next_packet_id_ = 0;

        ClassMetricsSet metrics_;
        Conservation totals_;
        bool warm_ = false;
        SimTime last_integral_ = 0.0;
        PerClass<std::uint64_t> queued_{};
        PerClass<std::uint64_t> in_system_{};
        PerClass<double> queue_area_{};
        PerClass<double> system_area_{};
    };
} // namespace wsnprio
