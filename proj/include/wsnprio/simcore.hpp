#pragma once

// Core domain types, the deterministic event engine, and named RNG streams.

#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace wsnprio
{
    using NodeId = std::uint32_t;
    using SimTime = double; // seconds

    inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

    /// One of the four traffic classes. Level 0 is the most urgent.
    class PriorityClass
    {
    public:
        static constexpr int kCount = 4;

        constexpr PriorityClass() = default;
        explicit constexpr PriorityClass(int level) : level_(checked(level)) {}

        constexpr int level() const noexcept { return level_; }
        constexpr std::size_t index() const noexcept { return static_cast<std::size_t>(level_); }

        constexpr auto operator<=>(const PriorityClass &) const = default;

        static constexpr std::array<PriorityClass, kCount> all() noexcept
        {
            return {PriorityClass{0}, PriorityClass{1}, PriorityClass{2}, PriorityClass{3}};
        }

        std::string_view traffic_type() const noexcept
        {
            switch (level_)
            {
            case 0:
                return "real-time critical";
            case 1:
                return "real-time";
            case 2:
                return "control";
            default:
                return "normal periodic";
            }
        }

    private:
        static constexpr int checked(int level)
        {
            if (level < 0 || level >= kCount)
            {
                throw std::out_of_range("priority class must be in [0,3], got " + std::to_string(level));
            }
            return level;
        }

        int level_ = 0;
    };

    template <typename T>
    using PerClass = std::array<T, PriorityClass::kCount>;

    struct HopRecord
    {
        NodeId node = kNoNode;
        SimTime enqueued = 0.0;
        SimTime dequeued = -1.0; // < 0 while still queued
    };

    struct Packet
    {
        std::uint64_t id = 0;
        PriorityClass cls{};
        NodeId src = kNoNode;
        NodeId dst = kNoNode;
        std::uint32_t size_bits = 0;
        SimTime created_at = 0.0;
        std::vector<HopRecord> hop_trace;

        // Source-route bookkeeping: which cached route of `src`, and the index of
        // the node currently holding the packet within that route.
        std::uint16_t route_index = 0;
        std::uint16_t hop_index = 0;
    };

    /// True when every hop has dequeue >= enqueue and timestamps never go backwards.
    inline bool hop_trace_consistent(const Packet &p)
    {
        SimTime last = p.created_at;
        for (const auto &h : p.hop_trace)
        {
            if (h.enqueued < last)
                return false;
            if (h.dequeued >= 0.0)
            {
                if (h.dequeued < h.enqueued)
                    return false;
                last = h.dequeued;
            }
            else
            {
                last = h.enqueued;
            }
        }
        return true;
    }

    // ---------------------------------------------------------------------
    // Event engine

    enum class EventKind : std::uint8_t
    {
        PacketArrival,
        ChannelIdleCheck,
        BackoffExpiry,
        TxStart,
        TxEnd,
        RxComplete,
        AckTimeout,
        MetricSample,
        SimEnd,
    };

    struct EventPayload
    {
        NodeId node = kNoNode;
        std::uint32_t aux = 0;
        std::uint64_t ref = 0;
        std::uint64_t epoch = 0;
    };

    struct SimEvent
    {
        SimTime at = 0.0;
        std::uint64_t seq = 0;
        EventKind kind = EventKind::SimEnd;
        EventPayload payload{};
    };

    class SchedulingInPast : public std::logic_error
    {
    public:
        SchedulingInPast(SimTime at, SimTime clock)
            : std::logic_error("event scheduled at " + std::to_string(at) + " before clock " + std::to_string(clock))
        {
        }
    };

    struct RunSummary
    {
        std::uint64_t events_processed = 0;
        SimTime clock = 0.0;

        bool operator==(const RunSummary &) const = default;
    };

    /// Pending-event set ordered by (at, seq). Events at equal times dispatch in
    /// insertion order.
    class EventEngine
    {
    public:
        SimTime now() const noexcept { return clock_; }
        std::size_t pending() const noexcept { return heap_.size(); }

        /// Assigns the next sequence number and returns it.
        std::uint64_t schedule(SimTime at, EventKind kind, EventPayload payload = {})
        {
            if (at < clock_)
                throw SchedulingInPast(at, clock_);
            SimEvent ev{at, next_seq_++, kind, payload};
            heap_.push(ev);
            return ev.seq;
        }

        std::uint64_t schedule(const SimEvent &ev) { return schedule(ev.at, ev.kind, ev.payload); }

        /// Dispatches every pending event with at <= end, then sets the clock to end.
        template <typename Dispatch>
        RunSummary run_until(SimTime end, Dispatch &&dispatch)
        {
            RunSummary summary;
            while (!heap_.empty() && heap_.top().at <= end)
            {
                SimEvent ev = heap_.top();
                heap_.pop();
                clock_ = ev.at;
                dispatch(ev);
                ++summary.events_processed;
            }
            if (end > clock_)
                clock_ = end;
            summary.clock = clock_;
            return summary;
        }

    private:
        struct Later
        {
            bool operator()(const SimEvent &a, const SimEvent &b) const noexcept
            {
                if (a.at != b.at)
                    return a.at > b.at;
                return a.seq > b.seq;
            }
        };

        std::priority_queue<SimEvent, std::vector<SimEvent>, Later> heap_;
        std::uint64_t next_seq_ = 0;
        SimTime clock_ = 0.0;
    };

    // ---------------------------------------------------------------------
    // Random streams

    inline constexpr std::string_view kRngDescription =
        "mt19937_64 seeded with splitmix64(seed ^ fnv1a64(stream_id)); uniform = (x >> 11) * 2^-53";

    inline constexpr std::uint64_t fnv1a64(std::string_view s) noexcept
    {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (unsigned char c : s)
        {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        return h;
    }

    inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
    {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    /// A named, independently seeded random stream. The raw mt19937_64 output is
    /// fully specified by the standard; all conversions to real values are done
    /// here so that draws are identical across standard library implementations.
    class RngStream
    {
    public:
        RngStream(std::uint64_t seed, std::string_view stream_id)
            : seed_(seed), id_(stream_id), engine_(splitmix64(seed ^ fnv1a64(stream_id)))
        {
        }

        std::uint64_t seed() const noexcept { return seed_; }
        const std::string &stream_id() const noexcept { return id_; }

        std::uint64_t next_u64() { return engine_(); }

        /// Uniform in [0, 1).
        double next_uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

        /// Uniform integer in [lo, hi], unbiased.
        std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi)
        {
            if (hi < lo)
                throw std::invalid_argument("uniform_int: empty range");
            const std::uint64_t span = hi - lo;
            if (span == std::numeric_limits<std::uint64_t>::max())
                return engine_();
            const std::uint64_t range = span + 1;
            const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                        (std::numeric_limits<std::uint64_t>::max() % range + 1) % range;
            std::uint64_t x;
            do
            {
                x = engine_();
            } while (x > limit);
            return lo + x % range;
        }

        /// Exponential with the given rate (mean 1/rate).
        double exponential(double rate) { return -std::log1p(-next_uniform()) / rate; }

    private:
        std::uint64_t seed_;
        std::string id_;
        std::mt19937_64 engine_;
    };
} // namespace wsnprio
