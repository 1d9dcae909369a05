#pragma once

// Contention parameters, per-node MAC state, binary exponential backoff, and
// the shared-channel collision model.

#include "simcore.hpp"
#include "topology.hpp"

#include <optional>
#include <set>
#include <span>

namespace wsnprio
{
    struct AccessParams
    {
        int aifs_slots = 2;
        int cw_min = 15;
        int cw_max = 1023;

        bool operator==(const AccessParams &) const = default;
    };

    inline constexpr bool is_window_size(int cw) noexcept { return cw >= 1 && ((cw + 1) & cw) == 0; }

    /// Access parameters for each class plus the shared timing constants.
    struct EdcaParams
    {
        PerClass<AccessParams> classes{AccessParams{2, 7, 15}, AccessParams{2, 15, 31}, AccessParams{3, 31, 1023},
                                       AccessParams{7, 31, 1023}};
        double slot_time_s = 20e-6;
        double sifs_s = 10e-6;
        int retry_limit = 7;

        /// Plain DCF: every class uses the same parameters.
        static EdcaParams uniform(AccessParams p, double slot = 20e-6, double sifs = 10e-6, int retry_limit = 7)
        {
            EdcaParams e;
            e.classes.fill(p);
            e.slot_time_s = slot;
            e.sifs_s = sifs;
            e.retry_limit = retry_limit;
            return e;
        }

        const AccessParams &of(PriorityClass c) const noexcept { return classes[c.index()]; }
        double aifs_s(PriorityClass c) const noexcept { return of(c).aifs_slots * slot_time_s; }

        void validate() const
        {
            for (std::size_t i = 0; i < classes.size(); ++i)
            {
                const auto &p = classes[i];
                const std::string tag = "edca class " + std::to_string(i) + ": ";
                if (p.aifs_slots < 1)
                    throw std::invalid_argument(tag + "aifs must be >= 1 slot");
                if (!is_window_size(p.cw_min) || !is_window_size(p.cw_max))
                    throw std::invalid_argument(tag + "cw bounds must be of the form 2^k - 1");
                if (p.cw_min > p.cw_max)
                    throw std::invalid_argument(tag + "cw_min exceeds cw_max");
                if (i > 0 && (p.aifs_slots < classes[i - 1].aifs_slots || p.cw_min < classes[i - 1].cw_min))
                    throw std::invalid_argument(tag + "aifs and cw_min must be nondecreasing with class index");
            }
            if (!(slot_time_s > 0.0) || !(sifs_s >= 0.0))
                throw std::invalid_argument("edca: slot time must be positive and sifs nonnegative");
            if (retry_limit < 0)
                throw std::invalid_argument("edca: retry limit must be >= 0");
        }

        bool operator==(const EdcaParams &) const = default;
    };

    /// Baseline DCF: backoff window 15..1023, DIFS of two slots.
    inline constexpr AccessParams kDcfAccess{2, 15, 1023};

    enum class MacPhase : std::uint8_t
    {
        Idle,         // nothing to send
        Sensing,      // waiting out AIFS with no backoff pending
        Deferring,    // channel busy; countdown frozen
        BackingOff,   // counting down idle slots
        Transmitting,
        WaitingAck,
    };

    struct MacState
    {
        MacPhase phase = MacPhase::Idle;
        int current_cw = 0;
        int backoff_remaining_slots = 0;
        int retry_count = 0;
        std::optional<PriorityClass> active_class;

        // Engine bookkeeping for the pending access attempt.
        std::uint64_t epoch = 0;
        SimTime idle_since = 0.0;
        SimTime countdown_start = 0.0;
        SimTime access_at = 0.0;
    };

    inline int grow_cw(int cw, int cw_max) noexcept { return std::min(2 * (cw + 1) - 1, cw_max); }

    inline int draw_backoff(int cw, RngStream &rng)
    {
        return static_cast<int>(rng.uniform_int(0, static_cast<std::uint64_t>(cw)));
    }

    enum class FailureAction
    {
        Retry,
        Drop,
    };

    /// Widens the window and counts the retry; past the retry limit the frame is
    /// dropped and the window returns to cw_min.
    inline FailureAction on_tx_failure(MacState &st, const AccessParams &p, int retry_limit)
    {
        st.current_cw = grow_cw(st.current_cw, p.cw_max);
        ++st.retry_count;
        if (st.retry_count > retry_limit)
        {
            st.retry_count = 0;
            st.current_cw = p.cw_min;
            return FailureAction::Drop;
        }
        return FailureAction::Retry;
    }

    inline SimTime transmission_time(std::uint32_t size_bits, const RadioModel &radio, double frame_overhead_s = 0.0)
    {
        return static_cast<double>(size_bits) / radio.bitrate_bps + frame_overhead_s;
    }

    inline SimTime transmission_time(const Packet &p, const RadioModel &radio, double frame_overhead_s = 0.0)
    {
        return transmission_time(p.size_bits, radio, frame_overhead_s);
    }

    // ---------------------------------------------------------------------
    // Channel

    struct Transmission
    {
        std::uint64_t id = 0;
        NodeId src = kNoNode;
        NodeId dst = kNoNode;
        SimTime start = 0.0;
        SimTime end = 0.0;
        PriorityClass cls{};
        bool corrupted = false;
    };

    /// Signal currently on the air as seen by one node.
    struct AudibleSignal
    {
        std::uint64_t tx = 0;
        NodeId src = kNoNode;
        NodeId dst = kNoNode;
        SimTime start = 0.0;
        SimTime end = 0.0;
        SimTime delay = 0.0;
    };

    /// Per-node set of audible transmissions.
    class ChannelState
    {
    public:
        explicit ChannelState(std::size_t nodes = 0) : audible_(nodes) {}

        std::vector<AudibleSignal> &at(NodeId n) { return audible_.at(n); }
        const std::vector<AudibleSignal> &at(NodeId n) const { return audible_.at(n); }

        /// Carrier sense: a signal is sensed once it has propagated to the node.
        bool senses_busy(NodeId n, SimTime now) const
        {
            for (const auto &s : audible_.at(n))
            {
                if (s.start + s.delay < now && s.end + s.delay > now)
                    return true;
            }
            return false;
        }

        bool any_audible(NodeId n) const { return !audible_.at(n).empty(); }

        void remove(NodeId n, std::uint64_t tx)
        {
            auto &v = audible_.at(n);
            for (std::size_t i = 0; i < v.size(); ++i)
            {
                if (v[i].tx == tx)
                {
                    v[i] = v.back();
                    v.pop_back();
                    return;
                }
            }
        }

    private:
        std::vector<std::vector<AudibleSignal>> audible_;
    };

    /// Reference collision check over a complete transmission log: a frame is
    /// corrupted at its receiver iff another transmission audible there (or sent
    /// by the receiver itself) overlaps it in time. Returns the ids of corrupted
    /// frames.
    inline std::set<std::uint64_t> detect_collisions(std::span<const Transmission> log, const ConnectivityGraph &graph)
    {
        std::set<std::uint64_t> out;
        for (const auto &a : log)
        {
            for (const auto &b : log)
            {
                if (a.id == b.id)
                    continue;
                const bool overlap = a.start < b.end && b.start < a.end;
                if (!overlap)
                    continue;
                if (b.src == a.dst || graph.interferes(b.src, a.dst))
                {
                    out.insert(a.id);
                    break;
                }
            }
        }
        return out;
    }
} // namespace wsnprio
