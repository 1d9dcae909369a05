#pragma once

// Per-class delivery accounting, bandwidth shares, Little's-law checks, and the
// CSV schemas for single runs and sweeps.

#include "simcore.hpp"
#include "topology.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>

namespace wsnprio
{
    enum class DropCause : std::uint8_t
    {
        QueueOverflow,
        MacRetryExceeded,
        NoRoute,
    };
    inline constexpr std::size_t kDropCauses = 3;

    class NoSamples : public std::domain_error
    {
    public:
        NoSamples() : std::domain_error("no delivered packets for this class") {}
    };

    /// Fixed-size uniform reservoir (Algorithm R).
    class DelayReservoir
    {
    public:
        static constexpr std::size_t kCapacity = 4096;

        DelayReservoir(std::uint64_t seed, std::string_view stream_id) : rng_(seed, stream_id) {}

        void add(double x)
        {
            ++seen_;
            if (samples_.size() < kCapacity)
            {
                samples_.push_back(x);
                return;
            }
            const auto j = rng_.uniform_int(0, seen_ - 1);
            if (j < kCapacity)
                samples_[j] = x;
        }

        std::size_t size() const noexcept { return samples_.size(); }
        std::uint64_t seen() const noexcept { return seen_; }

        /// Nearest-rank percentile, p in (0, 1].
        double percentile(double p) const
        {
            if (samples_.empty())
                throw NoSamples();
            std::vector<double> v = samples_;
            std::sort(v.begin(), v.end());
            auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(v.size())));
            rank = std::clamp<std::size_t>(rank, 1, v.size());
            return v[rank - 1];
        }

    private:
        RngStream rng_;
        std::vector<double> samples_;
        std::uint64_t seen_ = 0;
    };

    struct ClassMetrics
    {
        std::uint64_t delivered_packets = 0;
        std::uint64_t delivered_bits = 0;
        double sum_delay_s = 0.0;
        double sum_sq_delay_s2 = 0.0;
        DelayReservoir delay_samples;
        std::array<std::uint64_t, kDropCauses> drops_by_cause{};
        double time_avg_queue_len = 0.0;

        // Little's-law inputs over the measurement window: packets present in the
        // network (time average) and every departure (delivery or drop).
        double time_avg_in_system = 0.0;
        std::uint64_t departures = 0;
        double sum_sojourn_s = 0.0;

        ClassMetrics(std::uint64_t seed, PriorityClass c)
            : delay_samples(seed, "metrics/reservoir/" + std::to_string(c.level()))
        {
        }

        void record_delivery(std::uint32_t bits, double delay)
        {
            ++delivered_packets;
            delivered_bits += bits;
            sum_delay_s += delay;
            sum_sq_delay_s2 += delay * delay;
            delay_samples.add(delay);
        }

        std::uint64_t drops(DropCause c) const noexcept { return drops_by_cause[static_cast<std::size_t>(c)]; }
        std::uint64_t total_drops() const noexcept
        {
            return drops_by_cause[0] + drops_by_cause[1] + drops_by_cause[2];
        }
    };

    using ClassMetricsSet = PerClass<ClassMetrics>;

    inline ClassMetricsSet make_class_metrics(std::uint64_t seed)
    {
        return {ClassMetrics(seed, PriorityClass{0}), ClassMetrics(seed, PriorityClass{1}),
                ClassMetrics(seed, PriorityClass{2}), ClassMetrics(seed, PriorityClass{3})};
    }

    struct ShareResult
    {
        PerClass<double> share{};
        bool no_traffic = true;
    };

    inline ShareResult bandwidth_share(const PerClass<std::uint64_t> &delivered_bits)
    {
        ShareResult r;
        double total = 0.0;
        for (auto b : delivered_bits)
            total += static_cast<double>(b);
        if (total <= 0.0)
            return r;
        r.no_traffic = false;
        for (std::size_t c = 0; c < r.share.size(); ++c)
            r.share[c] = static_cast<double>(delivered_bits[c]) / total;
        return r;
    }

    inline ShareResult bandwidth_share(const ClassMetricsSet &m)
    {
        PerClass<std::uint64_t> bits{};
        for (std::size_t c = 0; c < m.size(); ++c)
            bits[c] = m[c].delivered_bits;
        return bandwidth_share(bits);
    }

    /// share(0) > share(1) > share(2) > share(3).
    inline bool strictly_ordered(const ShareResult &s)
    {
        return !s.no_traffic && s.share[0] > s.share[1] && s.share[1] > s.share[2] && s.share[2] > s.share[3];
    }

    inline SimTime mean_delay(const ClassMetrics &m)
    {
        if (m.delivered_packets == 0)
            throw NoSamples();
        return m.sum_delay_s / static_cast<double>(m.delivered_packets);
    }

    inline SimTime p95_delay(const ClassMetrics &m) { return m.delay_samples.percentile(0.95); }

    struct LittleInputs
    {
        double time_avg_backlog = 0.0; // L
        std::uint64_t departures = 0;
        double window_s = 0.0;
        double mean_sojourn_s = 0.0; // W
        double mean_service_s = 0.0; // 0 when unknown
    };

    struct LittleResult
    {
        double relative_error = 0.0;
        bool no_traffic = false;
        bool low_confidence = false;
    };

    /// |L - lambda_eff W| / max(L, eps), lambda_eff = departures / window.
    inline LittleResult littles_law_check(const LittleInputs &in)
    {
        LittleResult r;
        if (in.departures == 0 || !(in.window_s > 0.0))
        {
            r.no_traffic = true;
            return r;
        }
        const double lambda = static_cast<double>(in.departures) / in.window_s;
        const double eps = 1e-12;
        r.relative_error = std::abs(in.time_avg_backlog - lambda * in.mean_sojourn_s) / std::max(in.time_avg_backlog, eps);
        r.low_confidence = in.mean_service_s > 0.0 && in.window_s < 10.0 * in.mean_service_s;
        return r;
    }

    inline LittleResult littles_law_check(const ClassMetrics &m, double window_s)
    {
        LittleInputs in;
        in.time_avg_backlog = m.time_avg_in_system;
        in.departures = m.departures;
        in.window_s = window_s;
        in.mean_sojourn_s = m.departures ? m.sum_sojourn_s / static_cast<double>(m.departures) : 0.0;
        return littles_law_check(in);
    }

    /// Whole-run per-class counts. generated = delivered + dropped + in_flight.
    struct Conservation
    {
        PerClass<std::uint64_t> generated{};
        PerClass<std::uint64_t> delivered{};
        PerClass<std::uint64_t> dropped{};
        PerClass<std::uint64_t> in_flight{};

        bool holds() const noexcept
        {
            for (std::size_t c = 0; c < generated.size(); ++c)
            {
                if (generated[c] != delivered[c] + dropped[c] + in_flight[c])
                    return false;
            }
            return true;
        }
    };

    struct RunReport
    {
        std::string run_id;
        std::string mode;
        std::size_t nodes = 0;
        Terrain terrain;
        std::uint64_t seed = 0;
        ClassMetricsSet classes = make_class_metrics(0);
        ShareResult shares;
        double duration_s = 0.0; // measurement window
        std::string config_echo;
        Conservation conservation;
    };

    // ---------------------------------------------------------------------
    // CSV

    class IoError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    inline std::string format_number(double x)
    {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.10g", x);
        return buf;
    }

    inline std::string format_terrain(const Terrain &t)
    {
        return format_number(t.width_m) + "x" + format_number(t.height_m);
    }

    inline constexpr std::string_view kRunCsvHeader =
        "run_id,mode,nodes,terrain_m,seed,class,delivered_packets,delivered_bits,share,mean_delay_s,p95_delay_s,"
        "drops_overflow,drops_mac,drops_noroute";

    inline constexpr std::string_view kSweepCsvHeader =
        "nodes,terrain_m,mode,seed,class,delivered_packets,delivered_bits,share,mean_delay_s,p95_delay_s,"
        "drops_overflow,drops_mac,drops_noroute";

    namespace detail
    {
        inline void write_class_fields(std::ostream &os, const RunReport &r, std::size_t c)
        {
            const auto &m = r.classes[c];
            os << c << ',' << m.delivered_packets << ',' << m.delivered_bits << ',' << format_number(r.shares.share[c])
               << ',';
            if (m.delivered_packets)
                os << format_number(mean_delay(m)) << ',' << format_number(p95_delay(m));
            else
                os << "NA,NA";
            os << ',' << m.drops(DropCause::QueueOverflow) << ',' << m.drops(DropCause::MacRetryExceeded) << ','
               << m.drops(DropCause::NoRoute) << '\n';
        }

        inline void write_file(const std::string &path, const std::string &content)
        {
            std::ofstream f(path, std::ios::binary | std::ios::trunc);
            if (!f)
                throw IoError("cannot open " + path + " for writing");
            f << content;
            f.flush();
            if (!f)
                throw IoError("write failed: " + path);
        }
    } // namespace detail

    inline void write_run_csv(std::ostream &os, std::span<const RunReport> reports)
    {
        os << kRunCsvHeader << '\n';
        for (const auto &r : reports)
        {
            for (std::size_t c = 0; c < PriorityClass::kCount; ++c)
            {
                os << r.run_id << ',' << r.mode << ',' << r.nodes << ',' << format_terrain(r.terrain) << ',' << r.seed
                   << ',';
                detail::write_class_fields(os, r, c);
            }
        }
    }

    /// One row per (node count, mode, seed, class).
    inline void write_sweep_csv(std::ostream &os, std::span<const RunReport> reports)
    {
        os << kSweepCsvHeader << '\n';
        for (const auto &r : reports)
        {
            for (std::size_t c = 0; c < PriorityClass::kCount; ++c)
            {
                os << r.nodes << ',' << format_terrain(r.terrain) << ',' << r.mode << ',' << r.seed << ',';
                detail::write_class_fields(os, r, c);
            }
        }
    }

    inline void export_csv(const RunReport &report, const std::string &path)
    {
        std::ostringstream os;
        write_run_csv(os, std::span<const RunReport>(&report, 1));
        detail::write_file(path, os.str());
    }

    inline void export_series(std::span<const RunReport> reports, const std::string &path)
    {
        std::ostringstream os;
        write_sweep_csv(os, reports);
        detail::write_file(path, os.str());
    }
} // namespace wsnprio
