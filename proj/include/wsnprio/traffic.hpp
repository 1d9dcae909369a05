#pragma once

// Per-class Poisson packet sources.

#include "simcore.hpp"

#include <algorithm>
#include <variant>

namespace wsnprio
{
    struct FixedSize
    {
        std::uint32_t bits = 1024;
        bool operator==(const FixedSize &) const = default;
    };

    struct ExponentialSize
    {
        double mean_bits = 1024.0;
        bool operator==(const ExponentialSize &) const = default;
    };

    using SizeDist = std::variant<FixedSize, ExponentialSize>;

    /// Arrival rate and service-time moments of one class. The moments feed the
    /// analytic model; in network runs service time follows from packet size.
    struct ClassLoadSpec
    {
        PriorityClass cls{};
        double lambda_pps = 0.0;
        double mean_service_s = 1.0;
        double second_moment_service_s2 = 2.0;
        SizeDist size_dist = FixedSize{};

        void validate() const
        {
            if (!(lambda_pps >= 0.0))
                throw std::invalid_argument("class load: lambda must be >= 0");
            if (!(mean_service_s > 0.0))
                throw std::invalid_argument("class load: mean service time must be > 0");
            // Allow for rounding when E[s^2] is computed as E[s]^2.
            if (!(second_moment_service_s2 >= mean_service_s * mean_service_s * (1.0 - 1e-12)))
                throw std::invalid_argument("class load: E[s^2] must be >= E[s]^2");
            if (const auto *f = std::get_if<FixedSize>(&size_dist); f && f->bits == 0)
                throw std::invalid_argument("class load: fixed size must be positive");
            if (const auto *e = std::get_if<ExponentialSize>(&size_dist); e && !(e->mean_bits > 0.0))
                throw std::invalid_argument("class load: mean size must be positive");
        }

        bool operator==(const ClassLoadSpec &) const = default;
    };

    /// Exponential service with the given mean: E[s^2] = 2 E[s]^2.
    inline ClassLoadSpec exponential_service(PriorityClass c, double lambda, double mean_s)
    {
        return {c, lambda, mean_s, 2.0 * mean_s * mean_s, FixedSize{}};
    }

    /// Deterministic service: E[s^2] = E[s]^2.
    inline ClassLoadSpec deterministic_service(PriorityClass c, double lambda, double mean_s)
    {
        return {c, lambda, mean_s, mean_s * mean_s, FixedSize{}};
    }

    class ZeroRate : public std::domain_error
    {
    public:
        explicit ZeroRate(PriorityClass c)
            : std::domain_error("class " + std::to_string(c.level()) + " has zero arrival rate")
        {
        }
    };

    inline SimTime next_interarrival(const ClassLoadSpec &spec, RngStream &rng)
    {
        if (spec.lambda_pps <= 0.0)
            throw ZeroRate(spec.cls);
        return rng.exponential(spec.lambda_pps);
    }

    inline std::uint32_t draw_size(const SizeDist &dist, RngStream &rng)
    {
        if (const auto *f = std::get_if<FixedSize>(&dist))
            return f->bits;
        const double mean = std::get<ExponentialSize>(dist).mean_bits;
        const double bits = std::round(rng.exponential(1.0 / mean));
        return static_cast<std::uint32_t>(std::clamp(bits, 1.0, 4.0e9));
    }

    inline Packet make_packet(std::uint64_t id, NodeId src, NodeId sink, const ClassLoadSpec &spec, SimTime now,
                              RngStream &rng)
    {
        if (src == sink)
            throw std::invalid_argument("make_packet: source equals sink");
        Packet p;
        p.id = id;
        p.cls = spec.cls;
        p.src = src;
        p.dst = sink;
        p.size_bits = draw_size(spec.size_dist, rng);
        p.created_at = now;
        return p;
    }
} // namespace wsnprio
