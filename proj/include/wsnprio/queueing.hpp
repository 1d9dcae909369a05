#pragma once

// Per-node class queues with head-of-line priority service, the closed-form
// non-preemptive priority M/G/1 waiting-time model, and an event-driven
// single-server simulator used to check it.

#include "simcore.hpp"
#include "traffic.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <deque>
#include <optional>
#include <span>

namespace wsnprio
{
    enum class EnqueueOutcome
    {
        Accepted,
        Dropped,
    };

    inline constexpr std::size_t kDefaultClassCapacity = 50;

    /// Four independent FIFO queues. Overflow is a tail drop on the arriving
    /// packet's own class.
    class PriorityQueueBank
    {
    public:
        explicit PriorityQueueBank(NodeId owner = kNoNode, std::size_t capacity_per_class = kDefaultClassCapacity)
            : owner_(owner), capacity_(capacity_per_class)
        {
            if (capacity_ == 0)
                throw std::invalid_argument("queue capacity must be positive");
        }

        EnqueueOutcome enqueue(Packet p, SimTime now)
        {
            auto &q = queues_[p.cls.index()];
            if (q.size() >= capacity_)
            {
                ++drops_[p.cls.index()];
                return EnqueueOutcome::Dropped;
            }
            p.hop_trace.push_back({owner_, now, -1.0});
            q.push_back(std::move(p));
            return EnqueueOutcome::Accepted;
        }

        /// Head of the lowest-index non-empty queue, not removed.
        const Packet *peek_highest() const noexcept
        {
            for (const auto &q : queues_)
            {
                if (!q.empty())
                    return &q.front();
            }
            return nullptr;
        }

        std::optional<Packet> dequeue_highest(SimTime now)
        {
            for (auto &q : queues_)
            {
                if (q.empty())
                    continue;
                Packet p = std::move(q.front());
                q.pop_front();
                if (!p.hop_trace.empty())
                    p.hop_trace.back().dequeued = now;
                return p;
            }
            return std::nullopt;
        }

        std::size_t size(PriorityClass c) const noexcept { return queues_[c.index()].size(); }
        std::size_t total() const noexcept
        {
            std::size_t n = 0;
            for (const auto &q : queues_)
                n += q.size();
            return n;
        }
        bool empty() const noexcept { return total() == 0; }
        std::size_t capacity_per_class() const noexcept { return capacity_; }
        std::uint64_t drop_count(PriorityClass c) const noexcept { return drops_[c.index()]; }
        const std::deque<Packet> &queue(PriorityClass c) const noexcept { return queues_[c.index()]; }

    private:
        NodeId owner_;
        std::size_t capacity_;
        PerClass<std::deque<Packet>> queues_{};
        PerClass<std::uint64_t> drops_{};
    };

    /// The class-blind single queue of the baseline protocol. Service order is
    /// chosen by the caller (see routing::baseline_scheduler_pick).
    class SingleQueue
    {
    public:
        explicit SingleQueue(NodeId owner = kNoNode, std::size_t capacity = 4 * kDefaultClassCapacity)
            : owner_(owner), capacity_(capacity)
        {
            if (capacity_ == 0)
                throw std::invalid_argument("queue capacity must be positive");
        }

        EnqueueOutcome enqueue(Packet p, SimTime now)
        {
            if (items_.size() >= capacity_)
            {
                ++drops_;
                return EnqueueOutcome::Dropped;
            }
            p.hop_trace.push_back({owner_, now, -1.0});
            items_.push_back(std::move(p));
            return EnqueueOutcome::Accepted;
        }

        std::deque<Packet> &items() noexcept { return items_; }
        const std::deque<Packet> &items() const noexcept { return items_; }
        std::size_t size() const noexcept { return items_.size(); }
        bool empty() const noexcept { return items_.empty(); }
        std::uint64_t drop_count() const noexcept { return drops_; }

    private:
        NodeId owner_;
        std::size_t capacity_;
        std::deque<Packet> items_;
        std::uint64_t drops_ = 0;
    };

    // ---------------------------------------------------------------------
    // Analytic model

    inline double utilization(const ClassLoadSpec &spec) { return spec.lambda_pps * spec.mean_service_s; }

    class Saturated : public std::domain_error
    {
    public:
        Saturated(PriorityClass c, double load)
            : std::domain_error("class " + std::to_string(c.level()) + " saturated (cumulative load " +
                                std::to_string(load) + ")"),
              cls_(c), load_(load)
        {
        }
        PriorityClass cls() const noexcept { return cls_; }
        double load() const noexcept { return load_; }

    private:
        PriorityClass cls_;
        double load_;
    };

    class AnalyticModel
    {
    public:
        AnalyticModel()
        {
            for (auto c : PriorityClass::all())
                specs_[c.index()] = exponential_service(c, 0.0, 1.0);
        }

        /// Classes not listed carry no load.
        explicit AnalyticModel(std::span<const ClassLoadSpec> specs) : AnalyticModel()
        {
            PerClass<bool> seen{};
            for (const auto &s : specs)
            {
                s.validate();
                if (seen[s.cls.index()])
                    throw std::invalid_argument("analytic model: duplicate class " + std::to_string(s.cls.level()));
                seen[s.cls.index()] = true;
                specs_[s.cls.index()] = s;
            }
        }

        const ClassLoadSpec &spec(PriorityClass c) const noexcept { return specs_[c.index()]; }
        const PerClass<ClassLoadSpec> &specs() const noexcept { return specs_; }

        double rho(PriorityClass c) const { return utilization(specs_[c.index()]); }

    private:
        PerClass<ClassLoadSpec> specs_;
    };

    /// Sum of the loads of classes 0..n. Class n is saturated iff this is >= 1.
    inline double saturation_point(const AnalyticModel &model, PriorityClass n)
    {
        double sum = 0.0;
        for (int j = 0; j <= n.level(); ++j)
            sum += model.rho(PriorityClass{j});
        return sum;
    }

    /// Mean residual service time seen by an arrival, R = 1/2 sum(lambda_i E[s_i^2]).
    /// Classes beyond the first saturated one never reach the server; the first
    /// saturated class keeps the server busy for the remaining 1 - sum(rho_j<k)
    /// fraction of time, so its rate is capped at that throughput.
    inline double residual_service(const AnalyticModel &model)
    {
        double r = 0.0;
        double busy = 0.0;
        for (auto c : PriorityClass::all())
        {
            const auto &s = model.spec(c);
            const double rho = utilization(s);
            if (busy + rho < 1.0)
            {
                r += s.lambda_pps * s.second_moment_service_s2;
                busy += rho;
                continue;
            }
            const double throughput = (1.0 - busy) / s.mean_service_s;
            r += throughput * s.second_moment_service_s2;
            break;
        }
        return 0.5 * r;
    }

    /// E[W_n] = R / ((1 - sigma_{n-1}) (1 - sigma_n)), sigma_k = sum_{j<=k} rho_j.
    inline SimTime analytic_wait(const AnalyticModel &model, PriorityClass n)
    {
        const double sigma_n = saturation_point(model, n);
        if (sigma_n >= 1.0)
            throw Saturated(n, sigma_n);
        const double sigma_prev = sigma_n - model.rho(n);
        return residual_service(model) / ((1.0 - sigma_prev) * (1.0 - sigma_n));
    }

    // ---------------------------------------------------------------------
    // Single-server validation simulator

    struct SingleServerOptions
    {
        std::uint64_t departures = 1'000'000;
        std::uint64_t seed = 1;
        std::size_t batches = 20;
    };

    struct ClassWaitStats
    {
        std::uint64_t departures = 0;
        std::uint64_t started = 0;     // customers that began service
        double mean_wait = 0.0;        // over customers that began service
        double ci_half_width = 0.0;    // 95%, batch means
        double time_avg_queue_len = 0.0;
        double throughput = 0.0;       // started / horizon
        bool diverged = false;         // analytic cumulative load >= 1
    };

    struct SingleServerResult
    {
        PerClass<ClassWaitStats> classes{};
        SimTime horizon = 0.0;
        std::uint64_t total_departures = 0;
    };

    enum class ServiceShape
    {
        Deterministic,
        Exponential,
    };

    inline ServiceShape service_shape(const ClassLoadSpec &s)
    {
        const double m2 = s.mean_service_s * s.mean_service_s;
        if (std::abs(s.second_moment_service_s2 - m2) <= 1e-9 * m2)
            return ServiceShape::Deterministic;
        if (std::abs(s.second_moment_service_s2 - 2.0 * m2) <= 1e-9 * m2)
            return ServiceShape::Exponential;
        throw std::invalid_argument("single-server simulation supports deterministic or exponential service only");
    }

    /// Non-preemptive priority single server; runs until `departures` service
    /// completions (or returns immediately when no class has load).
    inline SingleServerResult simulate_single_server(const AnalyticModel &model, const SingleServerOptions &opt)
    {
        SingleServerResult out;
        struct Source
        {
            bool active = false;
            ServiceShape shape = ServiceShape::Exponential;
            double next_arrival = 0.0;
            std::deque<double> waiting;
            double queue_area = 0.0;
            double wait_sum = 0.0;
            std::vector<double> batch_sum;
            std::vector<std::uint64_t> batch_n;
        };

        PerClass<Source> src;
        std::vector<RngStream> arrivals, service;
        bool any = false;
        for (auto c : PriorityClass::all())
        {
            arrivals.emplace_back(opt.seed, "validate/arrivals/" + std::to_string(c.level()));
            service.emplace_back(opt.seed, "validate/service/" + std::to_string(c.level()));
            auto &s = src[c.index()];
            const auto &spec = model.spec(c);
            s.active = spec.lambda_pps > 0.0;
            s.batch_sum.assign(opt.batches, 0.0);
            s.batch_n.assign(opt.batches, 0);
            out.classes[c.index()].diverged = s.active && saturation_point(model, c) >= 1.0;
            if (s.active)
            {
                s.shape = service_shape(spec);
                s.next_arrival = arrivals[c.index()].exponential(spec.lambda_pps);
                any = true;
            }
        }
        if (!any || opt.departures == 0)
            return out;

        auto draw_service = [&](PriorityClass c) {
            const auto &spec = model.spec(c);
            if (src[c.index()].shape == ServiceShape::Deterministic)
                return spec.mean_service_s;
            return service[c.index()].exponential(1.0 / spec.mean_service_s);
        };

        const std::uint64_t per_batch = std::max<std::uint64_t>(1, opt.departures / opt.batches);
        std::uint64_t started_total = 0;
        double t = 0.0;
        bool busy = false;
        double busy_until = 0.0;
        int in_service = -1;

        auto advance = [&](double to) {
            const double dt = to - t;
            for (auto &s : src)
                s.queue_area += static_cast<double>(s.waiting.size()) * dt;
            t = to;
        };
        auto start_service = [&](int c, double arrived) {
            auto &s = src[static_cast<std::size_t>(c)];
            const double w = t - arrived;
            s.wait_sum += w;
            const std::size_t b = std::min<std::size_t>(opt.batches - 1, started_total / per_batch);
            s.batch_sum[b] += w;
            ++s.batch_n[b];
            ++out.classes[static_cast<std::size_t>(c)].started;
            ++started_total;
            busy = true;
            in_service = c;
            busy_until = t + draw_service(PriorityClass{c});
        };

        while (out.total_departures < opt.departures)
        {
            double next_arr = std::numeric_limits<double>::infinity();
            int arr_class = -1;
            for (int c = 0; c < PriorityClass::kCount; ++c)
            {
                const auto &s = src[static_cast<std::size_t>(c)];
                if (s.active && s.next_arrival < next_arr)
                {
                    next_arr = s.next_arrival;
                    arr_class = c;
                }
            }
            if (busy && busy_until <= next_arr)
            {
                advance(busy_until);
                busy = false;
                ++out.classes[static_cast<std::size_t>(in_service)].departures;
                ++out.total_departures;
                for (int c = 0; c < PriorityClass::kCount; ++c)
                {
                    auto &q = src[static_cast<std::size_t>(c)].waiting;
                    if (!q.empty())
                    {
                        const double arrived = q.front();
                        q.pop_front();
                        start_service(c, arrived);
                        break;
                    }
                }
                continue;
            }
            advance(next_arr);
            auto &s = src[static_cast<std::size_t>(arr_class)];
            s.next_arrival = t + arrivals[static_cast<std::size_t>(arr_class)].exponential(
                                     model.spec(PriorityClass{arr_class}).lambda_pps);
            if (!busy)
                start_service(arr_class, t);
            else
                s.waiting.push_back(t);
        }

        out.horizon = t;
        for (std::size_t c = 0; c < src.size(); ++c)
        {
            auto &st = out.classes[c];
            const auto &s = src[c];
            if (st.started > 0)
                st.mean_wait = s.wait_sum / static_cast<double>(st.started);
            st.time_avg_queue_len = t > 0.0 ? s.queue_area / t : 0.0;
            st.throughput = t > 0.0 ? static_cast<double>(st.started) / t : 0.0;

            std::vector<double> means;
            for (std::size_t b = 0; b < opt.batches; ++b)
            {
                if (s.batch_n[b] > 0)
                    means.push_back(s.batch_sum[b] / static_cast<double>(s.batch_n[b]));
            }
            if (means.size() >= 2)
            {
                double m = 0.0;
                for (double x : means)
                    m += x;
                m /= static_cast<double>(means.size());
                double var = 0.0;
                for (double x : means)
                    var += (x - m) * (x - m);
                var /= static_cast<double>(means.size() - 1);
                boost::math::students_t dist(static_cast<double>(means.size() - 1));
                const double tq = boost::math::quantile(boost::math::complement(dist, 0.025));
                st.ci_half_width = tq * std::sqrt(var / static_cast<double>(means.size()));
            }
        }
        return out;
    }
} // namespace wsnprio
