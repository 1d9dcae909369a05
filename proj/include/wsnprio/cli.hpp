#pragma once

// Subcommands: single runs, analytic validation, node-count sweeps.
// Exit codes: 0 ok, 1 validation tolerance breach, 2 config error, 3 IO/runtime error.

#include "config.hpp"
#include "network.hpp"
#include "queueing.hpp"
#include "svg.hpp"

#include <atomic>
#include <filesystem>
#include <iomanip>
#include <mutex>
#include <thread>

namespace wsnprio
{
    enum ExitCode : int
    {
        kExitOk = 0,
        kExitTolerance = 1,
        kExitConfig = 2,
        kExitRuntime = 3,
    };

    inline std::string make_run_id(Mode m, std::size_t nodes, std::uint64_t seed)
    {
        return std::string(mode_name(m)) + "-n" + std::to_string(nodes) + "-s" + std::to_string(seed);
    }

    inline Topology build_topology(const SimConfig &cfg, std::size_t nodes, const Terrain &terrain, std::uint64_t seed)
    {
        return make_random_topology(nodes, terrain, cfg.sink, seed);
    }

    /// One self-contained simulation. The report's config echo reflects the cell.
    inline RunReport run_cell(const SimConfig &cfg, const Topology &topo, Mode mode, std::uint64_t seed)
    {
        const std::size_t nodes = topo.nodes.size();
        NetworkSim sim(topo, cfg.scenario(), mode, seed);
        sim.start_traffic();
        sim.run_until(cfg.duration_s);
        RunReport r = sim.report(make_run_id(mode, nodes, seed));

        SimConfig cell = cfg;
        cell.seed = seed;
        cell.nodes = nodes;
        cell.terrain = topo.terrain;
        cell.mode = mode == Mode::Priority ? RunModes::Priority : RunModes::Baseline;
        r.config_echo = echo_config(cell);
        return r;
    }

    namespace detail
    {
        inline std::filesystem::path ensure_dir(const std::string &dir)
        {
            std::filesystem::path p(dir);
            std::error_code ec;
            std::filesystem::create_directories(p, ec);
            if (ec || !std::filesystem::is_directory(p))
                throw IoError("cannot create output directory " + dir);
            return p;
        }

        inline std::string shares_chart(std::string_view title, const std::vector<std::string> &modes,
                                        const std::vector<PerClass<double>> &shares)
        {
            std::vector<BarGroup> groups;
            for (auto c : PriorityClass::all())
            {
                BarGroup g{"class " + std::to_string(c.level()), {}};
                for (const auto &s : shares)
                    g.values.push_back(s[c.index()]);
                groups.push_back(std::move(g));
            }
            return bar_chart_svg(title, "delivered-bit share", modes, groups);
        }

        inline void print_report(std::ostream &os, const RunReport &r)
        {
            os << r.run_id << "  window " << format_number(r.duration_s) << " s\n";
            os << "  class  delivered      share   mean_delay_s    p95_delay_s   drops(ovf/mac/noroute)\n";
            for (std::size_t c = 0; c < r.classes.size(); ++c)
            {
                const auto &m = r.classes[c];
                os << "  " << std::setw(5) << c << std::setw(11) << m.delivered_packets << std::setw(11)
                   << format_number(r.shares.share[c]) << std::setw(15)
                   << (m.delivered_packets ? format_number(mean_delay(m)) : "NA") << std::setw(15)
                   << (m.delivered_packets ? format_number(p95_delay(m)) : "NA") << "   "
                   << m.drops(DropCause::QueueOverflow) << '/' << m.drops(DropCause::MacRetryExceeded) << '/'
                   << m.drops(DropCause::NoRoute) << '\n';
            }
        }
    } // namespace detail

    // ---------------------------------------------------------------------
    // run

    inline int cmd_run(const SimConfig &cfg, std::ostream &out, std::ostream &err)
    {
        try
        {
            const auto dir = detail::ensure_dir(cfg.out_dir);
            Topology topo;
            if (!cfg.topology_file.empty())
            {
                std::ifstream f(cfg.topology_file);
                if (!f)
                    throw IoError("cannot open topology file " + cfg.topology_file);
                topo = read_topology(f, cfg.terrain);
            }
            else
            {
                topo = build_topology(cfg, cfg.nodes, cfg.terrain, cfg.seed);
            }

            std::vector<std::string> names;
            std::vector<PerClass<double>> shares;
            for (Mode m : modes_of(cfg.mode))
            {
                const RunReport r = run_cell(cfg, topo, m, cfg.seed);
                export_csv(r, (dir / ("run_" + r.run_id + ".csv")).string());
                detail::write_file((dir / ("run_" + r.run_id + ".cfg")).string(), r.config_echo);
                if (!r.conservation.holds())
                    throw std::logic_error("packet conservation violated in " + r.run_id);
                detail::print_report(out, r);
                names.emplace_back(mode_name(m));
                shares.push_back(r.shares.share);
            }
            if (cfg.svg)
            {
                const std::string n = std::to_string(topo.nodes.size());
                detail::write_file((dir / ("fig_" + n + ".svg")).string(),
                                   detail::shares_chart("Bandwidth share by class, " + n + " nodes", names, shares));
            }
            return kExitOk;
        }
        catch (const ConfigError &e)
        {
            err << "error: " << e.what() << '\n';
            return kExitConfig;
        }
        catch (const TopologyFormatError &e)
        {
            err << "error: " << e.what() << '\n';
            return kExitConfig;
        }
        catch (const std::exception &e)
        {
            err << "error: " << e.what() << '\n';
            return kExitRuntime;
        }
    }

    // ---------------------------------------------------------------------
    // validate

    enum class RowStatus
    {
        Ok,
        Fail,
        Saturated,
    };

    inline std::string_view row_status_name(RowStatus s)
    {
        switch (s)
        {
        case RowStatus::Ok:
            return "ok";
        case RowStatus::Fail:
            return "FAIL";
        default:
            return "Saturated";
        }
    }

    struct ValidationRow
    {
        std::string point;
        PriorityClass cls;
        double rho = 0.0;
        double cumulative_load = 0.0;
        std::optional<double> analytic; // empty when saturated
        double empirical = 0.0;
        double ci_half_width = 0.0;
        double rel_error = 0.0;
        double little_error = 0.0;
        std::uint64_t departures = 0;
        RowStatus status = RowStatus::Ok;
    };

    /// Every class with load at every grid point, in configuration order.
    inline std::vector<ValidationRow> run_validation(const SimConfig &cfg)
    {
        std::vector<std::string> points;
        for (const auto &g : cfg.grid)
        {
            if (std::find(points.begin(), points.end(), g.point) == points.end())
                points.push_back(g.point);
        }
        std::vector<ValidationRow> rows;
        for (const auto &pt : points)
        {
            std::vector<ClassLoadSpec> specs;
            for (const auto &g : cfg.grid)
            {
                if (g.point == pt)
                    specs.push_back(g.load);
            }
            const AnalyticModel model(specs);
            SingleServerOptions opt;
            opt.departures = cfg.departures;
            opt.seed = cfg.seed;
            opt.batches = cfg.batches;
            const auto sim = simulate_single_server(model, opt);

            for (auto c : PriorityClass::all())
            {
                if (model.spec(c).lambda_pps <= 0.0)
                    continue;
                const auto &st = sim.classes[c.index()];
                ValidationRow row;
                row.point = pt;
                row.cls = c;
                row.rho = model.rho(c);
                row.cumulative_load = saturation_point(model, c);
                row.empirical = st.mean_wait;
                row.ci_half_width = st.ci_half_width;
                row.departures = st.departures;
                try
                {
                    row.analytic = analytic_wait(model, c);
                }
                catch (const Saturated &)
                {
                    row.status = RowStatus::Saturated;
                    rows.push_back(row);
                    continue;
                }
                row.rel_error = *row.analytic > 0.0 ? std::abs(row.empirical - *row.analytic) / *row.analytic
                                                    : std::abs(row.empirical);
                LittleInputs li;
                li.time_avg_backlog = st.time_avg_queue_len;
                li.departures = st.started;
                li.window_s = sim.horizon;
                li.mean_sojourn_s = st.mean_wait;
                li.mean_service_s = model.spec(c).mean_service_s;
                row.little_error = littles_law_check(li).relative_error;
                row.status = row.rel_error < cfg.tolerance && row.little_error < cfg.little_tolerance ? RowStatus::Ok
                                                                                                      : RowStatus::Fail;
                rows.push_back(row);
            }
        }
        return rows;
    }

    inline constexpr std::string_view kValidateCsvHeader =
        "point,class,rho,cumulative_load,analytic_wait_s,empirical_wait_s,ci95_half_width_s,rel_error,little_rel_error,"
        "departures,status";

    inline void write_validation_csv(std::ostream &os, const std::vector<ValidationRow> &rows)
    {
        os << kValidateCsvHeader << '\n';
        for (const auto &r : rows)
        {
            os << r.point << ',' << r.cls.level() << ',' << format_number(r.rho) << ','
               << format_number(r.cumulative_load) << ',' << (r.analytic ? format_number(*r.analytic) : "NA") << ','
               << format_number(r.empirical) << ',' << format_number(r.ci_half_width) << ','
               << (r.analytic ? format_number(r.rel_error) : "NA") << ','
               << (r.analytic ? format_number(r.little_error) : "NA") << ',' << r.departures << ','
               << row_status_name(r.status) << '\n';
        }
    }

    inline int cmd_validate(const SimConfig &cfg, std::ostream &out, std::ostream &err)
    {
        if (cfg.grid.empty())
        {
            err << "error: config: validation grid is empty\n";
            return kExitConfig;
        }
        try
        {
            const auto dir = detail::ensure_dir(cfg.out_dir);
            const auto rows = run_validation(cfg);
            out << "point        class    rho  load  analytic_s  empirical_s   ci95_s  rel_err  little_err  status\n";
            bool breach = false;
            for (const auto &r : rows)
            {
                out << std::left << std::setw(12) << r.point << std::right << std::setw(6) << r.cls.level()
                    << std::fixed << std::setprecision(3) << std::setw(7) << r.rho << std::setw(6)
                    << r.cumulative_load << std::setprecision(4) << std::setw(12)
                    << (r.analytic ? *r.analytic : std::nan("")) << std::setw(13) << r.empirical << std::setw(9)
                    << r.ci_half_width << std::setprecision(4) << std::setw(9) << r.rel_error << std::setw(12)
                    << r.little_error << "  " << row_status_name(r.status) << '\n';
                out.unsetf(std::ios::fixed);
                breach |= r.status == RowStatus::Fail;
            }
            std::ostringstream csv;
            write_validation_csv(csv, rows);
            detail::write_file((dir / "validate.csv").string(), csv.str());
            out << (breach ? "validation: tolerance breached\n" : "validation: all stable points within tolerance\n");
            return breach ? kExitTolerance : kExitOk;
        }
        catch (const std::invalid_argument &e)
        {
            err << "error: config: " << e.what() << '\n';
            return kExitConfig;
        }
        catch (const std::exception &e)
        {
            err << "error: " << e.what() << '\n';
            return kExitRuntime;
        }
    }

    // ---------------------------------------------------------------------
    // sweep

    struct SweepCell
    {
        std::size_t nodes = 0;
        std::uint64_t seed = 0;
        Mode mode = Mode::Priority;
        std::optional<RunReport> report;
        std::string error;
    };

    struct SweepSummary
    {
        std::size_t nodes = 0;
        std::size_t seeds = 0;
        std::size_t ordered = 0;         // priority runs with strictly ordered shares
        std::size_t delay_wins = 0;      // seeds where class-0 mean delay is lower in priority mode
        std::size_t delay_comparable = 0;
    };

    struct SweepResult
    {
        std::vector<SweepCell> cells; // counts x seeds x {priority, baseline}
        std::vector<SweepSummary> summaries;
        bool failed() const
        {
            return std::any_of(cells.begin(), cells.end(), [](const SweepCell &c) { return !c.report; });
        }
    };

    inline void check_counts(const std::vector<std::size_t> &counts)
    {
        if (counts.empty())
            throw ConfigError(0, "sweep needs at least one node count");
        for (std::size_t i = 0; i < counts.size(); ++i)
        {
            if (counts[i] < 2)
                throw ConfigError(0, "node counts must be >= 2");
            for (std::size_t j = 0; j < i; ++j)
            {
                if (counts[i] == counts[j])
                    throw ConfigError(0, "duplicate node count " + std::to_string(counts[i]));
            }
        }
    }

    /// Paired cells: both modes at one (count, seed) share topology and arrivals.
    inline SweepResult run_sweep(const SimConfig &cfg, const std::vector<std::size_t> &counts)
    {
        check_counts(counts);
        SweepResult res;
        for (auto n : counts)
            for (std::size_t s = 0; s < cfg.seeds; ++s)
                for (Mode m : {Mode::Priority, Mode::Baseline})
                    res.cells.push_back({n, cfg.seed + s, m, std::nullopt, {}});

        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t i = next++; i < res.cells.size(); i = next++)
            {
                auto &cell = res.cells[i];
                try
                {
                    const SimConfig cc = cfg.for_count(cell.nodes);
                    const Topology topo = build_topology(cc, cc.nodes, cc.terrain, cell.seed);
                    cell.report = run_cell(cc, topo, cell.mode, cell.seed);
                    if (!cell.report->conservation.holds())
                    {
                        cell.report.reset();
                        cell.error = "packet conservation violated";
                    }
                }
                catch (const std::exception &e)
                {
                    cell.error = e.what();
                }
            }
        };
        std::size_t threads = cfg.workers ? cfg.workers : std::max(1u, std::thread::hardware_concurrency());
        threads = std::min(threads, res.cells.size());
        std::vector<std::thread> pool;
        for (std::size_t t = 1; t < threads; ++t)
            pool.emplace_back(worker);
        worker();
        for (auto &t : pool)
            t.join();

        for (auto n : counts)
        {
            SweepSummary sum;
            sum.nodes = n;
            for (std::size_t i = 0; i + 1 < res.cells.size(); i += 2)
            {
                const auto &p = res.cells[i];
                const auto &b = res.cells[i + 1];
                if (p.nodes != n || !p.report || !b.report)
                    continue;
                ++sum.seeds;
                sum.ordered += strictly_ordered(p.report->shares);
                const auto &pc = p.report->classes[0];
                const auto &bc = b.report->classes[0];
                if (pc.delivered_packets && bc.delivered_packets)
                {
                    ++sum.delay_comparable;
                    sum.delay_wins += mean_delay(pc) < mean_delay(bc);
                }
            }
            res.summaries.push_back(sum);
        }
        return res;
    }

    inline int cmd_sweep(const SimConfig &cfg, const std::vector<std::size_t> &counts, std::ostream &out,
                         std::ostream &err)
    {
        try
        {
            check_counts(counts);
        }
        catch (const ConfigError &e)
        {
            err << "error: " << e.what() << '\n';
            return kExitConfig;
        }
        try
        {
            const auto dir = detail::ensure_dir(cfg.out_dir);
            const SweepResult res = run_sweep(cfg, counts);

            std::vector<RunReport> reports;
            for (const auto &c : res.cells)
            {
                if (c.report)
                    reports.push_back(*c.report);
                else
                    err << "cell nodes=" << c.nodes << " seed=" << c.seed << " mode=" << mode_name(c.mode)
                        << " failed: " << c.error << '\n';
            }
            export_series(reports, (dir / "sweep.csv").string());

            for (const auto &s : res.summaries)
                out << "ordering nodes=" << s.nodes << " strict_share_order=" << s.ordered << '/' << s.seeds
                    << " class0_delay_priority_lower=" << s.delay_wins << '/' << s.delay_comparable << '\n';

            if (cfg.svg)
            {
                std::vector<double> xs;
                LineSeries pri{"priority class 0", {}}, base{"baseline class 0", {}};
                for (auto n : counts)
                {
                    PerClass<double> sp{}, sb{};
                    double dp = 0, db = 0;
                    std::size_t np = 0, nb = 0, kp = 0, kb = 0;
                    for (const auto &c : res.cells)
                    {
                        if (c.nodes != n || !c.report)
                            continue;
                        auto &acc = c.mode == Mode::Priority ? sp : sb;
                        for (std::size_t k = 0; k < acc.size(); ++k)
                            acc[k] += c.report->shares.share[k];
                        (c.mode == Mode::Priority ? np : nb) += 1;
                        if (c.report->classes[0].delivered_packets)
                        {
                            (c.mode == Mode::Priority ? dp : db) += mean_delay(c.report->classes[0]);
                            (c.mode == Mode::Priority ? kp : kb) += 1;
                        }
                    }
                    for (std::size_t k = 0; k < sp.size(); ++k)
                    {
                        sp[k] /= static_cast<double>(std::max<std::size_t>(np, 1));
                        sb[k] /= static_cast<double>(std::max<std::size_t>(nb, 1));
                    }
                    const std::string label = std::to_string(n);
                    detail::write_file((dir / ("fig_" + label + ".svg")).string(),
                                       detail::shares_chart("Bandwidth share by class, " + label + " nodes",
                                                            {"priority", "baseline"}, {sp, sb}));
                    xs.push_back(static_cast<double>(n));
                    pri.y.push_back(kp ? dp / static_cast<double>(kp) : std::nan(""));
                    base.y.push_back(kb ? db / static_cast<double>(kb) : std::nan(""));
                }
                detail::write_file((dir / "fig_delay.svg").string(),
                                   line_chart_svg("Class 0 mean end-to-end delay", "nodes", "delay (s)", xs,
                                                  {pri, base}));
            }
            return res.failed() ? kExitRuntime : kExitOk;
        }
        catch (const std::exception &e)
        {
            err << "error: " << e.what() << '\n';
            return kExitRuntime;
        }
    }
} // namespace wsnprio
