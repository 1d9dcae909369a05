#pragma once

// Flat `key = value` configuration with `[section]` headers, `#` comments, and
// whitespace-separated rows in the table sections ([edca], [traffic], [grid]).

#include "mac.hpp"
#include "network.hpp"
#include "topology.hpp"
#include "traffic.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace wsnprio
{
    class ConfigError : public std::runtime_error
    {
    public:
        ConfigError(std::size_t line, const std::string &what)
            : std::runtime_error(line ? "config line " + std::to_string(line) + ": " + what : "config: " + what),
              line_(line)
        {
        }
        std::size_t line() const noexcept { return line_; }

    private:
        std::size_t line_;
    };

    enum class RunModes
    {
        Priority,
        Baseline,
        Both,
    };

    struct GridRow
    {
        std::string point;
        ClassLoadSpec load;
        bool operator==(const GridRow &) const = default;
    };

    struct SimConfig
    {
        // [run]
        std::uint64_t seed = 1;
        std::size_t nodes = 32; // including the sink
        Terrain terrain{500.0, 500.0};
        SinkPolicy sink = SinkAtCenter{};
        std::string topology_file;
        RunModes mode = RunModes::Both;
        double duration_s = 100.0;
        double warmup_fraction = 0.1;

        // [radio]
        RadioModel radio;
        double frame_overhead_s = 192e-6;

        // [mac] + [edca]
        EdcaParams edca;
        AccessParams baseline_access = kDcfAccess;

        // [queue]
        std::size_t capacity_per_class = kDefaultClassCapacity;
        std::size_t baseline_capacity = 4 * kDefaultClassCapacity;

        // [routing]
        std::size_t k_max = 3;
        double alpha = 0.3;

        // [traffic]
        PerClass<ClassLoadSpec> loads = default_loads();

        // [sweep]
        std::vector<std::size_t> counts{32, 64, 128, 256};
        std::vector<double> terrains_m{500.0, 750.0, 1000.0, 1500.0};
        /// Multiplier on every [traffic] rate for the paired sweep count; missing entries mean 1.
        std::vector<double> load_scale;
        std::size_t seeds = 1;
        std::size_t workers = 0; // 0: hardware concurrency

        // [validate] + [grid]
        std::uint64_t departures = 1'000'000;
        std::size_t batches = 20;
        double tolerance = 0.05;
        double little_tolerance = 0.10;
        std::vector<GridRow> grid;

        // [output]
        std::string out_dir = "out";
        bool svg = false;

        static PerClass<ClassLoadSpec> default_loads()
        {
            PerClass<ClassLoadSpec> l;
            for (auto c : PriorityClass::all())
            {
                const double s = transmission_time(1024, RadioModel{}, 192e-6);
                l[c.index()] = ClassLoadSpec{c, 8.0, s, s * s, FixedSize{1024}};
            }
            return l;
        }

        /// Terrain paired with a sweep node count.
        Terrain terrain_for(std::size_t count) const
        {
            for (std::size_t i = 0; i < counts.size() && i < terrains_m.size(); ++i)
            {
                if (counts[i] == count)
                    return {terrains_m[i], terrains_m[i]};
            }
            return terrain;
        }

        double load_scale_for(std::size_t count) const
        {
            for (std::size_t i = 0; i < counts.size() && i < load_scale.size(); ++i)
            {
                if (counts[i] == count)
                    return load_scale[i];
            }
            return 1.0;
        }

        /// The configuration of one sweep cell: paired terrain and scaled rates.
        SimConfig for_count(std::size_t count) const
        {
            SimConfig c = *this;
            c.nodes = count;
            c.terrain = terrain_for(count);
            const double k = load_scale_for(count);
            for (auto &l : c.loads)
                l.lambda_pps *= k;
            c.load_scale.clear();
            return c;
        }

        ScenarioParams scenario() const
        {
            ScenarioParams p;
            p.radio = radio;
            p.frame_overhead_s = frame_overhead_s;
            p.edca = edca;
            p.baseline_access = baseline_access;
            p.loads = loads;
            p.queue_capacity_per_class = capacity_per_class;
            p.baseline_queue_capacity = baseline_capacity;
            p.k_max = k_max;
            p.alpha = alpha;
            p.warmup_s = warmup_fraction * duration_s;
            return p;
        }

        void validate() const
        {
            auto fail = [](const std::string &what) { throw ConfigError(0, what); };
            if (nodes < 2)
                fail("run.nodes must be >= 2 (one sensor plus the sink)");
            try
            {
                terrain.validate();
                radio.validate();
                edca.validate();
                for (const auto &l : loads)
                    l.validate();
                for (const auto &g : grid)
                    g.load.validate();
            }
            catch (const std::invalid_argument &e)
            {
                fail(e.what());
            }
            if (!(duration_s > 0.0))
                fail("run.duration_s must be positive");
            if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0))
                fail("run.warmup_fraction must be in [0, 1)");
            if (!(frame_overhead_s >= 0.0))
                fail("radio.frame_overhead_s must be >= 0");
            if (!is_window_size(baseline_access.cw_min) || !is_window_size(baseline_access.cw_max) ||
                baseline_access.cw_min > baseline_access.cw_max || baseline_access.aifs_slots < 1)
                fail("mac.baseline_* must give aifs >= 1 and cw bounds 2^k - 1 with cw_min <= cw_max");
            if (capacity_per_class == 0 || baseline_capacity == 0)
                fail("queue capacities must be positive");
            if (k_max == 0)
                fail("routing.k_max must be >= 1");
            if (!(alpha > 0.0 && alpha <= 1.0))
                fail("routing.alpha must be in (0, 1]");
            if (seeds == 0)
                fail("sweep.seeds must be >= 1");
            for (std::size_t i = 0; i < counts.size(); ++i)
            {
                if (counts[i] < 2)
                    fail("sweep.counts entries must be >= 2");
                for (std::size_t j = 0; j < i; ++j)
                {
                    if (counts[i] == counts[j])
                        fail("sweep.counts has duplicate entry " + std::to_string(counts[i]));
                }
            }
            for (double t : terrains_m)
            {
                if (!(t > 0.0))
                    fail("sweep.terrains_m entries must be positive");
            }
            for (double k : load_scale)
            {
                if (!(k > 0.0))
                    fail("sweep.load_scale entries must be positive");
            }
            if (departures == 0 || batches < 2)
                fail("validate.departures must be >= 1 and validate.batches >= 2");
            if (!(tolerance > 0.0) || !(little_tolerance > 0.0))
                fail("validate tolerances must be positive");
        }

        bool operator==(const SimConfig &o) const
        {
            return seed == o.seed && nodes == o.nodes && terrain.width_m == o.terrain.width_m &&
                   terrain.height_m == o.terrain.height_m && sink_text(sink) == sink_text(o.sink) &&
                   topology_file == o.topology_file && mode == o.mode && duration_s == o.duration_s &&
                   warmup_fraction == o.warmup_fraction && 
                   radio.comm_range_m == o.radio.comm_range_m &&
                   radio.interference_range_m == o.radio.interference_range_m &&
                   radio.bitrate_bps == o.radio.bitrate_bps &&
                   radio.propagation_speed_mps == o.radio.propagation_speed_mps &&
                   frame_overhead_s == o.frame_overhead_s && edca == o.edca && baseline_access == o.baseline_access &&
                   capacity_per_class == o.capacity_per_class && baseline_capacity == o.baseline_capacity &&
                   k_max == o.k_max && alpha == o.alpha && loads == o.loads && counts == o.counts &&
                   terrains_m == o.terrains_m && load_scale == o.load_scale && seeds == o.seeds && workers == o.workers &&
                   departures == o.departures && batches == o.batches && tolerance == o.tolerance &&
                   little_tolerance == o.little_tolerance && grid == o.grid && out_dir == o.out_dir && svg == o.svg;
        }

        static std::string sink_text(const SinkPolicy &p)
        {
            if (std::holds_alternative<SinkAtCenter>(p))
                return "center";
            if (std::holds_alternative<SinkAtCorner>(p))
                return "corner";
            const auto &at = std::get<SinkAt>(p);
            return num(at.x_m) + " " + num(at.y_m);
        }

        static std::string num(double x)
        {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.17g", x);
            return buf;
        }
    };

    inline std::string_view run_modes_name(RunModes m)
    {
        switch (m)
        {
        case RunModes::Priority:
            return "priority";
        case RunModes::Baseline:
            return "baseline";
        default:
            return "both";
        }
    }

    inline std::vector<Mode> modes_of(RunModes m)
    {
        switch (m)
        {
        case RunModes::Priority:
            return {Mode::Priority};
        case RunModes::Baseline:
            return {Mode::Baseline};
        default:
            return {Mode::Priority, Mode::Baseline};
        }
    }

    inline RunModes parse_run_modes(std::string_view s)
    {
        if (s == "priority")
            return RunModes::Priority;
        if (s == "baseline")
            return RunModes::Baseline;
        if (s == "both")
            return RunModes::Both;
        throw std::invalid_argument("mode must be priority, baseline or both");
    }

    namespace detail
    {
        inline std::string trim(std::string_view s)
        {
            const auto b = s.find_first_not_of(" \t\r");
            if (b == std::string_view::npos)
                return {};
            const auto e = s.find_last_not_of(" \t\r");
            return std::string(s.substr(b, e - b + 1));
        }

        inline std::vector<std::string> split_ws(const std::string &s)
        {
            std::istringstream is(s);
            std::vector<std::string> out;
            for (std::string t; is >> t;)
                out.push_back(t);
            return out;
        }

        template <typename T>
        T parse_number(const std::string &s)
        {
            T v{};
            const auto *end = s.data() + s.size();
            auto [p, ec] = std::from_chars(s.data(), end, v);
            if (ec != std::errc() || p != end)
                throw std::invalid_argument("'" + s + "' is not a valid number");
            return v;
        }

        inline double parse_real(const std::string &s)
        {
            // from_chars for double is not available in every libstdc++ this targets.
            std::size_t pos = 0;
            double v;
            try
            {
                v = std::stod(s, &pos);
            }
            catch (const std::exception &)
            {
                throw std::invalid_argument("'" + s + "' is not a valid number");
            }
            if (pos != s.size())
                throw std::invalid_argument("'" + s + "' is not a valid number");
            return v;
        }

        inline bool parse_bool(const std::string &s)
        {
            if (s == "true" || s == "1" || s == "yes")
                return true;
            if (s == "false" || s == "0" || s == "no")
                return false;
            throw std::invalid_argument("'" + s + "' is not a boolean");
        }

        inline SizeDist parse_size_dist(const std::string &s)
        {
            const auto colon = s.find(':');
            if (colon == std::string::npos)
                throw std::invalid_argument("size_dist must be fixed:BITS or exp:MEAN_BITS");
            const std::string kind = s.substr(0, colon);
            const std::string val = s.substr(colon + 1);
            if (kind == "fixed")
            {
                const auto bits = parse_number<std::uint32_t>(val);
                if (bits == 0)
                    throw std::invalid_argument("fixed size must be positive");
                return FixedSize{bits};
            }
            if (kind == "exp")
                return ExponentialSize{parse_real(val)};
            throw std::invalid_argument("size_dist must be fixed:BITS or exp:MEAN_BITS");
        }

        inline std::string size_dist_text(const SizeDist &d)
        {
            if (const auto *f = std::get_if<FixedSize>(&d))
                return "fixed:" + std::to_string(f->bits);
            return "exp:" + SimConfig::num(std::get<ExponentialSize>(d).mean_bits);
        }

        inline PriorityClass parse_class(const std::string &s)
        {
            const int c = parse_number<int>(s);
            if (c < 0 || c >= PriorityClass::kCount)
                throw std::invalid_argument("class must be 0..3");
            return PriorityClass{c};
        }
    } // namespace detail

    inline SimConfig parse_config(std::istream &is)
    {
        using namespace detail;
        SimConfig cfg;
        std::string section;
        std::string raw;
        std::size_t lineno = 0;
        PerClass<bool> traffic_seen{}, edca_seen{};
        bool traffic_section = false, edca_section = false;

        while (std::getline(is, raw))
        {
            ++lineno;
            const auto hash = raw.find('#');
            const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
            if (line.empty())
                continue;
            if (line.front() == '[')
            {
                if (line.back() != ']')
                    throw ConfigError(lineno, "malformed section header");
                section = trim(line.substr(1, line.size() - 2));
                static const char *known[] = {"run", "radio", "mac", "edca", "queue", "routing",
                                              "traffic", "sweep", "validate", "grid", "output"};
                if (std::find(std::begin(known), std::end(known), section) == std::end(known))
                    throw ConfigError(lineno, "unknown section [" + section + "]");
                traffic_section |= section == "traffic";
                edca_section |= section == "edca";
                continue;
            }
            if (section.empty())
                throw ConfigError(lineno, "entry outside of any section");

            try
            {
                if (section == "edca" || section == "traffic" || section == "grid")
                {
                    const auto f = split_ws(line);
                    if (section == "edca")
                    {
                        if (f.size() != 4)
                            throw std::invalid_argument("expected `class aifs cw_min cw_max`");
                        const auto c = parse_class(f[0]);
                        if (edca_seen[c.index()])
                            throw std::invalid_argument("duplicate edca row for class " + f[0]);
                        edca_seen[c.index()] = true;
                        cfg.edca.classes[c.index()] = {parse_number<int>(f[1]), parse_number<int>(f[2]),
                                                       parse_number<int>(f[3])};
                    }
                    else if (section == "traffic")
                    {
                        if (f.size() != 4)
                            throw std::invalid_argument("expected `class lambda mean_service size_dist`");
                        const auto c = parse_class(f[0]);
                        if (traffic_seen[c.index()])
                            throw std::invalid_argument("duplicate traffic row for class " + f[0]);
                        traffic_seen[c.index()] = true;
                        const double lambda = parse_real(f[1]);
                        const double mean = parse_real(f[2]);
                        const SizeDist dist = parse_size_dist(f[3]);
                        const double m2 = std::holds_alternative<FixedSize>(dist) ? mean * mean : 2.0 * mean * mean;
                        ClassLoadSpec spec{c, lambda, mean, m2, dist};
                        spec.validate();
                        cfg.loads[c.index()] = spec;
                    }
                    else
                    {
                        if (f.size() != 5)
                            throw std::invalid_argument("expected `point class lambda mean_service exp|det`");
                        const auto c = parse_class(f[1]);
                        const double lambda = parse_real(f[2]);
                        const double mean = parse_real(f[3]);
                        ClassLoadSpec spec;
                        if (f[4] == "exp")
                            spec = exponential_service(c, lambda, mean);
                        else if (f[4] == "det")
                            spec = deterministic_service(c, lambda, mean);
                        else
                            throw std::invalid_argument("service shape must be exp or det");
                        spec.validate();
                        for (const auto &g : cfg.grid)
                        {
                            if (g.point == f[0] && g.load.cls == c)
                                throw std::invalid_argument("duplicate class " + f[1] + " in grid point " + f[0]);
                        }
                        cfg.grid.push_back({f[0], spec});
                    }
                    continue;
                }

                const auto eq = line.find('=');
                if (eq == std::string::npos)
                    throw std::invalid_argument("expected `key = value`");
                const std::string key = trim(line.substr(0, eq));
                const std::string val = trim(line.substr(eq + 1));
                if (val.empty())
                    throw std::invalid_argument("missing value for '" + key + "'");
                const std::string full = section + "." + key;

                if (full == "run.seed")
                    cfg.seed = parse_number<std::uint64_t>(val);
                else if (full == "run.nodes")
                    cfg.nodes = parse_number<std::size_t>(val);
                else if (full == "run.terrain_m")
                {
                    const auto f = split_ws(val);
                    if (f.size() != 2)
                        throw std::invalid_argument("terrain_m expects `width height`");
                    cfg.terrain = {parse_real(f[0]), parse_real(f[1])};
                }
                else if (full == "run.sink")
                {
                    const auto f = split_ws(val);
                    if (f.size() == 1 && f[0] == "center")
                        cfg.sink = SinkAtCenter{};
                    else if (f.size() == 1 && f[0] == "corner")
                        cfg.sink = SinkAtCorner{};
                    else if (f.size() == 2)
                        cfg.sink = SinkAt{parse_real(f[0]), parse_real(f[1])};
                    else
                        throw std::invalid_argument("sink must be center, corner, or `x y`");
                }
                else if (full == "run.topology_file")
                    cfg.topology_file = val == "none" ? "" : val;
                else if (full == "run.mode")
                    cfg.mode = parse_run_modes(val);
                else if (full == "run.duration_s")
                    cfg.duration_s = parse_real(val);
                else if (full == "run.warmup_fraction")
                    cfg.warmup_fraction = parse_real(val);
                else if (full == "radio.comm_range_m")
                    cfg.radio.comm_range_m = parse_real(val);
                else if (full == "radio.interference_range_m")
                    cfg.radio.interference_range_m = parse_real(val);
                else if (full == "radio.bitrate_bps")
                    cfg.radio.bitrate_bps = parse_real(val);
                else if (full == "radio.propagation_speed_mps")
                    cfg.radio.propagation_speed_mps = parse_real(val);
                else if (full == "radio.frame_overhead_s")
                    cfg.frame_overhead_s = parse_real(val);
                else if (full == "mac.slot_time_s")
                    cfg.edca.slot_time_s = parse_real(val);
                else if (full == "mac.sifs_s")
                    cfg.edca.sifs_s = parse_real(val);
                else if (full == "mac.retry_limit")
                    cfg.edca.retry_limit = parse_number<int>(val);
                else if (full == "mac.baseline_aifs")
                    cfg.baseline_access.aifs_slots = parse_number<int>(val);
                else if (full == "mac.baseline_cw_min")
                    cfg.baseline_access.cw_min = parse_number<int>(val);
                else if (full == "mac.baseline_cw_max")
                    cfg.baseline_access.cw_max = parse_number<int>(val);
                else if (full == "queue.capacity_per_class")
                    cfg.capacity_per_class = parse_number<std::size_t>(val);
                else if (full == "queue.baseline_capacity")
                    cfg.baseline_capacity = parse_number<std::size_t>(val);
                else if (full == "routing.k_max")
                    cfg.k_max = parse_number<std::size_t>(val);
                else if (full == "routing.alpha")
                    cfg.alpha = parse_real(val);
                else if (full == "sweep.counts")
                {
                    cfg.counts.clear();
                    for (const auto &t : split_ws(val))
                        cfg.counts.push_back(parse_number<std::size_t>(t));
                }
                else if (full == "sweep.terrains_m")
                {
                    cfg.terrains_m.clear();
                    for (const auto &t : split_ws(val))
                        cfg.terrains_m.push_back(parse_real(t));
                }
                else if (full == "sweep.load_scale")
                {
                    cfg.load_scale.clear();
                    for (const auto &t : split_ws(val))
                        cfg.load_scale.push_back(parse_real(t));
                }
                else if (full == "sweep.seeds")
                    cfg.seeds = parse_number<std::size_t>(val);
                else if (full == "sweep.workers")
                    cfg.workers = parse_number<std::size_t>(val);
                else if (full == "validate.departures")
                    cfg.departures = parse_number<std::uint64_t>(val);
                else if (full == "validate.batches")
                    cfg.batches = parse_number<std::size_t>(val);
                else if (full == "validate.tolerance")
                    cfg.tolerance = parse_real(val);
                else if (full == "validate.little_tolerance")
                    cfg.little_tolerance = parse_real(val);
                else if (full == "output.dir")
                    cfg.out_dir = val;
                else if (full == "output.svg")
                    cfg.svg = parse_bool(val);
                else
                    throw std::invalid_argument("unknown key '" + key + "' in [" + section + "]");
            }
            catch (const std::invalid_argument &e)
            {
                throw ConfigError(lineno, e.what());
            }
            catch (const std::out_of_range &e)
            {
                throw ConfigError(lineno, e.what());
            }
        }
        (void)traffic_section;
        (void)edca_section;
        cfg.validate();
        return cfg;
    }

    inline SimConfig parse_config_text(const std::string &text)
    {
        std::istringstream is(text);
        return parse_config(is);
    }

    inline SimConfig load_config(const std::string &path)
    {
        std::ifstream f(path);
        if (!f)
            throw ConfigError(0, "cannot open " + path);
        return parse_config(f);
    }

    /// Fully resolved configuration in the same format `parse_config` reads.
    inline std::string echo_config(const SimConfig &c)
    {
        using detail::size_dist_text;
        const auto num = SimConfig::num;
        std::ostringstream os;
        os << "# resolved configuration\n";
        os << "# rng: " << kRngDescription << "\n\n";
        os << "[run]\n";
        os << "seed = " << c.seed << "\n";
        os << "nodes = " << c.nodes << "\n";
        os << "terrain_m = " << num(c.terrain.width_m) << ' ' << num(c.terrain.height_m) << "\n";
        os << "sink = " << SimConfig::sink_text(c.sink) << "\n";
        os << "topology_file = " << (c.topology_file.empty() ? "none" : c.topology_file) << "\n";
        os << "mode = " << run_modes_name(c.mode) << "\n";
        os << "duration_s = " << num(c.duration_s) << "\n";
        os << "warmup_fraction = " << num(c.warmup_fraction) << "\n\n";
        os << "[radio]\n";
        os << "comm_range_m = " << num(c.radio.comm_range_m) << "\n";
        os << "interference_range_m = " << num(c.radio.interference_range_m) << "\n";
        os << "bitrate_bps = " << num(c.radio.bitrate_bps) << "\n";
        os << "propagation_speed_mps = " << num(c.radio.propagation_speed_mps) << "\n";
        os << "frame_overhead_s = " << num(c.frame_overhead_s) << "\n\n";
        os << "[mac]\n";
        os << "slot_time_s = " << num(c.edca.slot_time_s) << "\n";
        os << "sifs_s = " << num(c.edca.sifs_s) << "\n";
        os << "retry_limit = " << c.edca.retry_limit << "\n";
        os << "baseline_aifs = " << c.baseline_access.aifs_slots << "\n";
        os << "baseline_cw_min = " << c.baseline_access.cw_min << "\n";
        os << "baseline_cw_max = " << c.baseline_access.cw_max << "\n\n";
        os << "[edca]\n# class aifs cw_min cw_max\n";
        for (std::size_t i = 0; i < c.edca.classes.size(); ++i)
        {
            const auto &p = c.edca.classes[i];
            os << i << ' ' << p.aifs_slots << ' ' << p.cw_min << ' ' << p.cw_max << "\n";
        }
        os << "\n[queue]\n";
        os << "capacity_per_class = " << c.capacity_per_class << "\n";
        os << "baseline_capacity = " << c.baseline_capacity << "\n\n";
        os << "[routing]\n";
        os << "k_max = " << c.k_max << "\n";
        os << "alpha = " << num(c.alpha) << "\n\n";
        os << "[traffic]\n# class lambda mean_service size_dist\n";
        for (const auto &l : c.loads)
            os << l.cls.level() << ' ' << num(l.lambda_pps) << ' ' << num(l.mean_service_s) << ' '
               << size_dist_text(l.size_dist) << "\n";
        os << "\n[sweep]\n";
        os << "counts =";
        for (auto n : c.counts)
            os << ' ' << n;
        os << "\nterrains_m =";
        for (auto t : c.terrains_m)
            os << ' ' << num(t);
        if (!c.load_scale.empty())
        {
            os << "\nload_scale =";
            for (auto k : c.load_scale)
                os << ' ' << num(k);
        }
        os << "\nseeds = " << c.seeds << "\n";
        os << "workers = " << c.workers << "\n\n";
        os << "[validate]\n";
        os << "departures = " << c.departures << "\n";
        os << "batches = " << c.batches << "\n";
        os << "tolerance = " << num(c.tolerance) << "\n";
        os << "little_tolerance = " << num(c.little_tolerance) << "\n\n";
        os << "[grid]\n# point class lambda mean_service exp|det\n";
        for (const auto &g : c.grid)
        {
            const bool det = service_shape(g.load) == ServiceShape::Deterministic;
            os << g.point << ' ' << g.load.cls.level() << ' ' << num(g.load.lambda_pps) << ' '
               << num(g.load.mean_service_s) << ' ' << (det ? "det" : "exp") << "\n";
        }
        os << "\n[output]\n";
        os << "dir = " << c.out_dir << "\n";
        os << "svg = " << (c.svg ? "true" : "false") << "\n";
        return os.str();
    }
} // namespace wsnprio
