#include <wsnprio/wsnprio.hpp>

#include <CLI11.hpp>

#include <iostream>

namespace
{
    struct Overrides
    {
        std::string config;
        std::optional<std::uint64_t> seed;
        std::optional<std::string> mode;
        std::optional<std::string> out;
        bool svg = false;
        std::optional<std::size_t> seeds;
        std::vector<std::size_t> counts;
    };

    void add_common(CLI::App *cmd, Overrides &o)
    {
        cmd->add_option("--config", o.config, "configuration file")->required();
        cmd->add_option("--seed", o.seed, "override run.seed");
        cmd->add_option("--mode", o.mode, "priority | baseline | both")->check(CLI::IsMember({"priority", "baseline", "both"}));
        cmd->add_option("--out", o.out, "output directory");
        cmd->add_flag("--svg", o.svg, "write SVG charts");
    }

    wsnprio::SimConfig resolve(const Overrides &o)
    {
        auto cfg = wsnprio::load_config(o.config);
        if (o.seed)
            cfg.seed = *o.seed;
        if (o.mode)
            cfg.mode = wsnprio::parse_run_modes(*o.mode);
        if (o.out)
            cfg.out_dir = *o.out;
        if (o.svg)
            cfg.svg = true;
        if (o.seeds)
            cfg.seeds = *o.seeds;
        cfg.validate();
        return cfg;
    }
} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Wireless sensor network priority simulator"};
    app.require_subcommand(1);
    Overrides o;

    auto *run = app.add_subcommand("run", "one simulation per mode");
    add_common(run, o);
    auto *validate = app.add_subcommand("validate", "single-server queue vs closed form");
    add_common(validate, o);
    auto *sweep = app.add_subcommand("sweep", "node-count sweep, priority vs baseline");
    add_common(sweep, o);
    sweep->add_option("--seeds", o.seeds, "replications per node count")->check(CLI::PositiveNumber);
    sweep->add_option("--counts", o.counts, "node counts")->delimiter(',');
    auto *echo = app.add_subcommand("config", "print the fully resolved configuration");
    add_common(echo, o);

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : wsnprio::kExitConfig;
    }

    wsnprio::SimConfig cfg;
    try
    {
        cfg = resolve(o);
    }
    catch (const wsnprio::ConfigError &e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return wsnprio::kExitConfig;
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: config: " << e.what() << '\n';
        return wsnprio::kExitConfig;
    }

    if (*run)
        return wsnprio::cmd_run(cfg, std::cout, std::cerr);
    if (*validate)
        return wsnprio::cmd_validate(cfg, std::cout, std::cerr);
    if (*sweep)
        // Terrain stays paired with the configured counts; --counts only picks which to run.
        return wsnprio::cmd_sweep(cfg, o.counts.empty() ? cfg.counts : o.counts, std::cout, std::cerr);
    std::cout << wsnprio::echo_config(cfg);
    return 0;
}
