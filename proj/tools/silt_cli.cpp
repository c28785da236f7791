#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "silt/commands.hpp"

namespace {

struct CommonFlags {
    std::string config;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
};

void add_common(CLI::App* sub, CommonFlags& f, bool config_required) {
    auto* opt = sub->add_option("--config", f.config, "JSON run configuration");
    if (config_required) opt->required();
    sub->add_option("--out", f.out, "output directory (overrides out_dir)");
    sub->add_option("--seed", f.seed, "base seed (overrides monte_carlo.base_seed)");
    sub->add_option("--threads", f.threads, "worker threads; SILT_THREADS takes precedence");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Self-intersection local time of fractional Brownian motion: constants, simulation, verification"};
    app.require_subcommand(1);
    CommonFlags flags;
    const struct {
        const char* name;
        const char* help;
        bool config_required;
    } commands[] = {
        {"constants", "tabulate limit constants for (H, d)", false},
        {"simulate", "write fBm sample paths as CSV", false},
        {"estimate", "write Monte Carlo samples of the local time functional", true},
        {"verify", "run the regime experiment and write report.json", true},
        {"report", "summarize report.json from the output directory", false},
    };
    for (const auto& c : commands) add_common(app.add_subcommand(c.name, c.help), flags, c.config_required);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(silt::ExitCode::config);
    }
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        silt::RunConfig cfg = flags.config.empty() ? silt::RunConfig{} : silt::load_run_config(flags.config);
        if (flags.out) cfg.out_dir = *flags.out;
        if (flags.seed) cfg.mc.base_seed = *flags.seed;
        if (flags.threads) {
            cfg.threads = *flags.threads;
            cfg.mc.threads = cfg.threads;
            cfg.quad.threads = cfg.threads == 0 ? 1u : cfg.threads;
        }
        cfg.command = command;
        cfg.validate();
        return silt::dispatch(command, cfg, std::cout);
    } catch (const silt::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(e.exit_code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
