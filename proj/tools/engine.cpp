#include "tariffcge/cli/commands.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>

namespace {

spdlog::level::level_enum log_level()
{
    const char* env = std::getenv("ENGINE_LOG");
    if (!env) return spdlog::level::warn;
    return spdlog::level::from_str(env);
}

}  // namespace

int main(int argc, char** argv)
{
    using namespace tariffcge::cli;

    auto logger = spdlog::stderr_color_mt("engine");
    logger->set_level(log_level());
    logger->set_pattern("[%l] %v");

    CLI::App app{"Tariff general-equilibrium engine"};
    app.require_subcommand(1);
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    std::size_t threads = 0;
    for (const auto& name : command_names()) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config,-c", config, "run configuration (JSON)")->required();
        sub->add_option("--out,-o", out, "output directory (overrides the config)");
        sub->add_option("--seed", seed, "bootstrap seed (overrides the config)");
        sub->add_option("--threads,-j", threads, "worker threads (0: all cores)");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kConfigFailure;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    auto* sub = app.get_subcommand(command);
    Overrides ov;
    if (sub->count("--out")) ov.out = out;
    if (sub->count("--seed")) ov.seed = seed;
    if (sub->count("--threads")) ov.threads = threads;

    const auto res = run_command(command, config, ov, [&](const std::string& m) { logger->info(m); });
    if (res.exit_code != kOk) {
        logger->error("{}", res.message);
        return res.exit_code;
    }
    std::cout << res.message;
    logger->info("outputs written to {}", res.output_dir.string());
    return kOk;
}
