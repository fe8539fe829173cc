#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <iostream>

#include "wikisustain/pipeline.hpp"

namespace ws = wikisustain;
namespace pl = wikisustain::pipeline;

int main(int argc, char** argv) {
    CLI::App app{"Predicts whether promoted Wikipedia articles keep their quality status."};
    app.require_subcommand(1, 1);

    std::string config_path, use_case;
    std::optional<std::uint64_t> seed;
    bool verbose = false;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "pipeline config (JSON)")->required();
        sub->add_option("--use-case", use_case, "fa or ga; overrides the config")->check(CLI::IsMember({"fa", "ga"}));
        sub->add_option("--seed", seed, "random seed; overrides the config");
        sub->add_flag("-v,--verbose", verbose, "debug logging");
    };
    std::vector<std::string> commands = pl::stage_names();
    commands.push_back("all");
    for (const auto& name : commands) add_common(app.add_subcommand(name, "run the " + name + " stage"));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        auto config = pl::load_config(config_path);
        if (!use_case.empty()) config.use_case = ws::parse_use_case(use_case);
        if (seed) config.seed = *seed;
        pl::Pipeline pipeline(std::move(config));
        if (command == "all")
            pipeline.all();
        else
            pipeline.run(command);
        return 0;
    } catch (const pl::UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const pl::StageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
