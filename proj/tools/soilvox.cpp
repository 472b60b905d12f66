#include <CLI11.hpp>

#include <exception>
#include <iostream>

#include "soilvox/commands.hpp"
#include "soilvox/config.hpp"
#include "soilvox/error.hpp"
#include "soilvox/parallel.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Voxel-graph decomposition and diffusion simulator"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::string out_dir = "out";
    int threads = 0;
    bool deterministic = false;
    app.add_option("--config", config_path, "key = value configuration file")->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--threads", threads, "worker thread cap (0 = runtime default)")->check(CLI::NonNegativeNumber);
    app.add_flag("--deterministic", deterministic, "fixed-order reductions for bit-reproducible output");

    for (const auto& name : soilvox::command_names()) app.add_subcommand(name);

    CLI11_PARSE(app, argc, argv);

    try {
        const auto& sub = *app.get_subcommands().front();
        soilvox::RunConfig cfg = config_path.empty() ? soilvox::RunConfig{} : soilvox::RunConfig::load(config_path);
        if (threads > 0) soilvox::parallel::set_threads(threads);
        soilvox::parallel::set_deterministic(deterministic);
        soilvox::run_command(sub.get_name(), cfg, {out_dir, std::cout, std::cerr});
    } catch (const soilvox::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
