#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "soilvox/config.hpp"

namespace soilvox {

struct CommandContext {
    std::filesystem::path out_dir;
    std::ostream& out;
    std::ostream& err;
};

const std::vector<std::string>& command_names();

/// Runs one CLI subcommand. Outputs go to ctx.out_dir, which is created if
/// needed; the resolved configuration is written there as
/// resolved_config.txt. Throws soilvox::Error on any failure, including a
/// failed numeric guard.
void run_command(const std::string& name, const RunConfig& cfg, const CommandContext& ctx);

}  // namespace soilvox
