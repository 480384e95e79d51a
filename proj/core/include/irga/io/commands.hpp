#pragma once

#include <irga/io/config.hpp>

#include <filesystem>
#include <ostream>

namespace irga::io {

// Each command validates its configuration before any computation and throws
// ValidationError, ComputeError or FetchError. base_dir resolves relative
// paths in the configuration (normally the directory of the config file).
void cmd_fetch(const Config& cfg, const std::filesystem::path& base_dir, std::ostream& log);
void cmd_simulate(const Config& cfg, const std::filesystem::path& base_dir, std::ostream& log);
void cmd_estimate(const Config& cfg, const std::filesystem::path& base_dir, std::ostream& log);
void cmd_forecast(const Config& cfg, const std::filesystem::path& base_dir, std::ostream& log);
void cmd_spillover(const Config& cfg, const std::filesystem::path& base_dir, std::ostream& log);

void run_command(Command command, const Config& cfg, const std::filesystem::path& base_dir, std::ostream& log);

} // namespace irga::io
