#pragma once

#include <irga/forecast.hpp>
#include <irga/gibbs.hpp>
#include <irga/pvar.hpp>
#include <irga/vamp.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace irga::io {

// Flat key/value configuration. The text format is one `section.key = value`
// per line with `#` comments; a JSON file is flattened to the same dotted
// keys. Every known key can be overridden by an environment variable named
// IRGA_ followed by the key upper-cased with dots replaced by underscores
// (vamp.max_iter -> IRGA_VAMP_MAX_ITER).
class Config {
public:
  static Config parse_text(const std::string& text);
  static Config parse_json(const std::string& text);
  static Config load(const std::filesystem::path& path);

  static const std::vector<std::string>& known_keys();
  static std::string env_name(const std::string& key);

  void apply_env_overrides();
  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) > 0; }

  const std::string& require(const std::string& key) const;
  std::string get(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long get_int(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  double require_double(const std::string& key) const;
  long require_int(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }

private:
  std::map<std::string, std::string> values_;
};

// Typed view of a configuration. Relative paths resolve against base_dir.
struct RunConfig {
  std::filesystem::path base_dir;
  std::filesystem::path data_csv;
  std::filesystem::path data_spec;
  std::filesystem::path output_dir;
  std::uint64_t seed = 1;
  unsigned threads = 1;

  int lags = 0;
  VampConfig vamp;
  McmcConfig mcmc;
  bool propagate_b = true;

  int horizon = 12;
  std::vector<std::string> models{"irga", "rw"};
  std::string benchmark = "rw";
  std::optional<YearMonth> first_origin;
  std::optional<YearMonth> last_origin;
  PointForecast point = PointForecast::Median;
  int rw_draws = 1000;

  int fevd_horizon = 12;
  std::optional<YearMonth> spillover_first_window;
  int spillover_step = 1;
  int spillover_draws = 0;

  std::map<std::string, std::string> echo;

  PvarOptions pvar_options() const;
};

enum class Command { Fetch, Simulate, Estimate, Forecast, Spillover };

// Validates the keys a command needs and converts types; throws
// ValidationError naming the first offending key.
RunConfig make_run_config(const Config& cfg, Command command, const std::filesystem::path& base_dir = {});

} // namespace irga::io
