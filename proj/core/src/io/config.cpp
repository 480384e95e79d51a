#include <irga/io/config.hpp>

#include <irga/error.hpp>
#include <irga/parallel.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace irga::io {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r\n");
  std::string out = s.substr(b, e - b + 1);
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') {
    out = out.substr(1, out.size() - 2);
  }
  return out;
}

void flatten(const nlohmann::json& j, const std::string& prefix, std::map<std::string, std::string>& out) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) {
      flatten(v, prefix.empty() ? k : prefix + "." + k, out);
    }
  } else if (j.is_array()) {
    std::string joined;
    for (const auto& v : j) {
      joined += (joined.empty() ? "" : ",") + (v.is_string() ? v.get<std::string>() : v.dump());
    }
    out[prefix] = joined;
  } else if (j.is_string()) {
    out[prefix] = j.get<std::string>();
  } else {
    out[prefix] = j.dump();
  }
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) {
      out.push_back(item);
    }
  }
  return out;
}

} // namespace

Config Config::parse_text(const std::string& text) {
  Config c;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) {
      throw ValidationError("config line " + std::to_string(lineno) + ": empty key");
    }
    c.values_[key] = trim(line.substr(eq + 1));
  }
  return c;
}

Config Config::parse_json(const std::string& text) {
  Config c;
  try {
    flatten(nlohmann::json::parse(text), "", c.values_);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config JSON: ") + e.what());
  }
  return c;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open config " + path.string());
  }
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (path.extension() == ".json" || (first != std::string::npos && text[first] == '{')) {
    return parse_json(text);
  }
  return parse_text(text);
}

const std::vector<std::string>& Config::known_keys() {
  static const std::vector<std::string> keys{
      "data.csv",          "data.spec",          "output.dir",         "seed",
      "threads",           "model.lags",         "vamp.tol",           "vamp.max_iter",
      "vamp.damping",      "vamp.zeta_init",     "prior.a_sigma",      "prior.b_sigma",
      "mcmc.burn",         "mcmc.save",          "mcmc.thin",          "model.propagate_b",
      "forecast.horizon",  "forecast.models",    "forecast.benchmark", "forecast.first_origin",
      "forecast.last_origin", "forecast.point",  "forecast.rw_draws",  "spillover.horizon",
      "spillover.first_window", "spillover.step", "spillover.draws",   "fetch.spec",
      "fetch.base_url",    "fetch.cache_dir",    "fetch.retries",      "fetch.backoff_ms",
      "simulate.countries", "simulate.vars",     "simulate.lags",      "simulate.T",
      "simulate.sparsity", "simulate.start",    "vamp.trace",         "vamp.em_form"};
  return keys;
}

std::string Config::env_name(const std::string& key) {
  std::string out = "IRGA_";
  for (char c : key) {
    out += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  return out;
}

void Config::apply_env_overrides() {
  for (const auto& key : known_keys()) {
    if (const char* v = std::getenv(env_name(key).c_str())) {
      values_[key] = v;
    }
  }
}

const std::string& Config::require(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end() || it->second.empty()) {
    throw ValidationError("missing required config key '" + key + "'");
  }
  return it->second;
}

std::string Config::get(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
  return has(key) ? require_double(key) : fallback;
}

long Config::get_int(const std::string& key, long fallback) const { return has(key) ? require_int(key) : fallback; }

bool Config::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) {
    return fallback;
  }
  std::string v = require(key);
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") {
    return true;
  }
  if (v == "false" || v == "0" || v == "no" || v == "off") {
    return false;
  }
  throw ValidationError("config key '" + key + "' must be a boolean, got '" + v + "'");
}

double Config::require_double(const std::string& key) const {
  const std::string& v = require(key);
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ValidationError("config key '" + key + "' must be a number, got '" + v + "'");
  }
  return out;
}

long Config::require_int(const std::string& key) const {
  const std::string& v = require(key);
  long out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ValidationError("config key '" + key + "' must be an integer, got '" + v + "'");
  }
  return out;
}

PvarOptions RunConfig::pvar_options() const {
  PvarOptions o;
  o.lags = lags;
  o.vamp = vamp;
  o.mcmc = mcmc;
  o.mcmc.seed = derive_seed(seed, "estimate");
  o.threads = threads;
  return o;
}

RunConfig make_run_config(const Config& cfg, Command command, const std::filesystem::path& base_dir) {
  RunConfig rc;
  rc.base_dir = base_dir;
  rc.echo = cfg.values();
  auto path = [&](const std::string& key) {
    std::filesystem::path p = cfg.require(key);
    return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  };
  auto existing = [&](const std::string& key) {
    auto p = path(key);
    if (!std::filesystem::exists(p)) {
      throw ValidationError("config key '" + key + "': file " + p.string() + " does not exist");
    }
    return p;
  };
  auto month = [&](const std::string& key) -> std::optional<YearMonth> {
    if (!cfg.has(key) || cfg.get(key, "").empty()) {
      return std::nullopt;
    }
    try {
      return YearMonth::parse(cfg.get(key, ""));
    } catch (const ValidationError& e) {
      throw ValidationError("config key '" + key + "': " + e.what());
    }
  };
  auto positive = [&](const std::string& key, long value) {
    if (value < 1) {
      throw ValidationError("config key '" + key + "' must be positive");
    }
    return value;
  };

  rc.output_dir = path("output.dir");
  const long seed = cfg.get_int("seed", 1);
  rc.seed = static_cast<std::uint64_t>(seed);
  rc.threads = static_cast<unsigned>(positive("threads", cfg.get_int("threads", default_thread_count())));

  if (command == Command::Fetch || command == Command::Simulate) {
    return rc;
  }

  rc.data_csv = existing("data.csv");
  rc.data_spec = existing("data.spec");
  rc.lags = static_cast<int>(positive("model.lags", cfg.require_int("model.lags")));

  rc.vamp.tol = cfg.get_double("vamp.tol", rc.vamp.tol);
  rc.vamp.max_iter = static_cast<int>(cfg.get_int("vamp.max_iter", rc.vamp.max_iter));
  rc.vamp.damping = cfg.get_double("vamp.damping", rc.vamp.damping);
  rc.vamp.zeta_init = cfg.get_double("vamp.zeta_init", rc.vamp.zeta_init);
  rc.vamp.a_sigma = cfg.get_double("prior.a_sigma", rc.vamp.a_sigma);
  rc.vamp.b_sigma = cfg.get_double("prior.b_sigma", rc.vamp.b_sigma);
  const std::string em_form = cfg.get("vamp.em_form", "expected");
  if (em_form == "expected") {
    rc.vamp.em_form = EmForm::Expected;
  } else if (em_form == "plugin") {
    rc.vamp.em_form = EmForm::Plugin;
  } else {
    throw ValidationError("config key 'vamp.em_form' must be expected or plugin");
  }
  try {
    rc.vamp.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  rc.mcmc.n_burn = static_cast<int>(cfg.get_int("mcmc.burn", rc.mcmc.n_burn));
  rc.mcmc.n_save = static_cast<int>(positive("mcmc.save", cfg.get_int("mcmc.save", rc.mcmc.n_save)));
  rc.mcmc.thin = static_cast<int>(positive("mcmc.thin", cfg.get_int("mcmc.thin", rc.mcmc.thin)));
  if (rc.mcmc.n_burn < 0) {
    throw ValidationError("config key 'mcmc.burn' must be non-negative");
  }
  rc.propagate_b = cfg.get_bool("model.propagate_b", true);

  if (command == Command::Forecast) {
    rc.horizon = static_cast<int>(positive("forecast.horizon", cfg.get_int("forecast.horizon", 12)));
    if (cfg.has("forecast.models")) {
      rc.models = split_list(cfg.get("forecast.models", ""));
    }
    for (const auto& m : rc.models) {
      if (m != "irga" && m != "irga-mean" && m != "rw") {
        throw ValidationError("config key 'forecast.models': unknown model '" + m + "' (irga, irga-mean, rw)");
      }
    }
    rc.benchmark = cfg.get("forecast.benchmark", rc.models.size() > 1 ? "rw" : rc.models.front());
    if (std::find(rc.models.begin(), rc.models.end(), rc.benchmark) == rc.models.end()) {
      throw ValidationError("config key 'forecast.benchmark': '" + rc.benchmark + "' is not in forecast.models");
    }
    rc.first_origin = month("forecast.first_origin");
    rc.last_origin = month("forecast.last_origin");
    const std::string point = cfg.get("forecast.point", "median");
    if (point == "median") {
      rc.point = PointForecast::Median;
    } else if (point == "mean") {
      rc.point = PointForecast::Mean;
    } else {
      throw ValidationError("config key 'forecast.point' must be median or mean");
    }
    rc.rw_draws = static_cast<int>(positive("forecast.rw_draws", cfg.get_int("forecast.rw_draws", 1000)));
  }
  if (command == Command::Spillover) {
    rc.fevd_horizon = static_cast<int>(positive("spillover.horizon", cfg.get_int("spillover.horizon", 12)));
    rc.spillover_first_window = month("spillover.first_window");
    if (!rc.spillover_first_window) {
      cfg.require("spillover.first_window");
    }
    rc.spillover_step = static_cast<int>(positive("spillover.step", cfg.get_int("spillover.step", 1)));
    rc.spillover_draws = static_cast<int>(cfg.get_int("spillover.draws", 0));
  }
  return rc;
}

} // namespace irga::io
