#include <irga/io/commands.hpp>

#include <irga/error.hpp>
#include <irga/forecast.hpp>
#include <irga/io/csv.hpp>
#include <irga/io/fetch.hpp>
#include <irga/io/run_store.hpp>
#include <irga/io/simulate.hpp>
#include <irga/spillover.hpp>
#include <irga/stats.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <sstream>

namespace irga::io {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

class Stopwatch {
public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

json base_manifest(const std::string& command, const Config& cfg, std::uint64_t seed) {
  json m;
  m["tool_version"] = kToolVersion;
  m["command"] = command;
  m["config"] = cfg.values();
  m["seed"] = seed;
  return m;
}

// Everything that determines the full-sample posterior; a saved posterior is
// reused only when this matches exactly.
json estimation_key(const RunConfig& rc, const std::string& fingerprint) {
  const PvarOptions o = rc.pvar_options();
  return {{"data_fingerprint", fingerprint},
          {"lags", o.lags},
          {"mcmc_seed", o.mcmc.seed},
          {"mcmc", {o.mcmc.n_burn, o.mcmc.n_save, o.mcmc.thin}},
          {"vamp",
           {format_double(o.vamp.tol), o.vamp.max_iter, format_double(o.vamp.damping), format_double(o.vamp.zeta_init),
            format_double(o.vamp.a_sigma), format_double(o.vamp.b_sigma), o.vamp.em_form == EmForm::Expected}}};
}

AlignResult load_and_report(const RunConfig& rc, std::ostream& log) {
  AlignResult ar = load_panel(rc.data_csv, rc.data_spec);
  for (const auto& w : ar.warnings) {
    log << "warning: " << w << "\n";
  }
  const auto& ti = ar.dataset.time_index();
  log << "panel: " << ar.dataset.num_countries() << " countries, " << ar.dataset.n() << " series, " << ar.dataset.T()
      << " months " << ti.front().str() << " to " << ti.back().str() << "\n";
  return ar;
}

// Rows in the sample whose last month is `month`.
int rows_through(const PanelDataset& ds, YearMonth month, const std::string& key) {
  const auto& ti = ds.time_index();
  auto it = std::find(ti.begin(), ti.end(), month);
  if (it == ti.end()) {
    throw ValidationError("config key '" + key + "': " + month.str() + " is outside the aligned sample " +
                          ti.front().str() + " to " + ti.back().str());
  }
  return static_cast<int>(it - ti.begin()) + 1;
}

void write_vamp_traces(const fs::path& dir, const PvarPosterior& post, const PanelDataset& ds) {
  fs::create_directories(dir);
  for (const auto& eq : post.equations) {
    std::ostringstream out;
    out << "iteration,delta2,s,sigma2\n";
    for (const auto& r : eq.approx.trace) {
      out << r.iteration << ',' << format_double(r.delta2) << ',' << format_double(r.s) << ','
          << format_double(r.sigma2) << '\n';
    }
    write_file_atomic(dir / (ds.variable(eq.variable).label() + ".csv"), out.str());
  }
}

PvarPosterior estimate_and_save(const RunConfig& rc, const Config& cfg, const PanelDataset& ds,
                                const std::string& fingerprint, json& manifest, std::ostream& log) {
  PvarOptions opts = rc.pvar_options();
  opts.vamp.record_trace = cfg.get_bool("vamp.trace", false);
  Stopwatch sw;
  PvarPosterior post = estimate_pvar(ds, opts);
  const double secs = sw.seconds();
  save_posterior(rc.output_dir, post);
  if (opts.vamp.record_trace) {
    write_vamp_traces(rc.output_dir / "vamp_trace", post, ds);
  }
  int unconverged = 0;
  json eq_seconds = json::array();
  for (const auto& eq : post.equations) {
    unconverged += eq.approx.converged ? 0 : 1;
    eq_seconds.push_back(eq.seconds);
  }
  if (unconverged > 0) {
    log << "warning: VAMP did not converge for " << unconverged << " equation(s)\n";
  }
  log << "estimated " << post.equations.size() << " equations in " << secs << " s\n";
  manifest["estimation"] = estimation_key(rc, fingerprint);
  manifest["equations"] = equation_summary(post);
  manifest["timings"]["estimate_seconds"] = secs;
  manifest["timings"]["equation_seconds"] = eq_seconds;
  return post;
}

std::string bands_csv(const BandSummary& b) {
  return format_double(b.median) + ',' + format_double(b.q16) + ',' + format_double(b.q84) + ',' +
         format_double(b.q05) + ',' + format_double(b.q95);
}

} // namespace

void cmd_fetch(const Config& cfg, const fs::path& base_dir, std::ostream& log) {
  const RunConfig rc = make_run_config(cfg, Command::Fetch, base_dir);
  fs::path spec_path = cfg.require("fetch.spec");
  if (spec_path.is_relative() && !base_dir.empty()) {
    spec_path = base_dir / spec_path;
  }
  if (!fs::exists(spec_path)) {
    throw ValidationError("config key 'fetch.spec': file " + spec_path.string() + " does not exist");
  }
  FetchOptions opt;
  opt.base_url = cfg.get("fetch.base_url", opt.base_url);
  opt.retries = static_cast<int>(cfg.get_int("fetch.retries", opt.retries));
  opt.backoff_ms = static_cast<int>(cfg.get_int("fetch.backoff_ms", opt.backoff_ms));
  opt.cache_dir = cfg.get("fetch.cache_dir", (rc.output_dir / "cache").string());
  if (opt.cache_dir.is_relative() && !base_dir.empty()) {
    opt.cache_dir = base_dir / opt.cache_dir;
  }
  if (opt.retries < 1 || opt.backoff_ms < 0) {
    throw ValidationError("config keys 'fetch.retries' must be positive and 'fetch.backoff_ms' non-negative");
  }
  const auto spec = read_fetch_spec(spec_path);
  fs::create_directories(rc.output_dir);
  fs::create_directories(opt.cache_dir);

  Stopwatch sw;
  const FetchReport report = fetch_dbnomics(spec, opt, rc.output_dir / "data.csv");
  log << "fetched " << report.fetched.size() << " of " << spec.size() << " series (" << report.cache_hits
      << " from cache)\n";

  json m = base_manifest("fetch", cfg, rc.seed);
  m["fetched"] = report.fetched;
  m["failed"] = report.failures.size();
  m["timings"]["fetch_seconds"] = sw.seconds();
  write_manifest(rc.output_dir, m);
  if (!report.failures.empty()) {
    for (const auto& f : report.failures) {
      log << "error: " << f.series.column << ": " << f.message << "\n";
    }
    throw FetchError(std::to_string(report.failures.size()) + " series failed; see fetch_errors.csv");
  }
}

void cmd_simulate(const Config& cfg, const fs::path& base_dir, std::ostream& log) {
  const RunConfig rc = make_run_config(cfg, Command::Simulate, base_dir);
  SimulationSpec spec;
  spec.countries = static_cast<int>(cfg.get_int("simulate.countries", spec.countries));
  spec.vars = static_cast<int>(cfg.get_int("simulate.vars", spec.vars));
  spec.lags = static_cast<int>(cfg.get_int("simulate.lags", spec.lags));
  spec.T = static_cast<int>(cfg.get_int("simulate.T", spec.T));
  spec.sparsity = cfg.get_double("simulate.sparsity", spec.sparsity);
  if (cfg.has("simulate.start")) {
    spec.start = YearMonth::parse(cfg.get("simulate.start", ""));
  }
  spec.seed = rc.seed;
  const SimulatedPanel sim = simulate_panel(spec);
  write_simulation(rc.output_dir, sim);
  log << "simulated " << sim.data.n() << " series over " << sim.data.T() << " months; spectral radius "
      << companion_spectral_radius(sim.truth) << "\n";
  json m = base_manifest("simulate", cfg, rc.seed);
  m["data_fingerprint"] = data_fingerprint(rc.output_dir / "data.csv", rc.output_dir / "spec.csv");
  write_manifest(rc.output_dir, m);
}

void cmd_estimate(const Config& cfg, const fs::path& base_dir, std::ostream& log) {
  const RunConfig rc = make_run_config(cfg, Command::Estimate, base_dir);
  const AlignResult ar = load_and_report(rc, log);
  const std::string fp = data_fingerprint(rc.data_csv, rc.data_spec);
  fs::create_directories(rc.output_dir);
  json m = base_manifest("estimate", cfg, rc.seed);
  m["data_fingerprint"] = fp;
  estimate_and_save(rc, cfg, ar.dataset, fp, m, log);
  write_manifest(rc.output_dir, m);
}

void cmd_forecast(const Config& cfg, const fs::path& base_dir, std::ostream& log) {
  const RunConfig rc = make_run_config(cfg, Command::Forecast, base_dir);
  const AlignResult ar = load_and_report(rc, log);
  const PanelDataset& ds = ar.dataset;
  const std::string fp = data_fingerprint(rc.data_csv, rc.data_spec);

  const int first = rc.first_origin ? rows_through(ds, *rc.first_origin, "forecast.first_origin") : 0;
  const int last = rc.last_origin ? rows_through(ds, *rc.last_origin, "forecast.last_origin") : ds.T() - 1;
  if (rc.first_origin && last < first) {
    throw ValidationError("config key 'forecast.last_origin' precedes 'forecast.first_origin'");
  }

  fs::create_directories(rc.output_dir);
  json m = base_manifest("forecast", cfg, rc.seed);
  m["data_fingerprint"] = fp;

  PvarPosterior post;
  bool reused = false;
  if (has_posterior(rc.output_dir) && fs::exists(rc.output_dir / "manifest.json")) {
    const json prev = read_manifest(rc.output_dir);
    if (prev.contains("estimation") && prev["estimation"] == estimation_key(rc, fp)) {
      post = load_posterior(rc.output_dir);
      reused = true;
      m["estimation"] = prev["estimation"];
      m["equations"] = prev["equations"];
      log << "reusing posterior draws in " << rc.output_dir.string() << "\n";
    }
  }
  if (!reused) {
    post = estimate_and_save(rc, cfg, ds, fp, m, log);
  }
  m["reused_posterior"] = reused;

  // Out-of-sample forecast from the end of the sample.
  Stopwatch sw;
  {
    Rng rng(derive_seed(rc.seed, "forecast/final"));
    std::vector<SystemDraw> systems;
    for (int d = 0; d < post.n_save(); ++d) {
      systems.push_back(assemble_system_draw(post, d, rng, rc.propagate_b));
    }
    const Eigen::MatrixXd history = ds.series().bottomRows(rc.lags);
    const ForecastDistribution f = simulate_forecast(systems, history, rc.horizon, rng);
    std::ostringstream out;
    out << "date,series,horizon,median,q16,q84,q05,q95\n";
    const YearMonth end = ds.time_index().back();
    for (int h = 1; h <= rc.horizon; ++h) {
      for (int v = 0; v < ds.n(); ++v) {
        out << (end + h).str() << ',' << ds.variable(v).label() << ',' << h << ','
            << bands_csv(summarize_bands(f.draws_of(h, v))) << '\n';
      }
    }
    write_file_atomic(rc.output_dir / "forecast.csv", out.str());
  }

  if (rc.first_origin) {
    PvarOptions opts = rc.pvar_options();
    opts.threads = 1;
    std::vector<NamedModel> models;
    for (const auto& name : rc.models) {
      if (name == "irga") {
        models.push_back({name, make_irga_runner(opts, rc.propagate_b)});
      } else if (name == "irga-mean") {
        models.push_back({name, make_irga_runner(opts, false)});
      } else {
        models.push_back({name, make_random_walk_runner(rc.rw_draws)});
      }
    }
    RecursiveDesign design;
    design.first_origin = first;
    design.last_origin = last;
    design.horizon = rc.horizon;
    design.benchmark = rc.benchmark;
    design.point = rc.point;
    design.seed = derive_seed(rc.seed, "recursive");
    design.threads = rc.threads;
    const RecursiveResult res = recursive_exercise(ds, design, models);
    for (const auto& f : res.failures) {
      log << "warning: forecast failed: " << f << "\n";
    }
    m["forecast_failures"] = res.failures;
    if (res.records.empty()) {
      throw ComputeError("every forecast origin failed");
    }

    std::ostringstream scores;
    scores << "origin,country,variable,horizon,model,rmse,lps\n";
    for (const auto& r : res.records) {
      scores << r.origin_label << ',' << r.country << ',' << r.variable << ',' << r.horizon << ',' << r.model << ','
             << format_double(std::abs(r.forecast - r.actual)) << ',' << format_double(r.lps) << '\n';
    }
    write_file_atomic(rc.output_dir / "scores.csv", scores.str());

    std::ostringstream table;
    table << "model,variable,horizon,relative_rmse,relative_lps,countries\n";
    for (const auto& a : res.table.aggregated) {
      table << a.model << ',' << a.variable << ',' << a.horizon << ',' << format_double(a.relative_rmse) << ','
            << format_double(a.relative_lps) << ',' << a.countries << '\n';
    }
    write_file_atomic(rc.output_dir / "table2.csv", table.str());

    std::map<int, std::ostringstream> cum;
    for (const auto& c : res.cumulative) {
      auto& out = cum[c.horizon];
      if (out.tellp() == 0) {
        out << "model,series";
        for (const auto& o : c.origin_labels) {
          out << ',' << o;
        }
        out << '\n';
      }
      for (Eigen::Index i = 0; i < c.cumulative.rows(); ++i) {
        out << c.model << ',' << c.row_labels[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < c.cumulative.cols(); ++j) {
          out << ',' << format_double(c.cumulative(i, j));
        }
        out << '\n';
      }
    }
    for (auto& [h, out] : cum) {
      write_file_atomic(rc.output_dir / ("cumlps_" + std::to_string(h) + ".csv"), out.str());
    }
    log << "scored " << res.records.size() << " forecasts\n";
  }
  m["timings"]["forecast_seconds"] = sw.seconds();
  write_manifest(rc.output_dir, m);
}

void cmd_spillover(const Config& cfg, const fs::path& base_dir, std::ostream& log) {
  const RunConfig rc = make_run_config(cfg, Command::Spillover, base_dir);
  const AlignResult ar = load_and_report(rc, log);
  const PanelDataset& ds = ar.dataset;
  const int first = rows_through(ds, *rc.spillover_first_window, "spillover.first_window");
  std::vector<int> ends;
  for (int rows = first; rows <= ds.T(); rows += rc.spillover_step) {
    ends.push_back(rows);
  }
  fs::create_directories(rc.output_dir);
  json m = base_manifest("spillover", cfg, rc.seed);
  m["data_fingerprint"] = data_fingerprint(rc.data_csv, rc.data_spec);

  PvarOptions opts = rc.pvar_options();
  opts.threads = 1;
  Stopwatch sw;
  const SpilloverResult res = spillover_recursion(ds, make_irga_sampler(opts, rc.propagate_b, rc.spillover_draws),
                                                  rc.fevd_horizon, ends, derive_seed(rc.seed, "spillover"),
                                                  rc.threads);
  for (const auto& f : res.failures) {
    log << "warning: spillover window failed: " << f << "\n";
  }
  m["spillover_failures"] = res.failures;

  auto emit = [&](const std::vector<SpilloverSeries>& series, const std::string& file, const std::string& key) {
    std::ostringstream out;
    out << "window_end";
    if (!key.empty()) {
      out << ',' << key;
    }
    out << ",median,q16,q84,q05,q95,excluded\n";
    for (const auto& s : series) {
      for (const auto& p : s.points) {
        out << p.window_end;
        if (!key.empty()) {
          out << ',' << s.key;
        }
        out << ',' << bands_csv(p.bands) << ',' << p.excluded << '\n';
      }
    }
    write_file_atomic(rc.output_dir / file, out.str());
  };
  emit(res.total, "dy_total.csv", "");
  emit(res.by_variable, "dy_by_variable.csv", "variable");
  emit(res.by_country, "dy_by_country.csv", "country");
  m["timings"]["spillover_seconds"] = sw.seconds();
  write_manifest(rc.output_dir, m);
  log << "spillover indices for " << ends.size() << " windows\n";
}

void run_command(Command command, const Config& cfg, const fs::path& base_dir, std::ostream& log) {
  switch (command) {
  case Command::Fetch: return cmd_fetch(cfg, base_dir, log);
  case Command::Simulate: return cmd_simulate(cfg, base_dir, log);
  case Command::Estimate: return cmd_estimate(cfg, base_dir, log);
  case Command::Forecast: return cmd_forecast(cfg, base_dir, log);
  case Command::Spillover: return cmd_spillover(cfg, base_dir, log);
  }
}

} // namespace irga::io
