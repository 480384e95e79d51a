#include <irga/forecast.hpp>

#include <irga/error.hpp>
#include <irga/parallel.hpp>
#include <irga/stats.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <tuple>

namespace irga {

namespace {

constexpr double kPredictiveVarFloor = 1e-10;
const double kLogSqrt2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

double log_normal_density(double x, double mean, double var) {
  var = std::max(var, kPredictiveVarFloor);
  const double z = x - mean;
  return -kLogSqrt2Pi - 0.5 * std::log(var) - 0.5 * z * z / var;
}

} // namespace

std::vector<double> ForecastDistribution::draws_of(int h, int variable) const {
  std::vector<double> out;
  out.reserve(paths.size());
  for (const auto& p : paths) {
    out.push_back(p(h - 1, variable));
  }
  return out;
}

ForecastDistribution simulate_forecast(const std::vector<SystemDraw>& systems, const Eigen::MatrixXd& history, int horizon,
                                       Rng& rng) {
  if (horizon < 1) {
    throw ValidationError("forecast horizon must be at least 1");
  }
  ForecastDistribution f;
  f.horizon = horizon;
  if (systems.empty()) {
    return f;
  }
  const int n = systems.front().n();
  const int p = systems.front().lags();
  if (history.cols() != n || history.rows() < p) {
    throw ValidationError("forecast history must hold at least " + std::to_string(p) + " observations of " +
                          std::to_string(n) + " variables");
  }
  const auto D = static_cast<Eigen::Index>(systems.size());
  f.paths.reserve(systems.size());
  f.one_step_mean.resize(D, n);
  f.one_step_var.resize(D, n);

  Eigen::VectorXd stacked(static_cast<Eigen::Index>(n) * p);
  for (Eigen::Index d = 0; d < D; ++d) {
    const SystemDraw& sd = systems[static_cast<std::size_t>(d)];
    for (int l = 1; l <= p; ++l) {
      stacked.segment(static_cast<Eigen::Index>(l - 1) * n, n) = history.row(history.rows() - l).transpose();
    }
    const Eigen::VectorXd shock_sd = sd.h.cwiseMax(0.0).cwiseSqrt();
    Eigen::MatrixXd path(horizon, n);
    for (int h = 0; h < horizon; ++h) {
      const Eigen::VectorXd mean = sd.phi * stacked;
      if (h == 0) {
        f.one_step_mean.row(d) = mean.transpose();
        f.one_step_var.row(d) = (sd.u.array().square().matrix() * sd.h).transpose();
      }
      const Eigen::VectorXd y = mean + sd.u * shock_sd.cwiseProduct(draw_std_normal(rng, n));
      path.row(h) = y.transpose();
      if (p > 1) {
        stacked.tail(static_cast<Eigen::Index>(n) * (p - 1)) = stacked.head(static_cast<Eigen::Index>(n) * (p - 1)).eval();
      }
      stacked.head(n) = y;
    }
    f.paths.push_back(std::move(path));
  }
  return f;
}

double point_forecast(const std::vector<double>& draws, PointForecast kind) {
  if (draws.empty()) {
    throw ValidationError("point forecast of an empty sample");
  }
  if (kind == PointForecast::Mean) {
    return std::accumulate(draws.begin(), draws.end(), 0.0) / static_cast<double>(draws.size());
  }
  return median(draws);
}

double rmse(std::span<const double> forecasts, std::span<const double> actuals) {
  if (forecasts.size() != actuals.size()) {
    throw ValidationError("rmse: forecasts and actuals differ in length");
  }
  if (forecasts.empty()) {
    throw ValidationError("rmse: empty hold-out");
  }
  double ss = 0.0;
  for (std::size_t i = 0; i < forecasts.size(); ++i) {
    const double e = forecasts[i] - actuals[i];
    ss += e * e;
  }
  return std::sqrt(ss / static_cast<double>(forecasts.size()));
}

double log_predictive_mixture(std::span<const double> means, std::span<const double> vars, double actual) {
  if (means.empty() || means.size() != vars.size()) {
    throw ValidationError("log score: need matching, non-empty mixture moments");
  }
  std::vector<double> logs(means.size());
  for (std::size_t d = 0; d < means.size(); ++d) {
    logs[d] = log_normal_density(actual, means[d], vars[d]);
  }
  const double top = *std::max_element(logs.begin(), logs.end());
  if (!std::isfinite(top)) {
    return top;
  }
  double sum = 0.0;
  for (double l : logs) {
    sum += std::exp(l - top);
  }
  return top + std::log(sum / static_cast<double>(logs.size()));
}

double log_predictive_gaussian(std::span<const double> draws, double actual) {
  if (draws.size() < 2) {
    throw ValidationError("log score: a Gaussian fit needs at least two draws");
  }
  const double n = static_cast<double>(draws.size());
  const double mean = std::accumulate(draws.begin(), draws.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : draws) {
    ss += (x - mean) * (x - mean);
  }
  return log_normal_density(actual, mean, ss / (n - 1.0));
}

double log_predictive_score(const ForecastDistribution& f, int h, int variable, double actual) {
  if (h == 1 && f.one_step_mean.rows() == f.num_draws() && f.num_draws() > 0) {
    const Eigen::VectorXd m = f.one_step_mean.col(variable);
    const Eigen::VectorXd v = f.one_step_var.col(variable);
    return log_predictive_mixture(std::span<const double>(m.data(), static_cast<std::size_t>(m.size())),
                                  std::span<const double>(v.data(), static_cast<std::size_t>(v.size())), actual);
  }
  const std::vector<double> d = f.draws_of(h, variable);
  return log_predictive_gaussian(d, actual);
}

ScoreTable build_score_table(const std::vector<ScoreRecord>& records, const std::string& benchmark) {
  using Key = std::tuple<std::string, std::string, std::string, int>; // model, country, variable, h
  std::map<Key, ScoreEntry> acc;
  std::vector<Key> order;
  for (const auto& r : records) {
    Key key{r.model, r.country, r.variable, r.horizon};
    auto [it, inserted] = acc.try_emplace(key);
    if (inserted) {
      order.push_back(key);
      it->second.model = r.model;
      it->second.country = r.country;
      it->second.variable = r.variable;
      it->second.horizon = r.horizon;
    }
    const double e = r.forecast - r.actual;
    it->second.rmse += e * e;
    it->second.lps += r.lps;
    ++it->second.count;
  }
  for (auto& [key, e] : acc) {
    e.rmse = std::sqrt(e.rmse / e.count);
    e.lps /= e.count;
  }

  ScoreTable table;
  using AggKey = std::tuple<std::string, std::string, int>;
  std::map<AggKey, ScoreTable::Aggregate> agg;
  std::vector<AggKey> agg_order;
  for (const auto& key : order) {
    ScoreEntry e = acc.at(key);
    auto bench = acc.find(Key{benchmark, e.country, e.variable, e.horizon});
    if (bench != acc.end()) {
      const double rb = bench->second.rmse;
      e.relative_rmse = rb > 0.0 ? e.rmse / rb : (e.rmse == 0.0 ? 1.0 : std::numeric_limits<double>::infinity());
      e.relative_lps = e.lps - bench->second.lps;
      AggKey ak{e.model, e.variable, e.horizon};
      auto [it, inserted] = agg.try_emplace(ak);
      if (inserted) {
        agg_order.push_back(ak);
        it->second = {e.model, e.variable, e.horizon, 0.0, 0.0, 0};
      }
      it->second.relative_rmse += e.relative_rmse;
      it->second.relative_lps += e.relative_lps;
      ++it->second.countries;
    } else {
      e.relative_rmse = std::numeric_limits<double>::quiet_NaN();
      e.relative_lps = std::numeric_limits<double>::quiet_NaN();
    }
    table.entries.push_back(std::move(e));
  }
  for (const auto& ak : agg_order) {
    auto a = agg.at(ak);
    a.relative_rmse /= a.countries;
    a.relative_lps /= a.countries;
    table.aggregated.push_back(a);
  }
  return table;
}

std::vector<CumulativeLps> cumulative_lps(const std::vector<ScoreRecord>& records, const std::string& benchmark,
                                          const std::vector<std::string>& origin_labels) {
  std::vector<std::string> models;
  std::vector<int> horizons;
  std::vector<std::string> rows;
  std::map<std::string, int> origin_pos;
  for (std::size_t o = 0; o < origin_labels.size(); ++o) {
    origin_pos[origin_labels[o]] = static_cast<int>(o);
  }
  using Key = std::tuple<std::string, int, std::string, std::string>; // model, h, row, origin
  std::map<Key, double> lps;
  for (const auto& r : records) {
    if (r.model != benchmark && std::find(models.begin(), models.end(), r.model) == models.end()) {
      models.push_back(r.model);
    }
    if (std::find(horizons.begin(), horizons.end(), r.horizon) == horizons.end()) {
      horizons.push_back(r.horizon);
    }
    const std::string row = r.country + "." + r.variable;
    if (std::find(rows.begin(), rows.end(), row) == rows.end()) {
      rows.push_back(row);
    }
    lps[Key{r.model, r.horizon, row, r.origin_label}] = r.lps;
  }
  std::sort(horizons.begin(), horizons.end());

  std::vector<CumulativeLps> out;
  const auto O = static_cast<Eigen::Index>(origin_labels.size());
  const auto R = static_cast<Eigen::Index>(rows.size());
  for (const auto& m : models) {
    for (int h : horizons) {
      CumulativeLps c;
      c.model = m;
      c.horizon = h;
      c.origin_labels = origin_labels;
      c.row_labels = rows;
      c.per_origin = Eigen::MatrixXd::Constant(R, O, std::numeric_limits<double>::quiet_NaN());
      c.cumulative = Eigen::MatrixXd::Zero(R, O);
      for (Eigen::Index r = 0; r < R; ++r) {
        double running = 0.0;
        for (Eigen::Index o = 0; o < O; ++o) {
          const auto& row = rows[static_cast<std::size_t>(r)];
          const auto& lbl = origin_labels[static_cast<std::size_t>(o)];
          auto a = lps.find(Key{m, h, row, lbl});
          auto b = lps.find(Key{benchmark, h, row, lbl});
          if (a != lps.end() && b != lps.end()) {
            c.per_origin(r, o) = a->second - b->second;
            running += a->second - b->second;
          }
          c.cumulative(r, o) = running;
        }
      }
      out.push_back(std::move(c));
    }
  }
  return out;
}

RecursiveResult recursive_exercise(const PanelDataset& ds, const RecursiveDesign& design,
                                   const std::vector<NamedModel>& models) {
  if (design.horizon < 1) {
    throw ValidationError("forecast horizon must be at least 1");
  }
  const int last = std::min(design.last_origin, ds.T() - 1);
  if (design.first_origin < 1 || design.first_origin > last) {
    throw ValidationError("recursive design leaves no hold-out observation");
  }
  if (std::none_of(models.begin(), models.end(), [&](const NamedModel& m) { return m.name == design.benchmark; })) {
    throw ValidationError("benchmark model '" + design.benchmark + "' is not among the evaluated models");
  }

  const int num_origins = last - design.first_origin + 1;
  const std::size_t M = models.size();
  std::vector<std::vector<ScoreRecord>> slots(static_cast<std::size_t>(num_origins) * M);
  std::vector<std::string> slot_failures(slots.size());
  std::vector<std::string> origin_labels;
  for (int t = design.first_origin; t <= last; ++t) {
    origin_labels.push_back(ds.time_index()[static_cast<std::size_t>(t - 1)].str());
  }

  parallel_for(slots.size(), design.threads, [&](std::size_t slot) {
    const int t = design.first_origin + static_cast<int>(slot / M);
    const NamedModel& model = models[slot % M];
    Rng rng(derive_seed(design.seed, "forecast/" + model.name, t));
    ForecastDistribution f;
    try {
      f = model.run(ds.head(t), design.horizon, rng);
    } catch (const std::exception& e) {
      slot_failures[slot] = model.name + "@" + origin_labels[static_cast<std::size_t>(t - design.first_origin)] + ": " + e.what();
      return;
    }
    for (int h = 1; h <= design.horizon; ++h) {
      const int target = t + h - 1;
      if (target >= ds.T()) {
        break;
      }
      for (int v = 0; v < ds.n(); ++v) {
        ScoreRecord r;
        r.origin = t;
        r.origin_label = origin_labels[static_cast<std::size_t>(t - design.first_origin)];
        r.country = ds.countries()[static_cast<std::size_t>(ds.country_of(v))].code;
        r.variable = ds.variable(v).code;
        r.horizon = h;
        r.model = model.name;
        r.actual = ds.series()(target, v);
        r.forecast = point_forecast(f.draws_of(h, v), design.point);
        r.lps = log_predictive_score(f, h, v, r.actual);
        slots[slot].push_back(std::move(r));
      }
    }
  });

  RecursiveResult result;
  for (std::size_t s = 0; s < slots.size(); ++s) {
    if (!slot_failures[s].empty()) {
      result.failures.push_back(slot_failures[s]);
    }
    for (auto& r : slots[s]) {
      result.records.push_back(std::move(r));
    }
  }
  result.table = build_score_table(result.records, design.benchmark);
  result.cumulative = cumulative_lps(result.records, design.benchmark, origin_labels);
  return result;
}

ModelRunner make_irga_runner(PvarOptions opts, bool propagate_b_uncertainty) {
  return [opts, propagate_b_uncertainty](const PanelDataset& window, int horizon, Rng& rng) {
    PvarOptions local = opts;
    local.mcmc.seed = rng();
    const PvarPosterior post = estimate_pvar(window, local);
    std::vector<SystemDraw> systems;
    systems.reserve(static_cast<std::size_t>(post.n_save()));
    for (int d = 0; d < post.n_save(); ++d) {
      systems.push_back(assemble_system_draw(post, d, rng, propagate_b_uncertainty));
    }
    ForecastDistribution f = simulate_forecast(systems, window.series().bottomRows(local.lags), horizon, rng);
    f.origin = window.T();
    return f;
  };
}

ModelRunner make_random_walk_runner(int num_draws) {
  return [num_draws](const PanelDataset& window, int horizon, Rng& rng) {
    const Eigen::MatrixXd& Y = window.series();
    if (Y.rows() < 3) {
      throw ComputeError("random walk needs at least three observations");
    }
    const Eigen::MatrixXd diffs = Y.bottomRows(Y.rows() - 1) - Y.topRows(Y.rows() - 1);
    const Eigen::RowVectorXd mean = diffs.colwise().mean();
    const Eigen::RowVectorXd var =
        ((diffs.rowwise() - mean).array().square().colwise().sum() / static_cast<double>(diffs.rows() - 1))
            .max(kPredictiveVarFloor)
            .matrix();
    const Eigen::RowVectorXd last = Y.bottomRows(1);
    const auto n = Y.cols();

    ForecastDistribution f;
    f.horizon = horizon;
    f.origin = window.T();
    f.one_step_mean = last.replicate(num_draws, 1);
    f.one_step_var = var.replicate(num_draws, 1);
    const Eigen::RowVectorXd sd = var.cwiseSqrt();
    for (int d = 0; d < num_draws; ++d) {
      Eigen::MatrixXd path(horizon, n);
      Eigen::RowVectorXd level = last;
      for (int h = 0; h < horizon; ++h) {
        level += sd.cwiseProduct(draw_std_normal(rng, n).transpose());
        path.row(h) = level;
      }
      f.paths.push_back(std::move(path));
    }
    return f;
  };
}

} // namespace irga
