#include <irga/spillover.hpp>

#include <irga/error.hpp>
#include <irga/parallel.hpp>

#include <cmath>
#include <limits>

namespace irga {

std::optional<FevdMatrix> fevd(const SystemDraw& sd, int horizon) {
  if (horizon < 1) {
    throw ValidationError("FEVD horizon must be at least 1");
  }
  using MatrixXld = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  const int n = sd.n();
  const int p = sd.lags();
  const MatrixXld impact = (sd.u * sd.h.cwiseMax(0.0).cwiseSqrt().asDiagonal()).cast<long double>();
  std::vector<MatrixXld> lag(static_cast<std::size_t>(p));
  for (int l = 1; l <= p; ++l) {
    lag[static_cast<std::size_t>(l - 1)] = sd.lag_matrix(l).cast<long double>();
  }

  // Psi_0 = I, Psi_h = sum_{l=1}^{min(h,p)} Phi_l Psi_{h-l}.
  std::vector<MatrixXld> psi;
  psi.reserve(static_cast<std::size_t>(horizon));
  psi.push_back(MatrixXld::Identity(n, n));
  MatrixXld contrib = impact.array().square().matrix();
  for (int h = 1; h < horizon; ++h) {
    MatrixXld next = MatrixXld::Zero(n, n);
    for (int l = 1; l <= std::min(h, p); ++l) {
      next += lag[static_cast<std::size_t>(l - 1)] * psi[static_cast<std::size_t>(h - l)];
    }
    contrib += (next * impact).array().square().matrix();
    psi.push_back(std::move(next));
  }
  if (!contrib.allFinite()) {
    return std::nullopt;
  }
  const Eigen::Matrix<long double, Eigen::Dynamic, 1> row_total = contrib.rowwise().sum();
  if (!(row_total.array() > 0.0L).all() || !row_total.allFinite()) {
    return std::nullopt;
  }
  FevdMatrix f;
  f.horizon = horizon;
  f.shares = (contrib.array().colwise() / row_total.array()).matrix().cast<double>();
  if (!f.shares.allFinite()) {
    return std::nullopt;
  }
  return f;
}

double dy_total_cross_country(const FevdMatrix& f, const std::vector<int>& country_of) {
  const Eigen::Index n = f.shares.rows();
  if (n == 0) {
    return 0.0;
  }
  double total = 0.0;
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      if (country_of[static_cast<std::size_t>(b)] != country_of[static_cast<std::size_t>(a)]) {
        total += f.shares(a, b);
      }
    }
  }
  return total / static_cast<double>(n);
}

std::map<std::string, double> dy_by_variable(const FevdMatrix& f, const std::vector<int>& country_of,
                                             const std::vector<std::string>& type_of) {
  std::map<std::string, double> sums;
  std::map<std::string, int> counts;
  const Eigen::Index n = f.shares.rows();
  for (Eigen::Index a = 0; a < n; ++a) {
    const auto& type = type_of[static_cast<std::size_t>(a)];
    double same_type = 0.0;
    double foreign = 0.0;
    for (Eigen::Index b = 0; b < n; ++b) {
      if (type_of[static_cast<std::size_t>(b)] != type) {
        continue;
      }
      same_type += f.shares(a, b);
      if (country_of[static_cast<std::size_t>(b)] != country_of[static_cast<std::size_t>(a)]) {
        foreign += f.shares(a, b);
      }
    }
    sums[type] += same_type > 0.0 ? foreign / same_type : 0.0;
    counts[type] += 1;
  }
  for (auto& [type, s] : sums) {
    s /= counts[type];
  }
  return sums;
}

std::vector<double> dy_by_country(const FevdMatrix& f, const std::vector<int>& country_of) {
  int num_countries = 0;
  for (int c : country_of) {
    num_countries = std::max(num_countries, c + 1);
  }
  std::vector<double> sums(static_cast<std::size_t>(num_countries), 0.0);
  std::vector<int> counts(static_cast<std::size_t>(num_countries), 0);
  const Eigen::Index n = f.shares.rows();
  for (Eigen::Index a = 0; a < n; ++a) {
    const int c = country_of[static_cast<std::size_t>(a)];
    double foreign = 0.0;
    for (Eigen::Index b = 0; b < n; ++b) {
      if (country_of[static_cast<std::size_t>(b)] != c) {
        foreign += f.shares(a, b);
      }
    }
    sums[static_cast<std::size_t>(c)] += foreign;
    counts[static_cast<std::size_t>(c)] += 1;
  }
  for (std::size_t c = 0; c < sums.size(); ++c) {
    if (counts[c] > 0) {
      sums[c] /= counts[c];
    }
  }
  return sums;
}

WindowIndices spillover_indices(const std::vector<SystemDraw>& draws, int horizon, const std::vector<int>& country_of,
                                const std::vector<std::string>& type_of, int num_countries) {
  WindowIndices w;
  w.by_country.resize(static_cast<std::size_t>(num_countries));
  for (const auto& sd : draws) {
    const auto f = fevd(sd, horizon);
    if (!f) {
      ++w.excluded;
      continue;
    }
    w.total.push_back(dy_total_cross_country(*f, country_of));
    for (const auto& [type, value] : dy_by_variable(*f, country_of, type_of)) {
      w.by_variable[type].push_back(value);
    }
    const auto per_country = dy_by_country(*f, country_of);
    for (int c = 0; c < num_countries && c < static_cast<int>(per_country.size()); ++c) {
      w.by_country[static_cast<std::size_t>(c)].push_back(per_country[static_cast<std::size_t>(c)]);
    }
  }
  return w;
}

namespace {

SpilloverPoint make_point(const std::string& label, std::vector<double> draws, int excluded) {
  SpilloverPoint p;
  p.window_end = label;
  p.excluded = excluded;
  if (!draws.empty()) {
    p.bands = summarize_bands(draws);
  } else {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    p.bands = {nan, nan, nan, nan, nan};
  }
  p.draws = std::move(draws);
  return p;
}

SpilloverSeries& series_for(std::vector<SpilloverSeries>& list, const std::string& variant, const std::string& key) {
  for (auto& s : list) {
    if (s.key == key) {
      return s;
    }
  }
  list.push_back({variant, key, {}});
  return list.back();
}

} // namespace

SpilloverResult spillover_recursion(const PanelDataset& ds, const SystemSampler& sampler, int horizon,
                                    const std::vector<int>& window_ends, std::uint64_t seed, unsigned threads) {
  if (window_ends.empty()) {
    throw ValidationError("spillover schedule is empty");
  }
  const std::vector<int> country_of = ds.country_map();
  const std::vector<std::string> type_of = ds.variable_codes();
  std::vector<WindowIndices> windows(window_ends.size());
  std::vector<std::string> failures(window_ends.size());

  parallel_for(window_ends.size(), threads, [&](std::size_t w) {
    const int rows = window_ends[w];
    Rng rng(derive_seed(seed, "spillover/window", rows));
    try {
      const auto draws = sampler(ds.head(rows), rng);
      windows[w] = spillover_indices(draws, horizon, country_of, type_of, ds.num_countries());
    } catch (const std::exception& e) {
      failures[w] = ds.time_index()[static_cast<std::size_t>(rows - 1)].str() + ": " + e.what();
    }
  });

  SpilloverResult result;
  for (std::size_t w = 0; w < window_ends.size(); ++w) {
    if (!failures[w].empty()) {
      result.failures.push_back(failures[w]);
      continue;
    }
    const std::string label = ds.time_index()[static_cast<std::size_t>(window_ends[w] - 1)].str();
    WindowIndices& wi = windows[w];
    series_for(result.total, "total", "total").points.push_back(make_point(label, std::move(wi.total), wi.excluded));
    for (auto& [type, draws] : wi.by_variable) {
      series_for(result.by_variable, "variable", type).points.push_back(make_point(label, std::move(draws), wi.excluded));
    }
    for (int c = 0; c < ds.num_countries(); ++c) {
      series_for(result.by_country, "country", ds.countries()[static_cast<std::size_t>(c)].code)
          .points.push_back(make_point(label, std::move(wi.by_country[static_cast<std::size_t>(c)]), wi.excluded));
    }
  }
  return result;
}

SystemSampler make_irga_sampler(PvarOptions opts, bool propagate_b_uncertainty, int max_draws) {
  return [opts, propagate_b_uncertainty, max_draws](const PanelDataset& window, Rng& rng) {
    PvarOptions local = opts;
    local.mcmc.seed = rng();
    const PvarPosterior post = estimate_pvar(window, local);
    const int total = post.n_save();
    const int count = max_draws > 0 ? std::min(max_draws, total) : total;
    std::vector<SystemDraw> draws;
    draws.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
      const int d = static_cast<int>(static_cast<long>(i) * total / count);
      draws.push_back(assemble_system_draw(post, d, rng, propagate_b_uncertainty));
    }
    return draws;
  };
}

} // namespace irga
