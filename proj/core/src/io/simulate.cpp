#include <irga/io/simulate.hpp>

#include <irga/error.hpp>
#include <irga/io/csv.hpp>
#include <irga/random.hpp>

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

namespace irga::io {

namespace {

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      row.push_back(m(i, j));
    }
    rows.push_back(row);
  }
  return rows;
}

} // namespace

double companion_spectral_radius(const SystemDraw& sd) {
  const int n = sd.n();
  const int p = sd.lags();
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n * p, n * p);
  comp.topRows(n) = sd.phi;
  if (p > 1) {
    comp.bottomLeftCorner(n * (p - 1), n * (p - 1)).setIdentity();
  }
  return comp.eigenvalues().cwiseAbs().maxCoeff();
}

Eigen::MatrixXd simulate_series(const SystemDraw& sd, int T, int burn, Rng& rng) {
  const int n = sd.n();
  const int p = sd.lags();
  const Eigen::VectorXd sd_h = sd.h.cwiseSqrt();
  Eigen::VectorXd stack = Eigen::VectorXd::Zero(n * p);
  Eigen::MatrixXd out(T, n);
  for (int t = -burn; t < T; ++t) {
    Eigen::VectorXd y = sd.phi * stack + sd.u * sd_h.cwiseProduct(draw_std_normal(rng, n));
    if (p > 1) {
      stack.tail(n * (p - 1)) = stack.head(n * (p - 1)).eval();
    }
    stack.head(n) = y;
    if (t >= 0) {
      out.row(t) = y.transpose();
    }
  }
  return out;
}

SimulatedPanel simulate_panel(const SimulationSpec& spec) {
  if (spec.countries < 1 || spec.vars < 1 || spec.lags < 1 || spec.T < 1) {
    throw ValidationError("simulation needs positive countries, vars, lags and T");
  }
  if (spec.sparsity < 0.0 || spec.sparsity > 1.0) {
    throw ValidationError("simulate.sparsity must lie in [0, 1]");
  }
  const int M = spec.vars;
  const int n = spec.countries * M;
  const int p = spec.lags;
  Rng rng(derive_seed(spec.seed, "simulate"));
  std::bernoulli_distribution keep(spec.sparsity);
  std::normal_distribution<double> cross(0.0, 0.15);
  std::normal_distribution<double> domestic(0.0, 0.1);
  std::normal_distribution<double> impact(0.0, 0.3);

  SystemDraw sd;
  StructuralDraw s;
  for (int attempt = 0;; ++attempt) {
    if (attempt == 100) {
      throw ComputeError("no stable system after 100 draws; use smaller coefficients or fewer cross-country links");
    }
    s.h = Eigen::VectorXd::Ones(n);
    s.phi_s = Eigen::MatrixXd::Zero(n, n * p);
    for (int l = 0; l < p; ++l) {
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          double& c = s.phi_s(i, l * n + j);
          if (i / M != j / M) {
            c = keep(rng) ? cross(rng) : 0.0;
          } else if (i == j && l == 0) {
            c = 0.5;
          } else {
            c = domestic(rng) / (l + 1);
          }
        }
      }
    }
    s.l = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < i; ++j) {
        if (i / M == j / M) {
          s.l(i, j) = impact(rng);
        } else if (keep(rng)) {
          s.l(i, j) = cross(rng);
        }
      }
    }
    sd = to_reduced_form(s);
    if (companion_spectral_radius(sd) < 0.95) {
      break;
    }
  }

  const Eigen::MatrixXd y = simulate_series(sd, spec.T, spec.burn, rng);
  std::vector<CountryBlock> blocks;
  for (int c = 0; c < spec.countries; ++c) {
    CountryBlock b;
    b.code = "C" + std::to_string(c + 1);
    for (int v = 0; v < M; ++v) {
      VariableSpec vs;
      vs.code = "V" + std::to_string(v + 1);
      vs.name = vs.code;
      vs.country = b.code;
      b.variables.push_back(vs);
    }
    blocks.push_back(std::move(b));
  }
  std::vector<YearMonth> months;
  for (int t = 0; t < spec.T; ++t) {
    months.push_back(spec.start + t);
  }
  return {sd, s, PanelDataset(std::move(blocks), y, std::move(months))};
}

void write_simulation(const std::filesystem::path& dir, const SimulatedPanel& sim) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> labels;
  std::vector<VariableSpec> specs;
  for (int j = 0; j < sim.data.n(); ++j) {
    labels.push_back(sim.data.variable(j).label());
    specs.push_back(sim.data.variable(j));
  }
  write_wide_csv(dir / "data.csv", labels, sim.data.time_index().front(), sim.data.series());
  write_variable_specs(dir / "spec.csv", specs);

  const StructuralDraw& s = sim.structural;
  nlohmann::json truth;
  truth["labels"] = labels;
  truth["lags"] = sim.truth.lags();
  truth["phi"] = matrix_json(sim.truth.phi);
  truth["u"] = matrix_json(sim.truth.u);
  truth["h"] = std::vector<double>(sim.truth.h.data(), sim.truth.h.data() + sim.truth.h.size());
  truth["phi_s"] = matrix_json(s.phi_s);
  truth["l"] = matrix_json(s.l);
  write_file_atomic(dir / "truth.json", truth.dump(2) + "\n");
}

} // namespace irga::io
