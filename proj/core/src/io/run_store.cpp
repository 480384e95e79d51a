#include <irga/io/run_store.hpp>

#include <irga/error.hpp>
#include <irga/io/csv.hpp>

namespace irga::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json refs_to_json(const std::vector<RegressorRef>& refs) {
  json out = json::array();
  for (const auto& r : refs) {
    out.push_back({r.variable, r.lag});
  }
  return out;
}

std::vector<RegressorRef> refs_from_json(const json& j) {
  std::vector<RegressorRef> out;
  for (const auto& r : j) {
    out.push_back({r.at(0).get<int>(), r.at(1).get<int>()});
  }
  return out;
}

// Doubles go through their shortest round-trip text so reloads are exact.
json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out.push_back(format_double(v[i]));
  }
  return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = parse_double(j[i].get<std::string>());
  }
  return v;
}

std::string eq_stem(int variable) { return "eq_" + std::to_string(variable); }

} // namespace

void save_posterior(const fs::path& run_dir, const PvarPosterior& post) {
  const fs::path dir = run_dir / "posterior";
  fs::create_directories(dir);
  json meta{{"n", post.n}, {"lags", post.lags}, {"country_of", post.country_of}};
  write_file_atomic(dir / "meta.json", meta.dump(2));
  for (const auto& eq : post.equations) {
    json classes = json::array();
    for (auto c : eq.other_classes) {
      classes.push_back(c == ColumnClass::Contemporaneous ? "U" : "B");
    }
    json j{{"country", eq.country},
           {"equation", eq.equation},
           {"variable", eq.variable},
           {"own_columns", refs_to_json(eq.own_columns)},
           {"other_columns", refs_to_json(eq.other_columns)},
           {"other_classes", classes},
           {"approx",
            {{"mean", vector_to_json(eq.approx.mean)},
             {"var_scalar", format_double(eq.approx.var_scalar)},
             {"sigma2_hat", format_double(eq.approx.sigma2_hat)},
             {"converged", eq.approx.converged},
             {"iterations", eq.approx.iterations},
             {"clamp_count", eq.approx.clamp_count}}},
           {"ess", vector_to_json(eq.chain.ess)}};
    write_file_atomic(dir / (eq_stem(eq.variable) + ".json"), j.dump(2));
    write_matrix_csv(dir / (eq_stem(eq.variable) + "_a.csv"), eq.chain.a_draws);
    Eigen::MatrixXd scales(eq.chain.psi2_draws.rows(), eq.chain.psi2_draws.cols() + 1);
    scales << eq.chain.psi2_draws, eq.chain.lambda2_draws;
    write_matrix_csv(dir / (eq_stem(eq.variable) + "_scales.csv"), scales);
  }
}

bool has_posterior(const fs::path& run_dir) { return fs::exists(run_dir / "posterior" / "meta.json"); }

PvarPosterior load_posterior(const fs::path& run_dir) {
  const fs::path dir = run_dir / "posterior";
  if (!has_posterior(run_dir)) {
    throw ValidationError("no persisted posterior under " + run_dir.string());
  }
  const json meta = json::parse(read_file(dir / "meta.json"));
  PvarPosterior post;
  post.n = meta.at("n").get<int>();
  post.lags = meta.at("lags").get<int>();
  post.country_of = meta.at("country_of").get<std::vector<int>>();
  for (int v = 0; v < post.n; ++v) {
    const json j = json::parse(read_file(dir / (eq_stem(v) + ".json")));
    EquationPosterior eq;
    eq.country = j.at("country").get<int>();
    eq.equation = j.at("equation").get<int>();
    eq.variable = j.at("variable").get<int>();
    eq.own_columns = refs_from_json(j.at("own_columns"));
    eq.other_columns = refs_from_json(j.at("other_columns"));
    for (const auto& c : j.at("other_classes")) {
      eq.other_classes.push_back(c.get<std::string>() == "U" ? ColumnClass::Contemporaneous : ColumnClass::Dynamic);
    }
    const json& a = j.at("approx");
    eq.approx.mean = vector_from_json(a.at("mean"));
    eq.approx.var_scalar = parse_double(a.at("var_scalar").get<std::string>());
    eq.approx.sigma2_hat = parse_double(a.at("sigma2_hat").get<std::string>());
    eq.approx.converged = a.at("converged").get<bool>();
    eq.approx.iterations = a.at("iterations").get<int>();
    eq.approx.clamp_count = a.at("clamp_count").get<std::size_t>();
    eq.chain.ess = vector_from_json(j.at("ess"));
    eq.chain.a_draws = read_matrix_csv(dir / (eq_stem(v) + "_a.csv"), false);
    const Eigen::MatrixXd scales = read_matrix_csv(dir / (eq_stem(v) + "_scales.csv"), false);
    eq.chain.psi2_draws = scales.leftCols(scales.cols() - 1);
    eq.chain.lambda2_draws = scales.col(scales.cols() - 1);
    post.equations.push_back(std::move(eq));
  }
  return post;
}

std::string data_fingerprint(const fs::path& data_csv, const fs::path& spec_csv) {
  return sha256_hex(read_file(data_csv) + read_file(spec_csv));
}

json equation_summary(const PvarPosterior& post) {
  json out = json::array();
  for (const auto& eq : post.equations) {
    out.push_back({{"variable", eq.variable},
                   {"country", eq.country},
                   {"equation", eq.equation},
                   {"k", eq.k()},
                   {"K", eq.K()},
                   {"vamp_converged", eq.approx.converged},
                   {"vamp_iterations", eq.approx.iterations},
                   {"vamp_clamps", eq.approx.clamp_count},
                   {"sigma2_hat", eq.approx.sigma2_hat}});
  }
  return out;
}

void write_manifest(const fs::path& run_dir, const json& manifest) {
  write_file_atomic(run_dir / "manifest.json", manifest.dump(2) + "\n");
}

json read_manifest(const fs::path& run_dir) { return json::parse(read_file(run_dir / "manifest.json")); }

} // namespace irga::io
