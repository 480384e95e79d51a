#include <doctest.h>

#include <irga/io/csv.hpp>

#include "test_support.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

using irga::testing::scratch_dir;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = -1;
  std::string err;
};

// Runs the CLI with the given arguments and optional environment prefix.
RunResult irga_cli(const std::string& args, const fs::path& dir, const std::string& env = "") {
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = env + (env.empty() ? "" : " ") + "\"" + IRGA_CLI_PATH + "\" " + args + " 2> \"" +
                          err.string() + "\" > /dev/null";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = fs::exists(err) ? irga::io::read_file(err) : "";
  return r;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string read(const fs::path& p) { return irga::io::read_file(p); }

const char* kRunConfig = R"(data.csv = sim/data.csv
data.spec = sim/spec.csv
output.dir = run
model.lags = 1
mcmc.burn = 100
mcmc.save = 150
forecast.horizon = 2
forecast.first_origin = 2009-08
forecast.rw_draws = 200
spillover.first_window = 2009-06
spillover.step = 3
spillover.draws = 50
)";

// Simulated data shared by the tests below.
fs::path prepared_dir(const std::string& name) {
  const fs::path dir = scratch_dir("cli_" + name);
  write(dir / "sim.cfg", "output.dir = sim\nseed = 7\nsimulate.countries = 3\nsimulate.vars = 2\nsimulate.T = 120\n");
  const RunResult r = irga_cli("simulate --config " + (dir / "sim.cfg").string(), dir);
  REQUIRE(r.code == 0);
  write(dir / "run.cfg", kRunConfig);
  return dir;
}

} // namespace

TEST_CASE("usage errors exit with 1, help with 0") {
  const fs::path dir = scratch_dir("cli_usage");
  CHECK(irga_cli("", dir).code == 1);
  CHECK(irga_cli("frobnicate --config x", dir).code == 1);
  CHECK(irga_cli("estimate", dir).code == 1);
  CHECK(irga_cli("--help", dir).code == 0);
  CHECK(irga_cli("estimate --config " + (dir / "absent.cfg").string(), dir).code == 1);
}

TEST_CASE("simulate writes data, spec and truth") {
  const fs::path dir = prepared_dir("simulate");
  for (const char* f : {"data.csv", "spec.csv", "truth.json", "manifest.json"}) {
    CHECK(fs::exists(dir / "sim" / f));
  }
  const std::string first = read(dir / "sim" / "data.csv");
  CHECK(irga_cli("simulate --config " + (dir / "sim.cfg").string(), dir).code == 0);
  CHECK(read(dir / "sim" / "data.csv") == first);
  CHECK(irga_cli("simulate --seed 8 --config " + (dir / "sim.cfg").string(), dir).code == 0);
  CHECK(read(dir / "sim" / "data.csv") != first);
}

TEST_CASE("validation errors name the key and exit with 1") {
  const fs::path dir = prepared_dir("validation");
  std::string text = kRunConfig;
  text.replace(text.find("model.lags = 1\n"), 15, "");
  write(dir / "bad.cfg", text);
  RunResult r = irga_cli("estimate --config " + (dir / "bad.cfg").string(), dir);
  CHECK(r.code == 1);
  CHECK(r.err.find("model.lags") != std::string::npos);

  r = irga_cli("estimate --config " + (dir / "run.cfg").string(), dir, "IRGA_MODEL_LAGS=0");
  CHECK(r.code == 1);
  CHECK(r.err.find("model.lags") != std::string::npos);

  r = irga_cli("estimate --threads 0 --config " + (dir / "run.cfg").string(), dir);
  CHECK(r.code == 1);
  CHECK(r.err.find("threads") != std::string::npos);
}

TEST_CASE("compute failures exit with 2") {
  const fs::path dir = scratch_dir("cli_compute");
  // Two identical series in one country make the own-lag design singular.
  std::ostringstream data;
  data << "date,A.X,A.Y,B.X\n";
  irga::Rng rng(3);
  double level = 0.0;
  for (int t = 0; t < 60; ++t) {
    level += irga::draw_std_normal(rng, 1)(0);
    data << (irga::YearMonth{2000, 1} + t).str() << ',' << level << ',' << level << ','
         << irga::draw_std_normal(rng, 1)(0) << '\n';
  }
  write(dir / "data.csv", data.str());
  write(dir / "spec.csv", "code,country,transform\nX,A,0\nY,A,0\nX,B,0\n");
  write(dir / "run.cfg", "data.csv = data.csv\ndata.spec = spec.csv\noutput.dir = run\nmodel.lags = 1\n"
                         "mcmc.burn = 10\nmcmc.save = 10\n");
  const RunResult r = irga_cli("estimate --config " + (dir / "run.cfg").string(), dir);
  CHECK(r.code == 2);
  CHECK(r.err.find("equation (A,") != std::string::npos);
}

TEST_CASE("estimate, forecast with reused draws, spillover") {
  const fs::path dir = prepared_dir("pipeline");
  const std::string cfg = (dir / "run.cfg").string();
  REQUIRE(irga_cli("estimate --threads 1 --config " + cfg, dir).code == 0);
  CHECK(fs::exists(dir / "run" / "posterior" / "meta.json"));
  auto manifest = nlohmann::json::parse(read(dir / "run" / "manifest.json"));
  CHECK(manifest["command"] == "estimate");
  CHECK(manifest["equations"].size() == 6);

  REQUIRE(irga_cli("forecast --threads 1 --config " + cfg, dir).code == 0);
  manifest = nlohmann::json::parse(read(dir / "run" / "manifest.json"));
  CHECK(manifest["reused_posterior"] == true);
  for (const char* f : {"forecast.csv", "scores.csv", "table2.csv", "cumlps_1.csv", "cumlps_2.csv"}) {
    CHECK(fs::exists(dir / "run" / f));
  }
  const auto scores = irga::io::read_csv(dir / "run" / "scores.csv");
  CHECK(scores.header == std::vector<std::string>{"origin", "country", "variable", "horizon", "model", "rmse", "lps"});
  CHECK(scores.rows.size() > 0);
  const auto table = irga::io::read_csv(dir / "run" / "table2.csv");
  for (const auto& row : table.rows) {
    if (row[static_cast<std::size_t>(table.column("model"))] == "rw") {
      CHECK(irga::io::parse_double(row[static_cast<std::size_t>(table.column("relative_rmse"))]) == 1.0);
      CHECK(irga::io::parse_double(row[static_cast<std::size_t>(table.column("relative_lps"))]) == 0.0);
    }
  }

  REQUIRE(irga_cli("spillover --threads 1 --config " + cfg, dir).code == 0);
  for (const char* f : {"dy_total.csv", "dy_by_variable.csv", "dy_by_country.csv"}) {
    CHECK(fs::exists(dir / "run" / f));
  }
  const auto total = irga::io::read_csv(dir / "run" / "dy_total.csv");
  CHECK(total.header == std::vector<std::string>{"window_end", "median", "q16", "q84", "q05", "q95", "excluded"});
  CHECK(total.rows.size() == 3); // 2009-06, 2009-09, 2009-12
  for (const auto& row : total.rows) {
    const double q05 = irga::io::parse_double(row[4]);
    const double q16 = irga::io::parse_double(row[2]);
    const double med = irga::io::parse_double(row[1]);
    const double q84 = irga::io::parse_double(row[3]);
    const double q95 = irga::io::parse_double(row[5]);
    CHECK(q05 <= q16);
    CHECK(q16 <= med);
    CHECK(med <= q84);
    CHECK(q84 <= q95);
  }

  // A second, independent run with the same seed gives the same scores.
  const fs::path again = dir / "again";
  REQUIRE(irga_cli("forecast --threads 1 --out " + again.string() + " --config " + cfg, dir).code == 0);
  manifest = nlohmann::json::parse(read(again / "manifest.json"));
  CHECK(manifest["reused_posterior"] == false);
  CHECK(read(again / "scores.csv") == read(dir / "run" / "scores.csv"));
  CHECK(read(again / "table2.csv") == read(dir / "run" / "table2.csv"));
  CHECK(read(again / "cumlps_1.csv") == read(dir / "run" / "cumlps_1.csv"));
  CHECK(read(again / "forecast.csv") == read(dir / "run" / "forecast.csv"));
}

TEST_CASE("fetch records unknown series and exits nonzero") {
  httplib::Server server;
  server.Get(R"(/api/series/([^/]+)/([^/]+)/([^/]+))", [](const httplib::Request& req, httplib::Response& res) {
    if (std::string(req.matches[3]) != "IP") {
      res.status = 404;
      return;
    }
    res.set_content(R"({"series":{"docs":[{"period":["2000-01","2000-02"],"value":[1.5,2.5]}]}})", "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  const fs::path dir = scratch_dir("cli_fetch");
  write(dir / "series.csv", "column,provider,dataset,series\nAT.IP,P,D,IP\nAT.BAD,P,D,BAD\n");
  write(dir / "fetch.cfg", "output.dir = raw\nfetch.spec = series.csv\nfetch.backoff_ms = 1\nfetch.base_url = http://127.0.0.1:" +
                               std::to_string(port) + "/api\n");
  const RunResult r = irga_cli("fetch --config " + (dir / "fetch.cfg").string(), dir);
  server.stop();
  t.join();
  CHECK(r.code != 0);
  const auto errors = irga::io::read_csv(dir / "raw" / "fetch_errors.csv");
  REQUIRE(errors.rows.size() == 1);
  CHECK(errors.rows[0][0] == "AT.BAD");
  CHECK(read(dir / "raw" / "data.csv") == "date,AT.IP\n2000-01,1.5\n2000-02,2.5\n");
}
