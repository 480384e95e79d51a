#include <irga/error.hpp>
#include <irga/io/commands.hpp>
#include <irga/io/config.hpp>

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace {

struct Flags {
  std::string config;
  std::optional<long> seed;
  std::optional<long> threads;
  std::string out;
};

void add_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "configuration file (key = value text or JSON)")->required();
  sub->add_option("--seed", f.seed, "root seed; overrides the config key seed");
  sub->add_option("--threads", f.threads, "worker threads; overrides the config key threads");
  sub->add_option("--out", f.out, "output directory; overrides the config key output.dir");
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian panel VAR estimation with rotated Gaussian approximation"};
  app.require_subcommand(1);
  Flags flags;
  const std::pair<const char*, irga::io::Command> subcommands[] = {
      {"fetch", irga::io::Command::Fetch},
      {"simulate", irga::io::Command::Simulate},
      {"estimate", irga::io::Command::Estimate},
      {"forecast", irga::io::Command::Forecast},
      {"spillover", irga::io::Command::Spillover}};
  const char* help[] = {"download series from DBnomics into a wide CSV", "simulate a sparse panel VAR with known truth",
                        "estimate the panel VAR and save posterior draws",
                        "recursive out-of-sample forecasts and scores", "spillover indices over expanding windows"};
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < std::size(subcommands); ++i) {
    subs.push_back(app.add_subcommand(subcommands[i].first, help[i]));
    add_flags(subs.back(), flags);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    irga::io::Config cfg = irga::io::Config::load(flags.config);
    cfg.apply_env_overrides();
    if (flags.seed) {
      cfg.set("seed", std::to_string(*flags.seed));
    }
    if (flags.threads) {
      cfg.set("threads", std::to_string(*flags.threads));
    }
    if (!flags.out.empty()) {
      cfg.set("output.dir", std::filesystem::absolute(flags.out).string());
    }
    const auto base_dir = std::filesystem::absolute(flags.config).parent_path();
    for (std::size_t i = 0; i < subs.size(); ++i) {
      if (subs[i]->parsed()) {
        irga::io::run_command(subcommands[i].second, cfg, base_dir, std::cerr);
      }
    }
  } catch (const irga::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 1;
  } catch (const irga::IngestionError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 1;
  } catch (const irga::DomainError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
