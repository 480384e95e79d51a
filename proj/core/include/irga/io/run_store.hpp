#pragma once

#include <irga/pvar.hpp>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>

namespace irga::io {

inline constexpr const char* kToolVersion = "0.1.0";

// Run directory layout:
//   manifest.json                   config echo, seeds, fingerprint, per-equation diagnostics
//   posterior/meta.json             n, lags, country map
//   posterior/eq_<v>.json           column map, VAMP mean/variance/sigma2, diagnostics
//   posterior/eq_<v>_a.csv          own-lag draws (n_save x k)
//   posterior/eq_<v>_scales.csv     psi2 draws then lambda2 (n_save x (k+1))
void save_posterior(const std::filesystem::path& run_dir, const PvarPosterior& post);
PvarPosterior load_posterior(const std::filesystem::path& run_dir);
bool has_posterior(const std::filesystem::path& run_dir);

// SHA-256 over the data file followed by the variable-spec file.
std::string data_fingerprint(const std::filesystem::path& data_csv, const std::filesystem::path& spec_csv);

nlohmann::json equation_summary(const PvarPosterior& post);

// Written atomically; "timings" is the only key that differs between
// otherwise identical runs.
void write_manifest(const std::filesystem::path& run_dir, const nlohmann::json& manifest);
nlohmann::json read_manifest(const std::filesystem::path& run_dir);

} // namespace irga::io
