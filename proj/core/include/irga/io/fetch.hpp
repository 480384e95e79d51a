#pragma once

#include <irga/panel_data.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace irga::io {

// One series to download: the DBnomics provider/dataset/series triple and
// the COUNTRY.CODE column it becomes in the wide data file.
struct FetchSeries {
  std::string column;
  std::string provider;
  std::string dataset;
  std::string series;
};

struct FetchOptions {
  std::string base_url = "https://api.db.nomics.world/v22";
  std::filesystem::path cache_dir;
  int retries = 3;
  int backoff_ms = 500; // doubled after each failed attempt
};

struct FetchFailure {
  FetchSeries series;
  std::string message;
};

struct FetchReport {
  std::vector<std::string> fetched;
  std::vector<FetchFailure> failures;
  int cache_hits = 0;
  int network_requests = 0;
};

// CSV with columns column,provider,dataset,series.
std::vector<FetchSeries> read_fetch_spec(const std::filesystem::path& path);

// Monthly observations from a DBnomics series response ("NA" becomes NaN).
struct FetchedSeries {
  YearMonth start;
  std::vector<double> values;
};
FetchedSeries parse_dbnomics_series(const std::string& body);

// Downloads (or reads from cache) every series, writes the wide CSV of the
// successful ones to data_csv and a fetch_errors.csv next to it.
FetchReport fetch_dbnomics(const std::vector<FetchSeries>& spec, const FetchOptions& options,
                           const std::filesystem::path& data_csv);

} // namespace irga::io
