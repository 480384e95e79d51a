#include <irga/io/fetch.hpp>

#include <irga/error.hpp>
#include <irga/io/csv.hpp>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <chrono>
#include <limits>
#include <sstream>
#include <thread>

namespace irga::io {

namespace fs = std::filesystem;

namespace {

struct Endpoint {
  std::string origin; // scheme://host[:port]
  std::string prefix; // path prefix without trailing slash
};

Endpoint split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ValidationError("fetch base URL '" + url + "' has no scheme");
  }
  const auto path_begin = url.find('/', scheme_end + 3);
  Endpoint e;
  e.origin = url.substr(0, path_begin);
  e.prefix = path_begin == std::string::npos ? "" : url.substr(path_begin);
  while (!e.prefix.empty() && e.prefix.back() == '/') {
    e.prefix.pop_back();
  }
  return e;
}

std::string cache_name(const FetchSeries& s) {
  std::string name = s.provider + "__" + s.dataset + "__" + s.series;
  for (char& c : name) {
    if (c == '/' || c == '\\' || c == ':') {
      c = '_';
    }
  }
  return name + ".json";
}

std::string http_get(const Endpoint& ep, const std::string& path, const FetchOptions& opt, int& requests) {
  httplib::Client client(ep.origin);
  client.set_follow_location(true);
  client.set_connection_timeout(10);
  client.set_read_timeout(30);
  std::string last_error = "no attempt made";
  int delay = opt.backoff_ms;
  for (int attempt = 0; attempt < std::max(1, opt.retries); ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(delay));
      delay *= 2;
    }
    ++requests;
    auto res = client.Get(ep.prefix + path);
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 200) {
      return res->body;
    }
    last_error = "HTTP " + std::to_string(res->status);
    if (res->status >= 400 && res->status < 500 && res->status != 429) {
      break; // unknown series and similar: retrying will not help
    }
  }
  throw FetchError(last_error);
}

} // namespace

std::vector<FetchSeries> read_fetch_spec(const fs::path& path) {
  const CsvTable t = read_csv(path);
  const int column = t.column("column");
  const int provider = t.column("provider");
  const int dataset = t.column("dataset");
  const int series = t.column("series");
  if (column < 0 || provider < 0 || dataset < 0 || series < 0) {
    throw ValidationError(path.string() + ": fetch spec needs columns column,provider,dataset,series");
  }
  std::vector<FetchSeries> out;
  for (const auto& r : t.rows) {
    out.push_back({r.at(static_cast<std::size_t>(column)), r.at(static_cast<std::size_t>(provider)),
                   r.at(static_cast<std::size_t>(dataset)), r.at(static_cast<std::size_t>(series))});
  }
  return out;
}

FetchedSeries parse_dbnomics_series(const std::string& body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw FetchError(std::string("malformed JSON: ") + e.what());
  }
  const auto& docs = j.contains("series") ? j["series"]["docs"] : nlohmann::json();
  if (!docs.is_array() || docs.empty()) {
    throw FetchError("response holds no series");
  }
  const auto& doc = docs.front();
  const auto& periods = doc.at("period");
  const auto& values = doc.at("value");
  if (periods.size() != values.size() || periods.empty()) {
    throw FetchError("period and value arrays differ in length");
  }
  FetchedSeries out;
  out.start = YearMonth::parse(periods.front().get<std::string>());
  const YearMonth last = YearMonth::parse(periods.back().get<std::string>());
  out.values.assign(static_cast<std::size_t>(last - out.start + 1), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < periods.size(); ++i) {
    const YearMonth m = YearMonth::parse(periods[i].get<std::string>());
    const auto& v = values[i];
    out.values[static_cast<std::size_t>(m - out.start)] =
        v.is_number() ? v.get<double>() : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

FetchReport fetch_dbnomics(const std::vector<FetchSeries>& spec, const FetchOptions& options, const fs::path& data_csv) {
  const Endpoint ep = split_url(options.base_url);
  FetchReport report;
  std::vector<std::pair<std::string, FetchedSeries>> got;

  for (const auto& s : spec) {
    try {
      std::string body;
      const fs::path cached = options.cache_dir.empty() ? fs::path() : options.cache_dir / cache_name(s);
      fs::path sidecar = cached;
      sidecar += ".sha256";
      if (!cached.empty() && fs::exists(cached) && fs::exists(sidecar)) {
        std::string candidate = read_file(cached);
        if (sha256_hex(candidate) == read_file(sidecar)) {
          body = std::move(candidate);
          ++report.cache_hits;
        }
      }
      if (body.empty()) {
        body = http_get(ep, "/series/" + s.provider + "/" + s.dataset + "/" + s.series + "?observations=1&format=json",
                        options, report.network_requests);
        if (!cached.empty()) {
          write_file_atomic(cached, body);
          write_file_atomic(sidecar, sha256_hex(body));
        }
      }
      got.emplace_back(s.column, parse_dbnomics_series(body));
      report.fetched.push_back(s.column);
    } catch (const Error& e) {
      report.failures.push_back({s, e.what()});
    }
  }

  std::ostringstream errors;
  errors << "column,provider,dataset,series,error\n";
  for (const auto& f : report.failures) {
    std::string msg = f.message;
    for (char& c : msg) {
      if (c == ',' || c == '\n') {
        c = ' ';
      }
    }
    errors << f.series.column << ',' << f.series.provider << ',' << f.series.dataset << ',' << f.series.series << ','
           << msg << '\n';
  }
  const fs::path errors_path = data_csv.has_parent_path() ? data_csv.parent_path() / "fetch_errors.csv" : fs::path("fetch_errors.csv");
  write_file_atomic(errors_path, errors.str());

  if (!got.empty()) {
    int start = std::numeric_limits<int>::max();
    int end = std::numeric_limits<int>::min();
    for (const auto& [col, fsr] : got) {
      start = std::min(start, fsr.start.serial());
      end = std::max(end, fsr.start.serial() + static_cast<int>(fsr.values.size()) - 1);
    }
    Eigen::MatrixXd values = Eigen::MatrixXd::Constant(end - start + 1, static_cast<Eigen::Index>(got.size()),
                                                       std::numeric_limits<double>::quiet_NaN());
    std::vector<std::string> labels;
    for (std::size_t c = 0; c < got.size(); ++c) {
      labels.push_back(got[c].first);
      const auto& fsr = got[c].second;
      for (std::size_t t = 0; t < fsr.values.size(); ++t) {
        values(fsr.start.serial() - start + static_cast<int>(t), static_cast<Eigen::Index>(c)) = fsr.values[t];
      }
    }
    write_wide_csv(data_csv, labels, YearMonth::from_serial(start), values);
  }
  return report;
}

} // namespace irga::io
