#include <irga/io/csv.hpp>

#include <irga/error.hpp>

#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace irga::io {

std::string format_double(double x) {
  if (std::isnan(x)) {
    return "NA";
  }
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

double parse_double(const std::string& cell) {
  std::size_t b = cell.find_first_not_of(" \t\r\"");
  std::size_t e = cell.find_last_not_of(" \t\r\"");
  if (b == std::string::npos) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  const std::string s = cell.substr(b, e - b + 1);
  if (s == "NA" || s == "NaN" || s == "nan" || s == "null" || s == ".") {
    return std::numeric_limits<double>::quiet_NaN();
  }
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ValidationError("not a number: '" + s + "'");
  }
  return value;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  cells.push_back(std::move(cur));
  return cells;
}

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) {
      return static_cast<int>(i);
    }
  }
  return -1;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open " + path.string());
  }
  CsvTable t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") {
      continue;
    }
    auto cells = split_csv_line(line);
    if (first) {
      t.header = std::move(cells);
      first = false;
    } else {
      t.rows.push_back(std::move(cells));
    }
  }
  if (first) {
    throw ValidationError(path.string() + " is empty");
  }
  return t;
}

std::vector<VariableSpec> read_variable_specs(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const int code = t.column("code");
  const int country = t.column("country");
  const int transform = t.column("transform");
  const int name = t.column("name");
  if (code < 0 || country < 0 || transform < 0) {
    throw ValidationError(path.string() + ": variable spec needs columns code,country,transform");
  }
  std::vector<VariableSpec> specs;
  for (const auto& row : t.rows) {
    VariableSpec v;
    v.code = row.at(static_cast<std::size_t>(code));
    v.country = row.at(static_cast<std::size_t>(country));
    int tc = -1;
    const auto& cell = row.at(static_cast<std::size_t>(transform));
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), tc);
    if (ec != std::errc()) {
      throw ValidationError(path.string() + ": bad transform code '" + cell + "'");
    }
    v.transform = transform_from_code(tc);
    v.name = name >= 0 && static_cast<std::size_t>(name) < row.size() ? row[static_cast<std::size_t>(name)] : v.code;
    specs.push_back(std::move(v));
  }
  return specs;
}

std::vector<RawSeries> read_wide_csv(const std::filesystem::path& path, const std::vector<VariableSpec>& specs) {
  const CsvTable t = read_csv(path);
  if (t.rows.empty()) {
    throw IngestionError(path.string() + " has no observations");
  }
  std::vector<YearMonth> months;
  months.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    months.push_back(YearMonth::parse(row.at(0)));
  }
  YearMonth start = months.front();
  YearMonth end = months.front();
  for (const auto& m : months) {
    start = std::min(start, m);
    end = std::max(end, m);
  }
  const int length = end - start + 1;

  std::vector<RawSeries> out;
  for (const auto& spec : specs) {
    const int col = t.column(spec.label());
    if (col < 0) {
      throw IngestionError(path.string() + ": no column " + spec.label());
    }
    RawSeries s{spec, start, std::vector<double>(static_cast<std::size_t>(length), std::numeric_limits<double>::quiet_NaN())};
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const auto& row = t.rows[r];
      if (static_cast<std::size_t>(col) < row.size()) {
        s.values[static_cast<std::size_t>(months[r] - start)] = parse_double(row[static_cast<std::size_t>(col)]);
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

AlignResult load_panel(const std::filesystem::path& data_csv, const std::filesystem::path& spec_csv) {
  const auto specs = read_variable_specs(spec_csv);
  return align_panel(read_wide_csv(data_csv, specs));
}

void write_wide_csv(const std::filesystem::path& path, const std::vector<std::string>& labels, YearMonth start,
                    const Eigen::MatrixXd& values) {
  std::ostringstream out;
  out << "date";
  for (const auto& l : labels) {
    out << ',' << l;
  }
  out << '\n';
  for (Eigen::Index t = 0; t < values.rows(); ++t) {
    out << (start + static_cast<int>(t)).str();
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      out << ',' << format_double(values(t, c));
    }
    out << '\n';
  }
  write_file_atomic(path, out.str());
}

void write_variable_specs(const std::filesystem::path& path, const std::vector<VariableSpec>& specs) {
  std::ostringstream out;
  out << "code,country,transform,name\n";
  for (const auto& s : specs) {
    out << s.code << ',' << s.country << ',' << static_cast<int>(s.transform) << ',' << s.name << '\n';
  }
  write_file_atomic(path, out.str());
}

void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m, const std::vector<std::string>& header) {
  std::ostringstream out;
  if (!header.empty()) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      out << (i ? "," : "") << header[i];
    }
    out << '\n';
  }
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      out << (c ? "," : "") << format_double(m(r, c));
    }
    out << '\n';
  }
  write_file_atomic(path, out.str());
}

Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path, bool has_header) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open " + path.string());
  }
  std::vector<std::vector<double>> rows;
  std::string line;
  bool skip = has_header;
  while (std::getline(in, line)) {
    if (skip) {
      skip = false;
      continue;
    }
    if (line.empty()) {
      continue;
    }
    std::vector<double> row;
    for (const auto& cell : split_csv_line(line)) {
      row.push_back(parse_double(cell));
    }
    rows.push_back(std::move(row));
  }
  const Eigen::Index cols = rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size());
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (static_cast<Eigen::Index>(rows[r].size()) != cols) {
      throw ValidationError(path.string() + ": ragged matrix row " + std::to_string(r));
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), c) = rows[r][static_cast<std::size_t>(c)];
    }
  }
  return m;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error("cannot write " + tmp.string());
    }
    out << contents;
    if (!out) {
      throw Error("write failed for " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ValidationError("cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

} // namespace irga::io
