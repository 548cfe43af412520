#include "armle/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "armle/error.hpp"

namespace armle::io {

std::string format_double(double value) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.emplace_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

double parse_double(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || result.ec != std::errc() || result.ptr != text.data() + text.size()) {
    throw Error(ErrorKind::Parse, "not a number: '" + std::string(text) + "'");
  }
  if (!std::isfinite(value)) {
    throw Error(ErrorKind::Parse, "non-finite number: '" + std::string(text) + "'");
  }
  return value;
}

Eigen::VectorXd parse_vector(std::string_view text) {
  const auto parts = split(text, ',');
  Eigen::VectorXd v(static_cast<Eigen::Index>(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = parse_double(parts[i]);
  }
  return v;
}

CovarianceKernel kernel_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("family") || !j["family"].is_string()) {
    throw Error(ErrorKind::Parse, "kernel must be an object with a string 'family'");
  }
  const auto family = j["family"].get<std::string>();
  const Json params = j.value("params", Json::object());
  auto number = [&](const char* key) {
    if (!params.is_object() || !params.contains(key) || !params[key].is_number()) {
      throw Error(ErrorKind::Parse, "kernel '" + family + "' needs numeric params." + key);
    }
    return params[key].get<double>();
  };
  if (family == "white") return CovarianceKernel::white();
  if (family == "ar1" || family == "ar1corr") return CovarianceKernel::ar1(number("a"));
  if (family == "fgn") return CovarianceKernel::fgn(number("H"));
  throw Error(ErrorKind::Parse, "unknown kernel family '" + family + "'");
}

Json kernel_to_json(const CovarianceKernel& kernel) {
  Json j{{"family", kernel.name()}, {"params", Json::object()}};
  if (kernel.family() == KernelFamily::Ar1Corr) j["params"]["a"] = kernel.param();
  if (kernel.family() == KernelFamily::Fgn) j["params"]["H"] = kernel.param();
  return j;
}

CovarianceKernel parse_kernel(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '{') {
    Json j;
    try {
      j = Json::parse(text);
    } catch (const Json::parse_error& e) {
      throw Error(ErrorKind::Parse, std::string("bad kernel JSON: ") + e.what());
    }
    return kernel_from_json(j);
  }
  const auto colon = text.find(':');
  const std::string family(text.substr(0, colon));
  if (colon == std::string_view::npos) {
    if (family == "white") return CovarianceKernel::white();
    throw Error(ErrorKind::Parse, "kernel '" + family + "' needs a parameter, e.g. ar1:0.5");
  }
  const double param = parse_double(text.substr(colon + 1));
  if (family == "ar1" || family == "ar1corr") return CovarianceKernel::ar1(param);
  if (family == "fgn") return CovarianceKernel::fgn(param);
  throw Error(ErrorKind::Parse, "unknown kernel family '" + family + "'");
}

double finite(double value, std::string_view what) {
  if (!std::isfinite(value)) {
    throw Error(ErrorKind::NonFinite, "non-finite value in " + std::string(what));
  }
  return value;
}

Json to_json(const Eigen::VectorXd& v) {
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(finite(v(i), "vector output"));
  return arr;
}

Json to_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(finite(m(i, j), "matrix output"));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw Error(ErrorKind::Parse, "CSV has no column '" + std::string(name) + "'");
}

std::vector<double> CsvTable::numeric_column(std::string_view name) const {
  const std::size_t c = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    try {
      out.push_back(parse_double(rows[r][c]));
    } catch (const Error&) {
      throw Error(ErrorKind::Parse, "CSV row " + std::to_string(r + 2) + ", column '" +
                                        std::string(name) + "': not a finite number");
    }
  }
  return out;
}

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  bool have_header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split(line, ',');
    if (!have_header) {
      if (!fields.empty() && fields[0].size() >= 3 &&
          fields[0].compare(0, 3, "\xEF\xBB\xBF") == 0) {
        fields[0].erase(0, 3);
      }
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw Error(ErrorKind::Parse, "CSV line " + std::to_string(line_no) + " has " +
                                        std::to_string(fields.size()) + " fields, expected " +
                                        std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  if (!have_header) throw Error(ErrorKind::Parse, "CSV input is empty");
  return table;
}

CsvTable read_csv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  return read_csv(in);
}

std::vector<double> read_series(const std::filesystem::path& path, std::string_view column) {
  return read_csv_file(path).numeric_column(column);
}

void write_csv(std::ostream& out, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out << (i ? "," : "") << (std::isfinite(row[i]) ? format_double(row[i]) : std::string());
    }
    out << '\n';
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw Error(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

}  // namespace armle::io
