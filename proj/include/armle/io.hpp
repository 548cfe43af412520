#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "armle/covariance.hpp"

namespace armle::io {

using Json = nlohmann::json;

/// Shortest decimal that round-trips, independent of the C locale.
std::string format_double(double value);
double parse_double(std::string_view text);

/// "0.5,0.3" -> (0.5, 0.3).
Eigen::VectorXd parse_vector(std::string_view text);

/// {"family": "white" | "ar1" | "fgn", "params": {"a": ..} | {"H": ..}}
CovarianceKernel kernel_from_json(const Json& j);
Json kernel_to_json(const CovarianceKernel& kernel);
/// Inline JSON object, or the short forms "white", "ar1:0.5", "fgn:0.7".
CovarianceKernel parse_kernel(std::string_view text);

/// Throws NonFinite for NaN or infinite entries.
Json to_json(const Eigen::VectorXd& v);
/// Row-major nested arrays.
Json to_json(const Eigen::MatrixXd& m);
double finite(double value, std::string_view what);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;
  std::vector<double> numeric_column(std::string_view name) const;
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::filesystem::path& path);
/// The named column of a CSV file.
std::vector<double> read_series(const std::filesystem::path& path, std::string_view column = "x");

void write_csv(std::ostream& out, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace armle::io
