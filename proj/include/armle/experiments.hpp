#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "armle/covariance.hpp"
#include "armle/io.hpp"

namespace armle {

enum class ExperimentKind { Consistency, Clt, Qsl, Lil, LanRemainder, TestSize, TestPower };

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(std::string_view name);

/// Pass bands for the experiment checks.
struct Tolerances {
  double slope_lower = -0.65;
  double slope_upper = -0.35;
  double clt_variance_rel = 0.15;
  double ks_level = 0.01;
  double qsl_ratio_lower = 0.5;
  double qsl_ratio_upper = 2.0;
  double lil_envelope_factor = 2.0;
  double lil_majority = 0.5;
  double lan_median = 0.05;
  double size_band = 0.015;
  double power_band = 0.05;
  double max_failure_rate = 0.01;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Consistency;
  Eigen::VectorXd theta;
  CovarianceKernel kernel;
  std::vector<std::size_t> sample_sizes;
  std::size_t replicates = 1;
  std::uint64_t seed = 0;
  double alpha = 0.05;
  /// Local shift for TestPower and LanRemainder; zero when empty.
  Eigen::VectorXd u;
  /// LIL direction; first unit vector when empty.
  Eigen::VectorXd v;
  /// First n of the LIL window.
  std::size_t lil_start = 1000;
  std::size_t jobs = 1;
  /// Execute replicates in a seeded random order. Results must not change.
  bool shuffle_schedule = false;
  Tolerances tolerances;

  Eigen::Index p() const { return theta.size(); }
  Eigen::VectorXd shift() const;
  Eigen::VectorXd direction() const;
  std::size_t max_n() const;

  /// Throws InvalidArgument (or Unstable) describing the first problem.
  void validate() const;

  io::Json to_json() const;
  static ExperimentConfig from_json(const io::Json& j);
};

/// One replicate at one sample size. Failed rows (singular Gram) carry no
/// values.
struct RawRow {
  std::size_t replicate = 0;
  std::size_t n = 0;
  bool ok = true;
  std::vector<double> values;
};

struct Check {
  std::string name;
  double value = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool passed = false;
};

using NamedValues = std::vector<std::pair<std::string, double>>;

struct SizeAggregate {
  std::size_t n = 0;
  std::size_t ok_count = 0;
  NamedValues stats;
  double get(std::string_view name) const;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<std::string> columns;
  std::vector<RawRow> raw;
  std::vector<SizeAggregate> per_n;
  NamedValues summary;
  std::vector<Check> checks;
  std::size_t failed_replicates = 0;
  bool passed = false;
  std::vector<std::string> curve_columns;
  std::vector<std::vector<double>> curves;
  /// Wall time; kept out of the serialized report so reruns compare equal.
  double runtime_seconds = 0.0;

  double summary_value(std::string_view name) const;
  const Check& check(std::string_view name) const;

  io::Json to_json() const;
  std::string raw_csv() const;
  std::string curves_csv() const;
};

using ProgressFn = std::function<void(const std::string&)>;

/// Value columns of the raw rows for a configuration.
std::vector<std::string> raw_columns(const ExperimentConfig& cfg);

/// Builds aggregates, summary and checks from raw rows alone.
ExperimentReport aggregate(const ExperimentConfig& cfg, std::vector<RawRow> rows);

ExperimentReport run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress = {});

ExperimentReport run_consistency(ExperimentConfig cfg, const ProgressFn& progress = {});
ExperimentReport run_clt(ExperimentConfig cfg, const ProgressFn& progress = {});
ExperimentReport run_qsl(ExperimentConfig cfg, const ProgressFn& progress = {});
ExperimentReport run_lil(ExperimentConfig cfg, const ProgressFn& progress = {});
ExperimentReport run_lan_remainder(ExperimentConfig cfg, const ProgressFn& progress = {});
ExperimentReport run_test_size(ExperimentConfig cfg, const ProgressFn& progress = {});
ExperimentReport run_test_power(ExperimentConfig cfg, const ProgressFn& progress = {});

/// Reads rows written by ExperimentReport::raw_csv.
std::vector<RawRow> parse_raw_csv(const ExperimentConfig& cfg, std::istream& in);

/// Writes report.json, raw.csv and curves.csv into `dir`.
void write_report(const ExperimentReport& report, const std::filesystem::path& dir);

}  // namespace armle
