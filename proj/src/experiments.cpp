#include "armle/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>
#include <tuple>

#include "armle/ar_core.hpp"
#include "armle/distributions.hpp"
#include "armle/error.hpp"
#include "armle/estimator.hpp"
#include "armle/rng.hpp"
#include "armle/simulate.hpp"
#include "armle/state_filter.hpp"

namespace armle {

namespace {

constexpr std::pair<ExperimentKind, std::string_view> kKindNames[] = {
    {ExperimentKind::Consistency, "consistency"},
    {ExperimentKind::Clt, "clt"},
    {ExperimentKind::Qsl, "qsl"},
    {ExperimentKind::Lil, "lil"},
    {ExperimentKind::LanRemainder, "lan_remainder"},
    {ExperimentKind::TestSize, "test_size"},
    {ExperimentKind::TestPower, "test_power"},
};

Error invalid(const std::string& what) { return Error(ErrorKind::InvalidArgument, what); }

double median(std::vector<double> xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(xs.begin(), xs.end());
  const std::size_t m = xs.size() / 2;
  return xs.size() % 2 ? xs[m] : 0.5 * (xs[m - 1] + xs[m]);
}

double mean(const std::vector<double>& xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

std::string indexed(const std::string& base, Eigen::Index i) {
  return base + "_" + std::to_string(i + 1);
}

/// Sequence of sample sizes, sorted and deduplicated.
std::vector<std::size_t> sorted_sizes(const ExperimentConfig& cfg) {
  auto sizes = cfg.sample_sizes;
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
  return sizes;
}

/// Least-squares slope of ys on xs.
double ols_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double mx = mean(xs);
  const double my = mean(ys);
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return sxy / sxx;
}

Check make_check(std::string name, double value, double lower, double upper) {
  return Check{std::move(name), value, lower, upper, value >= lower && value <= upper};
}

// ---------------------------------------------------------------------------
// Per-replicate simulation

struct Trajectory {
  std::vector<double> k;
  std::vector<double> value;
};

std::vector<double> log_spaced_marks(std::size_t first, std::size_t last) {
  std::vector<double> marks;
  double mark = static_cast<double>(std::max<std::size_t>(first, 1));
  while (mark <= static_cast<double>(last)) {
    marks.push_back(std::floor(mark));
    mark = std::max(mark + 1.0, mark * 1.02);
  }
  return marks;
}

class ReplicateRunner {
 public:
  explicit ReplicateRunner(const ExperimentConfig& cfg)
      : cfg_(cfg), sizes_(sorted_sizes(cfg)), info_(stationary_information(cfg.theta)) {
    info_inverse_ = spd_inverse(info_);
  }

  std::vector<RawRow> run(std::size_t r, Trajectory* curve) const {
    switch (cfg_.kind) {
      case ExperimentKind::Consistency:
      case ExperimentKind::Clt:
      case ExperimentKind::LanRemainder:
        return prefix_rows(r);
      case ExperimentKind::Qsl:
      case ExperimentKind::Lil:
        return sequential_rows(r, curve);
      case ExperimentKind::TestSize:
      case ExperimentKind::TestPower:
        return test_rows(r);
    }
    return {};
  }

 private:
  ZetaPath<double> simulate_path(const Eigen::VectorXd& theta, std::size_t n, Rng& rng) const {
    const auto sim = simulate_ar(theta, cfg_.kernel, n, rng);
    return build_zeta<double>(std::span<const double>(sim.x), cfg_.kernel, cfg_.p());
  }

  // One path of the largest size; smaller sizes use its prefixes.
  std::vector<RawRow> prefix_rows(std::size_t r) const {
    Rng rng = Rng::substream(cfg_.seed, r);
    const auto path = simulate_path(cfg_.theta, sizes_.back(), rng);
    const Eigen::VectorXd u = cfg_.shift();
    std::vector<RawRow> rows;
    MartingaleAccumulator<double> acc(cfg_.p());
    Eigen::Index filled = 0;
    for (std::size_t n : sizes_) {
      for (; filled < static_cast<Eigen::Index>(n); ++filled) {
        acc.add(path.regressors.col(filled), path.response(filled), path.sigma(filled));
      }
      RawRow row{r, n, true, {}};
      const double nd = static_cast<double>(n);
      if (cfg_.kind == ExperimentKind::LanRemainder) {
        const double score = u.dot(acc.score(cfg_.theta)) / std::sqrt(nd);
        const double info = -0.5 * u.dot(info_ * u);
        const double rem = -0.5 * u.dot((acc.gram / nd - info_) * u);
        row.values = {rem, score, info};
        rows.push_back(std::move(row));
        continue;
      }
      try {
        const auto est = mle(acc);
        const Eigen::VectorXd err = est.theta_hat - cfg_.theta;
        if (cfg_.kind == ExperimentKind::Consistency) {
          row.values.push_back(err.norm());
          for (Eigen::Index j = 0; j < err.size(); ++j) row.values.push_back(est.theta_hat(j));
        } else {
          for (Eigen::Index j = 0; j < err.size(); ++j) row.values.push_back(std::sqrt(nd) * err(j));
        }
      } catch (const SingularGram&) {
        row.ok = false;
      }
      rows.push_back(std::move(row));
    }
    return rows;
  }

  // Sequential estimates theta_hat_k along one trajectory.
  std::vector<RawRow> sequential_rows(std::size_t r, Trajectory* curve) const {
    Rng rng = Rng::substream(cfg_.seed, r);
    const std::size_t big_n = sizes_.back();
    const auto path = simulate_path(cfg_.theta, big_n, rng);
    const Eigen::Index p = cfg_.p();
    const bool qsl = cfg_.kind == ExperimentKind::Qsl;
    const Eigen::VectorXd v = cfg_.direction();
    const double envelope = std::sqrt(v.dot(info_inverse_ * v));
    const double target_trace = info_inverse_.trace();

    MartingaleAccumulator<double> acc(p);
    Eigen::MatrixXd sum_sq = Eigen::MatrixXd::Zero(p, p);
    std::size_t first_pd = 0;
    double s_max = -std::numeric_limits<double>::infinity();
    double s_min = std::numeric_limits<double>::infinity();
    const auto marks = curve ? log_spaced_marks(qsl ? 1 : cfg_.lil_start, big_n)
                             : std::vector<double>{};
    std::size_t next_mark = 0;
    std::size_t next_size = 0;
    std::vector<RawRow> rows;

    for (std::size_t k = 1; k <= big_n; ++k) {
      const auto i = static_cast<Eigen::Index>(k - 1);
      acc.add(path.regressors.col(i), path.response(i), path.sigma(i));
      Eigen::VectorXd theta_hat;
      bool have = false;
      if (first_pd == 0) {
        try {
          theta_hat = mle(acc).theta_hat;
          first_pd = k;
          have = true;
        } catch (const SingularGram&) {
        }
      } else {
        theta_hat = acc.gram.llt().solve(acc.moment);
        have = true;
      }
      double stat = std::numeric_limits<double>::quiet_NaN();
      if (have) {
        const Eigen::VectorXd err = theta_hat - cfg_.theta;
        if (qsl) {
          sum_sq.noalias() += err * err.transpose();
          if (k >= 2) stat = sum_sq.trace() / std::log(static_cast<double>(k)) / target_trace;
        } else if (k >= cfg_.lil_start) {
          const double kd = static_cast<double>(k);
          stat = std::sqrt(kd / (2.0 * std::log(std::log(kd)))) * v.dot(err);
          s_max = std::max(s_max, stat);
          s_min = std::min(s_min, stat);
        }
      }
      if (curve && next_mark < marks.size() && static_cast<double>(k) >= marks[next_mark]) {
        while (next_mark < marks.size() && static_cast<double>(k) >= marks[next_mark]) ++next_mark;
        if (std::isfinite(stat)) {
          curve->k.push_back(static_cast<double>(k));
          curve->value.push_back(stat);
        }
      }
      while (next_size < sizes_.size() && sizes_[next_size] == k) {
        RawRow row{r, k, true, {}};
        if (qsl) {
          row.ok = std::isfinite(stat);
          if (row.ok) row.values = {stat, static_cast<double>(first_pd)};
        } else {
          row.ok = std::isfinite(s_max);
          if (row.ok) {
            const double peak = std::max(std::abs(s_max), std::abs(s_min));
            const double within = peak <= cfg_.tolerances.lil_envelope_factor * envelope ? 1.0 : 0.0;
            row.values = {peak, s_max, s_min, envelope, within};
          }
        }
        rows.push_back(std::move(row));
        ++next_size;
      }
    }
    return rows;
  }

  // Fresh path per size, generated at theta + u / sqrt(n); u = 0 gives the
  // null. The test is always of theta.
  std::vector<RawRow> test_rows(std::size_t r) const {
    const Eigen::VectorXd u = cfg_.shift();
    std::vector<RawRow> rows;
    for (std::size_t n : sizes_) {
      Rng rng = Rng::substream(cfg_.seed ^ splitmix64(n), r);
      const Eigen::VectorXd truth = cfg_.theta + u / std::sqrt(static_cast<double>(n));
      const auto path = simulate_path(truth, n, rng);
      RawRow row{r, n, true, {}};
      try {
        const auto result = lr_test(path, cfg_.theta, cfg_.alpha);
        row.values = {result.statistic, result.reject ? 1.0 : 0.0, result.pvalue};
      } catch (const SingularGram&) {
        row.ok = false;
      }
      rows.push_back(std::move(row));
    }
    return rows;
  }

  const ExperimentConfig& cfg_;
  std::vector<std::size_t> sizes_;
  Eigen::MatrixXd info_;
  Eigen::MatrixXd info_inverse_;
};

// ---------------------------------------------------------------------------
// Aggregation

std::vector<double> column_of(const std::vector<const RawRow*>& rows, std::size_t c) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto* row : rows) out.push_back(row->values[c]);
  return out;
}

void aggregate_size(const ExperimentConfig& cfg, const Eigen::MatrixXd& info,
                    const Eigen::MatrixXd& info_inverse, const std::vector<const RawRow*>& ok,
                    SizeAggregate& agg, std::vector<Check>& checks) {
  const Eigen::Index p = cfg.p();
  const std::string at = "@" + std::to_string(agg.n);
  const auto& tol = cfg.tolerances;
  switch (cfg.kind) {
    case ExperimentKind::Consistency: {
      const auto err = column_of(ok, 0);
      agg.stats.emplace_back("median_error", median(err));
      agg.stats.emplace_back("mean_error", mean(err));
      for (Eigen::Index j = 0; j < p; ++j) {
        agg.stats.emplace_back(indexed("mean_theta_hat", j),
                               mean(column_of(ok, static_cast<std::size_t>(j) + 1)));
      }
      break;
    }
    case ExperimentKind::Clt: {
      const auto m = static_cast<Eigen::Index>(ok.size());
      Eigen::MatrixXd samples(m, p);
      for (Eigen::Index r = 0; r < m; ++r) {
        for (Eigen::Index j = 0; j < p; ++j) samples(r, j) = ok[static_cast<std::size_t>(r)]->values[static_cast<std::size_t>(j)];
      }
      const Eigen::RowVectorXd centre = samples.colwise().mean();
      const Eigen::MatrixXd centred = samples.rowwise() - centre;
      const Eigen::MatrixXd cov = centred.transpose() * centred / static_cast<double>(std::max<Eigen::Index>(m - 1, 1));
      for (Eigen::Index j = 0; j < p; ++j) {
        agg.stats.emplace_back(indexed("mean_scaled", j), centre(j));
      }
      for (Eigen::Index i = 0; i < p; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) {
          agg.stats.emplace_back("cov_" + std::to_string(i + 1) + std::to_string(j + 1), cov(i, j));
          agg.stats.emplace_back("target_" + std::to_string(i + 1) + std::to_string(j + 1),
                                 info_inverse(i, j));
        }
      }
      for (Eigen::Index j = 0; j < p; ++j) {
        const double target = info_inverse(j, j);
        const double rel = std::abs(cov(j, j) - target) / target;
        std::vector<double> z(samples.col(j).data(), samples.col(j).data() + m);
        const double scale = std::sqrt(target);
        for (double& x : z) x /= scale;
        const double d = ks_statistic(z, normal_cdf);
        const double pv = ks_pvalue(d, z.size());
        agg.stats.emplace_back(indexed("variance_rel_error", j), rel);
        agg.stats.emplace_back(indexed("ks_statistic", j), d);
        agg.stats.emplace_back(indexed("ks_pvalue", j), pv);
        checks.push_back(make_check(indexed("variance_rel_error", j) + at, rel, 0.0, tol.clt_variance_rel));
        checks.push_back(make_check(indexed("ks_pvalue", j) + at, pv, tol.ks_level, 1.0));
      }
      break;
    }
    case ExperimentKind::Qsl: {
      agg.stats.emplace_back("median_trace_ratio", median(column_of(ok, 0)));
      agg.stats.emplace_back("median_first_pd", median(column_of(ok, 1)));
      break;
    }
    case ExperimentKind::Lil: {
      const auto peak = column_of(ok, 0);
      const auto within = column_of(ok, 4);
      const double envelope = ok.empty() ? 0.0 : ok.front()->values[3];
      std::vector<double> ratio;
      for (double x : peak) ratio.push_back(x / envelope);
      agg.stats.emplace_back("envelope", envelope);
      agg.stats.emplace_back("median_peak_ratio", median(ratio));
      agg.stats.emplace_back("max_peak_ratio", ratio.empty() ? 0.0 : *std::max_element(ratio.begin(), ratio.end()));
      agg.stats.emplace_back("fraction_within", mean(within));
      break;
    }
    case ExperimentKind::LanRemainder: {
      const auto rem = column_of(ok, 0);
      std::vector<double> abs_rem;
      for (double x : rem) abs_rem.push_back(std::abs(x));
      agg.stats.emplace_back("median_abs_remainder", median(abs_rem));
      agg.stats.emplace_back("mean_remainder", mean(rem));
      agg.stats.emplace_back("mean_score_term", mean(column_of(ok, 1)));
      break;
    }
    case ExperimentKind::TestSize:
    case ExperimentKind::TestPower: {
      const auto stat = column_of(ok, 0);
      const double rate = mean(column_of(ok, 1));
      const double critical = chi2_quantile(static_cast<int>(p), cfg.alpha);
      agg.stats.emplace_back("rejection_rate", rate);
      agg.stats.emplace_back("critical", critical);
      if (cfg.kind == ExperimentKind::TestSize) {
        const double dof = static_cast<double>(p);
        const double d = ks_statistic(stat, [dof](double x) { return chi2_cdf(dof, x); });
        const double pv = ks_pvalue(d, stat.size());
        agg.stats.emplace_back("ks_statistic", d);
        agg.stats.emplace_back("ks_pvalue", pv);
        checks.push_back(make_check("size" + at, rate, cfg.alpha - tol.size_band, cfg.alpha + tol.size_band));
        checks.push_back(make_check("null_law_ks_pvalue" + at, pv, tol.ks_level, 1.0));
      } else {
        const Eigen::VectorXd u = cfg.shift();
        const double lambda = u.dot(info * u);
        const double predicted = noncentral_chi2_sf(static_cast<double>(p), lambda, critical);
        agg.stats.emplace_back("noncentrality", lambda);
        agg.stats.emplace_back("predicted_power", predicted);
        checks.push_back(make_check("power" + at, rate, predicted - tol.power_band, predicted + tol.power_band));
      }
      break;
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------

std::string to_string(ExperimentKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return std::string(name);
  }
  return "unknown";
}

ExperimentKind experiment_kind_from_string(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  throw Error(ErrorKind::Parse, "unknown experiment '" + std::string(name) + "'");
}

Eigen::VectorXd ExperimentConfig::shift() const {
  return u.size() == 0 ? Eigen::VectorXd::Zero(p()) : u;
}

Eigen::VectorXd ExperimentConfig::direction() const {
  return v.size() == 0 ? Eigen::VectorXd::Unit(p(), 0) : v;
}

std::size_t ExperimentConfig::max_n() const {
  return sample_sizes.empty() ? 0 : *std::max_element(sample_sizes.begin(), sample_sizes.end());
}

void ExperimentConfig::validate() const {
  if (theta.size() < 1) throw invalid("theta must have at least one entry");
  if (!theta.allFinite()) throw invalid("theta must be finite");
  require_stable(theta);
  if (replicates < 1) throw invalid("replicates must be >= 1");
  if (sample_sizes.empty()) throw invalid("sample_sizes must not be empty");
  const auto min_n = static_cast<std::size_t>(p()) + 2;
  for (std::size_t n : sample_sizes) {
    if (n < min_n) throw invalid("every sample size must be >= p + 2 = " + std::to_string(min_n));
  }
  if (!(alpha > 0.0 && alpha < 1.0)) throw invalid("alpha must lie in (0, 1)");
  if (u.size() != 0 && u.size() != p()) throw invalid("u must have p entries");
  if (v.size() != 0 && v.size() != p()) throw invalid("v must have p entries");
  if (jobs < 1) throw invalid("jobs must be >= 1");
  if (kind == ExperimentKind::TestPower && u.size() == 0) {
    throw invalid("test_power needs a local shift u");
  }
  if (kind == ExperimentKind::LanRemainder || kind == ExperimentKind::TestPower) {
    for (std::size_t n : sample_sizes) {
      if (!is_stable(Eigen::VectorXd(theta + shift() / std::sqrt(static_cast<double>(n))))) {
        throw Error(ErrorKind::Unstable, "theta + u/sqrt(n) is unstable at n = " + std::to_string(n));
      }
    }
  }
  if (kind == ExperimentKind::Lil) {
    if (lil_start < 16) throw invalid("lil_start must be >= 16 so that log log n > 0");
    if (lil_start > max_n()) throw invalid("lil_start exceeds the largest sample size");
    if (direction().norm() == 0.0) throw invalid("v must be nonzero");
  }
}

io::Json ExperimentConfig::to_json() const {
  io::Json j;
  j["experiment"] = armle::to_string(kind);
  j["theta"] = io::to_json(theta);
  j["kernel"] = io::kernel_to_json(kernel);
  j["sample_sizes"] = sample_sizes;
  j["replicates"] = replicates;
  j["seed"] = seed;
  j["alpha"] = alpha;
  j["u"] = io::to_json(shift());
  j["v"] = io::to_json(direction());
  j["lil_start"] = lil_start;
  j["jobs"] = jobs;
  j["tolerances"] = {
      {"slope_lower", tolerances.slope_lower},
      {"slope_upper", tolerances.slope_upper},
      {"clt_variance_rel", tolerances.clt_variance_rel},
      {"ks_level", tolerances.ks_level},
      {"qsl_ratio_lower", tolerances.qsl_ratio_lower},
      {"qsl_ratio_upper", tolerances.qsl_ratio_upper},
      {"lil_envelope_factor", tolerances.lil_envelope_factor},
      {"lil_majority", tolerances.lil_majority},
      {"lan_median", tolerances.lan_median},
      {"size_band", tolerances.size_band},
      {"power_band", tolerances.power_band},
      {"max_failure_rate", tolerances.max_failure_rate},
  };
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const io::Json& j) {
  if (!j.is_object()) throw Error(ErrorKind::Parse, "experiment config must be a JSON object");
  static const std::vector<std::string> known = {
      "experiment", "theta", "kernel", "sample_sizes", "replicates", "seed", "alpha",
      "u",          "v",     "lil_start", "jobs", "shuffle_schedule", "tolerances"};
  for (const auto& item : j.items()) {
    if (std::find(known.begin(), known.end(), item.key()) == known.end()) {
      throw Error(ErrorKind::Parse, "unknown config key '" + item.key() + "'");
    }
  }
  auto vec = [](const io::Json& arr, const char* what) {
    if (!arr.is_array()) throw Error(ErrorKind::Parse, std::string(what) + " must be an array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
    for (std::size_t i = 0; i < arr.size(); ++i) {
      if (!arr[i].is_number()) throw Error(ErrorKind::Parse, std::string(what) + " must hold numbers");
      v(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
    }
    return v;
  };
  try {
    ExperimentConfig cfg;
    if (!j.contains("experiment")) throw Error(ErrorKind::Parse, "config needs 'experiment'");
    cfg.kind = experiment_kind_from_string(j.at("experiment").get<std::string>());
    if (!j.contains("theta")) throw Error(ErrorKind::Parse, "config needs 'theta'");
    cfg.theta = vec(j.at("theta"), "theta");
    cfg.kernel = j.contains("kernel") ? io::kernel_from_json(j.at("kernel")) : CovarianceKernel::white();
    if (!j.contains("sample_sizes")) throw Error(ErrorKind::Parse, "config needs 'sample_sizes'");
    cfg.sample_sizes = j.at("sample_sizes").get<std::vector<std::size_t>>();
    if (j.contains("replicates")) {
      const auto reps = j.at("replicates").get<long long>();
      if (reps < 0) throw invalid("replicates must be >= 1");
      cfg.replicates = static_cast<std::size_t>(reps);
    }
    cfg.seed = j.value("seed", std::uint64_t{0});
    cfg.alpha = j.value("alpha", 0.05);
    if (j.contains("u")) cfg.u = vec(j.at("u"), "u");
    if (j.contains("v")) cfg.v = vec(j.at("v"), "v");
    cfg.lil_start = j.value("lil_start", std::size_t{1000});
    cfg.jobs = j.value("jobs", std::size_t{1});
    cfg.shuffle_schedule = j.value("shuffle_schedule", false);
    if (j.contains("tolerances")) {
      const auto& t = j.at("tolerances");
      auto& tol = cfg.tolerances;
      tol.slope_lower = t.value("slope_lower", tol.slope_lower);
      tol.slope_upper = t.value("slope_upper", tol.slope_upper);
      tol.clt_variance_rel = t.value("clt_variance_rel", tol.clt_variance_rel);
      tol.ks_level = t.value("ks_level", tol.ks_level);
      tol.qsl_ratio_lower = t.value("qsl_ratio_lower", tol.qsl_ratio_lower);
      tol.qsl_ratio_upper = t.value("qsl_ratio_upper", tol.qsl_ratio_upper);
      tol.lil_envelope_factor = t.value("lil_envelope_factor", tol.lil_envelope_factor);
      tol.lil_majority = t.value("lil_majority", tol.lil_majority);
      tol.lan_median = t.value("lan_median", tol.lan_median);
      tol.size_band = t.value("size_band", tol.size_band);
      tol.power_band = t.value("power_band", tol.power_band);
      tol.max_failure_rate = t.value("max_failure_rate", tol.max_failure_rate);
    }
    return cfg;
  } catch (const io::Json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("bad experiment config: ") + e.what());
  }
}

double SizeAggregate::get(std::string_view name) const {
  for (const auto& [key, value] : stats) {
    if (key == name) return value;
  }
  throw Error(ErrorKind::InvalidArgument, "no aggregate named '" + std::string(name) + "'");
}

double ExperimentReport::summary_value(std::string_view name) const {
  for (const auto& [key, value] : summary) {
    if (key == name) return value;
  }
  throw Error(ErrorKind::InvalidArgument, "no summary value named '" + std::string(name) + "'");
}

const Check& ExperimentReport::check(std::string_view name) const {
  for (const auto& c : checks) {
    if (c.name == name) return c;
  }
  throw Error(ErrorKind::InvalidArgument, "no check named '" + std::string(name) + "'");
}

std::vector<std::string> raw_columns(const ExperimentConfig& cfg) {
  std::vector<std::string> cols;
  switch (cfg.kind) {
    case ExperimentKind::Consistency:
      cols.push_back("error_norm");
      for (Eigen::Index j = 0; j < cfg.p(); ++j) cols.push_back(indexed("theta_hat", j));
      break;
    case ExperimentKind::Clt:
      for (Eigen::Index j = 0; j < cfg.p(); ++j) cols.push_back(indexed("scaled_error", j));
      break;
    case ExperimentKind::Qsl:
      cols = {"trace_ratio", "first_pd"};
      break;
    case ExperimentKind::Lil:
      cols = {"peak", "s_max", "s_min", "envelope", "within"};
      break;
    case ExperimentKind::LanRemainder:
      cols = {"remainder", "score_term", "info_term"};
      break;
    case ExperimentKind::TestSize:
    case ExperimentKind::TestPower:
      cols = {"statistic", "reject", "pvalue"};
      break;
  }
  return cols;
}

ExperimentReport aggregate(const ExperimentConfig& cfg, std::vector<RawRow> rows) {
  ExperimentReport report;
  report.config = cfg;
  report.columns = raw_columns(cfg);
  std::sort(rows.begin(), rows.end(), [](const RawRow& a, const RawRow& b) {
    return std::tie(a.replicate, a.n) < std::tie(b.replicate, b.n);
  });
  report.raw = std::move(rows);

  const Eigen::MatrixXd info = stationary_information(cfg.theta);
  const Eigen::MatrixXd info_inverse = spd_inverse(info);
  const auto sizes = sorted_sizes(cfg);
  const auto& tol = cfg.tolerances;

  std::vector<std::size_t> failed;
  for (const auto& row : report.raw) {
    if (!row.ok && (failed.empty() || failed.back() != row.replicate)) failed.push_back(row.replicate);
  }
  report.failed_replicates = failed.size();

  for (std::size_t n : sizes) {
    std::vector<const RawRow*> ok;
    for (const auto& row : report.raw) {
      if (row.n == n && row.ok) ok.push_back(&row);
    }
    SizeAggregate agg;
    agg.n = n;
    agg.ok_count = ok.size();
    if (!ok.empty()) aggregate_size(cfg, info, info_inverse, ok, agg, report.checks);
    report.per_n.push_back(std::move(agg));
  }

  const double failure_rate =
      static_cast<double>(report.failed_replicates) / static_cast<double>(cfg.replicates);
  report.summary.emplace_back("failure_rate", failure_rate);
  report.checks.push_back(make_check("failure_rate", failure_rate, 0.0, tol.max_failure_rate));

  auto series = [&](const char* name) {
    std::vector<double> xs;
    std::vector<double> ys;
    for (const auto& agg : report.per_n) {
      if (agg.ok_count == 0) continue;
      xs.push_back(static_cast<double>(agg.n));
      ys.push_back(agg.get(name));
    }
    return std::make_pair(xs, ys);
  };

  switch (cfg.kind) {
    case ExperimentKind::Consistency: {
      auto [ns, med] = series("median_error");
      if (ns.size() >= 2) {
        std::vector<double> lx;
        std::vector<double> ly;
        for (std::size_t i = 0; i < ns.size(); ++i) {
          lx.push_back(std::log(ns[i]));
          ly.push_back(std::log(med[i]));
        }
        const double slope = ols_slope(lx, ly);
        report.summary.emplace_back("log_log_slope", slope);
        report.checks.push_back(make_check("log_log_slope", slope, tol.slope_lower, tol.slope_upper));
      }
      break;
    }
    case ExperimentKind::Qsl: {
      if (!report.per_n.empty() && report.per_n.back().ok_count > 0) {
        const double ratio = report.per_n.back().get("median_trace_ratio");
        report.summary.emplace_back("trace_ratio", ratio);
        report.checks.push_back(make_check("trace_ratio@" + std::to_string(report.per_n.back().n),
                                           ratio, tol.qsl_ratio_lower, tol.qsl_ratio_upper));
      }
      break;
    }
    case ExperimentKind::Lil: {
      if (!report.per_n.empty() && report.per_n.back().ok_count > 0) {
        const double frac = report.per_n.back().get("fraction_within");
        report.summary.emplace_back("fraction_within", frac);
        // Strict majority.
        report.checks.push_back(Check{"lil_majority_within@" + std::to_string(report.per_n.back().n),
                                      frac, tol.lil_majority, 1.0, frac > tol.lil_majority});
      }
      break;
    }
    case ExperimentKind::LanRemainder: {
      auto [ns, med] = series("median_abs_remainder");
      if (!med.empty()) {
        report.summary.emplace_back("final_median_abs_remainder", med.back());
        report.checks.push_back(make_check("median_abs_remainder@" + std::to_string(static_cast<std::size_t>(ns.back())),
                                           med.back(), 0.0, tol.lan_median));
      }
      if (med.size() >= 2) {
        bool monotone = true;
        for (std::size_t i = 1; i < med.size(); ++i) monotone = monotone && med[i] < med[i - 1];
        report.summary.emplace_back("monotone_medians", monotone ? 1.0 : 0.0);
        report.checks.push_back(make_check("monotone_medians", monotone ? 1.0 : 0.0, 1.0, 1.0));
      }
      break;
    }
    default:
      break;
  }

  report.passed = std::all_of(report.checks.begin(), report.checks.end(),
                              [](const Check& c) { return c.passed; });
  return report;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const ReplicateRunner runner(cfg);

  std::vector<std::size_t> schedule(cfg.replicates);
  std::iota(schedule.begin(), schedule.end(), std::size_t{0});
  if (cfg.shuffle_schedule) {
    std::mt19937_64 engine(splitmix64(cfg.seed + 1));
    std::shuffle(schedule.begin(), schedule.end(), engine);
  }

  std::vector<std::vector<RawRow>> results(cfg.replicates);
  Trajectory trajectory;
  std::atomic<std::size_t> cursor{0};
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const std::size_t step = std::max<std::size_t>(1, cfg.replicates / 10);

  auto worker = [&] {
    while (true) {
      const std::size_t slot = cursor.fetch_add(1);
      if (slot >= schedule.size()) return;
      const std::size_t r = schedule[slot];
      try {
        results[r] = runner.run(r, r == 0 ? &trajectory : nullptr);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        cursor = schedule.size();
        return;
      }
      const std::size_t finished = done.fetch_add(1) + 1;
      if (progress && (finished % step == 0 || finished == cfg.replicates)) {
        std::lock_guard lock(progress_mutex);
        progress(to_string(cfg.kind) + ": " + std::to_string(finished) + "/" +
                 std::to_string(cfg.replicates) + " replicates");
      }
    }
  };

  const std::size_t workers = std::min(cfg.jobs, cfg.replicates);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<RawRow> rows;
  for (auto& rep : results) {
    for (auto& row : rep) rows.push_back(std::move(row));
  }
  ExperimentReport report = aggregate(cfg, std::move(rows));

  if (cfg.kind == ExperimentKind::Qsl || cfg.kind == ExperimentKind::Lil) {
    report.curve_columns = {"k", cfg.kind == ExperimentKind::Qsl ? "trace_ratio" : "s_k"};
    for (std::size_t i = 0; i < trajectory.k.size(); ++i) {
      report.curves.push_back({trajectory.k[i], trajectory.value[i]});
    }
  } else {
    report.curve_columns = {"n", "ok_count"};
    if (!report.per_n.empty()) {
      for (const auto& [name, value] : report.per_n.front().stats) report.curve_columns.push_back(name);
    }
    for (const auto& agg : report.per_n) {
      std::vector<double> line{static_cast<double>(agg.n), static_cast<double>(agg.ok_count)};
      for (const auto& [name, value] : agg.stats) line.push_back(value);
      if (line.size() == report.curve_columns.size()) report.curves.push_back(std::move(line));
    }
  }
  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

namespace {
ExperimentReport run_as(ExperimentConfig cfg, ExperimentKind kind, const ProgressFn& progress) {
  cfg.kind = kind;
  return run_experiment(cfg, progress);
}
}  // namespace

ExperimentReport run_consistency(ExperimentConfig cfg, const ProgressFn& progress) {
  return run_as(std::move(cfg), ExperimentKind::Consistency, progress);
}
ExperimentReport run_clt(ExperimentConfig cfg, const ProgressFn& progress) {
  return run_as(std::move(cfg), ExperimentKind::Clt, progress);
}
ExperimentReport run_qsl(ExperimentConfig cfg, const ProgressFn& progress) {
  return run_as(std::move(cfg), ExperimentKind::Qsl, progress);
}
ExperimentReport run_lil(ExperimentConfig cfg, const ProgressFn& progress) {
  return run_as(std::move(cfg), ExperimentKind::Lil, progress);
}
ExperimentReport run_lan_remainder(ExperimentConfig cfg, const ProgressFn& progress) {
  return run_as(std::move(cfg), ExperimentKind::LanRemainder, progress);
}
ExperimentReport run_test_size(ExperimentConfig cfg, const ProgressFn& progress) {
  return run_as(std::move(cfg), ExperimentKind::TestSize, progress);
}
ExperimentReport run_test_power(ExperimentConfig cfg, const ProgressFn& progress) {
  return run_as(std::move(cfg), ExperimentKind::TestPower, progress);
}

io::Json ExperimentReport::to_json() const {
  io::Json j;
  j["experiment"] = armle::to_string(config.kind);
  j["config"] = config.to_json();
  j["replicates"] = config.replicates;
  j["failed_replicates"] = failed_replicates;
  io::Json sizes = io::Json::array();
  for (const auto& agg : per_n) {
    io::Json entry{{"n", agg.n}, {"ok_count", agg.ok_count}};
    for (const auto& [name, value] : agg.stats) entry[name] = io::finite(value, name);
    sizes.push_back(std::move(entry));
  }
  j["per_n"] = std::move(sizes);
  io::Json summ = io::Json::object();
  for (const auto& [name, value] : summary) summ[name] = io::finite(value, name);
  j["summary"] = std::move(summ);
  io::Json cks = io::Json::array();
  for (const auto& c : checks) {
    cks.push_back({{"name", c.name},
                   {"value", io::finite(c.value, c.name)},
                   {"lower", c.lower},
                   {"upper", c.upper},
                   {"passed", c.passed}});
  }
  j["checks"] = std::move(cks);
  j["passed"] = passed;
  return j;
}

std::string ExperimentReport::raw_csv() const {
  std::vector<std::string> header{"replicate", "n", "ok"};
  header.insert(header.end(), columns.begin(), columns.end());
  std::vector<std::vector<double>> lines;
  lines.reserve(raw.size());
  for (const auto& row : raw) {
    std::vector<double> line{static_cast<double>(row.replicate), static_cast<double>(row.n),
                             row.ok ? 1.0 : 0.0};
    if (row.ok) {
      line.insert(line.end(), row.values.begin(), row.values.end());
    } else {
      line.resize(header.size(), std::numeric_limits<double>::quiet_NaN());
    }
    lines.push_back(std::move(line));
  }
  std::ostringstream out;
  io::write_csv(out, header, lines);
  return out.str();
}

std::string ExperimentReport::curves_csv() const {
  std::ostringstream out;
  io::write_csv(out, curve_columns, curves);
  return out.str();
}

std::vector<RawRow> parse_raw_csv(const ExperimentConfig& cfg, std::istream& in) {
  const auto table = io::read_csv(in);
  const auto cols = raw_columns(cfg);
  const std::size_t rep_c = table.column("replicate");
  const std::size_t n_c = table.column("n");
  const std::size_t ok_c = table.column("ok");
  std::vector<std::size_t> value_c;
  for (const auto& name : cols) value_c.push_back(table.column(name));
  std::vector<RawRow> rows;
  for (const auto& fields : table.rows) {
    RawRow row;
    row.replicate = static_cast<std::size_t>(io::parse_double(fields[rep_c]));
    row.n = static_cast<std::size_t>(io::parse_double(fields[n_c]));
    row.ok = io::parse_double(fields[ok_c]) != 0.0;
    if (row.ok) {
      for (std::size_t c : value_c) row.values.push_back(io::parse_double(fields[c]));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_report(const ExperimentReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create '" + dir.string() + "': " + ec.message());
  io::write_text_file(dir / "report.json", report.to_json().dump(2) + "\n");
  io::write_text_file(dir / "raw.csv", report.raw_csv());
  io::write_text_file(dir / "curves.csv", report.curves_csv());
}

}  // namespace armle
