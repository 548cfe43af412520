#include "cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "armle/ar_core.hpp"
#include "armle/error.hpp"
#include "armle/estimator.hpp"
#include "armle/experiments.hpp"
#include "armle/innovations_filter.hpp"
#include "armle/io.hpp"
#include "armle/noise_models.hpp"
#include "armle/simulate.hpp"
#include "armle/state_filter.hpp"

namespace armle::cli {

namespace {

using io::Json;

bool quiet() {
  const char* env = std::getenv("ARMLE_QUIET");
  return env != nullptr && std::string(env) != "0" && std::string(env) != "";
}

/// Writes `content` to `path`, or to `out` when the path is empty.
void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty()) {
    out << content;
  } else {
    io::write_text_file(path, content);
  }
}

void emit_json(const std::string& path, const Json& j, std::ostream& out) {
  emit(path, j.dump(2) + "\n", out);
}

Eigen::VectorXd theta_with_order(const std::string& text, std::optional<int> p) {
  Eigen::VectorXd theta = io::parse_vector(text);
  if (p && *p != theta.size()) {
    throw Error(ErrorKind::DimensionMismatch, "--p is " + std::to_string(*p) + " but theta has " +
                                                  std::to_string(theta.size()) + " entries");
  }
  return theta;
}

struct Options {
  // shared
  std::string kernel = "white";
  std::string in;
  std::string out;
  int p = 1;
  std::optional<int> p_opt;
  std::uint64_t seed = 0;
  // simulate
  std::string theta;
  std::size_t n = 0;
  std::string noise_out;
  // test / lan
  std::string theta0;
  double alpha = 0.05;
  std::string u;
  // validate
  std::size_t horizon = 100;
  // experiment
  std::string config;
  std::string out_dir;
  std::string kind;
  std::string sizes;
  std::optional<std::size_t> replicates;
  std::optional<std::uint64_t> exp_seed;
  std::optional<double> exp_alpha;
  std::string v;
  std::optional<std::size_t> lil_start;
  std::optional<std::size_t> jobs;
  std::string plugin = "gram";
  std::string exp_kernel;
};

ZetaPath<double> load_path(const Options& o, Eigen::Index p) {
  const auto x = io::read_series(o.in, "x");
  return build_zeta<double>(std::span<const double>(x), io::parse_kernel(o.kernel), p);
}

Json estimate_json(const EstimationResult<double>& est) {
  Json j;
  j["theta_hat"] = io::to_json(est.theta_hat);
  j["stderr"] = io::to_json(est.standard_errors());
  j["n"] = est.n;
  j["p"] = est.theta_hat.size();
  j["gram_over_n"] = io::to_json(Eigen::MatrixXd(est.gram_over_n));
  j["cond"] = io::finite(est.cond, "condition number");
  return j;
}

int cmd_simulate(const Options& o, std::ostream& out, std::ostream& err) {
  const auto theta = theta_with_order(o.theta, o.p_opt);
  const auto kernel = io::parse_kernel(o.kernel);
  if (o.n < 1) throw Error(ErrorKind::InvalidArgument, "--n must be >= 1");
  const auto sim = simulate_ar(theta, kernel, o.n, o.seed);
  if (!quiet()) {
    Json cfg{{"command", "simulate"}, {"theta", io::to_json(theta)}, {"kernel", io::kernel_to_json(kernel)},
             {"n", o.n}, {"seed", o.seed}, {"out", o.out}};
    err << "config " << cfg.dump() << "\n";
  }
  std::vector<std::vector<double>> rows;
  rows.reserve(sim.x.size());
  for (std::size_t t = 0; t < sim.x.size(); ++t) rows.push_back({static_cast<double>(t + 1), sim.x[t]});
  std::ostringstream csv;
  io::write_csv(csv, {"t", "x"}, rows);
  emit(o.out, csv.str(), out);
  if (!o.noise_out.empty()) {
    std::vector<std::vector<double>> xi;
    for (double v : sim.noise.values) xi.push_back({v});
    std::ostringstream noise_csv;
    io::write_csv(noise_csv, {"xi"}, xi);
    io::write_text_file(o.noise_out, noise_csv.str());
  }
  return kSuccess;
}

int cmd_filter_dump(const Options& o, std::ostream& out) {
  const auto kernel = io::parse_kernel(o.kernel);
  if (o.n < 1) throw Error(ErrorKind::InvalidArgument, "--n must be >= 1");
  const auto seq = pacf_sequence<double>(kernel, o.n);
  std::vector<std::vector<double>> rows;
  for (std::size_t m = 0; m < o.n; ++m) {
    rows.push_back({static_cast<double>(m + 1), seq.beta[m], seq.sigma2[m]});
  }
  std::ostringstream csv;
  io::write_csv(csv, {"n", "beta", "sigma2"}, rows);
  emit(o.out, csv.str(), out);
  return kSuccess;
}

int cmd_filter_zeta(const Options& o, std::ostream& out) {
  const auto path = load_path(o, o.p);
  std::vector<std::string> header{"index"};
  for (Eigen::Index j = 0; j < 2 * path.p; ++j) header.push_back("zeta_" + std::to_string(j + 1));
  std::vector<std::vector<double>> rows;
  for (Eigen::Index m = 0; m < path.size(); ++m) {
    std::vector<double> row{static_cast<double>(m + 1)};
    for (Eigen::Index j = 0; j < 2 * path.p; ++j) row.push_back(path.zeta(j, m));
    rows.push_back(std::move(row));
  }
  std::ostringstream csv;
  io::write_csv(csv, header, rows);
  emit(o.out, csv.str(), out);
  return kSuccess;
}

int cmd_estimate(const Options& o, std::ostream& out) {
  const auto path = load_path(o, o.p);
  const auto est = mle(path);
  Json j = estimate_json(est);
  j["log_likelihood"] = io::finite(log_likelihood(path, est.theta_hat), "log-likelihood");
  const auto plugin = o.plugin == "model" ? InformationPlugin::ModelAtEstimate : InformationPlugin::EmpiricalGram;
  const auto ellipsoid = confidence_ellipsoid(est, o.alpha, plugin);
  j["confidence"] = {{"alpha", o.alpha},
                     {"plugin", o.plugin},
                     {"radius", ellipsoid.radius},
                     {"shape", io::to_json(Eigen::MatrixXd(ellipsoid.shape))},
                     {"half_widths", io::to_json(Eigen::VectorXd(ellipsoid.half_widths()))}};
  j["config"] = {{"command", "estimate"}, {"in", o.in}, {"p", o.p},
                 {"kernel", io::kernel_to_json(io::parse_kernel(o.kernel))}, {"alpha", o.alpha}};
  emit_json(o.out, j, out);
  return kSuccess;
}

int cmd_test(const Options& o, std::ostream& out) {
  const auto theta0 = theta_with_order(o.theta0, o.p);
  const auto path = load_path(o, o.p);
  const auto est = mle(path);
  const auto result = lr_test(path, theta0, o.alpha);
  Json j = estimate_json(est);
  j["theta0"] = io::to_json(theta0);
  j["statistic"] = io::finite(result.statistic, "statistic");
  j["critical"] = result.critical;
  j["alpha"] = result.alpha;
  j["dof"] = result.dof;
  j["pvalue"] = io::finite(result.pvalue, "p-value");
  j["reject"] = result.reject;
  j["config"] = {{"command", "test"}, {"in", o.in}, {"p", o.p},
                 {"kernel", io::kernel_to_json(io::parse_kernel(o.kernel))},
                 {"theta0", io::to_json(theta0)}, {"alpha", o.alpha}};
  emit_json(o.out, j, out);
  return kSuccess;
}

int cmd_lan(const Options& o, std::ostream& out) {
  const auto theta0 = theta_with_order(o.theta0, o.p_opt);
  const Eigen::VectorXd u = io::parse_vector(o.u);
  if (u.size() != theta0.size()) {
    throw Error(ErrorKind::DimensionMismatch, "--u and --theta0 must have the same length");
  }
  const auto path = load_path(o, theta0.size());
  const auto terms = lan_decomposition(path, theta0, u);
  const double n = static_cast<double>(path.size());
  const Eigen::VectorXd shifted = theta0 + u / std::sqrt(n);
  const double log_ratio = log_likelihood(path, shifted) - log_likelihood(path, theta0);
  Json j{{"n", path.size()},
         {"score_term", io::finite(terms.score_term, "score term")},
         {"info_term", io::finite(terms.info_term, "information term")},
         {"remainder", io::finite(terms.remainder, "remainder")},
         {"total", io::finite(terms.total(), "total")},
         {"log_likelihood_ratio", io::finite(log_ratio, "log-likelihood ratio")},
         {"information", io::to_json(stationary_information(theta0))}};
  j["config"] = {{"command", "lan"}, {"in", o.in},
                 {"kernel", io::kernel_to_json(io::parse_kernel(o.kernel))},
                 {"theta0", io::to_json(theta0)}, {"u", io::to_json(u)}};
  emit_json(o.out, j, out);
  return kSuccess;
}

int cmd_validate(const Options& o, std::ostream& out) {
  const auto kernel = io::parse_kernel(o.kernel);
  const auto report = validate_kernel(kernel, o.horizon);
  Json j{{"kernel", io::kernel_to_json(kernel)},
         {"horizon", report.horizon},
         {"passed", report.passed},
         {"min_sigma2", report.min_sigma2},
         {"max_abs_beta", report.max_abs_beta},
         {"tail_constant", report.tail_constant},
         {"summable_decay", report.summable_decay},
         {"slow_decay", report.slow_decay}};
  j["decay_exponent"] = report.decay_exponent ? Json(*report.decay_exponent) : Json(nullptr);
  emit_json(o.out, j, out);
  return kSuccess;
}

int cmd_experiment(const Options& o, std::ostream& out, std::ostream& err) {
  Json j = Json::object();
  if (!o.config.empty()) {
    std::ifstream in(o.config);
    if (!in) throw Error(ErrorKind::Io, "cannot open '" + o.config + "'");
    try {
      j = Json::parse(in);
    } catch (const Json::parse_error& e) {
      throw Error(ErrorKind::Parse, std::string("bad config JSON: ") + e.what());
    }
  }
  if (!o.kind.empty()) j["experiment"] = o.kind;
  if (!o.theta.empty()) j["theta"] = io::to_json(io::parse_vector(o.theta));
  if (!o.exp_kernel.empty()) j["kernel"] = io::kernel_to_json(io::parse_kernel(o.exp_kernel));
  if (!o.sizes.empty()) {
    std::vector<std::size_t> sizes;
    const auto v = io::parse_vector(o.sizes);
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (v(i) < 0 || v(i) != std::floor(v(i))) throw Error(ErrorKind::InvalidArgument, "sizes must be non-negative integers");
      sizes.push_back(static_cast<std::size_t>(v(i)));
    }
    j["sample_sizes"] = sizes;
  }
  if (o.replicates) j["replicates"] = *o.replicates;
  if (o.exp_seed) j["seed"] = *o.exp_seed;
  if (o.exp_alpha) j["alpha"] = *o.exp_alpha;
  if (!o.u.empty()) j["u"] = io::to_json(io::parse_vector(o.u));
  if (!o.v.empty()) j["v"] = io::to_json(io::parse_vector(o.v));
  if (o.lil_start) j["lil_start"] = *o.lil_start;
  if (o.jobs) j["jobs"] = *o.jobs;

  const auto cfg = ExperimentConfig::from_json(j);
  cfg.validate();
  const bool verbose = !quiet();
  if (verbose) err << "config " << cfg.to_json().dump() << "\n";
  ProgressFn progress;
  if (verbose) progress = [&err](const std::string& line) { err << line << "\n" << std::flush; };
  const auto report = run_experiment(cfg, progress);
  if (verbose) {
    err << to_string(cfg.kind) << ": " << (report.passed ? "passed" : "FAILED") << " in "
        << report.runtime_seconds << " s\n";
  }
  if (!o.out_dir.empty()) write_report(report, o.out_dir);
  emit_json(o.out, report.to_json(), out);
  return kSuccess;
}

int exit_code_for(const Error& e) {
  if (e.is_numeric()) return kNumeric;
  if (e.kind() == ErrorKind::InvalidArgument) return kUsage;
  return kDataFormat;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exact maximum likelihood and likelihood-ratio tests for AR(p) models driven by "
               "stationary Gaussian noise"};
  app.require_subcommand(1);
  Options o;

  auto* simulate = app.add_subcommand("simulate", "Simulate X_1..X_n to CSV (columns t,x)");
  simulate->add_option("--p", o.p_opt, "AR order (must match --theta)");
  simulate->add_option("--theta", o.theta, "AR coefficients, comma separated")->required();
  simulate->add_option("--kernel", o.kernel, "Noise kernel: white | ar1:A | fgn:H | JSON");
  simulate->add_option("--n", o.n, "Number of observations")->required();
  simulate->add_option("--seed", o.seed, "Random seed");
  simulate->add_option("--out", o.out, "Output CSV (stdout when omitted)");
  simulate->add_option("--noise-out", o.noise_out, "Also write the noise path (column xi)");

  auto* filter = app.add_subcommand("filter", "Durbin-Levinson diagnostics");
  filter->require_subcommand(1);
  auto* dump = filter->add_subcommand("dump", "CSV of n, beta, sigma2");
  dump->add_option("--kernel", o.kernel, "Noise kernel")->required();
  dump->add_option("--n", o.n, "Number of steps")->required();
  dump->add_option("--out", o.out, "Output CSV");
  auto* zeta = filter->add_subcommand("zeta", "CSV of the filtered 2p-dimensional process");
  zeta->add_option("--in", o.in, "Input CSV with column x")->required();
  zeta->add_option("--p", o.p, "AR order")->required();
  zeta->add_option("--kernel", o.kernel, "Noise kernel");
  zeta->add_option("--out", o.out, "Output CSV");

  auto* estimate = app.add_subcommand("estimate", "Exact MLE with plug-in standard errors");
  estimate->add_option("--in", o.in, "Input CSV with column x")->required();
  estimate->add_option("--p", o.p, "AR order")->required();
  estimate->add_option("--kernel", o.kernel, "Noise kernel");
  estimate->add_option("--alpha", o.alpha, "Level of the confidence ellipsoid");
  estimate->add_option("--plugin", o.plugin, "Information plug-in for the ellipsoid")
      ->check(CLI::IsMember({"gram", "model"}));
  estimate->add_option("--out", o.out, "Output JSON");

  auto* test = app.add_subcommand("test", "Likelihood-ratio test of theta = theta0");
  test->add_option("--in", o.in, "Input CSV with column x")->required();
  test->add_option("--p", o.p, "AR order")->required();
  test->add_option("--kernel", o.kernel, "Noise kernel");
  test->add_option("--theta0", o.theta0, "Null value, comma separated")->required();
  test->add_option("--alpha", o.alpha, "Level");
  test->add_option("--out", o.out, "Output JSON");

  auto* lan = app.add_subcommand("lan", "Local log-likelihood ratio decomposition");
  lan->add_option("--in", o.in, "Input CSV with column x")->required();
  lan->add_option("--p", o.p_opt, "AR order (must match --theta0)");
  lan->add_option("--kernel", o.kernel, "Noise kernel");
  lan->add_option("--theta0", o.theta0, "Base point, comma separated")->required();
  lan->add_option("--u", o.u, "Local direction, comma separated")->required();
  lan->add_option("--out", o.out, "Output JSON");

  auto* validate = app.add_subcommand("validate-kernel", "Run the recursion on a kernel and report");
  validate->add_option("--kernel", o.kernel, "Noise kernel")->required();
  validate->add_option("--horizon", o.horizon, "Number of steps")->check(CLI::Range(2, 100000000));
  validate->add_option("--out", o.out, "Output JSON");

  auto* experiment = app.add_subcommand("experiment", "Monte Carlo verification experiment");
  experiment->add_option("--config", o.config, "Config JSON file");
  experiment->add_option("--kind", o.kind, "Experiment name (overrides config)");
  experiment->add_option("--theta", o.theta, "True AR coefficients");
  experiment->add_option("--kernel", o.exp_kernel, "Noise kernel");
  experiment->add_option("--sizes", o.sizes, "Sample sizes, comma separated");
  experiment->add_option("--replicates", o.replicates, "Replicates");
  experiment->add_option("--seed", o.exp_seed, "Seed");
  experiment->add_option("--alpha", o.exp_alpha, "Test level");
  experiment->add_option("--u", o.u, "Local shift");
  experiment->add_option("--v", o.v, "LIL direction");
  experiment->add_option("--lil-start", o.lil_start, "First n of the LIL window");
  experiment->add_option("--jobs", o.jobs, "Worker threads");
  experiment->add_option("--out-dir", o.out_dir, "Directory for report.json, raw.csv, curves.csv");
  experiment->add_option("--out", o.out, "Report JSON (stdout when omitted)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(o, out, err);
    if (dump->parsed()) return cmd_filter_dump(o, out);
    if (zeta->parsed()) return cmd_filter_zeta(o, out);
    if (estimate->parsed()) return cmd_estimate(o, out);
    if (test->parsed()) return cmd_test(o, out);
    if (lan->parsed()) return cmd_lan(o, out);
    if (validate->parsed()) return cmd_validate(o, out);
    if (experiment->parsed()) return cmd_experiment(o, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const Json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kDataFormat;
  }
  return kUsage;
}

}  // namespace armle::cli
