#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "exicl/distance.hpp"
#include "exicl/generator.hpp"
#include "exicl/icl.hpp"
#include "exicl/io.hpp"
#include "exicl/optimizer.hpp"
#include "exicl/types.hpp"

namespace exicl::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kIo = 2, kNumerical = 3 };

/// Hyperparameter flags shared by cluster, sweep and eval. Unset values fall
/// back to the defaults: alpha 4, tau 0.01, omega 1, nu b + 1, gamma = delta = 0.5,
/// mu = data centre.
struct HyperFlags {
  std::optional<double> alpha, tau, omega, nu, gamma, delta;
  std::optional<std::string> mu;

  void add_to(CLI::App& app) {
    app.add_option("--alpha", alpha, "Dirichlet weight (default 4)");
    app.add_option("--tau", tau, "centre precision scale (default 0.01)");
    app.add_option("--omega", omega, "diagonal of xi (default 1)");
    app.add_option("--nu", nu, "Wishart degrees of freedom (default b + 1)");
    app.add_option("--gamma", gamma, "Gamma shape, univariate data (default 0.5)");
    app.add_option("--delta", delta, "Gamma rate, univariate data (default 0.5)");
    app.add_option("--mu", mu, "prior centre: scalar or comma-separated vector (default data centre)");
  }

  bool univariate(std::size_t b) const { return b == 1 && !omega && !nu; }
};

namespace detail {

inline std::vector<double> parse_list(const std::string& text, const char* flag) {
  std::vector<double> out;
  for (auto cell : exicl::detail::split(text)) {
    const auto v = exicl::detail::parse_double(cell);
    if (!v) throw ValidationError(std::string(flag) + ": '" + std::string(cell) + "' is not a number");
    out.push_back(*v);
  }
  return out;
}

inline Vector parse_mu(const std::optional<std::string>& text, std::size_t b, const Vector& fallback) {
  if (!text) return fallback;
  const auto v = parse_list(*text, "--mu");
  if (v.size() == 1) return Vector::Constant(static_cast<Eigen::Index>(b), v.front());
  if (v.size() != b)
    throw ValidationError("--mu has " + std::to_string(v.size()) + " entries, expected 1 or " + std::to_string(b));
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline HyperParams build_params(const HyperFlags& f, std::size_t b, const Vector& centre) {
  if (f.univariate(b)) {
    UvHyperParams p;
    p.alpha = f.alpha.value_or(4.0);
    p.tau = f.tau.value_or(0.01);
    p.mu = parse_mu(f.mu, 1, centre)(0);
    p.gamma = f.gamma.value_or(0.5);
    p.delta = f.delta.value_or(0.5);
    validate_hyperparams(p, 1);
    return p;
  }
  if (f.gamma || f.delta)
    throw ValidationError("--gamma/--delta apply to univariate data without --nu/--omega");
  MvHyperParams p;
  p.alpha = f.alpha.value_or(4.0);
  p.tau = f.tau.value_or(0.01);
  p.mu = parse_mu(f.mu, b, centre);
  p.nu = f.nu.value_or(static_cast<double>(b) + 1.0);
  p.omega = f.omega.value_or(1.0);
  validate_hyperparams(p, b);
  return p;
}

template <class Fn>
decltype(auto) with_prior(const HyperParams& params, std::size_t b, Fn&& fn) {
  return std::visit(
      [&](const auto& p) -> decltype(auto) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, MvHyperParams>)
          return fn(NormalWishart(p, b));
        else
          return fn(NormalGamma(p, b));
      },
      params);
}

struct RunFlags {
  int restarts = 10;
  int sweeps = 15;
  double beta1 = 0.1;
  double beta2 = 0.01;
  int kmax = 20;
  std::uint64_t seed = 0;
  std::string metric = "euclidean";
  std::string algorithm = "combined";
  bool standardize = false;
  unsigned threads = 0;

  void add_to(CLI::App& app) {
    app.add_option("--restarts", restarts, "independent random restarts")->capture_default_str();
    app.add_option("--sweeps", sweeps, "maximum sweeps per restart")->capture_default_str();
    app.add_option("--beta1", beta1, "Beta-Binomial block-size shape 1")->capture_default_str();
    app.add_option("--beta2", beta2, "Beta-Binomial block-size shape 2")->capture_default_str();
    app.add_option("--kmax", kmax, "maximum number of groups (0 = unlimited; initial K is 20 then)")
        ->capture_default_str();
    app.add_option("--seed", seed, "master RNG seed")->capture_default_str();
    app.add_option("--metric", metric, "euclidean or manhattan")->capture_default_str();
    app.add_option("--algorithm", algorithm, "combined or plain")->capture_default_str();
    app.add_flag("--standardize", standardize, "standardise columns (mean 0, sd 1) first");
    app.add_option("--threads", threads, "worker threads (0 = ICL_THREADS or all cores)");
  }

  SearchConfig config() const {
    SearchConfig c;
    c.max_sweeps = sweeps;
    c.restarts = restarts;
    c.beta1 = beta1;
    c.beta2 = beta2;
    if (kmax > 0)
      c.k_max = kmax;
    else if (kmax == 0)
      c.k_max.reset();
    else
      throw ValidationError("--kmax must be >= 0");
    c.seed = seed;
    c.algorithm = parse_algorithm(algorithm);
    c.threads = threads;
    c.validate();
    return c;
  }

  RunMetadata metadata(const SearchConfig& c) const {
    RunMetadata m;
    m.seed = seed;
    m.restarts = restarts;
    m.max_sweeps = sweeps;
    m.beta1 = beta1;
    m.beta2 = beta2;
    m.k_max = c.k_max;
    m.algorithm = algorithm;
    m.metric = metric;
    m.standardized = standardize;
    return m;
  }
};

struct Prepared {
  DataSet data;
  DistanceMatrix dist;
  Vector centre;
};

inline Prepared prepare(const std::string& path, const RunFlags& run, bool need_distances) {
  Prepared p;
  p.data = read_csv(path);
  if (run.standardize) p.data = standardize(p.data).data;
  p.centre = p.data.centre();
  if (need_distances) p.dist = distance_matrix(p.data, parse_metric(run.metric));
  return p;
}

inline Solution search(const Prepared& prep, const HyperParams& params, const SearchConfig& config) {
  return with_prior(params, prep.data.b(), [&](const auto& prior) {
    return multi_start(prep.data, prior, config,
                       config.algorithm == Algorithm::combined ? &prep.dist : nullptr);
  });
}

inline std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string shortest(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

}  // namespace detail

inline int cmd_cluster(const std::string& data_path, const HyperFlags& hf, const detail::RunFlags& run,
                       const std::string& out_path, const std::string& plot_path, bool omit_runtime,
                       std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const SearchConfig config = run.config();
  const auto prep = detail::prepare(data_path, run, config.algorithm == Algorithm::combined);
  const HyperParams params = detail::build_params(hf, prep.data.b(), prep.centre);
  const Solution sol = detail::search(prep, params, config);
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

  RunMetadata meta = run.metadata(config);
  if (!omit_runtime) meta.runtime_ms = ms;
  if (!out_path.empty()) write_result(sol, params, meta, out_path);
  if (!plot_path.empty()) {
    std::ofstream plot = exicl::detail::open_out(plot_path);
    for (std::size_t j = 0; j < prep.data.b(); ++j) plot << 'x' << j + 1 << ',';
    plot << "label\n";
    for (std::size_t i = 0; i < prep.data.n(); ++i) {
      for (std::size_t j = 0; j < prep.data.b(); ++j)
        plot << exicl::detail::format_double(prep.data.row(i)(static_cast<Eigen::Index>(j))) << ',';
      plot << sol.allocation[i] << '\n';
    }
  }
  out << "K " << sol.K << '\n' << "icl_ex " << exicl::detail::format_double(sol.icl) << '\n';
  return kOk;
}

inline int cmd_eval(const std::string& data_path, const std::string& labels_path, const HyperFlags& hf,
                    bool standardize_data, std::ostream& out) {
  DataSet data = read_csv(data_path);
  if (standardize_data) data = standardize(data).data;
  const std::vector<int> labels = read_labels(labels_path);
  if (labels.size() != data.n())
    throw ValidationError("label file has " + std::to_string(labels.size()) + " entries but data has " +
                          std::to_string(data.n()) + " rows");
  const Allocation z = relabel_compact(labels);
  const HyperParams params = detail::build_params(hf, data.b(), data.centre());
  const IclValue v = icl_exact(data, z, params);
  out << "data_term " << exicl::detail::format_double(v.data_term) << '\n'
      << "prior_term " << exicl::detail::format_double(v.prior_term) << '\n'
      << "total " << exicl::detail::format_double(v.total) << '\n';
  return kOk;
}

struct GenerateFlags {
  long long n = 0;
  long long k = 0;
  long long b = 2;
  std::uint64_t seed = 0;
  std::string out_data;
  std::string out_labels;
};

inline int cmd_generate(const GenerateFlags& g, const HyperFlags& hf, std::ostream& out) {
  if (g.n < 1) throw ValidationError("--n must be >= 1");
  if (g.k < 1) throw ValidationError("--k must be >= 1");
  if (g.b < 1) throw ValidationError("--b must be >= 1");
  const auto b = static_cast<std::size_t>(g.b);
  const HyperParams params = detail::build_params(hf, b, Vector::Zero(static_cast<Eigen::Index>(b)));
  Engine rng = derive_engine(g.seed, 0u);
  const GeneratedSample s =
      std::holds_alternative<MvHyperParams>(params)
          ? sample_dataset(static_cast<std::size_t>(g.n), static_cast<std::size_t>(g.k), std::get<MvHyperParams>(params), rng)
          : sample_dataset_1d(static_cast<std::size_t>(g.n), static_cast<std::size_t>(g.k), std::get<UvHyperParams>(params), rng);
  std::vector<std::string> header;
  for (std::size_t j = 0; j < b; ++j) header.push_back("x" + std::to_string(j + 1));
  write_csv(g.out_data, s.data, header);
  write_labels(g.out_labels, s.allocation.labels());
  out << "n " << s.data.n() << '\n' << "K " << s.allocation.K() << '\n';
  return kOk;
}

/// Candidate values per hyperparameter; the cross product is enumerated with
/// the last listed parameter varying fastest: tau, omega, delta, gamma, nu,
/// alpha, beta1, beta2.
struct SweepGrid {
  std::vector<double> tau, omega, delta, gamma, nu, alpha, beta1, beta2;

  struct Point {
    std::optional<double> tau, omega, delta, gamma, nu, alpha;
    double beta1 = 0.1, beta2 = 0.01;
  };

  std::vector<Point> points() const {
    auto axis = [](const std::vector<double>& v) {
      std::vector<std::optional<double>> a(v.begin(), v.end());
      if (a.empty()) a.push_back(std::nullopt);
      return a;
    };
    std::vector<Point> out;
    for (auto t : axis(tau))
      for (auto o : axis(omega))
        for (auto d : axis(delta))
          for (auto g : axis(gamma))
            for (auto n : axis(nu))
              for (auto a : axis(alpha))
                for (auto b1 : axis(beta1))
                  for (auto b2 : axis(beta2)) {
                    Point p{t, o, d, g, n, a};
                    if (b1) p.beta1 = *b1;
                    if (b2) p.beta2 = *b2;
                    out.push_back(p);
                  }
    return out;
  }
};

struct SweepRow {
  HyperParams params;
  double beta1 = 0.0, beta2 = 0.0;
  int K = 0;
  double icl = 0.0;
  std::string status = "ok";
};

inline std::vector<SweepRow> run_sweep(const std::string& data_path, const HyperFlags& base, const SweepGrid& grid,
                                       const detail::RunFlags& run) {
  const SearchConfig base_config = run.config();
  const auto prep = detail::prepare(data_path, run, base_config.algorithm == Algorithm::combined);
  std::vector<SweepRow> rows;
  for (const auto& pt : grid.points()) {
    HyperFlags hf = base;
    if (pt.tau) hf.tau = pt.tau;
    if (pt.omega) hf.omega = pt.omega;
    if (pt.delta) hf.delta = pt.delta;
    if (pt.gamma) hf.gamma = pt.gamma;
    if (pt.nu) hf.nu = pt.nu;
    if (pt.alpha) hf.alpha = pt.alpha;
    SweepRow row;
    SearchConfig config = base_config;
    config.beta1 = grid.beta1.empty() ? run.beta1 : pt.beta1;
    config.beta2 = grid.beta2.empty() ? run.beta2 : pt.beta2;
    row.beta1 = config.beta1;
    row.beta2 = config.beta2;
    try {
      row.params = detail::build_params(hf, prep.data.b(), prep.centre);
      config.validate();
      const Solution sol = detail::search(prep, row.params, config);
      row.K = sol.K;
      row.icl = sol.icl;
    } catch (const std::exception& e) {
      row.status = std::string("error: ") + e.what();
      row.icl = std::numeric_limits<double>::quiet_NaN();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace detail {

struct RowCells {
  std::vector<std::string> names;
  std::vector<double> values;
};

inline RowCells param_cells(const SweepRow& r) {
  RowCells c;
  if (const auto* mv = std::get_if<MvHyperParams>(&r.params)) {
    c.names = {"tau", "omega", "nu", "alpha"};
    c.values = {mv->tau, mv->omega, mv->nu, mv->alpha};
  } else {
    const auto& uv = std::get<UvHyperParams>(r.params);
    c.names = {"tau", "delta", "gamma", "alpha"};
    c.values = {uv.tau, uv.delta, uv.gamma, uv.alpha};
  }
  c.names.insert(c.names.end(), {"beta1", "beta2"});
  c.values.insert(c.values.end(), {r.beta1, r.beta2});
  return c;
}

}  // namespace detail

/// Aligned table, ICL to two decimals.
inline void print_sweep_table(const std::vector<SweepRow>& rows, std::ostream& out) {
  if (rows.empty()) return;
  const auto head = detail::param_cells(rows.front());
  for (const auto& n : head.names) out << std::setw(9) << n;
  out << std::setw(5) << "K" << std::setw(12) << "icl_ex" << "  status\n";
  for (const auto& r : rows) {
    for (double v : detail::param_cells(r).values) out << std::setw(9) << detail::shortest(v);
    out << std::setw(5) << r.K << std::setw(12) << detail::fixed2(r.icl) << "  " << r.status << '\n';
  }
}

inline void write_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path) {
  std::ofstream out = exicl::detail::open_out(path);
  if (rows.empty()) return;
  for (const auto& n : detail::param_cells(rows.front()).names) out << n << ',';
  out << "K,icl_ex,status\n";
  for (const auto& r : rows) {
    for (double v : detail::param_cells(r).values) out << exicl::detail::format_double(v) << ',';
    std::string status = r.status;
    std::replace(status.begin(), status.end(), ',', ';');
    out << r.K << ',' << exicl::detail::format_double(r.icl) << ',' << status << '\n';
  }
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

/// Entry point shared by the executable and the tests. `args` excludes the program name.
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exact-ICL clustering of Gaussian mixtures"};
  app.require_subcommand(1);

  std::string data_path, labels_path, out_path, plot_path;
  bool omit_runtime = false;
  HyperFlags cluster_hf, sweep_hf, eval_hf, gen_hf;
  detail::RunFlags cluster_run, sweep_run;
  bool eval_standardize = false;
  GenerateFlags gen;
  SweepGrid grid;
  std::string alpha_grid, tau_grid, omega_grid, delta_grid, gamma_grid, nu_grid, beta1_grid, beta2_grid;

  auto* cluster = app.add_subcommand("cluster", "maximise the exact ICL over allocations");
  cluster->add_option("--data", data_path, "input CSV")->required();
  cluster_hf.add_to(*cluster);
  cluster_run.add_to(*cluster);
  cluster->add_option("--out", out_path, "result document (JSON)");
  cluster->add_option("--plot-data", plot_path, "CSV of points with their labels");
  cluster->add_flag("--omit-runtime", omit_runtime, "write runtime_ms as null (byte-reproducible output)");

  auto* sweep = app.add_subcommand("sweep", "run the search over a hyperparameter grid");
  sweep->add_option("--data", data_path, "input CSV")->required();
  sweep_hf.add_to(*sweep);
  sweep_run.add_to(*sweep);
  sweep->add_option("--alpha-grid", alpha_grid);
  sweep->add_option("--tau-grid", tau_grid);
  sweep->add_option("--omega-grid", omega_grid);
  sweep->add_option("--delta-grid", delta_grid);
  sweep->add_option("--gamma-grid", gamma_grid);
  sweep->add_option("--nu-grid", nu_grid);
  sweep->add_option("--beta1-grid", beta1_grid);
  sweep->add_option("--beta2-grid", beta2_grid);
  sweep->add_option("--out", out_path, "CSV with full-precision values");

  auto* eval = app.add_subcommand("eval", "evaluate the exact ICL of a given labelling");
  eval->add_option("--data", data_path, "input CSV")->required();
  eval->add_option("--labels", labels_path, "labels, one per line")->required();
  eval_hf.add_to(*eval);
  eval->add_flag("--standardize", eval_standardize, "standardise columns first");

  auto* generate = app.add_subcommand("generate", "sample a data set from the mixture prior");
  generate->add_option("--n", gen.n, "observations")->required();
  generate->add_option("--k", gen.k, "components")->required();
  generate->add_option("--b", gen.b, "dimension")->capture_default_str();
  generate->add_option("--seed", gen.seed)->capture_default_str();
  generate->add_option("--out-data", gen.out_data)->required();
  generate->add_option("--out-labels", gen.out_labels)->required();
  gen_hf.add_to(*generate);

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kValidation;
  }

  try {
    if (cluster->parsed())
      return cmd_cluster(data_path, cluster_hf, cluster_run, out_path, plot_path, omit_runtime, out);
    if (eval->parsed()) return cmd_eval(data_path, labels_path, eval_hf, eval_standardize, out);
    if (generate->parsed()) return cmd_generate(gen, gen_hf, out);
    if (sweep->parsed()) {
      grid.alpha = alpha_grid.empty() ? std::vector<double>{} : detail::parse_list(alpha_grid, "--alpha-grid");
      grid.tau = tau_grid.empty() ? std::vector<double>{} : detail::parse_list(tau_grid, "--tau-grid");
      grid.omega = omega_grid.empty() ? std::vector<double>{} : detail::parse_list(omega_grid, "--omega-grid");
      grid.delta = delta_grid.empty() ? std::vector<double>{} : detail::parse_list(delta_grid, "--delta-grid");
      grid.gamma = gamma_grid.empty() ? std::vector<double>{} : detail::parse_list(gamma_grid, "--gamma-grid");
      grid.nu = nu_grid.empty() ? std::vector<double>{} : detail::parse_list(nu_grid, "--nu-grid");
      grid.beta1 = beta1_grid.empty() ? std::vector<double>{} : detail::parse_list(beta1_grid, "--beta1-grid");
      grid.beta2 = beta2_grid.empty() ? std::vector<double>{} : detail::parse_list(beta2_grid, "--beta2-grid");
      const auto rows = run_sweep(data_path, sweep_hf, grid, sweep_run);
      print_sweep_table(rows, out);
      if (!out_path.empty()) write_sweep_csv(rows, out_path);
      return kOk;
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << '\n';
    return kNumerical;
  }
  return kValidation;
}

}  // namespace exicl::cli
