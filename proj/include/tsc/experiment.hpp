#pragma once

// Seeded Monte Carlo harness for the synthetic and MNIST scenarios. An
// experiment is a JSON document; it expands into parameter cells, each cell
// runs `trials` independent instances, and the harness reports per-cell
// averages. Trial seeds depend only on (master seed, cell index, trial
// index), so the output does not depend on how many worker threads run.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <ostream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tsc/csv.hpp"
#include "tsc/error.hpp"
#include "tsc/ingest.hpp"
#include "tsc/metrics.hpp"
#include "tsc/outliers.hpp"
#include "tsc/rng.hpp"
#include "tsc/synth.hpp"
#include "tsc/tsc.hpp"
#include "tsc/version.hpp"

namespace tsc {

using json = nlohmann::json;

struct TrialMetrics {
  double ce = 0.0;
  int el = 0;
  double fde = 0.0;
  double outlier_err = std::numeric_limits<double>::quiet_NaN();
  int L_hat = 0;
};

/// One parameter combination. `params` are (column name, printed value)
/// pairs, in output order.
struct Cell {
  std::vector<std::pair<std::string, std::string>> params;
  std::function<TrialMetrics(std::uint64_t trial_seed)> run;
};

struct TrialRecord {
  std::uint64_t seed = 0;
  TrialMetrics metrics;
  double wall_seconds = 0.0;
};

struct CellResult {
  std::vector<std::pair<std::string, std::string>> params;
  std::vector<TrialRecord> trials;
};

struct ExperimentResult {
  std::string scenario;
  std::uint64_t master_seed = 0;
  json spec;
  std::vector<CellResult> cells;
};

/// Seed of trial `trial` in cell `cell`.
constexpr std::uint64_t trial_seed(std::uint64_t master, std::uint64_t cell, std::uint64_t trial) {
  return derive_seed(derive_seed(master, cell), trial);
}

namespace detail {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, std::string("field '") + key + "': " + e.what());
  }
}

template <typename T>
std::vector<T> list_or(const json& j, const char* key, std::vector<T> fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  try {
    if (v.is_array()) return v.get<std::vector<T>>();
    return {v.get<T>()};
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, std::string("field '") + key + "': " + e.what());
  }
}

inline void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::Config, what);
}

inline std::string fmt_param(double v) {
  if (v == std::floor(v) && std::abs(v) < 1e15) return std::to_string(static_cast<long long>(v));
  return format_double(v);
}

/// Clustering options shared by every scenario.
struct ClusterOptions {
  WeightVariant variant = WeightVariant::ExpArccos;
  bool estimate_L = false;
  std::optional<int> fixed_q;
  std::optional<int> max_L;
  int restarts = 10;
  int max_iter = 100;

  static ClusterOptions from(const json& spec) {
    ClusterOptions o;
    const auto variant = get_or<std::string>(spec, "variant", "exp");
    require(variant == "exp" || variant == "ls", "variant must be 'exp' or 'ls'");
    o.variant = variant == "ls" ? WeightVariant::LeastSquares : WeightVariant::ExpArccos;
    const auto policy = get_or<std::string>(spec, "L_policy", "known");
    require(policy == "known" || policy == "estimate", "L_policy must be 'known' or 'estimate'");
    o.estimate_L = policy == "estimate";
    if (spec.contains("q")) {
      o.fixed_q = get_or<int>(spec, "q", 0);
      require(*o.fixed_q >= 1, "q must be >= 1");
    }
    if (spec.contains("max_L")) {
      o.max_L = get_or<int>(spec, "max_L", 0);
      require(*o.max_L >= 1, "max_L must be >= 1");
    }
    o.restarts = get_or<int>(spec, "kmeans_restarts", 10);
    o.max_iter = get_or<int>(spec, "kmeans_max_iter", 100);
    require(o.restarts >= 1 && o.max_iter >= 1, "k-means restarts and max_iter must be >= 1");
    return o;
  }

  TscConfig config(int n_per_cluster, int L, std::uint64_t seed) const {
    TscConfig c;
    c.q = fixed_q ? *fixed_q : default_q(n_per_cluster, !estimate_L);
    c.weight_variant = variant;
    if (estimate_L)
      c.num_subspaces = EstimateSubspaces{max_L};
    else
      c.num_subspaces = KnownSubspaces{L};
    c.seed = seed;
    c.kmeans_restarts = restarts;
    c.kmeans_max_iter = max_iter;
    return c;
  }
};

inline TrialMetrics score_clustering(const PointSet& points, const ClusterOptions& opts, int n_per_cluster, int L,
                                     std::uint64_t seed) {
  const ClusterResult res = run_tsc(points, opts.config(n_per_cluster, L, seed));
  const Labels& truth = *points.labels();
  TrialMetrics t;
  t.ce = clustering_error(truth, res.labels);
  t.el = el_error(L, res.L_hat);
  t.fde = feature_detection_error(res.graph.adjacency, truth);
  t.L_hat = res.L_hat;
  return t;
}

inline std::vector<Cell> intersect_cells(const json& spec, const ClusterOptions& opts) {
  const int m = get_or(spec, "m", 200);
  const int d = get_or(spec, "d", 10);
  const int n = get_or(spec, "n", 20 * d);
  std::vector<int> all_t(d + 1);
  std::iota(all_t.begin(), all_t.end(), 0);
  const auto ts = list_or<int>(spec, "t", all_t);
  require(d >= 1 && n >= 1, "intersect needs d, n >= 1");
  std::vector<Cell> cells;
  for (int t : ts) {
    require(t >= 0 && t <= d && 2 * d - t <= m, "intersect needs 0 <= t <= d and 2d - t <= m");
    cells.push_back({{{"t", std::to_string(t)}}, [=](std::uint64_t seed) {
                       auto [u1, u2] = intersecting_pair(m, d, t, derive_seed(seed, 1));
                       const GroundTruth gt = union_of_subspaces({u1, u2}, {n, n}, derive_seed(seed, 2));
                       return score_clustering(gt.points, opts, n, 2, derive_seed(seed, 3));
                     }});
  }
  return cells;
}

inline std::vector<Cell> orthogonal_cells(const json& spec, const ClusterOptions& opts) {
  const int m = get_or(spec, "m", 30);
  const int L = get_or(spec, "L", 3);
  const int d = get_or(spec, "d", 5);
  const auto ns = list_or<int>(spec, "n", {50});
  require(L >= 1 && d >= 1 && L * d <= m, "orthogonal needs L d <= m");
  std::vector<Cell> cells;
  for (int n : ns) {
    require(n >= 1, "n must be >= 1");
    cells.push_back({{{"n", std::to_string(n)}}, [=](std::uint64_t seed) {
                       const auto bases = orthogonal_subspaces(m, L, d, derive_seed(seed, 1));
                       const GroundTruth gt = union_of_subspaces(bases, std::vector<int>(L, n), derive_seed(seed, 2));
                       return score_clustering(gt.points, opts, n, L, derive_seed(seed, 3));
                     }});
  }
  return cells;
}

/// grid, noise-grid and huge-noise share one generator: L subspaces (random
/// or sharing a d/3-dimensional intersection), n points each, noise sigma2,
/// s erasures per point.
inline std::vector<Cell> grid_cells(const json& spec, const ClusterOptions& opts, const std::string& scenario) {
  const bool huge = scenario == "huge-noise";
  const int m = get_or(spec, "m", huge ? 400 : 50);
  const int L = get_or(spec, "L", huge ? 5 : 10);
  const auto ds = list_or<int>(spec, "d", {huge ? 5 : 6});
  const auto ns = list_or<int>(spec, "n", {huge ? 100 : 60});
  const auto ss = list_or<int>(spec, "s", {0});
  const auto sig = list_or<double>(spec, "sigma2", {huge ? 1.0 : 0.0});
  const auto kind = get_or<std::string>(spec, "subspaces", "random");
  require(kind == "random" || kind == "shared", "subspaces must be 'random' or 'shared'");
  const auto order_name = get_or<std::string>(spec, "corruption_order", "noise-first");
  require(order_name == "noise-first" || order_name == "erasure-first",
          "corruption_order must be 'noise-first' or 'erasure-first'");
  const auto order =
      order_name == "noise-first" ? CorruptionOrder::NoiseThenErasure : CorruptionOrder::ErasureThenNoise;
  require(L >= 1, "L must be >= 1");

  std::vector<Cell> cells;
  for (int d : ds)
    for (int n : ns)
      for (int s : ss)
        for (double sigma2 : sig) {
          require(d >= 1 && d <= m && n >= 1, "need 1 <= d <= m and n >= 1");
          require(s >= 0 && s < m, "need 0 <= s < m");
          require(sigma2 >= 0.0, "sigma2 must be >= 0");
          require(kind == "random" || d % 3 == 0, "shared subspaces need d divisible by 3");
          std::vector<std::pair<std::string, std::string>> params;
          if (!huge) params.emplace_back("d", std::to_string(d));
          params.emplace_back("n", std::to_string(n));
          if (scenario == "grid") params.emplace_back("s", std::to_string(s));
          if (scenario != "grid" || spec.contains("sigma2")) params.emplace_back("sigma2", fmt_param(sigma2));
          cells.push_back({std::move(params), [=](std::uint64_t seed) {
                             const auto bases = kind == "shared"
                                                    ? shared_intersection_ensemble(m, L, d, derive_seed(seed, 1))
                                                    : random_subspaces(m, L, d, derive_seed(seed, 1));
                             UnionOptions u;
                             u.sigma2 = sigma2;
                             u.erasures = s;
                             u.order = order;
                             const GroundTruth gt = union_of_subspaces(bases, std::vector<int>(L, n), derive_seed(seed, 2), u);
                             return score_clustering(gt.points, opts, n, L, derive_seed(seed, 3));
                           }});
        }
  return cells;
}

inline double outlier_c_from(const json& spec) {
  if (!spec.contains("c")) return kNoiselessOutlierC;
  const json& c = spec.at("c");
  if (c.is_string()) {
    const auto name = c.get<std::string>();
    if (name == "noiseless") return kNoiselessOutlierC;
    if (name == "noisy") return kNoisyOutlierC;
    throw Error(ErrorKind::Config, "c must be a number, 'noiseless' or 'noisy'");
  }
  require(c.is_number() && c.get<double>() > 0.0, "c must be positive");
  return c.get<double>();
}

inline std::vector<Cell> outlier_cells(const json& spec) {
  const int d = get_or(spec, "d", 5);
  const auto ms = list_or<int>(spec, "m", {50, 100, 200});
  const int n = get_or(spec, "n", 50);
  const double sigma2 = get_or(spec, "sigma2", 0.0);
  const double c = outlier_c_from(spec);
  const auto mode_name = get_or<std::string>(spec, "outlier_mode", sigma2 > 0.0 ? "gaussian" : "sphere");
  require(mode_name == "sphere" || mode_name == "gaussian", "outlier_mode must be 'sphere' or 'gaussian'");
  const auto mode = mode_name == "sphere" ? OutlierMode::Sphere : OutlierMode::Gaussian;
  require(d >= 1 && n >= 1 && sigma2 >= 0.0, "outliers needs d, n >= 1 and sigma2 >= 0");
  std::vector<Cell> cells;
  for (int m : ms) {
    const int L = spec.contains("L") ? get_or(spec, "L", 1) : 2 * m / d;
    const int n_out = spec.contains("outliers") ? get_or(spec, "outliers", 0) : L * n;
    require(m >= d && L >= 1 && n_out >= 0, "outliers needs m >= d, L >= 1");
    cells.push_back({{{"m", std::to_string(m)}}, [=](std::uint64_t seed) {
                       UnionOptions u;
                       u.sigma2 = sigma2;
                       u.outliers = n_out;
                       u.outlier_mode = mode;
                       u.scale_noisy_inliers = sigma2 > 0.0;
                       const auto bases = random_subspaces(m, L, d, derive_seed(seed, 1));
                       const GroundTruth gt = union_of_subspaces(bases, std::vector<int>(L, n), derive_seed(seed, 2), u);
                       const OutlierReport rep = detect_outliers(gt.points, c);
                       TrialMetrics t;
                       t.outlier_err = outlier_confusion(rep.flags, gt.outlier_mask).misclassification_error;
                       return t;
                     }});
  }
  return cells;
}

inline std::vector<Cell> mnist_cells(const json& spec, const ClusterOptions& opts) {
  require(spec.contains("images") && spec.contains("labels"), "mnist needs 'images' and 'labels' paths");
  const auto ds = std::make_shared<const IdxDataset>(
      load_idx(spec.at("images").get<std::string>(), spec.at("labels").get<std::string>()));
  const auto digits = list_or<int>(spec, "digits", {2, 4, 8});
  const auto ns = list_or<int>(spec, "n", {100});
  SubsampleOptions sub;
  sub.center = get_or(spec, "center", false);
  const int drop_pc = get_or(spec, "remove_principal_components", 0);
  require(!digits.empty(), "digits must be nonempty");
  const int L = static_cast<int>(digits.size());
  std::vector<Cell> cells;
  for (int n : ns) {
    require(n >= 1, "n must be >= 1");
    cells.push_back({{{"n", std::to_string(n)}}, [=](std::uint64_t seed) {
                       PointSet pts = subsample_digits(*ds, digits, n, derive_seed(seed, 1), sub);
                       if (drop_pc > 0) pts = normalize_columns(remove_top_principal_components(pts, drop_pc));
                       return score_clustering(pts, opts, n, L, derive_seed(seed, 3));
                     }});
  }
  return cells;
}

}  // namespace detail

inline const std::vector<std::string>& known_scenarios() {
  static const std::vector<std::string> names = {"intersect", "grid",     "noise-grid", "huge-noise",
                                                 "outliers",  "mnist",    "orthogonal"};
  return names;
}

/// Expands an experiment document into cells. Throws Error(Config) on any
/// invalid field.
inline std::vector<Cell> build_cells(const json& spec) {
  detail::require(spec.is_object(), "experiment spec must be a JSON object");
  const auto scenario = detail::get_or<std::string>(spec, "scenario", "");
  const auto opts = detail::ClusterOptions::from(spec);
  if (scenario == "intersect") return detail::intersect_cells(spec, opts);
  if (scenario == "orthogonal") return detail::orthogonal_cells(spec, opts);
  if (scenario == "grid" || scenario == "noise-grid" || scenario == "huge-noise")
    return detail::grid_cells(spec, opts, scenario);
  if (scenario == "outliers") return detail::outlier_cells(spec);
  if (scenario == "mnist") return detail::mnist_cells(spec, opts);
  throw Error(ErrorKind::Config, "unknown scenario '" + scenario + "'");
}

inline ExperimentResult run_experiment(const json& spec, int jobs = 1) {
  detail::require(jobs >= 1, "jobs must be >= 1");
  ExperimentResult result;
  result.spec = spec;
  result.scenario = detail::get_or<std::string>(spec, "scenario", "");
  result.master_seed = detail::get_or<std::uint64_t>(spec, "seed", 0);
  const int trials = detail::get_or(spec, "trials", 20);
  detail::require(trials >= 1, "trials must be >= 1");
  const std::vector<Cell> cells = build_cells(spec);

  result.cells.resize(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    result.cells[c].params = cells[c].params;
    result.cells[c].trials.resize(trials);
  }
  const std::size_t total = cells.size() * static_cast<std::size_t>(trials);
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(jobs));

  auto worker = [&](int id) {
    try {
      for (std::size_t task = next++; task < total; task = next++) {
        const std::size_t c = task / trials;
        const std::size_t t = task % trials;
        TrialRecord& rec = result.cells[c].trials[t];
        rec.seed = trial_seed(result.master_seed, c, t);
        const auto start = std::chrono::steady_clock::now();
        rec.metrics = cells[c].run(rec.seed);
        rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      }
    } catch (...) {
      errors[static_cast<std::size_t>(id)] = std::current_exception();
      next = total;
    }
  };

  if (jobs == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < jobs; ++k) pool.emplace_back(worker, k);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return result;
}

struct CellSummary {
  double fde_mean = 0.0;
  double ce_mean = 0.0;
  double ce_std = 0.0;
  double el_mean = 0.0;
  double outlier_err_mean = 0.0;
};

/// Means in trial order; std is the population standard deviation.
inline CellSummary summarize(const CellResult& cell) {
  CellSummary s;
  const auto n = static_cast<double>(cell.trials.size());
  for (const auto& t : cell.trials) {
    s.fde_mean += t.metrics.fde;
    s.ce_mean += t.metrics.ce;
    s.el_mean += t.metrics.el;
    s.outlier_err_mean += t.metrics.outlier_err;
  }
  s.fde_mean /= n;
  s.ce_mean /= n;
  s.el_mean /= n;
  s.outlier_err_mean /= n;
  double var = 0.0;
  for (const auto& t : cell.trials) var += (t.metrics.ce - s.ce_mean) * (t.metrics.ce - s.ce_mean);
  s.ce_std = std::sqrt(var / n);
  return s;
}

/// One row per cell. Outlier experiments: `m,misclassification_error`;
/// clustering experiments: `<params>,fde_mean,ce_mean,ce_std,el_mean`.
inline void write_summary_csv(std::ostream& out, const ExperimentResult& res) {
  if (res.cells.empty()) return;
  const bool outliers = res.scenario == "outliers";
  const auto& first = res.cells.front().params;
  for (std::size_t k = 0; k < first.size(); ++k) out << (k ? "," : "") << first[k].first;
  out << (outliers ? ",misclassification_error\n" : ",fde_mean,ce_mean,ce_std,el_mean\n");
  for (const auto& cell : res.cells) {
    for (std::size_t k = 0; k < cell.params.size(); ++k) out << (k ? "," : "") << cell.params[k].second;
    const CellSummary s = summarize(cell);
    if (outliers)
      out << ',' << format_double(s.outlier_err_mean) << '\n';
    else
      out << ',' << format_double(s.fde_mean) << ',' << format_double(s.ce_mean) << ',' << format_double(s.ce_std)
          << ',' << format_double(s.el_mean) << '\n';
  }
}

/// Per-trial rows: scenario,trial,seed,ce,el,fde,outlier_err,<params>.
inline void write_trials_csv(std::ostream& out, const ExperimentResult& res) {
  out << "scenario,trial,seed,ce,el,fde,outlier_err";
  if (!res.cells.empty())
    for (const auto& [name, value] : res.cells.front().params) out << ',' << name;
  out << '\n';
  for (const auto& cell : res.cells)
    for (std::size_t t = 0; t < cell.trials.size(); ++t) {
      const auto& rec = cell.trials[t];
      out << res.scenario << ',' << t << ',' << rec.seed << ',' << format_double(rec.metrics.ce) << ','
          << rec.metrics.el << ',' << format_double(rec.metrics.fde) << ','
          << (std::isnan(rec.metrics.outlier_err) ? std::string() : format_double(rec.metrics.outlier_err));
      for (const auto& [name, value] : cell.params) out << ',' << value;
      out << '\n';
    }
}

/// Config snapshot, seeds and timings. Re-running `spec` reproduces every
/// metric in the manifest.
inline json run_manifest(const ExperimentResult& res) {
  json m;
  m["version"] = kVersionString;
  m["scenario"] = res.scenario;
  m["master_seed"] = res.master_seed;
  m["spec"] = res.spec;
  json cells = json::array();
  for (const auto& cell : res.cells) {
    json c;
    for (const auto& [name, value] : cell.params) c["params"][name] = value;
    json trials = json::array();
    for (const auto& t : cell.trials) {
      json entry = {{"seed", t.seed}, {"wall_seconds", t.wall_seconds}};
      if (std::isnan(t.metrics.outlier_err)) {
        entry["ce"] = t.metrics.ce;
        entry["el"] = t.metrics.el;
        entry["fde"] = t.metrics.fde;
        entry["L_hat"] = t.metrics.L_hat;
      } else {
        entry["outlier_err"] = t.metrics.outlier_err;
      }
      trials.push_back(std::move(entry));
    }
    c["trials"] = std::move(trials);
    cells.push_back(std::move(c));
  }
  m["cells"] = std::move(cells);
  return m;
}

}  // namespace tsc
