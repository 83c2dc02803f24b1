#include "adcp/experiments.hpp"

#include <Eigen/Eigenvalues>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "adcp/bounds.hpp"
#include "adcp/linalg.hpp"
#include "json.hpp"

namespace adcp::experiments {
namespace {

constexpr std::uint64_t kRunSalt = 0x72756e;  // decouples run RNG from instance seed

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

Vector gather(const Vector& v, const IndexSet& omega) {
  Vector out(omega.size());
  for (Index t = 0; t < omega.size(); ++t)
    out(t) = v(omega.indices[static_cast<std::size_t>(t)]);
  return out;
}

std::vector<double> distinct_in_order(const Table& table,
                                      const std::string& column) {
  const auto c = static_cast<std::size_t>(table.column_index(column));
  std::vector<double> out;
  for (const auto& row : table.rows) {
    const double v = row[c];
    bool seen = false;
    for (double u : out) seen = seen || u == v;
    if (!seen) out.push_back(v);
  }
  return out;
}

Index ceil_to_index(double v) {
  return static_cast<Index>(std::llround(std::ceil(v)));
}

void check_grid_n(const SweepConfig& config, Index n) {
  if (n < 2) throw std::invalid_argument("sweep: n must be >= 2");
  if (n > config.max_n && !config.allow_large)
    throw std::invalid_argument(
        "sweep: n exceeds max_n; set allow_large to override");
}

struct CellStats {
  Index trials = 0;
  Index successes = 0;
  Index audit_failures = 0;
  double err_sum = 0.0;
  double err_max = 0.0;
  double entries_sum = 0.0;
  double full_sum = 0.0;
  double wall_sum = 0.0;

  void add(const TrialOutcome& o) {
    trials += 1;
    successes += o.success ? 1 : 0;
    audit_failures += o.audit_ok ? 0 : 1;
    err_sum += o.rel_err;
    err_max = std::max(err_max, o.rel_err);
    entries_sum += static_cast<double>(o.entries);
    full_sum += static_cast<double>(o.fully_observed);
    wall_sum += o.wall_s;
  }
};

void append_rate_row(Table& table, Index n, Index r, Index m,
                     const CellStats& s) {
  const double nd = static_cast<double>(n);
  const double rd = static_cast<double>(r);
  const double md = static_cast<double>(m);
  const double p = md / nd;
  const double t = static_cast<double>(s.trials);
  table.rows.push_back({nd, rd, p, md, t,
                        static_cast<double>(s.successes) / t, s.err_sum / t,
                        s.err_max, s.entries_sum / t, s.full_sum / t, md,
                        md * std::log(nd) * std::log(nd), p / rd,
                        p / std::pow(rd, 1.5),
                        static_cast<double>(s.audit_failures), s.wall_sum / t});
}

const std::vector<std::string>& rate_columns() {
  static const std::vector<std::string> cols = {
      "n",          "r",
      "p",          "m",
      "trials",     "success_rate",
      "mean_rel_err", "max_rel_err",
      "mean_entries", "mean_fully_observed",
      "np",         "np_logsq",
      "p_over_r",   "p_over_r32",
      "audit_failures", "mean_wall_s"};
  return cols;
}

/// Grid of per-column draw counts for one n: m_grid verbatim, else
/// ceil(p n) clamped to at least one draw.
std::vector<Index> draws_for(const SweepConfig& config, Index n) {
  std::vector<Index> out;
  if (!config.m_grid.empty()) {
    out = config.m_grid;
  } else {
    for (double p : config.p_grid)
      out.push_back(std::max<Index>(1, ceil_to_index(p * static_cast<double>(n))));
  }
  if (out.empty())
    throw std::invalid_argument("sweep: m_grid or p_grid required");
  for (Index m : out)
    if (m < 1 || m > 10 * n)
      throw std::invalid_argument("sweep: per-column draws out of range");
  return out;
}

struct TimingCell {
  Index n;
  Index r;
  double ratio;  // draw budget as a multiple of the degrees of freedom
};

const TimingCell kTimingPreset[] = {
    {1000, 10, 3.4},  {1000, 50, 3.3},  {1000, 100, 3.2},
    {5000, 10, 3.4},  {5000, 50, 3.5},  {5000, 100, 3.4},
    {10000, 10, 3.4}, {10000, 50, 3.5}, {10000, 100, 3.5},
};

void plot_prolog(std::ostringstream& out, const std::string& csv_path) {
  out << "# gnuplot script; reads " << csv_path << "\n"
      << "set datafile separator ','\n"
      << "set key autotitle columnhead\n"
      << "set key top left\n"
      << "set grid\n";
}

/// One linespoints curve per distinct value of group_col, x_col on the x
/// axis, y_col on the y axis.
void plot_rate_curves(std::ostringstream& out, const Table& table,
                      const std::string& csv_path,
                      const std::string& group_col, const std::string& x_col,
                      const std::string& y_col, const std::string& label) {
  const auto groups = distinct_in_order(table, group_col);
  const int gc = static_cast<int>(table.column_index(group_col)) + 1;
  const int xc = static_cast<int>(table.column_index(x_col)) + 1;
  const int yc = static_cast<int>(table.column_index(y_col)) + 1;
  if (groups.empty()) {
    out << "# no data rows\n";
    return;
  }
  out << "plot \\\n";
  for (std::size_t i = 0; i < groups.size(); ++i) {
    out << "  '" << csv_path << "' using " << xc << ":((column(" << gc
        << ") == " << fmt(groups[i]) << ") ? column(" << yc
        << ") : 1/0) with linespoints lw 2 title '" << label << "="
        << fmt(groups[i]) << "'";
    out << (i + 1 < groups.size() ? ", \\\n" : "\n");
  }
}

}  // namespace

std::string sweep_kind_name(SweepKind kind) {
  switch (kind) {
    case SweepKind::SuccessVsP: return "success-vs-p";
    case SweepKind::RankCollapse: return "rank-collapse";
    case SweepKind::Timing: return "timing";
    case SweepKind::NoisyCoherence: return "noisy-coherence";
    case SweepKind::DetectionValidation: return "detection-validation";
  }
  throw std::invalid_argument("sweep_kind_name: bad kind");
}

SweepKind sweep_kind_from_name(const std::string& name) {
  if (name == "success-vs-p") return SweepKind::SuccessVsP;
  if (name == "rank-collapse") return SweepKind::RankCollapse;
  if (name == "timing") return SweepKind::Timing;
  if (name == "noisy-coherence") return SweepKind::NoisyCoherence;
  if (name == "detection-validation") return SweepKind::DetectionValidation;
  throw std::invalid_argument("unknown sweep kind: " + name);
}

SweepConfig parse_sweep_config(const std::string& json_text) {
  using nlohmann::json;
  SweepConfig c;
  try {
    const json j = json::parse(json_text);
    if (!j.is_object())
      throw std::invalid_argument("sweep config: top level must be an object");

    static const std::set<std::string> known = {
        "kind",        "n_grid",     "r_grid",     "p_grid",
        "m_grid",      "sigma_grid", "theta_grid", "trials",
        "base_seed",   "output",     "no_timestamp", "emit_plot_script",
        "family",      "mu0",        "delta",      "success_tol",
        "threads",     "max_n",      "allow_large", "timing_full",
        "css",         "detection"};
    for (const auto& item : j.items())
      if (known.find(item.key()) == known.end())
        throw std::invalid_argument("sweep config: unknown key '" +
                                    item.key() + "'");

    c.kind = sweep_kind_from_name(j.at("kind").get<std::string>());
    if (j.contains("n_grid")) c.n_grid = j["n_grid"].get<std::vector<Index>>();
    if (j.contains("r_grid")) c.r_grid = j["r_grid"].get<std::vector<Index>>();
    if (j.contains("p_grid")) c.p_grid = j["p_grid"].get<std::vector<double>>();
    if (j.contains("m_grid")) c.m_grid = j["m_grid"].get<std::vector<Index>>();
    if (j.contains("sigma_grid"))
      c.sigma_grid = j["sigma_grid"].get<std::vector<double>>();
    if (j.contains("theta_grid"))
      c.theta_grid = j["theta_grid"].get<std::vector<double>>();
    if (j.contains("trials")) c.trials = j["trials"].get<Index>();
    if (j.contains("base_seed"))
      c.base_seed = j["base_seed"].get<std::uint64_t>();
    if (j.contains("output")) c.output = j["output"].get<std::string>();
    if (j.contains("no_timestamp")) c.no_timestamp = j["no_timestamp"].get<bool>();
    if (j.contains("emit_plot_script"))
      c.emit_plot_script = j["emit_plot_script"].get<bool>();
    if (j.contains("family"))
      c.family = family_from_name(j["family"].get<std::string>());
    if (j.contains("mu0")) c.mu0 = j["mu0"].get<double>();
    if (j.contains("delta")) c.delta = j["delta"].get<double>();
    if (j.contains("success_tol")) c.success_tol = j["success_tol"].get<double>();
    if (j.contains("threads")) c.threads = j["threads"].get<int>();
    if (j.contains("max_n")) c.max_n = j["max_n"].get<Index>();
    if (j.contains("allow_large")) c.allow_large = j["allow_large"].get<bool>();
    if (j.contains("timing_full")) c.timing_full = j["timing_full"].get<bool>();

    if (j.contains("css")) {
      const json& s = j["css"];
      static const std::set<std::string> css_known = {"rounds", "per_round",
                                                      "m_per_column"};
      for (const auto& item : s.items())
        if (css_known.find(item.key()) == css_known.end())
          throw std::invalid_argument("sweep config: unknown css key '" +
                                      item.key() + "'");
      if (s.contains("rounds")) c.css_rounds = s["rounds"].get<Index>();
      if (s.contains("per_round")) c.css_per_round = s["per_round"].get<Index>();
      if (s.contains("m_per_column")) c.css_m = s["m_per_column"].get<Index>();
    }
    if (j.contains("detection")) {
      const json& s = j["detection"];
      static const std::set<std::string> det_known = {"n", "d", "delta",
                                                      "trials", "m"};
      for (const auto& item : s.items())
        if (det_known.find(item.key()) == det_known.end())
          throw std::invalid_argument("sweep config: unknown detection key '" +
                                      item.key() + "'");
      if (s.contains("n")) c.det_n = s["n"].get<Index>();
      if (s.contains("d")) c.det_d = s["d"].get<Index>();
      if (s.contains("delta")) c.det_delta = s["delta"].get<double>();
      if (s.contains("trials")) c.det_trials = s["trials"].get<Index>();
      if (s.contains("m")) c.det_m = s["m"].get<Index>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("sweep config: ") + e.what());
  }

  if (c.trials < 1) throw std::invalid_argument("sweep config: trials >= 1");
  if (c.mu0 < 1.0) throw std::invalid_argument("sweep config: mu0 >= 1");
  if (c.delta <= 0.0 || c.delta >= 1.0)
    throw std::invalid_argument("sweep config: delta in (0, 1)");
  if (c.success_tol <= 0.0)
    throw std::invalid_argument("sweep config: success_tol > 0");
  if (c.max_n < 2) throw std::invalid_argument("sweep config: max_n >= 2");
  if (c.css_rounds < 1 || c.css_per_round < 1 || c.css_m < 1)
    throw std::invalid_argument("sweep config: css parameters >= 1");
  if (c.det_n < 2 || c.det_d < 1 || c.det_trials < 1 || c.det_m < 0)
    throw std::invalid_argument("sweep config: detection parameters invalid");
  if (c.det_delta <= 0.0 || c.det_delta >= 1.0)
    throw std::invalid_argument("sweep config: detection delta in (0, 1)");
  return c;
}

SweepConfig load_sweep_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open sweep config: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_sweep_config(buf.str());
}

Index Table::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<Index>(i);
  throw std::out_of_range("Table: no column named " + name);
}

double Table::cell(std::size_t row, const std::string& name) const {
  return rows.at(row).at(static_cast<std::size_t>(column_index(name)));
}

std::string csv_string(const Table& table, bool no_timestamp) {
  std::ostringstream out;
  if (!no_timestamp)
    out << "# generated " << static_cast<long long>(std::time(nullptr)) << "\n";
  for (std::size_t i = 0; i < table.columns.size(); ++i)
    out << table.columns[i] << (i + 1 < table.columns.size() ? "," : "\n");
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size())
      throw std::invalid_argument("csv_string: ragged table row");
    for (std::size_t i = 0; i < row.size(); ++i)
      out << fmt(row[i]) << (i + 1 < row.size() ? "," : "\n");
  }
  return out.str();
}

void write_csv(const Table& table, const std::string& path, bool no_timestamp) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  out << csv_string(table, no_timestamp);
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_plot_script(SweepKind kind, const Table& table,
                       const std::string& csv_path,
                       const std::string& script_path) {
  std::ostringstream out;
  plot_prolog(out, csv_path);
  switch (kind) {
    case SweepKind::SuccessVsP:
      out << "set xlabel 'per-column draws m'\n"
          << "set ylabel 'empirical success rate'\n"
          << "set yrange [-0.05:1.05]\n";
      plot_rate_curves(out, table, csv_path, "n", "m", "success_rate", "n");
      break;
    case SweepKind::RankCollapse:
      out << "set xlabel 'per-column draws m'\n"
          << "set ylabel 'empirical success rate'\n"
          << "set yrange [-0.05:1.05]\n";
      plot_rate_curves(out, table, csv_path, "r", "m", "success_rate", "r");
      break;
    case SweepKind::Timing:
      out << "set xlabel 'rank r'\n"
          << "set ylabel 'completion time (s)'\n"
          << "set logscale y\n";
      plot_rate_curves(out, table, csv_path, "n", "r", "time_s", "n");
      break;
    case SweepKind::NoisyCoherence:
      out << "set xlabel 'row-coherence sweep theta'\n"
          << "set ylabel 'mean relative squared error'\n"
          << "set logscale y\n";
      plot_rate_curves(out, table, csv_path, "sigma", "theta",
                       "mean_err_sq_rel", "sigma");
      break;
    case SweepKind::DetectionValidation: {
      out << "set xlabel 'subsample draws m'\n"
          << "set ylabel 'violation rate'\n"
          << "set key top right\n";
      if (table.rows.empty()) {
        out << "# no data rows\n";
        break;
      }
      const double delta = table.cell(0, "delta");
      const int mc = static_cast<int>(table.column_index("mean_m")) + 1;
      const auto col1 = [&](const std::string& name) {
        return static_cast<int>(table.column_index(name)) + 1;
      };
      out << "plot \\\n"
          << "  '" << csv_path << "' using " << mc << ":"
          << col1("resid_viol_rate")
          << " with points pt 7 ps 2 title 'residual sandwich', \\\n"
          << "  '" << csv_path << "' using " << mc << ":"
          << col1("vnorm_viol_rate")
          << " with points pt 5 ps 2 title 'subsampled norm', \\\n"
          << "  '" << csv_path << "' using " << mc << ":"
          << col1("cross_viol_rate")
          << " with points pt 9 ps 2 title 'cross term', \\\n"
          << "  '" << csv_path << "' using " << mc << ":"
          << col1("eig_viol_rate")
          << " with points pt 11 ps 2 title 'smallest eigenvalue', \\\n"
          << "  " << fmt(4.0 * delta) << " with lines dt 2 title 'bound 4 delta', \\\n"
          << "  " << fmt(2.0 * delta) << " with lines dt 3 title 'bound 2 delta', \\\n"
          << "  " << fmt(delta) << " with lines dt 4 title 'bound delta'\n";
      break;
    }
  }
  std::ofstream f(script_path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for write: " + script_path);
  f << out.str();
}

void parallel_for(Index count, int threads,
                  const std::function<void(Index)>& fn) {
  if (count <= 0) return;
  Index nt = threads > 0
                 ? threads
                 : static_cast<Index>(std::thread::hardware_concurrency());
  nt = std::min(std::max<Index>(nt, 1), count);
  if (nt == 1) {
    for (Index i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<Index> next{0};
  std::mutex err_mutex;
  std::exception_ptr err;
  auto work = [&]() {
    while (true) {
      const Index i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!err) err = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(nt) - 1);
  for (Index i = 1; i < nt; ++i) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

TrialOutcome run_matrix_trial(const SyntheticSpec& spec, Index m,
                              SamplingMode mode, double success_tol,
                              std::uint64_t run_seed, Index materialize_cap) {
  TrialOutcome out;
  const Instance inst = gen_matrix(spec, materialize_cap);
  MeasurementOracle oracle(inst);
  NoiselessConfig config;
  config.budgets = {m};
  config.sampling_mode = mode;
  Rng rng(run_seed);

  const auto start = Clock::now();
  CompletionReport report;
  try {
    report = complete_matrix(oracle, spec.dims[0], spec.dims[1], config, rng);
  } catch (const RankDeficientError&) {
    out.completed = false;
    out.audit_ok = true;
    out.entries = oracle.observed_count();
    out.gross = out.entries;
    out.rel_err = 1.0;
    out.wall_s = seconds_since(start);
    return out;
  }

  out.completed = true;
  out.entries = report.entries_observed;
  out.gross = report.entries_observed_gross;
  out.fully_observed = report.fully_observed_units;
  out.audit_ok = report.entries_observed == oracle.observed_count();
  out.wall_s = report.wall_time_s;

  double num = 0.0;
  double den = 0.0;
  if (inst.materialized) {
    num = (report.estimate.data() - inst.ground_truth.data()).squaredNorm();
    den = inst.ground_truth.data().squaredNorm();
  } else {
    const auto est = report.estimate.as_matrix();
    for (Index j = 0; j < spec.dims[1]; ++j) {
      const Vector truth = inst.true_slice(1, j);
      num += (est.col(j) - truth).squaredNorm();
      den += truth.squaredNorm();
    }
  }
  out.rel_err = den > 0.0 ? std::sqrt(num / den)
                          : (num > 0.0 ? std::numeric_limits<double>::infinity()
                                       : 0.0);
  out.success = out.rel_err <= success_tol;
  return out;
}

Table run_success_sweep(const SweepConfig& config) {
  if (config.n_grid.empty())
    throw std::invalid_argument("success sweep: n_grid required");
  const Index r = config.r_grid.empty() ? 5 : config.r_grid.front();

  std::vector<std::pair<Index, Index>> cells;  // (n, m)
  for (Index n : config.n_grid) {
    check_grid_n(config, n);
    for (Index m : draws_for(config, n)) cells.emplace_back(n, m);
  }

  const Index total = static_cast<Index>(cells.size()) * config.trials;
  std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(total));
  parallel_for(total, config.threads, [&](Index k) {
    const Index cell = k / config.trials;
    const Index trial = k % config.trials;
    const auto [n, m] = cells[static_cast<std::size_t>(cell)];
    SyntheticSpec spec;
    spec.dims = {n, n};
    spec.rank = r;
    spec.family = config.family;
    spec.mu0 = config.mu0;
    spec.seed = derive_seed(config.base_seed, static_cast<std::uint64_t>(cell) + 1,
                            static_cast<std::uint64_t>(trial) + 1);
    outcomes[static_cast<std::size_t>(k)] =
        run_matrix_trial(spec, m, SamplingMode::WithReplacement,
                         config.success_tol, derive_seed(spec.seed, kRunSalt));
  });

  Table table;
  table.columns = rate_columns();
  for (std::size_t cell = 0; cell < cells.size(); ++cell) {
    CellStats stats;
    for (Index t = 0; t < config.trials; ++t)
      stats.add(outcomes[cell * static_cast<std::size_t>(config.trials) +
                         static_cast<std::size_t>(t)]);
    append_rate_row(table, cells[cell].first, r, cells[cell].second, stats);
  }
  return table;
}

Table run_rank_collapse(const SweepConfig& config) {
  if (config.n_grid.empty())
    throw std::invalid_argument("rank collapse: n_grid required");
  if (config.r_grid.empty())
    throw std::invalid_argument("rank collapse: r_grid required");
  const Index n = config.n_grid.front();
  check_grid_n(config, n);
  const std::vector<Index> draws = draws_for(config, n);

  std::vector<std::pair<Index, Index>> cells;  // (r, m)
  for (Index r : config.r_grid)
    for (Index m : draws) cells.emplace_back(r, m);

  const Index total = static_cast<Index>(cells.size()) * config.trials;
  std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(total));
  parallel_for(total, config.threads, [&](Index k) {
    const Index cell = k / config.trials;
    const Index trial = k % config.trials;
    const auto [r, m] = cells[static_cast<std::size_t>(cell)];
    SyntheticSpec spec;
    spec.dims = {n, n};
    spec.rank = r;
    spec.family = config.family;
    spec.mu0 = config.mu0;
    spec.seed = derive_seed(config.base_seed, static_cast<std::uint64_t>(cell) + 1,
                            static_cast<std::uint64_t>(trial) + 1);
    outcomes[static_cast<std::size_t>(k)] =
        run_matrix_trial(spec, m, SamplingMode::WithReplacement,
                         config.success_tol, derive_seed(spec.seed, kRunSalt));
  });

  Table table;
  table.columns = rate_columns();
  for (std::size_t cell = 0; cell < cells.size(); ++cell) {
    CellStats stats;
    for (Index t = 0; t < config.trials; ++t)
      stats.add(outcomes[cell * static_cast<std::size_t>(config.trials) +
                         static_cast<std::size_t>(t)]);
    append_rate_row(table, n, cells[cell].first, cells[cell].second, stats);
  }
  return table;
}

Table run_timing(const SweepConfig& config) {
  Table table;
  table.columns = {"n",       "r",      "m_col",  "oversample", "m_frac",
                   "rel_err", "success", "entries", "gross",     "time_s"};
  std::size_t cell = 0;
  for (const TimingCell& tc : kTimingPreset) {
    ++cell;
    if (tc.n > 1000 && !config.timing_full) continue;
    const double n = static_cast<double>(tc.n);
    const double dof = static_cast<double>(tc.r) * (2.0 * n - static_cast<double>(tc.r));
    const Index m_col = static_cast<Index>(std::llround(tc.ratio * dof / n));

    SyntheticSpec spec;
    spec.dims = {tc.n, tc.n};
    spec.rank = tc.r;
    spec.family = Family::GaussianFactors;
    spec.seed = derive_seed(config.base_seed, cell, 1);
    const TrialOutcome o =
        run_matrix_trial(spec, m_col, SamplingMode::WithReplacement,
                         config.success_tol, derive_seed(spec.seed, kRunSalt));

    const double draws = static_cast<double>(m_col) * n;
    table.rows.push_back({n, static_cast<double>(tc.r),
                          static_cast<double>(m_col), draws / dof,
                          draws / (n * n), o.rel_err, o.success ? 1.0 : 0.0,
                          static_cast<double>(o.entries),
                          static_cast<double>(o.gross), o.wall_s});
  }
  return table;
}

Table run_noisy_coherence(const SweepConfig& config) {
  const Index n1 = config.n_grid.empty() ? 200 : config.n_grid.front();
  const Index n2 = config.n_grid.size() > 1 ? config.n_grid[1] : n1;
  const Index r = config.r_grid.empty() ? 5 : config.r_grid.front();
  check_grid_n(config, std::max(n1, n2));
  const std::vector<double> thetas =
      config.theta_grid.empty() ? std::vector<double>{0.0, 0.5, 1.0}
                                : config.theta_grid;
  const std::vector<double> sigmas =
      config.sigma_grid.empty() ? std::vector<double>{0.0, 0.1, 1.0}
                                : config.sigma_grid;

  struct NoisyOutcome {
    double mu_row = 0.0;
    double err_sq_rel = 0.0;
    double bound_sq_rel = 0.0;
    double entries = 0.0;
    double selected = 0.0;
    double failed = 0.0;
    bool audit_ok = false;
    double wall_s = 0.0;
  };

  std::vector<std::pair<double, double>> cells;  // (theta, sigma)
  for (double theta : thetas)
    for (double sigma : sigmas) cells.emplace_back(theta, sigma);

  const Index total = static_cast<Index>(cells.size()) * config.trials;
  std::vector<NoisyOutcome> outcomes(static_cast<std::size_t>(total));
  parallel_for(total, config.threads, [&](Index k) {
    const Index cell = k / config.trials;
    const Index trial = k % config.trials;
    const auto [theta, sigma] = cells[static_cast<std::size_t>(cell)];

    SyntheticSpec spec;
    spec.dims = {n1, n2};
    spec.rank = r;
    spec.family = Family::CoherentRow;
    spec.theta = theta;
    spec.seed = derive_seed(config.base_seed, static_cast<std::uint64_t>(cell) + 1,
                            static_cast<std::uint64_t>(trial) + 1);
    Instance inst = gen_matrix(spec);
    const double energy = inst.fro_norm_sq();
    // Noise level relative to the signal: entry variance sigma^2 ||A||_F^2
    // divided by the entry count.
    inst.spec.noise_sigma =
        sigma * std::sqrt(energy / static_cast<double>(n1 * n2));

    OracleOptions opts;
    opts.log_observed = true;
    MeasurementOracle oracle(inst, opts);

    CssConfig css;
    css.rounds = config.css_rounds;
    css.per_round = config.css_per_round;
    css.m_per_column = config.css_m;
    Rng rng(derive_seed(spec.seed, kRunSalt));

    const auto start = Clock::now();
    CssState state;
    const CompletionReport report = css_complete(oracle, css, rng, &state);

    NoisyOutcome& o = outcomes[static_cast<std::size_t>(k)];
    o.wall_s = seconds_since(start);
    o.mu_row = inst.row_space_coherence;
    o.err_sq_rel =
        (report.estimate.data() - inst.ground_truth.data()).squaredNorm() /
        energy;
    o.bound_sq_rel = 1.0 / static_cast<double>(n1 * n2) +
                     oracle.observed_noise_sq() / energy;
    o.entries = static_cast<double>(report.entries_observed);
    o.selected = static_cast<double>(state.selected.size());
    o.failed = static_cast<double>(report.failed_units);
    o.audit_ok = report.entries_observed == oracle.observed_count();
  });

  Table table;
  table.columns = {"theta",        "sigma",        "n1",
                   "n2",           "r",            "trials",
                   "mean_mu_row",  "mean_err_sq_rel", "max_err_sq_rel",
                   "mean_bound_sq_rel", "mean_entries", "mean_selected",
                   "failed_units", "audit_failures", "mean_wall_s"};
  for (std::size_t cell = 0; cell < cells.size(); ++cell) {
    double mu_sum = 0, err_sum = 0, err_max = 0, bound_sum = 0;
    double entries_sum = 0, selected_sum = 0, failed_sum = 0, wall_sum = 0;
    Index audit_failures = 0;
    for (Index t = 0; t < config.trials; ++t) {
      const NoisyOutcome& o =
          outcomes[cell * static_cast<std::size_t>(config.trials) +
                   static_cast<std::size_t>(t)];
      mu_sum += o.mu_row;
      err_sum += o.err_sq_rel;
      err_max = std::max(err_max, o.err_sq_rel);
      bound_sum += o.bound_sq_rel;
      entries_sum += o.entries;
      selected_sum += o.selected;
      failed_sum += o.failed;
      wall_sum += o.wall_s;
      audit_failures += o.audit_ok ? 0 : 1;
    }
    const double t = static_cast<double>(config.trials);
    table.rows.push_back({cells[cell].first, cells[cell].second,
                          static_cast<double>(n1), static_cast<double>(n2),
                          static_cast<double>(r), t, mu_sum / t, err_sum / t,
                          err_max, bound_sum / t, entries_sum / t,
                          selected_sum / t, failed_sum,
                          static_cast<double>(audit_failures), wall_sum / t});
  }
  return table;
}

Table run_detection_validation(const SweepConfig& config) {
  const Index n = config.det_n;
  const Index d = config.det_d;
  const double delta = config.det_delta;
  const Index trials = config.det_trials;
  if (d >= n)
    throw std::invalid_argument("detection validation: d must be < n");

  struct DetOutcome {
    double m = 0, mu_u = 0, mu_v = 0, gamma = 0;
    bool resid_viol = false, vnorm_viol = false, cross_viol = false,
         eig_viol = false, in_regime = false;
  };
  std::vector<DetOutcome> outcomes(static_cast<std::size_t>(trials));

  parallel_for(trials, config.threads, [&](Index t) {
    Rng rng(derive_seed(config.base_seed, 7, static_cast<std::uint64_t>(t) + 1));

    OrthonormalBasis basis(n);
    do {
      DenseMatrix raw(n, d);
      for (Index j = 0; j < d; ++j)
        for (Index i = 0; i < n; ++i) raw(i, j) = rng.normal();
      basis = orthonormalize(raw);
    } while (basis.dimension() < d);

    Vector g(d);
    for (Index i = 0; i < d; ++i) g(i) = rng.normal();
    const Vector x = basis.matrix() * g;
    Vector w(n);
    for (Index i = 0; i < n; ++i) w(i) = rng.normal();
    const Vector v = w - project(basis, w);
    const Vector y = x + v;

    const double mu_u = coherence_subspace(basis);
    const double mu_v = coherence_vector(v);
    const double m_min =
        (8.0 / 3.0) * static_cast<double>(d) * mu_u * std::log(2.0 * d / delta);
    const Index m = config.det_m > 0 ? config.det_m
                                     : 2 * static_cast<Index>(std::ceil(m_min));

    const IndexSet omega =
        sample_index_set(n, m, SamplingMode::WithReplacement, rng);
    const auto consts = bounds::detection_constants(
        static_cast<double>(m), n, d, mu_u, mu_v, delta);

    DetOutcome& o = outcomes[static_cast<std::size_t>(t)];
    o.m = static_cast<double>(m);
    o.mu_u = mu_u;
    o.mu_v = mu_v;
    o.gamma = consts.gamma;
    o.in_regime = consts.in_regime;

    const double scale =
        static_cast<double>(m) / static_cast<double>(n) * v.squaredNorm();
    try {
      const double resid =
          subsampled_residual_energy(basis, omega, gather(y, omega));
      o.resid_viol = resid > consts.upper_factor * scale ||
                     resid < consts.lower_factor * scale;
    } catch (const RankDeficientError&) {
      o.resid_viol = true;
    }

    const Vector v_omega = gather(v, omega);
    const double v_omega_sq = v_omega.squaredNorm();
    o.vnorm_viol = v_omega_sq < (1.0 - consts.alpha) * scale ||
                   v_omega_sq > (1.0 + consts.alpha) * scale;

    Vector cross = Vector::Zero(d);
    DenseMatrix gram = DenseMatrix::Zero(d, d);
    for (Index k = 0; k < omega.size(); ++k) {
      const Index row = omega.indices[static_cast<std::size_t>(k)];
      const auto u_row = basis.matrix().row(row);
      cross += u_row.transpose() * v(row);
      gram += u_row.transpose() * u_row;
    }
    const double cross_cap = consts.beta * static_cast<double>(m) /
                             static_cast<double>(n) *
                             (static_cast<double>(d) * mu_u /
                              static_cast<double>(n)) *
                             v.squaredNorm();
    o.cross_viol = cross.squaredNorm() > cross_cap;

    const Eigen::SelfAdjointEigenSolver<DenseMatrix> es(
        gram, Eigen::EigenvaluesOnly);
    o.eig_viol = es.eigenvalues()(0) <
                 (1.0 - consts.gamma) * static_cast<double>(m) /
                     static_cast<double>(n);
  });

  double m_sum = 0, mu_u_sum = 0, mu_v_sum = 0, gamma_sum = 0;
  Index resid = 0, vnorm = 0, cross = 0, eig = 0, in_regime = 0;
  for (const auto& o : outcomes) {
    m_sum += o.m;
    mu_u_sum += o.mu_u;
    mu_v_sum += o.mu_v;
    gamma_sum += o.gamma;
    resid += o.resid_viol ? 1 : 0;
    vnorm += o.vnorm_viol ? 1 : 0;
    cross += o.cross_viol ? 1 : 0;
    eig += o.eig_viol ? 1 : 0;
    in_regime += o.in_regime ? 1 : 0;
  }
  const double t = static_cast<double>(trials);

  Table table;
  table.columns = {"n",
                   "d",
                   "delta",
                   "trials",
                   "mean_m",
                   "mean_mu_u",
                   "mean_mu_v",
                   "mean_gamma",
                   "resid_viol_rate",
                   "resid_bound",
                   "vnorm_viol_rate",
                   "vnorm_bound",
                   "cross_viol_rate",
                   "cross_bound",
                   "eig_viol_rate",
                   "eig_bound",
                   "in_regime_rate"};
  table.rows.push_back({static_cast<double>(n), static_cast<double>(d), delta,
                        t, m_sum / t, mu_u_sum / t, mu_v_sum / t, gamma_sum / t,
                        static_cast<double>(resid) / t, 4.0 * delta,
                        static_cast<double>(vnorm) / t, 2.0 * delta,
                        static_cast<double>(cross) / t, delta,
                        static_cast<double>(eig) / t, delta,
                        static_cast<double>(in_regime) / t});
  return table;
}

Table run_sweep(const SweepConfig& config) {
  Table table;
  switch (config.kind) {
    case SweepKind::SuccessVsP: table = run_success_sweep(config); break;
    case SweepKind::RankCollapse: table = run_rank_collapse(config); break;
    case SweepKind::Timing: table = run_timing(config); break;
    case SweepKind::NoisyCoherence: table = run_noisy_coherence(config); break;
    case SweepKind::DetectionValidation:
      table = run_detection_validation(config);
      break;
  }
  if (!config.output.empty()) {
    write_csv(table, config.output, config.no_timestamp);
    if (config.emit_plot_script)
      write_plot_script(config.kind, table, config.output,
                        config.output + ".gp");
  }
  return table;
}

double extract_threshold(const std::vector<double>& xs,
                         const std::vector<double>& rates) {
  if (xs.size() != rates.size() || xs.empty())
    throw std::invalid_argument("extract_threshold: mismatched inputs");
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (xs[i] <= xs[i - 1])
      throw std::invalid_argument("extract_threshold: xs must be ascending");

  std::size_t j = xs.size();
  for (std::size_t k = xs.size(); k-- > 0;) {
    if (rates[k] >= 0.5)
      j = k;
    else
      break;
  }
  if (j == xs.size()) return std::numeric_limits<double>::quiet_NaN();
  if (j == 0) return xs.front();
  const double r0 = rates[j - 1];
  const double r1 = rates[j];
  if (r1 <= r0) return xs[j];
  return xs[j - 1] + (0.5 - r0) / (r1 - r0) * (xs[j] - xs[j - 1]);
}

}  // namespace adcp::experiments
