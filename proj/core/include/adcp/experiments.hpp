#pragma once

#include <functional>
#include <string>
#include <vector>

#include "adcp/completion.hpp"
#include "adcp/css.hpp"
#include "adcp/instance.hpp"

namespace adcp::experiments {

enum class SweepKind {
  SuccessVsP,
  RankCollapse,
  Timing,
  NoisyCoherence,
  DetectionValidation,
};

std::string sweep_kind_name(SweepKind kind);
SweepKind sweep_kind_from_name(const std::string& name);

/// Declarative experiment description; see README for the JSON schema.
struct SweepConfig {
  SweepKind kind = SweepKind::SuccessVsP;
  std::vector<Index> n_grid;
  std::vector<Index> r_grid;
  std::vector<double> p_grid;  // per-column sampling fraction, m = ceil(p n)
  std::vector<Index> m_grid;   // per-column draws; takes precedence over p_grid
  std::vector<double> sigma_grid;
  std::vector<double> theta_grid;
  Index trials = 50;
  std::uint64_t base_seed = 1;
  std::string output;  // CSV path; empty writes nothing
  bool no_timestamp = false;
  bool emit_plot_script = true;
  Family family = Family::GaussianFactors;
  double mu0 = 1.0;
  double delta = 0.1;
  double success_tol = 1e-6;  // relative Frobenius error for success
  int threads = 0;            // 0: hardware concurrency
  Index max_n = 2000;         // memory guard for dense estimates
  bool allow_large = false;
  bool timing_full = false;   // include the n in {5000, 10000} timing rows
  Index css_rounds = 4;
  Index css_per_round = 10;
  Index css_m = 60;
  Index det_n = 200;
  Index det_d = 5;
  double det_delta = 0.05;
  Index det_trials = 1000;
  Index det_m = 0;  // 0: twice the in-regime minimum, rounded up
};

SweepConfig parse_sweep_config(const std::string& json_text);
SweepConfig load_sweep_config(const std::string& path);

/// Column-named numeric result table; every runner returns one.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  Index column_index(const std::string& name) const;
  double cell(std::size_t row, const std::string& name) const;
};

std::string csv_string(const Table& table, bool no_timestamp);
void write_csv(const Table& table, const std::string& path, bool no_timestamp);

/// Emits a gnuplot script that references only the CSV file.
void write_plot_script(SweepKind kind, const Table& table,
                       const std::string& csv_path,
                       const std::string& script_path);

/// One seeded completion run, with the budget audit against the oracle
/// counter built in.
struct TrialOutcome {
  bool success = false;
  bool completed = false;  // false when the run failed on rank deficiency
  bool audit_ok = false;
  double rel_err = 1.0;    // relative Frobenius error; 1 for failed runs
  std::uint64_t entries = 0;
  std::uint64_t gross = 0;
  Index fully_observed = 0;
  double wall_s = 0.0;
};

TrialOutcome run_matrix_trial(const SyntheticSpec& spec, Index m,
                              SamplingMode mode, double success_tol,
                              std::uint64_t run_seed,
                              Index materialize_cap = Index(1) << 26);

Table run_success_sweep(const SweepConfig& config);
Table run_rank_collapse(const SweepConfig& config);
Table run_timing(const SweepConfig& config);
Table run_noisy_coherence(const SweepConfig& config);
Table run_detection_validation(const SweepConfig& config);

/// Dispatches on config.kind, then writes the CSV and plot script when
/// configured.
Table run_sweep(const SweepConfig& config);

/// Interpolated 50%-success crossing of a rate curve sampled at ascending
/// xs: the last upward crossing after which the rate stays >= 0.5. Returns
/// xs.front() when the curve starts above 0.5 and NaN when it never
/// crosses.
double extract_threshold(const std::vector<double>& xs,
                         const std::vector<double>& rates);

/// Runs fn(0..count-1) on a small worker pool; results must not depend on
/// execution order. threads <= 0 uses hardware concurrency.
void parallel_for(Index count, int threads,
                  const std::function<void(Index)>& fn);

}  // namespace adcp::experiments
