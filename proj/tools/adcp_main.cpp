// Command line driver for the adaptive completion library: single runs,
// bound evaluation, and the experiment sweeps.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "adcp/bounds.hpp"
#include "adcp/completion.hpp"
#include "adcp/css.hpp"
#include "adcp/experiments.hpp"
#include "adcp/instance.hpp"

namespace {

using adcp::Index;

constexpr std::uint64_t kRunSalt = 0x72756e;

void print_kv(const char* key, double value) {
  std::printf("%s=%.12g\n", key, value);
}

void print_kv(const char* key, std::uint64_t value) {
  std::printf("%s=%llu\n", key, static_cast<unsigned long long>(value));
}

double relative_error(const adcp::Instance& inst,
                      const adcp::DenseTensor& estimate) {
  double num = 0.0;
  double den = 0.0;
  if (inst.materialized) {
    num = (estimate.data() - inst.ground_truth.data()).squaredNorm();
    den = inst.ground_truth.data().squaredNorm();
  } else {
    const Index last = inst.order() - 1;
    for (Index i = 0; i < inst.spec.dims.back(); ++i) {
      const adcp::Vector truth = inst.true_slice(last, i);
      adcp::Vector est(truth.size());
      for (Index p = 0; p < truth.size(); ++p)
        est(p) = estimate[adcp::slice_flat_position(inst.spec.dims, last, i, p)];
      num += (est - truth).squaredNorm();
      den += truth.squaredNorm();
    }
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

void print_report(const adcp::CompletionReport& report, double rel_err) {
  print_kv("entries_observed", report.entries_observed);
  print_kv("entries_observed_gross", report.entries_observed_gross);
  print_kv("reused_entries", report.reused_entries);
  print_kv("fully_observed_units", static_cast<double>(report.fully_observed_units));
  print_kv("basis_dim", static_cast<double>(report.basis_dim_final));
  print_kv("failed_units", static_cast<double>(report.failed_units));
  print_kv("rel_fro_err", rel_err);
  print_kv("wall_s", report.wall_time_s);
}

void print_table(const adcp::experiments::Table& table) {
  for (std::size_t i = 0; i < table.columns.size(); ++i)
    std::printf("%s%s", table.columns[i].c_str(),
                i + 1 < table.columns.size() ? "," : "\n");
  for (const auto& row : table.rows)
    for (std::size_t i = 0; i < row.size(); ++i)
      std::printf("%.6g%s", row[i], i + 1 < row.size() ? "," : "\n");
}

struct InstanceArgs {
  std::string family = "gaussian";
  double mu0 = 1.0;
  double theta = 0.0;
  double sigma = 0.0;
  std::uint64_t seed = 1;
};

void add_instance_options(CLI::App* cmd, InstanceArgs& args) {
  cmd->add_option("--family", args.family,
                  "gaussian, blockdiag, or coherent");
  cmd->add_option("--mu0", args.mu0, "coherence target (blockdiag)");
  cmd->add_option("--theta", args.theta, "row coherence sweep (coherent)");
  cmd->add_option("--sigma", args.sigma, "additive noise level");
  cmd->add_option("--seed", args.seed, "instance and noise seed");
}

adcp::SyntheticSpec make_spec(const std::vector<Index>& dims, Index rank,
                              const InstanceArgs& args) {
  adcp::SyntheticSpec spec;
  spec.dims = dims;
  spec.rank = rank;
  spec.family = adcp::family_from_name(args.family);
  spec.mu0 = args.mu0;
  spec.theta = args.theta;
  spec.noise_sigma = args.sigma;
  spec.seed = args.seed;
  return spec;
}

int cmd_complete(const std::vector<Index>& dims, Index rank, Index m,
                 double tol, const std::string& mode_name,
                 const InstanceArgs& args) {
  const adcp::SyntheticSpec spec = make_spec(dims, rank, args);
  const adcp::Instance inst = adcp::gen_matrix(spec);
  adcp::MeasurementOracle oracle(inst);

  adcp::NoiselessConfig config;
  config.budgets = {m};
  config.residual_tol = tol;
  config.sampling_mode = mode_name == "bernoulli"
                             ? adcp::SamplingMode::Bernoulli
                             : adcp::SamplingMode::WithReplacement;
  adcp::Rng rng(adcp::derive_seed(spec.seed, kRunSalt));
  const adcp::CompletionReport report =
      adcp::complete_matrix(oracle, dims[0], dims[1], config, rng);
  print_kv("n1", static_cast<double>(dims[0]));
  print_kv("n2", static_cast<double>(dims[1]));
  print_kv("rank", static_cast<double>(rank));
  print_kv("m", static_cast<double>(m));
  print_report(report, relative_error(inst, report.estimate));
  return 0;
}

int cmd_tensor(const std::vector<Index>& dims, Index rank,
               std::vector<Index> budgets, double delta, double tol,
               const InstanceArgs& args) {
  const Index T = static_cast<Index>(dims.size());
  if (budgets.empty()) {
    const auto schedule =
        adcp::bounds::tensor_budget_schedule(rank, args.mu0, delta, T);
    Index positions = 1;  // level t draws over prod_{u<t} n_u positions
    for (Index t = 1; t <= T; ++t) {
      const Index want = static_cast<Index>(
          std::llround(std::ceil(schedule[static_cast<std::size_t>(t - 1)])));
      budgets.push_back(std::max<Index>(1, std::min(want, positions)));
      positions *= dims[static_cast<std::size_t>(t - 1)];
    }
  }
  if (static_cast<Index>(budgets.size()) != T)
    throw std::invalid_argument("tensor: budgets must have one entry per mode");

  const adcp::SyntheticSpec spec = make_spec(dims, rank, args);
  const adcp::Instance inst = adcp::gen_tensor(spec);
  adcp::MeasurementOracle oracle(inst);

  adcp::NoiselessConfig config;
  config.budgets = budgets;
  config.residual_tol = tol;
  adcp::Rng rng(adcp::derive_seed(spec.seed, kRunSalt));
  const adcp::CompletionReport report =
      adcp::complete_tensor(oracle, dims, config, rng);

  std::printf("dims=");
  for (std::size_t i = 0; i < dims.size(); ++i)
    std::printf("%lld%s", static_cast<long long>(dims[i]),
                i + 1 < dims.size() ? "x" : "\n");
  std::printf("budgets=");
  for (std::size_t i = 0; i < budgets.size(); ++i)
    std::printf("%lld%s", static_cast<long long>(budgets[i]),
                i + 1 < budgets.size() ? "," : "\n");
  print_report(report, relative_error(inst, report.estimate));
  return 0;
}

int cmd_css(Index n1, Index n2, Index rank, Index rounds, Index per_round,
            Index m, const InstanceArgs& args) {
  const adcp::SyntheticSpec spec = make_spec({n1, n2}, rank, args);
  adcp::Instance inst = adcp::gen_matrix(spec);
  adcp::OracleOptions opts;
  opts.log_observed = true;
  adcp::MeasurementOracle oracle(inst, opts);

  adcp::CssConfig config;
  config.rounds = rounds;
  config.per_round = per_round;
  config.m_per_column = m;
  adcp::Rng rng(adcp::derive_seed(spec.seed, kRunSalt));
  adcp::CssState state;
  const adcp::CompletionReport report =
      adcp::css_complete(oracle, config, rng, &state);

  print_kv("n1", static_cast<double>(n1));
  print_kv("n2", static_cast<double>(n2));
  print_kv("rank", static_cast<double>(rank));
  print_kv("selected", static_cast<double>(state.selected.size()));
  std::printf("selected_columns=");
  for (std::size_t i = 0; i < state.selected.size(); ++i)
    std::printf("%lld%s", static_cast<long long>(state.selected[i]),
                i + 1 < state.selected.size() ? "," : "\n");
  if (state.selected.empty()) std::printf("\n");
  print_kv("probe_draws", state.probe_draws);
  print_kv("column_entries", state.column_entries);
  print_kv("recon_draws", state.recon_draws);
  print_kv("observed_noise_sq", oracle.observed_noise_sq());
  print_report(report, relative_error(inst, report.estimate));
  return 0;
}

int cmd_bounds(const std::string& formula, const std::vector<Index>& dims,
               Index rank, double mu0, double delta, double eps, double m,
               Index n, Index d, double mu_u, double mu_v) {
  using namespace adcp::bounds;
  if (formula == "matrix-budget") {
    print_kv("value", matrix_budget(rank, mu0, delta));
  } else if (formula == "tensor-schedule") {
    if (dims.empty()) throw std::invalid_argument("tensor-schedule: --dims required");
    const auto schedule =
        tensor_budget_schedule(rank, mu0, delta, static_cast<Index>(dims.size()));
    for (std::size_t t = 0; t < schedule.size(); ++t) {
      char key[32];
      std::snprintf(key, sizeof key, "m%zu", t + 1);
      print_kv(key, schedule[t]);
    }
  } else if (formula == "tensor-total") {
    if (dims.empty()) throw std::invalid_argument("tensor-total: --dims required");
    print_kv("value", tensor_total(dims, rank, mu0, delta));
  } else if (formula == "matrix-total") {
    if (dims.size() != 2)
      throw std::invalid_argument("matrix-total: --dims n1,n2 required");
    print_kv("refined", matrix_expected_total(dims[0], dims[1], rank, mu0, delta));
    print_kv("generic", tensor_total(dims, rank, mu0, delta));
  } else if (formula == "passive-lower") {
    if (dims.empty()) throw std::invalid_argument("passive-lower: --dims required");
    const PassiveBound bound = passive_lower_bound(dims, rank, mu0, delta, eps);
    print_kv("value", bound.value);
    print_kv("side_condition_ok", bound.side_condition_ok ? 1.0 : 0.0);
  } else if (formula == "adaptive-lower") {
    if (dims.empty()) throw std::invalid_argument("adaptive-lower: --dims required");
    print_kv("value", adaptive_lower_bound(dims, rank));
  } else if (formula == "detection") {
    const DetectionConstants c = detection_constants(m, n, d, mu_u, mu_v, delta);
    print_kv("alpha", c.alpha);
    print_kv("beta", c.beta);
    print_kv("gamma", c.gamma);
    print_kv("lower_factor", c.lower_factor);
    print_kv("upper_factor", c.upper_factor);
    print_kv("m_min", c.m_min);
    print_kv("in_regime", c.in_regime ? 1.0 : 0.0);
  } else {
    throw std::invalid_argument("unknown formula: " + formula);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive low-rank matrix and tensor completion"};
  app.require_subcommand(1);

  // complete
  auto* complete = app.add_subcommand("complete", "Complete one synthetic matrix");
  std::vector<Index> c_dims;
  Index c_n1 = 200, c_n2 = 200, c_rank = 5, c_m = 0;
  double c_tol = 1e-8;
  std::string c_mode = "with-replacement";
  InstanceArgs c_args;
  complete->add_option("--n1", c_n1, "rows");
  complete->add_option("--n2", c_n2, "columns");
  complete->add_option("--rank", c_rank, "target rank");
  complete->add_option("-m,--m", c_m, "per-column draws (0: from the budget formula)");
  complete->add_option("--tol", c_tol, "relative residual test threshold");
  complete->add_option("--mode", c_mode, "with-replacement or bernoulli");
  add_instance_options(complete, c_args);

  // tensor
  auto* tensor = app.add_subcommand("tensor", "Complete one synthetic tensor");
  std::vector<Index> t_dims = {15, 15, 15};
  Index t_rank = 2;
  std::vector<Index> t_budgets;
  double t_delta = 0.1, t_tol = 1e-8;
  InstanceArgs t_args;
  tensor->add_option("--dims", t_dims, "tensor dimensions")->delimiter(',');
  tensor->add_option("--rank", t_rank, "target rank");
  tensor->add_option("--budgets", t_budgets,
                     "per-level draws m_1..m_T (default: budget schedule)")
      ->delimiter(',');
  tensor->add_option("--delta", t_delta, "failure budget for the default schedule");
  tensor->add_option("--tol", t_tol, "relative residual test threshold");
  add_instance_options(tensor, t_args);

  // css
  auto* css = app.add_subcommand(
      "css", "Noisy adaptive column subset selection and completion");
  Index s_n1 = 200, s_n2 = 200, s_rank = 5, s_rounds = 4, s_per = 10, s_m = 60;
  InstanceArgs s_args;
  css->add_option("--n1", s_n1, "rows");
  css->add_option("--n2", s_n2, "columns");
  css->add_option("--rank", s_rank, "target rank");
  css->add_option("--rounds", s_rounds, "selection rounds");
  css->add_option("--per-round", s_per, "columns drawn per round");
  css->add_option("-m,--m", s_m, "subsample size per column");
  add_instance_options(css, s_args);

  // bounds
  auto* bounds_cmd = app.add_subcommand("bounds", "Evaluate the sample-size formulas");
  std::string b_formula;
  std::vector<Index> b_dims;
  Index b_rank = 5, b_n = 200, b_d = 5;
  double b_mu0 = 1.0, b_delta = 0.1, b_eps = 0.5, b_m = 0, b_mu_u = 1.0,
         b_mu_v = 1.0;
  bounds_cmd
      ->add_option("formula", b_formula,
                   "matrix-budget, tensor-schedule, tensor-total, matrix-total, "
                   "passive-lower, adaptive-lower, or detection")
      ->required();
  bounds_cmd->add_option("--dims", b_dims, "dimensions")->delimiter(',');
  bounds_cmd->add_option("--rank", b_rank, "rank");
  bounds_cmd->add_option("--mu0", b_mu0, "coherence bound");
  bounds_cmd->add_option("--delta", b_delta, "failure budget");
  bounds_cmd->add_option("--eps", b_eps, "slack for the passive lower bound");
  bounds_cmd->add_option("-m,--m", b_m, "subsample draws (detection)");
  bounds_cmd->add_option("-n,--n", b_n, "ambient dimension (detection)");
  bounds_cmd->add_option("-d,--d", b_d, "subspace dimension (detection)");
  bounds_cmd->add_option("--mu-u", b_mu_u, "subspace coherence (detection)");
  bounds_cmd->add_option("--mu-v", b_mu_v, "residual coherence (detection)");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Run an experiment sweep from JSON");
  std::string w_config;
  bool w_quiet = false;
  sweep->add_option("--config", w_config, "JSON sweep description")
      ->required()
      ->check(CLI::ExistingFile);
  sweep->add_flag("--quiet", w_quiet, "suppress the table on stdout");

  // bench
  auto* bench = app.add_subcommand("bench", "Timing presets");
  std::string p_preset = "oversample";
  bool p_full = false;
  std::uint64_t p_seed = 1;
  bench->add_option("--preset", p_preset, "preset name (oversample)");
  bench->add_flag("--full", p_full,
                  "include the n in {5000, 10000} rows (slow, needs ~2 GB)");
  bench->add_option("--seed", p_seed, "base seed");

  try {
    app.parse(argc, argv);

    if (complete->parsed()) {
      if (c_m == 0) {
        adcp::Instance probe = adcp::gen_matrix(make_spec({c_n1, c_n2}, c_rank, c_args));
        c_m = static_cast<Index>(std::ceil(adcp::bounds::matrix_budget(
            c_rank, probe.mu0_actual, 0.05)));
        c_m = std::min(c_m, c_n1);
      }
      return cmd_complete({c_n1, c_n2}, c_rank, c_m, c_tol, c_mode, c_args);
    }
    if (tensor->parsed())
      return cmd_tensor(t_dims, t_rank, t_budgets, t_delta, t_tol, t_args);
    if (css->parsed())
      return cmd_css(s_n1, s_n2, s_rank, s_rounds, s_per, s_m, s_args);
    if (bounds_cmd->parsed())
      return cmd_bounds(b_formula, b_dims, b_rank, b_mu0, b_delta, b_eps, b_m,
                        b_n, b_d, b_mu_u, b_mu_v);
    if (sweep->parsed()) {
      const auto config = adcp::experiments::load_sweep_config(w_config);
      const auto table = adcp::experiments::run_sweep(config);
      if (!w_quiet) print_table(table);
      if (!config.output.empty())
        std::fprintf(stderr, "wrote %s\n", config.output.c_str());
      return 0;
    }
    if (bench->parsed()) {
      if (p_preset != "oversample")
        throw std::invalid_argument("unknown preset: " + p_preset);
      adcp::experiments::SweepConfig config;
      config.kind = adcp::experiments::SweepKind::Timing;
      config.timing_full = p_full;
      config.allow_large = p_full;
      config.base_seed = p_seed;
      print_table(adcp::experiments::run_timing(config));
      return 0;
    }
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const adcp::RankDeficientError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
