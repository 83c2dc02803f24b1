#include "adcp/completion.hpp"

#include <chrono>
#include <stdexcept>

namespace adcp {

namespace {

using Clock = std::chrono::steady_clock;

struct Tally {
  std::uint64_t net = 0;
  std::uint64_t gross = 0;
  std::uint64_t reused = 0;
};

void check_config(const NoiselessConfig& config, Index order) {
  if (config.budgets.empty())
    throw std::invalid_argument("completion: budgets empty");
  if (order > 2 && static_cast<Index>(config.budgets.size()) != order)
    throw std::invalid_argument("completion: budgets must have one entry per mode");
  for (Index m : config.budgets)
    if (m < 1) throw std::invalid_argument("completion: budgets must be >= 1");
  if (!(config.residual_tol >= 0.0))
    throw std::invalid_argument("completion: residual_tol must be >= 0");
}

/// Test-and-solve for one unit with redraw-on-rank-deficiency. omega is
/// shared state: redraws replace it for subsequent units at the same level.
struct UnitProbe {
  Vector values;
  SubsampleSolve solve;
  bool informative = false;
};

template <typename ObserveFn>
UnitProbe probe_unit(const OrthonormalBasis& basis, IndexSet& omega,
                     Index ambient, Index m, const NoiselessConfig& config,
                     Rng& rng, Tally& tally, bool redraw_each_unit,
                     ObserveFn&& observe) {
  int attempts = 0;
  for (;;) {
    if (redraw_each_unit || omega.indices.empty())
      omega = sample_index_set(ambient, m, config.sampling_mode, rng);
    UnitProbe probe;
    probe.values = observe(omega);
    tally.net += static_cast<std::uint64_t>(omega.size());
    tally.gross += static_cast<std::uint64_t>(omega.size());
    try {
      probe.solve = solve_subsampled(basis, omega, probe.values);
    } catch (const RankDeficientError&) {
      if (++attempts > config.resample_on_rank_deficiency) throw;
      omega.indices.clear();
      if (!redraw_each_unit) omega.ambient = ambient;
      continue;
    }
    const double energy = probe.values.squaredNorm();
    probe.informative =
        energy > 0.0 && probe.solve.residual_sq > config.residual_tol * energy;
    return probe;
  }
}

/// Writes the probe samples into the estimate at their in-unit positions.
void overwrite_samples(Vector& unit_estimate, const IndexSet& omega,
                       const Vector& values) {
  for (Index k = 0; k < omega.size(); ++k)
    unit_estimate[omega.indices[static_cast<std::size_t>(k)]] = values[k];
}

/// One recursion level: completes the contiguous region of the first
/// `level` modes at flat offset `base`. informative[level-2] counts this
/// level's fully explored slices.
Vector complete_region(MeasurementOracle& oracle,
                       const std::vector<Index>& dims, Index level, Index base,
                       const NoiselessConfig& config, Rng& rng, Tally& tally,
                       std::vector<Index>& informative,
                       OrthonormalBasis* top_basis) {
  const Index n_here = dims[static_cast<std::size_t>(level - 1)];
  Index sub_len = 1;
  for (Index t = 0; t + 1 < level; ++t)
    sub_len *= dims[static_cast<std::size_t>(t)];
  const Index m = config.budgets[static_cast<std::size_t>(level - 1)];

  OrthonormalBasis basis(sub_len);
  IndexSet omega;  // shared by all slices at this level
  Vector est(sub_len * n_here);
  for (Index i = 0; i < n_here; ++i) {
    const Index slice_base = base + i * sub_len;
    UnitProbe probe = probe_unit(
        basis, omega, sub_len, m, config, rng, tally, false,
        [&](const IndexSet& om) { return oracle.observe_at_range(slice_base, om); });
    if (probe.informative) {
      Vector sub_est;
      if (level == 2) {
        const auto already = omega.distinct_sorted();
        sub_est = oracle.observe_range_rest(slice_base, sub_len, already);
        tally.net += static_cast<std::uint64_t>(
            sub_len - static_cast<Index>(already.size()));
        tally.gross += static_cast<std::uint64_t>(sub_len);
        tally.reused += static_cast<std::uint64_t>(already.size());
      } else {
        sub_est = complete_region(oracle, dims, level - 1, slice_base, config,
                                  rng, tally, informative, nullptr);
        overwrite_samples(sub_est, omega, probe.values);
      }
      informative[static_cast<std::size_t>(level - 2)] += 1;
      basis.append(sub_est, config.drop_tol);
      est.segment(i * sub_len, sub_len) = sub_est;
    } else {
      Vector recon = basis.empty() ? Vector::Zero(sub_len)
                                   : Vector(basis.matrix() * probe.solve.coeffs);
      overwrite_samples(recon, omega, probe.values);
      est.segment(i * sub_len, sub_len) = recon;
    }
  }
  if (top_basis) *top_basis = std::move(basis);
  return est;
}

}  // namespace

CompletionReport complete_matrix(MeasurementOracle& oracle, Index n1, Index n2,
                                 const NoiselessConfig& config, Rng& rng) {
  if (oracle.order() != 2)
    throw std::invalid_argument("complete_matrix: oracle order != 2");
  if (oracle.dims()[0] != n1 || oracle.dims()[1] != n2)
    throw std::invalid_argument("complete_matrix: dims mismatch");
  check_config(config, 2);
  const Index m = config.budgets.back();
  const auto started = Clock::now();

  CompletionReport report;
  report.estimate = DenseTensor({n1, n2});
  report.informative_per_level.assign(1, 0);
  Tally tally;
  OrthonormalBasis basis(n1);

  for (Index j = 0; j < n2; ++j) {
    IndexSet omega;
    UnitProbe probe = probe_unit(
        basis, omega, n1, m, config, rng, tally, true,
        [&](const IndexSet& om) { return oracle.observe_at(1, j, om); });
    if (probe.informative) {
      const auto already = omega.distinct_sorted();
      const Vector column = oracle.observe_subtensor_rest(1, j, already);
      tally.net +=
          static_cast<std::uint64_t>(n1 - static_cast<Index>(already.size()));
      tally.gross += static_cast<std::uint64_t>(n1);
      tally.reused += static_cast<std::uint64_t>(already.size());
      report.informative_per_level[0] += 1;
      basis.append(column, config.drop_tol);
      report.estimate.set_slice(1, j, column);
    } else {
      Vector recon = basis.empty() ? Vector::Zero(n1)
                                   : Vector(basis.matrix() * probe.solve.coeffs);
      overwrite_samples(recon, omega, probe.values);
      report.estimate.set_slice(1, j, recon);
    }
  }

  report.entries_observed = tally.net;
  report.entries_observed_gross = tally.gross;
  report.reused_entries = tally.reused;
  report.fully_observed_units = report.informative_per_level[0];
  report.basis_dim_final = basis.dimension();
  report.wall_time_s =
      std::chrono::duration<double>(Clock::now() - started).count();
  return report;
}

CompletionReport complete_tensor(MeasurementOracle& oracle,
                                 const std::vector<Index>& dims,
                                 const NoiselessConfig& config, Rng& rng) {
  if (dims != oracle.dims())
    throw std::invalid_argument("complete_tensor: dims mismatch");
  const Index T = static_cast<Index>(dims.size());
  if (T < 2) throw std::invalid_argument("complete_tensor: order must be >= 2");
  if (T == 2) return complete_matrix(oracle, dims[0], dims[1], config, rng);
  check_config(config, T);
  const auto started = Clock::now();

  CompletionReport report;
  report.informative_per_level.assign(static_cast<std::size_t>(T - 1), 0);
  Tally tally;
  OrthonormalBasis top_basis;
  // informative_per_level is ordered outermost first; complete_region indexes
  // it by level-2, so build in level order and reverse after.
  std::vector<Index> by_level(static_cast<std::size_t>(T - 1), 0);
  Vector est = complete_region(oracle, dims, T, 0, config, rng, tally, by_level,
                               &top_basis);
  for (Index t = 0; t < T - 1; ++t)
    report.informative_per_level[static_cast<std::size_t>(t)] =
        by_level[static_cast<std::size_t>(T - 2 - t)];
  report.estimate = DenseTensor(dims, std::move(est));
  report.entries_observed = tally.net;
  report.entries_observed_gross = tally.gross;
  report.reused_entries = tally.reused;
  report.fully_observed_units = report.informative_per_level[0];
  report.basis_dim_final = top_basis.dimension();
  report.wall_time_s =
      std::chrono::duration<double>(Clock::now() - started).count();
  return report;
}

}  // namespace adcp
