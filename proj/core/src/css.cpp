#include "adcp/css.hpp"

#include <chrono>
#include <stdexcept>

namespace adcp {

namespace {

using Clock = std::chrono::steady_clock;

void check_config(const CssConfig& config, Index n2) {
  if (config.rounds < 1 || config.per_round < 1)
    throw std::invalid_argument("css: rounds and per_round must be >= 1");
  if (config.rounds * config.per_round > n2)
    throw std::invalid_argument("css: rounds * per_round exceeds n2");
  if (config.m_per_column < 1)
    throw std::invalid_argument("css: m_per_column must be >= 1");
}

}  // namespace

Vector estimate_probs(MeasurementOracle& oracle, const OrthonormalBasis& basis,
                      Index m, SamplingMode mode, Rng& rng,
                      int resample_on_rank_deficiency, std::uint64_t* draws) {
  if (oracle.order() != 2)
    throw std::invalid_argument("estimate_probs: oracle order != 2");
  const Index n1 = oracle.dims()[0];
  const Index n2 = oracle.dims()[1];
  Vector energy(n2);
  for (Index j = 0; j < n2; ++j) {
    int attempts = 0;
    for (;;) {
      const IndexSet omega = sample_index_set(n1, m, mode, rng);
      const Vector v = oracle.observe_at(1, j, omega);
      if (draws) *draws += static_cast<std::uint64_t>(omega.size());
      try {
        energy[j] = subsampled_residual_energy(basis, omega, v);
      } catch (const RankDeficientError&) {
        if (++attempts > resample_on_rank_deficiency) throw;
        continue;
      }
      break;
    }
  }
  const double total = energy.sum();
  if (total > 0.0) return energy / total;
  return Vector::Constant(n2, 1.0 / static_cast<double>(n2));
}

void css_round(MeasurementOracle& oracle, CssState& state,
               const CssConfig& config, Rng& rng) {
  const Index n1 = oracle.dims()[0];
  const Index n2 = oracle.dims()[1];
  if (state.probs.size() != n2)
    throw std::invalid_argument("css_round: state.probs not initialized");
  std::vector<double> weights(state.probs.data(), state.probs.data() + n2);
  for (Index s = 0; s < config.per_round; ++s) {
    const Index pick = static_cast<Index>(rng.discrete(weights));
    if (state.is_selected[static_cast<std::size_t>(pick)]) continue;
    state.is_selected[static_cast<std::size_t>(pick)] = 1;
    state.selected.push_back(pick);
    Vector column = oracle.observe_column(pick);
    state.column_entries += static_cast<std::uint64_t>(n1);
    state.basis.append(column, config.drop_tol);
    state.selected_columns.push_back(std::move(column));
  }
  state.probs = estimate_probs(oracle, state.basis, config.m_per_column,
                               config.sampling_mode, rng,
                               config.resample_on_rank_deficiency,
                               &state.probe_draws);
}

CompletionReport css_complete(MeasurementOracle& oracle,
                              const CssConfig& config, Rng& rng,
                              CssState* final_state) {
  if (oracle.order() != 2)
    throw std::invalid_argument("css_complete: oracle order != 2");
  const Index n1 = oracle.dims()[0];
  const Index n2 = oracle.dims()[1];
  check_config(config, n2);
  const auto started = Clock::now();

  CssState state;
  state.basis = OrthonormalBasis(n1);
  state.is_selected.assign(static_cast<std::size_t>(n2), 0);
  state.probs = estimate_probs(oracle, state.basis, config.m_per_column,
                               config.sampling_mode, rng,
                               config.resample_on_rank_deficiency,
                               &state.probe_draws);
  for (Index l = 0; l < config.rounds; ++l)
    css_round(oracle, state, config, rng);

  CompletionReport report;
  report.estimate = DenseTensor({n1, n2});
  for (std::size_t k = 0; k < state.selected.size(); ++k)
    report.estimate.set_slice(1, state.selected[k], state.selected_columns[k]);

  for (Index j = 0; j < n2; ++j) {
    if (state.is_selected[static_cast<std::size_t>(j)]) continue;
    if (state.basis.empty()) continue;  // estimate stays zero
    int attempts = 0;
    for (;;) {
      const IndexSet omega =
          sample_index_set(n1, config.m_per_column, config.sampling_mode, rng);
      const Vector v = oracle.observe_at(1, j, omega);
      state.recon_draws += static_cast<std::uint64_t>(omega.size());
      try {
        report.estimate.set_slice(
            1, j, reconstruct_from_subsample(state.basis, omega, v));
      } catch (const RankDeficientError&) {
        if (++attempts > config.resample_on_rank_deficiency) {
          report.failed_units += 1;
          break;
        }
        continue;
      }
      break;
    }
  }

  report.entries_observed =
      state.probe_draws + state.column_entries + state.recon_draws;
  report.entries_observed_gross = report.entries_observed;
  report.reused_entries = 0;
  report.fully_observed_units = static_cast<Index>(state.selected.size());
  report.informative_per_level.assign(1, report.fully_observed_units);
  report.basis_dim_final = state.basis.dimension();
  report.wall_time_s =
      std::chrono::duration<double>(Clock::now() - started).count();
  if (final_state) *final_state = std::move(state);
  return report;
}

double best_rank_r_error(const Eigen::Ref<const DenseMatrix>& m, Index rank) {
  if (rank < 0) throw std::invalid_argument("best_rank_r_error: rank < 0");
  const Index small = std::min(m.rows(), m.cols());
  if (rank >= small) return 0.0;
  Eigen::BDCSVD<DenseMatrix> svd(m);
  const auto& sv = svd.singularValues();
  double tail = 0.0;
  for (Index i = rank; i < sv.size(); ++i) tail += sv[i] * sv[i];
  return tail;
}

}  // namespace adcp
