#pragma once

#include "adcp/completion.hpp"
#include "adcp/instance.hpp"
#include "adcp/linalg.hpp"
#include "adcp/rng.hpp"
#include "adcp/types.hpp"

namespace adcp {

struct CssConfig {
  Index rounds = 1;        // selection rounds L
  Index per_round = 1;     // columns drawn per round s
  Index m_per_column = 1;  // subsample size for probes and reconstruction
  SamplingMode sampling_mode = SamplingMode::WithReplacement;
  double drop_tol = 1e-10;
  int resample_on_rank_deficiency = 1;
};

/// Selection state across rounds. The three draw counters mirror the oracle
/// counter exactly: probe_draws + column_entries + recon_draws equals the
/// scalars charged so far.
struct CssState {
  OrthonormalBasis basis;
  std::vector<Index> selected;           // distinct, in selection order
  std::vector<char> is_selected;         // one flag per column
  std::vector<Vector> selected_columns;  // observed values, aligned with selected
  Vector probs;                          // current sampling distribution
  std::uint64_t probe_draws = 0;
  std::uint64_t column_entries = 0;
  std::uint64_t recon_draws = 0;
};

/// Estimated column sampling distribution: each column's subsampled residual
/// energy against `basis` from a fresh m-subsample, normalized to sum 1.
/// All-zero residuals give the uniform distribution. `draws` accumulates the
/// scalars charged.
Vector estimate_probs(MeasurementOracle& oracle, const OrthonormalBasis& basis,
                      Index m, SamplingMode mode, Rng& rng,
                      int resample_on_rank_deficiency = 1,
                      std::uint64_t* draws = nullptr);

/// One selection round: draws per_round column indices i.i.d. from
/// state.probs, fully observes the not-yet-selected ones, extends the basis
/// with them, then recomputes state.probs.
void css_round(MeasurementOracle& oracle, CssState& state,
               const CssConfig& config, Rng& rng);

/// Full pipeline: initial distribution from the empty basis, `rounds`
/// selection rounds, then a final pass that copies selected columns verbatim
/// and reconstructs every other column from a fresh m-subsample. Columns
/// whose subsampled basis stays rank deficient after the configured redraws
/// are left zero and counted in failed_units.
CompletionReport css_complete(MeasurementOracle& oracle,
                              const CssConfig& config, Rng& rng,
                              CssState* final_state = nullptr);

/// Squared Frobenius distance to the best rank-r approximation,
/// sum_{i > r} sigma_i^2.
double best_rank_r_error(const Eigen::Ref<const DenseMatrix>& m, Index rank);

}  // namespace adcp
