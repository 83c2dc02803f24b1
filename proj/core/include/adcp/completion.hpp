#pragma once

#include "adcp/instance.hpp"
#include "adcp/linalg.hpp"
#include "adcp/rng.hpp"
#include "adcp/types.hpp"

namespace adcp {

struct NoiselessConfig {
  /// Per-level draw counts m_1..m_T; level t tests mode-t slices with m_t
  /// draws over the prod_{u<t} n_u positions of a vectorized subtensor.
  /// Matrices use budgets.back(); m_1 is never drawn (the base case observes
  /// its vector in full).
  std::vector<Index> budgets;
  SamplingMode sampling_mode = SamplingMode::WithReplacement;
  /// A unit is informative when its subsampled residual energy exceeds
  /// residual_tol times its subsampled energy.
  double residual_tol = 1e-8;
  double drop_tol = 1e-10;
  /// Redraws allowed per unit when U_Omega comes back rank deficient; the
  /// run fails loudly once exhausted.
  int resample_on_rank_deficiency = 1;
};

struct CompletionReport {
  DenseTensor estimate;
  /// Scalars charged by the oracle, tallied independently by the algorithm;
  /// equals the oracle counter delta exactly.
  std::uint64_t entries_observed = 0;
  /// Without crediting probe samples re-used by full observations.
  std::uint64_t entries_observed_gross = 0;
  std::uint64_t reused_entries = 0;
  /// Informative units at the outermost level (columns for order 2).
  Index fully_observed_units = 0;
  /// Informative units per level, outermost first (size order-1).
  std::vector<Index> informative_per_level;
  Index basis_dim_final = 0;
  /// Set by the caller against ground truth when available.
  bool success = false;
  double wall_time_s = 0.0;
  /// Columns left as zero after retry exhaustion (noisy column selection
  /// only; the noiseless solvers throw instead).
  Index failed_units = 0;
};

/// Sequential adaptive completion of an order-2 oracle: per column, draw a
/// fresh m-subsample, test the subsampled residual against the current
/// basis, fully observe informative columns (appending their residual
/// direction), and reconstruct the rest from the subsample. Every revealed
/// entry is written into the estimate verbatim.
CompletionReport complete_matrix(MeasurementOracle& oracle, Index n1, Index n2,
                                 const NoiselessConfig& config, Rng& rng);

/// Recursive adaptive completion of an order-T oracle. Each invocation
/// draws one index set shared by all its mode-T slices; informative slices
/// recurse with the remaining budgets (order-2 invocations observe the full
/// column, order >= 3 recurse), others are reconstructed from the shared
/// subsample. dims must match the oracle; order 2 delegates to
/// complete_matrix and is bit-identical to it.
CompletionReport complete_tensor(MeasurementOracle& oracle,
                                 const std::vector<Index>& dims,
                                 const NoiselessConfig& config, Rng& rng);

}  // namespace adcp
