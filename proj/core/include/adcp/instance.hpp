#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "adcp/rng.hpp"
#include "adcp/types.hpp"

namespace adcp {

/// Synthetic low-rank families.
///  - GaussianFactors: orthonormalized Gaussian factors, spectrum uniform in
///    [1, 2]; both subspaces incoherent.
///  - BlockDiagonal: adversarial block construction whose subspace coherences
///    are bounded by (and for the row space equal to) mu0. Requires n1/r and
///    n_t/(mu0 r), t >= 2, integral.
///  - CoherentRow (order 2 only): column space as GaussianFactors, row-space
///    coherence swept by theta from ~1 (flat block indicators) to n2/r
///    (standard basis vectors).
enum class Family { GaussianFactors, BlockDiagonal, CoherentRow };

std::string family_name(Family family);
Family family_from_name(const std::string& name);

struct SyntheticSpec {
  std::vector<Index> dims;
  Index rank = 1;
  Family family = Family::GaussianFactors;
  double mu0 = 1.0;    // BlockDiagonal
  double theta = 0.0;  // CoherentRow
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

/// A generated problem: CP/SVD factors (mode t factor is n_t x r, scaling
/// absorbed into mode 1), the materialized ground truth when small enough,
/// and measured subspace data. ground_truth entry (i_1..i_T) equals
/// sum_k prod_t factors[t](i_t, k).
struct Instance {
  SyntheticSpec spec;
  std::vector<DenseMatrix> factors;
  DenseTensor ground_truth;
  bool materialized = false;
  OrthonormalBasis column_space;  // span of the vectorized mode-(1..T-1)
                                  // rank-one components; U for matrices
  std::vector<double> mode_coherences;
  double mu0_actual = 1.0;        // coherence_subspace(column_space)
  double row_space_coherence = 1.0;

  Index order() const { return static_cast<Index>(spec.dims.size()); }

  /// Ground-truth entry at a flat position, independent of materialization.
  double entry(Index flat) const;

  /// Ground-truth mode-t slice, vectorized.
  Vector true_slice(Index t, Index i) const;

  double fro_norm_sq() const;
};

/// Entry of sum_k prod_t factors[t](idx_t, k), accumulated in fixed k order
/// so materialized and lazy evaluation are bit-identical.
double cp_entry(const std::vector<DenseMatrix>& factors,
                const std::vector<Index>& idx);

/// Materializes a CP representation into a dense tensor.
DenseTensor materialize_cp(const std::vector<DenseMatrix>& factors,
                           const std::vector<Index>& dims);

/// Draws an index set over {0..n-1}: m independent uniform draws
/// (WithReplacement, duplicates kept) or inclusion with probability m/n
/// (Bernoulli). Guard: 1 <= m <= 10 n.
IndexSet sample_index_set(Index n, Index m, SamplingMode mode, Rng& rng);

/// Generates an order-2 instance. materialize_cap bounds the entry count for
/// which the ground truth is stored densely.
Instance gen_matrix(const SyntheticSpec& spec,
                    Index materialize_cap = Index(1) << 26);

/// Generates an order-T instance; delegates to gen_matrix for T = 2.
Instance gen_tensor(const SyntheticSpec& spec,
                    Index materialize_cap = Index(1) << 26);

/// BlockDiagonal convenience constructor.
Instance gen_blockdiag(Index n1, Index n2, Index rank, double mu0,
                       std::uint64_t seed);

/// Writes "ADCP v1 <T> <dims..> <rank> <family> <sigma> <seed>" plus one row
/// of values per factor vector; entries are derivable from the factors and
/// the noise stream from the seed, so fixtures round-trip bit-exactly.
void write_instance(const std::string& path, const Instance& instance);
Instance read_instance(const std::string& path);

struct OracleOptions {
  bool log_observed = false;  // keep a bitmap of revealed positions
  bool record_trace = false;  // keep the query sequence
};

/// Entry-revealing measurement oracle with exact budget accounting. Every
/// query charges the count of scalars it reveals: subsample probes charge
/// per draw (duplicates included), full observations charge per entry, and
/// the *_rest forms charge size minus the excluded distinct positions.
/// Additive noise N(0, sigma^2) is keyed by position, so re-reading an entry
/// returns the identical value.
class MeasurementOracle {
 public:
  enum class QueryKind : char { Entry = 'e', Probe = 'p', Full = 'f', Rest = 'r' };
  struct QueryRecord {
    QueryKind kind;
    Index base = 0;
    Index count = 0;
  };

  MeasurementOracle(const Instance& instance, OracleOptions options = {});
  MeasurementOracle(DenseTensor truth, double sigma, std::uint64_t noise_seed,
                    OracleOptions options = {});

  const std::vector<Index>& dims() const { return dims_; }
  Index order() const { return static_cast<Index>(dims_.size()); }
  Index total_entries() const { return total_; }
  double noise_sigma() const { return sigma_; }

  std::uint64_t observed_count() const { return observed_count_; }

  double observe_entry(Index flat);

  /// Subsample of the mode-t slice at index i; omega indexes within the
  /// vectorized slice.
  Vector observe_at(Index t, Index i, const IndexSet& omega);

  /// Full mode-t slice.
  Vector observe_subtensor(Index t, Index i);

  /// Full mode-t slice where the sorted distinct positions in `already` have
  /// been revealed before and are not re-charged.
  Vector observe_subtensor_rest(Index t, Index i,
                                const std::vector<Index>& already);

  /// Full column j of an order-2 oracle.
  Vector observe_column(Index j);

  /// Contiguous-region forms; a region [base, base+len) is a trailing-mode
  /// slice of a nested subtensor. omega and `already` index within the
  /// region.
  Vector observe_at_range(Index base, const IndexSet& omega);
  Vector observe_range(Index base, Index len);
  Vector observe_range_rest(Index base, Index len,
                            const std::vector<Index>& already);

  /// Distinct positions revealed so far (requires log_observed).
  std::uint64_t distinct_observed() const;

  /// Realized noise energy over the distinct revealed positions, i.e.
  /// ||R_Omega||_F^2 (requires log_observed).
  double observed_noise_sq() const;

  const std::vector<QueryRecord>& trace() const { return trace_; }

 private:
  double value_at(Index flat) const;
  double noise_at(Index flat) const;
  void mark(Index flat);
  Index slice_base_check(Index t, Index i) const;

  std::vector<Index> dims_;
  Index total_ = 0;
  std::shared_ptr<const DenseTensor> dense_;
  std::shared_ptr<const std::vector<DenseMatrix>> factors_;
  double sigma_ = 0.0;
  std::uint64_t noise_seed_ = 0;
  std::uint64_t observed_count_ = 0;
  bool log_observed_ = false;
  std::vector<bool> observed_;
  bool record_trace_ = false;
  std::vector<QueryRecord> trace_;
};

}  // namespace adcp
