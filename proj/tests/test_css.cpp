#include "adcp/css.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

namespace adcp {
namespace {

SyntheticSpec gaussian_spec(std::vector<Index> dims, Index rank,
                            std::uint64_t seed, double sigma = 0.0) {
  SyntheticSpec spec;
  spec.dims = std::move(dims);
  spec.rank = rank;
  spec.family = Family::GaussianFactors;
  spec.noise_sigma = sigma;
  spec.seed = seed;
  return spec;
}

double sq_error(const DenseTensor& estimate, const Instance& inst) {
  return (estimate.data() - inst.ground_truth.data()).squaredNorm();
}

TEST(EstimateProbs, ZeroTruthFallsBackToUniform) {
  MeasurementOracle oracle(DenseTensor({12, 9}), 0.0, 1);
  OrthonormalBasis basis(12);
  Rng rng(2);
  std::uint64_t draws = 0;
  const Vector probs = estimate_probs(oracle, basis, 5, SamplingMode::WithReplacement,
                                      rng, 1, &draws);
  ASSERT_EQ(probs.size(), 9);
  for (Index j = 0; j < 9; ++j) EXPECT_DOUBLE_EQ(probs[j], 1.0 / 9.0);
  EXPECT_EQ(draws, static_cast<std::uint64_t>(5 * 9));
  EXPECT_EQ(oracle.observed_count(), draws);
}

TEST(EstimateProbs, SumsToOneAndTracksResidualEnergy) {
  // One dominant column against an empty basis.
  DenseTensor truth({20, 6});
  for (Index i = 0; i < 20; ++i) truth[3 * 20 + i] = 5.0;
  for (Index i = 0; i < 20; ++i) truth[1 * 20 + i] = 0.5;
  MeasurementOracle oracle(truth, 0.0, 3);
  OrthonormalBasis basis(20);
  Rng rng(4);
  const Vector probs =
      estimate_probs(oracle, basis, 8, SamplingMode::WithReplacement, rng);
  EXPECT_NEAR(probs.sum(), 1.0, 1e-12);
  // Flat columns subsample exactly proportionally: 25 vs 0.25 per entry.
  EXPECT_NEAR(probs[3], 100.0 / 101.0, 1e-12);
  EXPECT_NEAR(probs[1], 1.0 / 101.0, 1e-12);
  for (Index j : {0, 2, 4, 5}) EXPECT_DOUBLE_EQ(probs[j], 0.0);
}

TEST(EstimateProbs, PerColumnEstimatesSandwichTheTruth) {
  Index inside = 0, total = 0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const Instance inst = gen_matrix(gaussian_spec({30, 40}, 3, seed));
    MeasurementOracle oracle(inst);
    OrthonormalBasis basis(30);
    Rng rng(derive_seed(seed, 10));
    const Vector probs =
        estimate_probs(oracle, basis, 15, SamplingMode::WithReplacement, rng);
    Vector truth(40);
    for (Index j = 0; j < 40; ++j)
      truth[j] = inst.true_slice(1, j).squaredNorm();
    truth /= truth.sum();
    for (Index j = 0; j < 40; ++j) {
      total += 1;
      const double ratio = probs[j] / truth[j];
      inside += (ratio >= 0.4 && ratio <= 2.5) ? 1 : 0;
    }
  }
  EXPECT_GE(static_cast<double>(inside), 0.88 * static_cast<double>(total));
}

TEST(CssComplete, SelectionRoundsDriveTheErrorDown) {
  const Instance inst = gen_matrix(gaussian_spec({60, 80}, 6, 7));
  const double energy = inst.ground_truth.data().squaredNorm();
  std::vector<double> errors;
  for (Index rounds : {1, 2, 3}) {
    MeasurementOracle oracle(inst);
    CssConfig config;
    config.rounds = rounds;
    config.per_round = 3;
    config.m_per_column = 40;
    Rng rng(11);
    const CompletionReport report = css_complete(oracle, config, rng);
    errors.push_back(sq_error(report.estimate, inst) / energy);
  }
  // One round selects fewer columns than the rank and cannot span the truth;
  // two rounds reach the rank and the third only confirms it.
  EXPECT_GT(errors[0], 1e-2);
  EXPECT_LE(errors[1], 1e-16);
  EXPECT_LE(errors[2], 1e-16);
}

TEST(CssComplete, NoiselessRecoveryIsExact) {
  const Instance inst = gen_matrix(gaussian_spec({50, 40}, 4, 13));
  MeasurementOracle oracle(inst);
  CssConfig config;
  config.rounds = 4;
  config.per_round = 1;
  config.m_per_column = 25;
  Rng rng(17);
  CssState state;
  const CompletionReport report = css_complete(oracle, config, rng, &state);
  EXPECT_LE(sq_error(report.estimate, inst) /
                inst.ground_truth.data().squaredNorm(),
            1e-16);
  EXPECT_EQ(report.failed_units, 0);
  EXPECT_LE(report.basis_dim_final, 4);
  EXPECT_LE(static_cast<Index>(state.selected.size()),
            config.rounds * config.per_round);
}

TEST(CssComplete, CountersMirrorTheOracleExactly) {
  const Instance inst = gen_matrix(gaussian_spec({35, 30}, 3, 19, 0.2));
  MeasurementOracle oracle(inst);
  CssConfig config;
  config.rounds = 3;
  config.per_round = 2;
  config.m_per_column = 12;
  Rng rng(23);
  CssState state;
  const CompletionReport report = css_complete(oracle, config, rng, &state);
  EXPECT_EQ(state.probe_draws + state.column_entries + state.recon_draws,
            oracle.observed_count());
  EXPECT_EQ(report.entries_observed, oracle.observed_count());
  EXPECT_EQ(report.entries_observed_gross, report.entries_observed);
  EXPECT_EQ(report.reused_entries, 0u);
  // (rounds + 1) estimation passes over every column.
  EXPECT_EQ(state.probe_draws, static_cast<std::uint64_t>(4 * 30 * 12));
  EXPECT_EQ(state.column_entries,
            static_cast<std::uint64_t>(state.selected.size()) * 35);
  EXPECT_EQ(report.fully_observed_units,
            static_cast<Index>(state.selected.size()));
}

TEST(CssComplete, SpikeRowSpaceSelectsExactlyTheLiveColumns) {
  SyntheticSpec spec = gaussian_spec({30, 40}, 4, 29);
  spec.family = Family::CoherentRow;
  spec.theta = 1.0;
  const Instance inst = gen_matrix(spec);
  MeasurementOracle oracle(inst);
  CssConfig config;
  config.rounds = 4;
  config.per_round = 1;
  config.m_per_column = 10;
  Rng rng(31);
  CssState state;
  const CompletionReport report = css_complete(oracle, config, rng, &state);

  // At theta = 1 the row factors are spikes, so exactly rank columns carry
  // the matrix and the sampling distribution can never leave them. One pick
  // per round re-targets the remaining live columns every time.
  std::vector<Index> selected = state.selected;
  std::sort(selected.begin(), selected.end());
  EXPECT_EQ(selected, (std::vector<Index>{0, 10, 20, 30}));
  EXPECT_EQ(report.basis_dim_final, 4);
  EXPECT_LE(sq_error(report.estimate, inst) /
                inst.ground_truth.data().squaredNorm(),
            1e-16);
}

TEST(CssComplete, ErrorScalesWithTheNoiseFloor) {
  // Exact-rank truth, so the residual bound is the observed noise energy;
  // the fitted constant must stay of one size while sigma^2 spans 1e4.
  const Instance inst = gen_matrix(gaussian_spec({50, 60}, 4, 37));
  double lo = 1e300, hi = 0.0;
  for (double sigma : {0.1, 1.0, 10.0}) {
    Instance noisy = inst;
    noisy.spec.noise_sigma = sigma;
    OracleOptions opts;
    opts.log_observed = true;
    MeasurementOracle oracle(noisy, opts);
    CssConfig config;
    config.rounds = 2;
    config.per_round = 3;
    config.m_per_column = 30;
    Rng rng(41);
    const CompletionReport report = css_complete(oracle, config, rng);
    const double constant =
        sq_error(report.estimate, inst) / oracle.observed_noise_sq();
    lo = std::min(lo, constant);
    hi = std::max(hi, constant);
  }
  EXPECT_LE(hi / lo, 4.0);
}

TEST(CssComplete, PowerOfTwoRescalingCommutesThroughTheWholePipeline) {
  const double scale = 4.0;
  const Instance inst = gen_matrix(gaussian_spec({40, 30}, 3, 43, 0.25));
  Instance scaled = inst;
  scaled.ground_truth.data() *= scale;
  scaled.spec.noise_sigma = inst.spec.noise_sigma * scale;

  CssConfig config;
  config.rounds = 2;
  config.per_round = 2;
  config.m_per_column = 15;

  MeasurementOracle oracle_a(inst);
  Rng rng_a(47);
  CssState state_a;
  const CompletionReport a = css_complete(oracle_a, config, rng_a, &state_a);

  MeasurementOracle oracle_b(scaled);
  Rng rng_b(47);
  CssState state_b;
  const CompletionReport b = css_complete(oracle_b, config, rng_b, &state_b);

  EXPECT_EQ(state_a.selected, state_b.selected);
  const double diff =
      (b.estimate.data() - scale * a.estimate.data()).cwiseAbs().maxCoeff();
  const double ref = b.estimate.data().cwiseAbs().maxCoeff();
  EXPECT_LE(diff, 1e-13 * ref);
}

TEST(BestRankRError, MatchesAnIndependentEigendecomposition) {
  DenseMatrix diag = DenseMatrix::Zero(3, 3);
  diag.diagonal() << 3.0, 2.0, 1.0;
  EXPECT_NEAR(best_rank_r_error(diag, 2), 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(best_rank_r_error(diag, 3), 0.0);
  EXPECT_NEAR(best_rank_r_error(diag, 0), 14.0, 1e-12);
  EXPECT_THROW(best_rank_r_error(diag, -1), std::invalid_argument);

  Rng rng(53);
  DenseMatrix m(15, 11);
  for (Index j = 0; j < 11; ++j)
    for (Index i = 0; i < 15; ++i) m(i, j) = rng.normal();
  for (Index rank : {1, 4, 8}) {
    Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(m.transpose() * m);
    double tail = 0.0;  // eigenvalues ascend; the tail skips the top `rank`
    for (Index i = 0; i < 11 - rank; ++i) tail += eig.eigenvalues()[i];
    EXPECT_NEAR(best_rank_r_error(m, rank), tail, 1e-10 * (1.0 + tail));
  }
}

TEST(Css, RejectsBadConfigurations) {
  const Instance inst = gen_matrix(gaussian_spec({10, 8}, 2, 59));
  MeasurementOracle oracle(inst);
  Rng rng(1);
  CssConfig config;
  config.rounds = 3;
  config.per_round = 3;  // 9 > 8 columns
  config.m_per_column = 4;
  EXPECT_THROW(css_complete(oracle, config, rng), std::invalid_argument);
  config.per_round = 0;
  EXPECT_THROW(css_complete(oracle, config, rng), std::invalid_argument);
  config.per_round = 1;
  config.m_per_column = 0;
  EXPECT_THROW(css_complete(oracle, config, rng), std::invalid_argument);

  const Instance cube = gen_tensor(gaussian_spec({6, 5, 4}, 2, 61));
  MeasurementOracle cube_oracle(cube);
  OrthonormalBasis basis(30);
  EXPECT_THROW(
      estimate_probs(cube_oracle, basis, 5, SamplingMode::WithReplacement, rng),
      std::invalid_argument);
}

}  // namespace
}  // namespace adcp
