// Microbenchmarks for the hot paths: subsampled least squares, oracle entry
// evaluation, and the end-to-end matrix/column-selection pipelines.

#include <benchmark/benchmark.h>

#include "adcp/completion.hpp"
#include "adcp/css.hpp"
#include "adcp/instance.hpp"
#include "adcp/linalg.hpp"

namespace adcp {
namespace {

void BM_SolveSubsampled(benchmark::State& state) {
  const Index n = 2000;
  const Index d = state.range(0);
  const Index m = 4 * d;
  Rng rng(11);
  DenseMatrix raw(n, d);
  for (Index j = 0; j < d; ++j)
    for (Index i = 0; i < n; ++i) raw(i, j) = rng.normal();
  const OrthonormalBasis basis = orthonormalize(raw);
  const IndexSet omega = sample_index_set(n, m, SamplingMode::WithReplacement, rng);
  Vector v_omega(static_cast<Index>(omega.indices.size()));
  for (Index k = 0; k < v_omega.size(); ++k) v_omega[k] = rng.normal();
  for (auto _ : state) {
    SubsampleSolve solve = solve_subsampled(basis, omega, v_omega);
    benchmark::DoNotOptimize(solve.residual_sq);
  }
}
BENCHMARK(BM_SolveSubsampled)->Arg(5)->Arg(20)->Arg(50);

void BM_OracleEntry(benchmark::State& state) {
  SyntheticSpec spec;
  spec.dims = {300, 300};
  spec.rank = 8;
  spec.seed = 7;
  // range(0) == 0: dense ground truth; 1: lazy factor evaluation.
  const Index cap = state.range(0) == 0 ? (Index(1) << 26) : 0;
  const Instance inst = gen_matrix(spec, cap);
  MeasurementOracle oracle(inst);
  Index flat = 0;
  const Index size = inst.ground_truth.size() > 0 ? inst.ground_truth.size()
                                                  : 300 * 300;
  for (auto _ : state) {
    benchmark::DoNotOptimize(oracle.observe_entry(flat));
    flat = (flat + 1) % size;
  }
}
BENCHMARK(BM_OracleEntry)->Arg(0)->Arg(1);

void BM_CompleteMatrix(benchmark::State& state) {
  const Index n = state.range(0);
  SyntheticSpec spec;
  spec.dims = {n, n};
  spec.rank = 5;
  spec.seed = 21;
  const Instance inst = gen_matrix(spec);
  NoiselessConfig config;
  config.budgets = {12};
  for (auto _ : state) {
    MeasurementOracle oracle(inst);
    Rng rng(22);
    CompletionReport report = complete_matrix(oracle, n, n, config, rng);
    benchmark::DoNotOptimize(report.entries_observed);
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_CompleteMatrix)->Arg(128)->Arg(256)->Arg(512)->Complexity();

void BM_CssComplete(benchmark::State& state) {
  SyntheticSpec spec;
  spec.dims = {100, 120};
  spec.rank = 4;
  spec.noise_sigma = 0.05;
  spec.seed = 33;
  const Instance inst = gen_matrix(spec);
  CssConfig config;
  config.rounds = 3;
  config.per_round = 4;
  config.m_per_column = 30;
  for (auto _ : state) {
    MeasurementOracle oracle(inst);
    Rng rng(34);
    CompletionReport report = css_complete(oracle, config, rng);
    benchmark::DoNotOptimize(report.entries_observed);
  }
}
BENCHMARK(BM_CssComplete);

}  // namespace
}  // namespace adcp

BENCHMARK_MAIN();
