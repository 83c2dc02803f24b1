#include "adcp/linalg.hpp"

#include <cmath>
#include <stdexcept>

#include <gtest/gtest.h>

#include "adcp/rng.hpp"

namespace adcp {
namespace {

IndexSet with_replacement(Index ambient, std::vector<Index> indices) {
  IndexSet omega;
  omega.ambient = ambient;
  omega.mode = SamplingMode::WithReplacement;
  omega.indices = std::move(indices);
  return omega;
}

OrthonormalBasis first_two_axes() {
  DenseMatrix m = DenseMatrix::Zero(4, 2);
  m(0, 0) = 1.0;
  m(1, 1) = 1.0;
  return orthonormalize(m);
}

DenseMatrix random_matrix(Index rows, Index cols, Rng& rng) {
  DenseMatrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
  return m;
}

// Basis {e1, e2} in R^4, Omega = {0, 2, 3}, v_Omega = (1, 2, 3). The
// least-squares fit is x = (1, 0) and the residual is 2^2 + 3^2 = 13.
TEST(SolveSubsampled, HandComputedResidual) {
  const OrthonormalBasis basis = first_two_axes();
  const IndexSet omega = with_replacement(4, {0, 1, 3});
  Vector v_omega(3);
  v_omega << 1.0, 2.0, 3.0;
  // Rows of U_Omega are (1,0), (0,1), (0,0): the fit is (1, 2) and the
  // unmatched third sample carries the whole residual.
  const SubsampleSolve solve = solve_subsampled(basis, omega, v_omega);
  EXPECT_NEAR(solve.residual_sq, 9.0, 1e-12);
  ASSERT_EQ(solve.coeffs.size(), 2);
  EXPECT_NEAR(solve.coeffs(0), 1.0, 1e-12);
  EXPECT_NEAR(solve.coeffs(1), 2.0, 1e-12);

  const Vector rebuilt = reconstruct_from_subsample(basis, omega, v_omega);
  ASSERT_EQ(rebuilt.size(), 4);
  EXPECT_NEAR(rebuilt(0), 1.0, 1e-12);
  EXPECT_NEAR(rebuilt(1), 2.0, 1e-12);
  EXPECT_NEAR(rebuilt(2), 0.0, 1e-12);
  EXPECT_NEAR(rebuilt(3), 0.0, 1e-12);
}

TEST(SolveSubsampled, EmptyBasisReturnsFullEnergy) {
  const OrthonormalBasis basis(6);
  const IndexSet omega = with_replacement(6, {1, 4});
  Vector v_omega(2);
  v_omega << 3.0, 4.0;
  const SubsampleSolve solve = solve_subsampled(basis, omega, v_omega);
  EXPECT_DOUBLE_EQ(solve.residual_sq, 25.0);
  EXPECT_EQ(solve.coeffs.size(), 0);
  EXPECT_TRUE(reconstruct_from_subsample(basis, omega, v_omega).isZero(0.0));
}

TEST(SolveSubsampled, ThrowsWhenSubsampleCannotSeeTheBasis) {
  const OrthonormalBasis basis = first_two_axes();
  // Rows 2 and 3 are outside the span, so U_Omega is the zero matrix.
  const IndexSet zero_rows = with_replacement(4, {2, 3});
  Vector v(2);
  v << 1.0, 1.0;
  EXPECT_THROW(solve_subsampled(basis, zero_rows, v), RankDeficientError);

  // Fewer draws than basis dimensions can never determine the coefficients.
  const IndexSet too_small = with_replacement(4, {0});
  Vector v1(1);
  v1 << 1.0;
  EXPECT_THROW(solve_subsampled(basis, too_small, v1), RankDeficientError);
}

TEST(SolveSubsampled, PythagorasOnTheSubsample) {
  Rng rng(11);
  const OrthonormalBasis basis = orthonormalize(random_matrix(40, 6, rng));
  ASSERT_EQ(basis.dimension(), 6);
  for (int trial = 0; trial < 50; ++trial) {
    IndexSet omega;
    omega.ambient = 40;
    for (int k = 0; k < 18; ++k) omega.indices.push_back(rng.index(40));
    Vector v_omega(18);
    for (int k = 0; k < 18; ++k) v_omega(k) = rng.normal();
    const SubsampleSolve solve = solve_subsampled(basis, omega, v_omega);

    DenseMatrix u_omega(18, 6);
    for (int k = 0; k < 18; ++k)
      u_omega.row(k) = basis.matrix().row(omega.indices[static_cast<std::size_t>(k)]);
    const double fit_sq = (u_omega * solve.coeffs).squaredNorm();
    EXPECT_NEAR(solve.residual_sq + fit_sq, v_omega.squaredNorm(),
                1e-8 * v_omega.squaredNorm());
  }
}

TEST(SolveSubsampled, FullIndexSetMatchesDenseProjection) {
  Rng rng(12);
  const Index n = 30;
  const OrthonormalBasis basis = orthonormalize(random_matrix(n, 5, rng));
  IndexSet omega;
  omega.ambient = n;
  for (Index i = 0; i < n; ++i) omega.indices.push_back(i);
  for (int trial = 0; trial < 20; ++trial) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v(i) = rng.normal();
    const double dense_residual = (v - project(basis, v)).squaredNorm();
    EXPECT_NEAR(subsampled_residual_energy(basis, omega, v), dense_residual,
                1e-10 * v.squaredNorm());
    const Vector rebuilt = reconstruct_from_subsample(basis, omega, v);
    EXPECT_NEAR((rebuilt - project(basis, v)).norm(), 0.0, 1e-10);
  }
}

TEST(SolveSubsampled, ExactForVectorsInsideTheSpan) {
  Rng rng(13);
  const Index n = 60;
  const OrthonormalBasis basis = orthonormalize(random_matrix(n, 4, rng));
  for (int trial = 0; trial < 50; ++trial) {
    Vector coeffs(4);
    for (int k = 0; k < 4; ++k) coeffs(k) = rng.normal();
    const Vector v = basis.matrix() * coeffs;
    IndexSet omega;
    omega.ambient = n;
    for (int k = 0; k < 16; ++k) omega.indices.push_back(rng.index(n));
    Vector v_omega(16);
    for (int k = 0; k < 16; ++k)
      v_omega(k) = v(omega.indices[static_cast<std::size_t>(k)]);
    const SubsampleSolve solve = solve_subsampled(basis, omega, v_omega);
    EXPECT_LE(solve.residual_sq, 1e-20 * v.squaredNorm());
    const Vector rebuilt = reconstruct_from_subsample(basis, omega, v_omega);
    EXPECT_NEAR((rebuilt - v).norm(), 0.0, 1e-8 * v.norm());
  }
}

TEST(SolveSubsampled, ResidualShrinksAsTheBasisGrows) {
  Rng rng(14);
  const Index n = 50;
  const DenseMatrix wide = random_matrix(n, 8, rng);
  const OrthonormalBasis small = orthonormalize(wide.leftCols(3));
  const OrthonormalBasis large = orthonormalize(wide);
  for (int trial = 0; trial < 100; ++trial) {
    IndexSet omega;
    omega.ambient = n;
    for (int k = 0; k < 25; ++k) omega.indices.push_back(rng.index(n));
    Vector v_omega(25);
    for (int k = 0; k < 25; ++k) v_omega(k) = rng.normal();
    const double before = subsampled_residual_energy(small, omega, v_omega);
    const double after = subsampled_residual_energy(large, omega, v_omega);
    EXPECT_LE(after, before + 1e-10 * v_omega.squaredNorm());
  }
}

TEST(Project, EmptyBasisAndIdempotence) {
  Rng rng(15);
  const OrthonormalBasis empty(20);
  Vector v(20);
  for (int i = 0; i < 20; ++i) v(i) = rng.normal();
  EXPECT_TRUE(project(empty, v).isZero(0.0));

  const OrthonormalBasis basis = orthonormalize(random_matrix(20, 5, rng));
  const Vector once = project(basis, v);
  const Vector twice = project(basis, once);
  EXPECT_NEAR((once - twice).norm(), 0.0, 1e-12 * v.norm());
}

TEST(Orthonormalize, ProducesTightFramesAndDropsDependentColumns) {
  Rng rng(16);
  for (Index n : {20, 80, 200}) {
    const DenseMatrix raw = random_matrix(n, 8, rng);
    const OrthonormalBasis basis = orthonormalize(raw);
    EXPECT_EQ(basis.dimension(), 8);
    EXPECT_LE(basis.orthonormality_defect(), 1e-10);

    DenseMatrix doubled(n, 16);
    doubled << raw, raw;
    EXPECT_EQ(orthonormalize(doubled).dimension(), 8);
  }
  EXPECT_EQ(orthonormalize(DenseMatrix::Zero(10, 3)).dimension(), 0);
}

TEST(OrthonormalBasisAppend, RejectsVectorsInsideTheSpan) {
  Rng rng(17);
  OrthonormalBasis basis(30);
  const DenseMatrix raw = random_matrix(30, 4, rng);
  for (Index j = 0; j < 4; ++j) EXPECT_TRUE(basis.append(raw.col(j)));
  EXPECT_EQ(basis.dimension(), 4);
  Vector inside(4);
  for (int k = 0; k < 4; ++k) inside(k) = rng.normal();
  EXPECT_FALSE(basis.append(basis.matrix() * inside));
  EXPECT_EQ(basis.dimension(), 4);
  EXPECT_LE(basis.orthonormality_defect(), 1e-12);
}

TEST(Coherence, HandComputedVectorValue) {
  Vector v(4);
  v << 3.0, 4.0, 0.0, 0.0;
  // 4 * 16 / 25
  EXPECT_NEAR(coherence_vector(v), 2.56, 1e-12);
}

TEST(Coherence, ExtremesAndRanges) {
  const Index n = 36;
  Vector flat = Vector::Constant(n, 0.5);
  EXPECT_NEAR(coherence_vector(flat), 1.0, 1e-12);
  Vector spike = Vector::Zero(n);
  spike(7) = -2.0;
  EXPECT_NEAR(coherence_vector(spike), static_cast<double>(n), 1e-12);

  const OrthonormalBasis axes = first_two_axes();
  EXPECT_NEAR(coherence_subspace(axes), 2.0, 1e-12);

  Rng rng(18);
  for (int trial = 0; trial < 10; ++trial) {
    const OrthonormalBasis basis = orthonormalize(random_matrix(n, 6, rng));
    const double mu = coherence_subspace(basis);
    EXPECT_GE(mu, 1.0 - 1e-12);
    EXPECT_LE(mu, static_cast<double>(n) / 6.0 + 1e-12);
    Vector v(n);
    for (Index i = 0; i < n; ++i) v(i) = rng.normal();
    const double mv = coherence_vector(v);
    EXPECT_GE(mv, 1.0 - 1e-12);
    EXPECT_LE(mv, static_cast<double>(n) + 1e-12);
  }
}

TEST(Coherence, RejectsDegenerateInputs) {
  EXPECT_THROW(coherence_subspace(OrthonormalBasis(10)), std::invalid_argument);
  EXPECT_THROW(coherence_vector(Vector::Zero(5)), std::invalid_argument);
}

TEST(SubsampledResidualEnergy, CountsDuplicatesPerOccurrence) {
  const OrthonormalBasis basis(4);  // empty: residual is plain energy
  const IndexSet omega = with_replacement(4, {1, 1, 2});
  Vector v_omega(3);
  v_omega << 2.0, 2.0, 1.0;
  EXPECT_DOUBLE_EQ(subsampled_residual_energy(basis, omega, v_omega), 9.0);
}

}  // namespace
}  // namespace adcp
