#pragma once

#include "adcp/types.hpp"

namespace adcp {

/// Orthonormalizes the columns of `vectors` by modified Gram-Schmidt with one
/// reorthogonalization pass. Columns whose residual norm falls below
/// drop_tol times their input norm are dropped, so the result's dimension is
/// the numerical rank of the input.
OrthonormalBasis orthonormalize(const DenseMatrix& vectors,
                                double drop_tol = 1e-10);

/// Orthogonal projection of v onto span(basis). Empty basis maps to zero.
Vector project(const OrthonormalBasis& basis, const Vector& v);

/// Least-squares fit of a subsampled vector against the subsampled basis:
/// coeffs minimize ||U_Omega x - v_Omega||, residual_sq is the attained
/// squared norm. Solved by column-pivoted QR; throws RankDeficientError when
/// U_Omega is numerically rank deficient.
struct SubsampleSolve {
  double residual_sq = 0.0;
  Vector coeffs;
};
SubsampleSolve solve_subsampled(const OrthonormalBasis& basis,
                                const IndexSet& omega, const Vector& v_omega);

/// ||v_Omega - P_{U_Omega} v_Omega||^2, the energy of the subsampled vector
/// outside the subsampled span. Empty basis gives ||v_Omega||^2. Duplicate
/// indices contribute once per occurrence.
double subsampled_residual_energy(const OrthonormalBasis& basis,
                                  const IndexSet& omega,
                                  const Vector& v_omega);

/// Full-length estimate U (U_Omega^T U_Omega)^{-1} U_Omega^T v_Omega built
/// from the subsample. Exact for v in span(basis) when U_Omega has full
/// column rank. Empty basis gives the zero vector.
Vector reconstruct_from_subsample(const OrthonormalBasis& basis,
                                  const IndexSet& omega,
                                  const Vector& v_omega);

/// Subspace coherence (n/d) max_j ||P_U e_j||^2, in [1, n/d].
double coherence_subspace(const OrthonormalBasis& basis);

/// Vector coherence n ||v||_inf^2 / ||v||_2^2, in [1, n].
double coherence_vector(const Vector& v);

}  // namespace adcp
