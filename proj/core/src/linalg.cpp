#include "adcp/linalg.hpp"

#include <cmath>

namespace adcp {

namespace {

constexpr double kRankTol = 1e-12;

/// Rows of the basis gathered at omega, duplicates included.
DenseMatrix gather_rows(const OrthonormalBasis& basis, const IndexSet& omega) {
  const Index m = omega.size();
  const Index d = basis.dimension();
  DenseMatrix sub(m, d);
  for (Index k = 0; k < m; ++k) {
    const Index row = omega.indices[static_cast<std::size_t>(k)];
    if (row < 0 || row >= basis.ambient_dim())
      throw std::out_of_range("solve_subsampled: omega index out of range");
    sub.row(k) = basis.matrix().row(row);
  }
  return sub;
}

}  // namespace

OrthonormalBasis orthonormalize(const DenseMatrix& vectors, double drop_tol) {
  OrthonormalBasis basis(vectors.rows());
  for (Index j = 0; j < vectors.cols(); ++j) basis.append(vectors.col(j), drop_tol);
  return basis;
}

Vector project(const OrthonormalBasis& basis, const Vector& v) {
  if (v.size() != basis.ambient_dim())
    throw std::invalid_argument("project: ambient mismatch");
  if (basis.empty()) return Vector::Zero(v.size());
  return basis.matrix() * (basis.matrix().transpose() * v);
}

SubsampleSolve solve_subsampled(const OrthonormalBasis& basis,
                                const IndexSet& omega, const Vector& v_omega) {
  if (v_omega.size() != omega.size())
    throw std::invalid_argument("solve_subsampled: |v_omega| != |omega|");
  if (omega.ambient != basis.ambient_dim() && !basis.empty())
    throw std::invalid_argument("solve_subsampled: ambient mismatch");
  SubsampleSolve out;
  if (basis.empty()) {
    out.residual_sq = v_omega.squaredNorm();
    out.coeffs = Vector(0);
    return out;
  }
  const Index d = basis.dimension();
  if (omega.size() < d)
    throw RankDeficientError("solve_subsampled: |omega| < basis dimension");
  const DenseMatrix sub = gather_rows(basis, omega);
  Eigen::ColPivHouseholderQR<DenseMatrix> qr(sub);
  const auto& rdiag = qr.matrixR().diagonal();
  const double dmax = std::abs(rdiag[0]);
  const double dmin = std::abs(rdiag[d - 1]);
  if (!(dmax > 0.0) || dmin < kRankTol * dmax)
    throw RankDeficientError("solve_subsampled: U_Omega rank deficient");
  out.coeffs = qr.solve(v_omega);
  out.residual_sq = (v_omega - sub * out.coeffs).squaredNorm();
  return out;
}

double subsampled_residual_energy(const OrthonormalBasis& basis,
                                  const IndexSet& omega,
                                  const Vector& v_omega) {
  return solve_subsampled(basis, omega, v_omega).residual_sq;
}

Vector reconstruct_from_subsample(const OrthonormalBasis& basis,
                                  const IndexSet& omega,
                                  const Vector& v_omega) {
  if (basis.empty()) {
    if (v_omega.size() != omega.size())
      throw std::invalid_argument("reconstruct_from_subsample: size mismatch");
    return Vector::Zero(omega.ambient);
  }
  const SubsampleSolve sol = solve_subsampled(basis, omega, v_omega);
  return basis.matrix() * sol.coeffs;
}

double coherence_subspace(const OrthonormalBasis& basis) {
  const Index d = basis.dimension();
  if (d == 0)
    throw std::invalid_argument("coherence_subspace: empty basis");
  const double max_row = basis.matrix().rowwise().squaredNorm().maxCoeff();
  return max_row * static_cast<double>(basis.ambient_dim()) /
         static_cast<double>(d);
}

double coherence_vector(const Vector& v) {
  const double nrm2 = v.squaredNorm();
  if (!(nrm2 > 0.0))
    throw std::invalid_argument("coherence_vector: zero vector");
  const double vmax = v.cwiseAbs().maxCoeff();
  return static_cast<double>(v.size()) * vmax * vmax / nrm2;
}

}  // namespace adcp
