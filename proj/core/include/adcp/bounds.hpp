#pragma once

#include <vector>

#include "adcp/types.hpp"

namespace adcp::bounds {

/// Shared parameter bundle for the sample-size formulas. All logs are
/// natural logs.
struct BoundParams {
  std::vector<Index> dims;
  Index rank = 1;
  double mu0 = 1.0;
  double delta = 0.1;
  double eps = 0.5;
};

/// Per-column test budget for matrices: 36 r^{3/2} mu0 ln(2r/delta).
double matrix_budget(Index rank, double mu0, double delta);

/// Per-level budgets m_1..m_T for an order-T recursion:
/// m_t = 36 r^{t-1/2} mu0^{t-1} ln(2r/delta).
std::vector<double> tensor_budget_schedule(Index rank, double mu0,
                                           double delta, Index order);

/// Expected total observations for the recursive algorithm:
/// 36 (sum_t n_t) r^{T-1/2} mu0^{T-1} ln(2r/delta).
double tensor_total(const std::vector<Index>& dims, Index rank, double mu0,
                    double delta);

/// Refined matrix variant of the expected total:
/// 36 n2 r^{3/2} mu0 ln(2r/delta) + r n1.
double matrix_expected_total(Index n1, Index n2, Index rank, double mu0,
                             double delta);

/// Sample-size lower bound for any passive (non-adaptive) uniform scheme,
/// n1 r^{T-1} mu0^{T-1} ln(n1/(2 delta)) (1 - eps/2), together with whether
/// the side condition
/// (mu0^{T-1} r^{T-1} / prod_{t>=2} n_t) ln(n1/(2 delta)) <= eps < 1 holds.
struct PassiveBound {
  double value = 0.0;
  bool side_condition_ok = false;
};
PassiveBound passive_lower_bound(const std::vector<Index>& dims, Index rank,
                                 double mu0, double delta, double eps);

/// Information-theoretic floor for any scheme: r sum_t n_t.
double adaptive_lower_bound(const std::vector<Index>& dims, Index rank);

/// Concentration constants for the subsampled residual test. For a vector
/// y = x + v with x in the d-dimensional subspace U and v orthogonal to it,
/// an m-subsample satisfies, with probability >= 1 - 4 delta,
///   lower_factor (m/n) ||v||^2 <= ||y_Omega - P_{U_Omega} y_Omega||^2
///                              <= upper_factor (m/n) ||v||^2.
/// Valid when gamma < 1, i.e. m >= m_min = (8/3) d mu_U ln(2d/delta);
/// in_regime reports that check and out-of-regime factors are still
/// evaluated (lower_factor may be vacuous).
struct DetectionConstants {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double lower_factor = 0.0;
  double upper_factor = 0.0;
  double m_min = 0.0;
  bool in_regime = false;
};
DetectionConstants detection_constants(double m, Index n, Index d, double mu_u,
                                       double mu_v, double delta);

}  // namespace adcp::bounds
