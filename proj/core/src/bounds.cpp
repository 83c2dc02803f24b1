#include "adcp/bounds.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace adcp::bounds {

namespace {

void check_common(Index rank, double mu0, double delta) {
  if (rank < 1) throw std::invalid_argument("bounds: rank must be >= 1");
  if (!(mu0 >= 1.0)) throw std::invalid_argument("bounds: mu0 must be >= 1");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("bounds: delta must be in (0, 1)");
}

}  // namespace

double matrix_budget(Index rank, double mu0, double delta) {
  check_common(rank, mu0, delta);
  const double r = static_cast<double>(rank);
  return 36.0 * std::pow(r, 1.5) * mu0 * std::log(2.0 * r / delta);
}

std::vector<double> tensor_budget_schedule(Index rank, double mu0,
                                           double delta, Index order) {
  check_common(rank, mu0, delta);
  if (order < 1) throw std::invalid_argument("bounds: order must be >= 1");
  const double r = static_cast<double>(rank);
  const double lg = std::log(2.0 * r / delta);
  std::vector<double> out(static_cast<std::size_t>(order));
  for (Index t = 1; t <= order; ++t) {
    const double tt = static_cast<double>(t);
    out[static_cast<std::size_t>(t - 1)] =
        36.0 * std::pow(r, tt - 0.5) * std::pow(mu0, tt - 1.0) * lg;
  }
  return out;
}

double tensor_total(const std::vector<Index>& dims, Index rank, double mu0,
                    double delta) {
  check_common(rank, mu0, delta);
  if (dims.empty()) throw std::invalid_argument("bounds: dims empty");
  const double T = static_cast<double>(dims.size());
  double sum_n = 0.0;
  for (Index n : dims) sum_n += static_cast<double>(n);
  const double r = static_cast<double>(rank);
  return 36.0 * sum_n * std::pow(r, T - 0.5) * std::pow(mu0, T - 1.0) *
         std::log(2.0 * r / delta);
}

double matrix_expected_total(Index n1, Index n2, Index rank, double mu0,
                             double delta) {
  check_common(rank, mu0, delta);
  const double r = static_cast<double>(rank);
  return 36.0 * static_cast<double>(n2) * std::pow(r, 1.5) * mu0 *
             std::log(2.0 * r / delta) +
         r * static_cast<double>(n1);
}

PassiveBound passive_lower_bound(const std::vector<Index>& dims, Index rank,
                                 double mu0, double delta, double eps) {
  check_common(rank, mu0, delta);
  if (dims.empty()) throw std::invalid_argument("bounds: dims empty");
  if (!(eps > 0.0)) throw std::invalid_argument("bounds: eps must be > 0");
  const double T = static_cast<double>(dims.size());
  const double r = static_cast<double>(rank);
  const double n1 = static_cast<double>(dims.front());
  double tail = 1.0;
  for (std::size_t t = 1; t < dims.size(); ++t)
    tail *= static_cast<double>(dims[t]);
  const double lg = std::log(n1 / (2.0 * delta));
  PassiveBound out;
  out.value = n1 * std::pow(r, T - 1.0) * std::pow(mu0, T - 1.0) * lg *
              (1.0 - eps / 2.0);
  const double lhs =
      std::pow(mu0 * r, T - 1.0) / (dims.size() > 1 ? tail : 1.0) * lg;
  out.side_condition_ok = (lhs <= eps) && (eps < 1.0);
  return out;
}

double adaptive_lower_bound(const std::vector<Index>& dims, Index rank) {
  if (rank < 1) throw std::invalid_argument("bounds: rank must be >= 1");
  if (dims.empty()) throw std::invalid_argument("bounds: dims empty");
  double sum_n = 0.0;
  for (Index n : dims) sum_n += static_cast<double>(n);
  return static_cast<double>(rank) * sum_n;
}

DetectionConstants detection_constants(double m, Index n, Index d, double mu_u,
                                       double mu_v, double delta) {
  if (!(m > 0.0)) throw std::invalid_argument("bounds: m must be > 0");
  if (n < 1 || d < 1) throw std::invalid_argument("bounds: n, d must be >= 1");
  if (!(mu_u >= 1.0 && mu_v >= 1.0))
    throw std::invalid_argument("bounds: coherences must be >= 1");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("bounds: delta must be in (0, 1)");
  const double dd = static_cast<double>(d);
  const double log1d = std::log(1.0 / delta);
  const double logdd = std::log(dd / delta);
  const double log2dd = std::log(2.0 * dd / delta);
  DetectionConstants out;
  out.alpha = std::sqrt(2.0 * mu_v / m * log1d) +
              2.0 * mu_v / (3.0 * m) * log1d;
  out.beta = 6.0 * logdd + 4.0 / 3.0 * (dd * mu_v / m) * logdd * logdd;
  out.gamma = std::sqrt(8.0 * dd * mu_u / (3.0 * m) * log2dd);
  out.m_min = 8.0 / 3.0 * dd * mu_u * log2dd;
  out.in_regime = out.gamma < 1.0;
  out.upper_factor = 1.0 + out.alpha;
  if (out.in_regime) {
    out.lower_factor =
        (1.0 - out.alpha) - dd * mu_u * out.beta / ((1.0 - out.gamma) * m);
  } else {
    out.lower_factor = -std::numeric_limits<double>::infinity();
  }
  return out;
}

}  // namespace adcp::bounds
