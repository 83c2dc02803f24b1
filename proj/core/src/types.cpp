#include "adcp/types.hpp"

#include <algorithm>

namespace adcp {

std::vector<Index> IndexSet::distinct_sorted() const {
  std::vector<Index> out = indices;
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Index flat_index(const std::vector<Index>& dims, const std::vector<Index>& idx) {
  if (idx.size() != dims.size())
    throw std::invalid_argument("flat_index: index order mismatch");
  Index flat = 0;
  Index stride = 1;
  for (std::size_t t = 0; t < dims.size(); ++t) {
    if (idx[t] < 0 || idx[t] >= dims[t])
      throw std::out_of_range("flat_index: index out of range");
    flat += idx[t] * stride;
    stride *= dims[t];
  }
  return flat;
}

std::vector<Index> multi_index(const std::vector<Index>& dims, Index flat) {
  std::vector<Index> idx(dims.size());
  for (std::size_t t = 0; t < dims.size(); ++t) {
    idx[t] = flat % dims[t];
    flat /= dims[t];
  }
  return idx;
}

Index slice_entry_count(const std::vector<Index>& dims, Index t) {
  Index n = 1;
  for (std::size_t u = 0; u < dims.size(); ++u)
    if (static_cast<Index>(u) != t) n *= dims[u];
  return n;
}

Index slice_flat_position(const std::vector<Index>& dims, Index t, Index i,
                          Index pos) {
  const Index T = static_cast<Index>(dims.size());
  if (t < 0 || t >= T)
    throw std::out_of_range("slice_flat_position: bad mode");
  if (i < 0 || i >= dims[static_cast<std::size_t>(t)])
    throw std::out_of_range("slice_flat_position: bad slice index");
  Index stride_t = 1;
  for (Index u = 0; u < t; ++u) stride_t *= dims[static_cast<std::size_t>(u)];
  if (t == T - 1) return i * stride_t + pos;
  const Index lo = pos % stride_t;
  const Index hi = pos / stride_t;
  return lo + i * stride_t + hi * stride_t * dims[static_cast<std::size_t>(t)];
}

Vector DenseTensor::slice(Index t, Index i) const {
  const Index len = slice_size(t);
  if (t == order() - 1) return data_.segment(i * len, len);
  Vector out(len);
  for (Index p = 0; p < len; ++p) out[p] = data_[slice_position(t, i, p)];
  return out;
}

void DenseTensor::set_slice(Index t, Index i, const Vector& values) {
  const Index len = slice_size(t);
  if (values.size() != len)
    throw std::invalid_argument("DenseTensor::set_slice: size mismatch");
  if (t == order() - 1) {
    data_.segment(i * len, len) = values;
    return;
  }
  for (Index p = 0; p < len; ++p) data_[slice_position(t, i, p)] = values[p];
}

bool OrthonormalBasis::append(const Vector& v, double drop_tol) {
  if (basis_.rows() == 0 && basis_.cols() == 0) basis_.resize(v.size(), 0);
  if (v.size() != basis_.rows())
    throw std::invalid_argument("OrthonormalBasis::append: ambient mismatch");
  const double scale = v.norm();
  if (!(scale > 0.0)) return false;
  Vector w = v;
  if (basis_.cols() > 0) {
    w -= basis_ * (basis_.transpose() * w);
    w -= basis_ * (basis_.transpose() * w);
  }
  const double nrm = w.norm();
  if (nrm <= drop_tol * scale) return false;
  basis_.conservativeResize(Eigen::NoChange, basis_.cols() + 1);
  basis_.col(basis_.cols() - 1) = w / nrm;
  return true;
}

double OrthonormalBasis::orthonormality_defect() const {
  if (basis_.cols() == 0) return 0.0;
  DenseMatrix g = basis_.transpose() * basis_;
  g.diagonal().array() -= 1.0;
  return g.cwiseAbs().maxCoeff();
}

}  // namespace adcp
