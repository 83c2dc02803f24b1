#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace adcp {

using Index = Eigen::Index;
using DenseMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Thrown when a subsampled basis matrix U_Omega is numerically rank
/// deficient. Callers may redraw the index set and retry.
class RankDeficientError : public std::runtime_error {
 public:
  explicit RankDeficientError(const std::string& what)
      : std::runtime_error(what) {}
};

/// How an index set is drawn: m independent uniform draws (duplicates kept,
/// multiset semantics) or independent inclusion of each index with
/// probability m/n.
enum class SamplingMode { WithReplacement, Bernoulli };

/// Ordered multiset of row indices within an ambient dimension.
struct IndexSet {
  Index ambient = 0;
  SamplingMode mode = SamplingMode::WithReplacement;
  std::vector<Index> indices;

  Index size() const { return static_cast<Index>(indices.size()); }

  /// Distinct members in increasing order.
  std::vector<Index> distinct_sorted() const;
};

/// Flat position of a multi-index, first index fastest.
Index flat_index(const std::vector<Index>& dims, const std::vector<Index>& idx);

/// Inverse of flat_index.
std::vector<Index> multi_index(const std::vector<Index>& dims, Index flat);

/// Entries per mode-t slice.
Index slice_entry_count(const std::vector<Index>& dims, Index t);

/// Flat position of element `pos` of the mode-t slice at index i, where
/// slices are vectorized over the remaining modes, first index fastest.
Index slice_flat_position(const std::vector<Index>& dims, Index t, Index i,
                          Index pos);

/// Dense order-T tensor, flat storage with the first index fastest. For
/// T = 2 this is column-major, so mode-2 slices are matrix columns and
/// mode-T slices are contiguous ranges in general.
class DenseTensor {
 public:
  DenseTensor() = default;

  explicit DenseTensor(std::vector<Index> dims)
      : dims_(std::move(dims)), data_(Vector::Zero(count(dims_))) {
    validate_dims();
  }

  DenseTensor(std::vector<Index> dims, Vector data)
      : dims_(std::move(dims)), data_(std::move(data)) {
    validate_dims();
    if (data_.size() != count(dims_))
      throw std::invalid_argument("DenseTensor: data size != product of dims");
  }

  Index order() const { return static_cast<Index>(dims_.size()); }
  const std::vector<Index>& dims() const { return dims_; }
  Index dim(Index t) const { return dims_.at(static_cast<std::size_t>(t)); }
  Index size() const { return data_.size(); }

  const Vector& data() const { return data_; }
  Vector& data() { return data_; }

  double operator[](Index flat) const { return data_[flat]; }
  double& operator[](Index flat) { return data_[flat]; }

  double at(const std::vector<Index>& idx) const { return data_[flatten(idx)]; }
  double& at(const std::vector<Index>& idx) { return data_[flatten(idx)]; }

  /// Flat position of a multi-index (first index fastest).
  Index flatten(const std::vector<Index>& idx) const {
    return flat_index(dims_, idx);
  }

  /// Inverse of flatten.
  std::vector<Index> unflatten(Index flat) const {
    return multi_index(dims_, flat);
  }

  /// Number of entries in one mode-t slice.
  Index slice_size(Index t) const { return size() / dim(t); }

  /// See slice_flat_position.
  Index slice_position(Index t, Index i, Index pos) const {
    return slice_flat_position(dims_, t, i, pos);
  }

  /// Mode-t slice at index i as a vector.
  Vector slice(Index t, Index i) const;

  /// Writes a vectorized slice back.
  void set_slice(Index t, Index i, const Vector& values);

  /// Order-2 tensors viewed as a matrix without copying.
  Eigen::Map<const DenseMatrix> as_matrix() const {
    if (order() != 2)
      throw std::invalid_argument("DenseTensor::as_matrix: order != 2");
    return Eigen::Map<const DenseMatrix>(data_.data(), dims_[0], dims_[1]);
  }

  bool all_finite() const { return data_.allFinite(); }

  static Index count(const std::vector<Index>& dims) {
    Index n = 1;
    for (Index d : dims) n *= d;
    return n;
  }

 private:
  void validate_dims() const {
    if (dims_.empty())
      throw std::invalid_argument("DenseTensor: order must be >= 1");
    for (Index d : dims_)
      if (d <= 0) throw std::invalid_argument("DenseTensor: dims must be > 0");
  }

  std::vector<Index> dims_;
  Vector data_;
};

/// Orthonormal basis of a subspace of R^n, one column per basis vector.
/// Columns stay orthonormal to within the append tolerance; dimension 0 is
/// the empty subspace.
class OrthonormalBasis {
 public:
  OrthonormalBasis() = default;
  explicit OrthonormalBasis(Index ambient) : basis_(ambient, 0) {}

  Index ambient_dim() const { return basis_.rows(); }
  Index dimension() const { return basis_.cols(); }
  bool empty() const { return basis_.cols() == 0; }

  const DenseMatrix& matrix() const { return basis_; }

  /// Appends v after projecting out the current span, with one
  /// reorthogonalization pass. Returns false (and leaves the basis
  /// unchanged) when the residual norm falls below drop_tol times the input
  /// norm, i.e. v carries no new direction.
  bool append(const Vector& v, double drop_tol = 1e-10);

  /// max |U^T U - I|, the orthonormality defect.
  double orthonormality_defect() const;

 private:
  DenseMatrix basis_;
};

}  // namespace adcp
