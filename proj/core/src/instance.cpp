#include "adcp/instance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "adcp/linalg.hpp"

namespace adcp {

namespace {

constexpr std::uint64_t kNoiseSalt = 0x6e6f697365ULL;

std::vector<Index> check_dims(const SyntheticSpec& spec, Index min_order) {
  if (static_cast<Index>(spec.dims.size()) < min_order)
    throw std::invalid_argument("gen: order too small");
  for (Index n : spec.dims)
    if (n < 1) throw std::invalid_argument("gen: dims must be >= 1");
  if (spec.rank < 1) throw std::invalid_argument("gen: rank must be >= 1");
  if (spec.noise_sigma < 0.0)
    throw std::invalid_argument("gen: noise_sigma must be >= 0");
  return spec.dims;
}

DenseMatrix draw_gaussian(Index rows, Index cols, Rng& rng) {
  DenseMatrix out(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) out(i, j) = rng.normal();
  return out;
}

Index integral_block(double value, const char* what) {
  const double rounded = std::round(value);
  if (rounded < 1.0 || std::abs(value - rounded) > 1e-9)
    throw std::invalid_argument(std::string("gen_blockdiag: ") + what +
                                " must be a positive integer");
  return static_cast<Index>(rounded);
}

/// Measured fields shared by every generator: per-mode factor-span
/// coherences and the orthonormalized span of the vectorized leading
/// rank-one components.
void finish_instance(Instance& inst, Index materialize_cap) {
  const auto& dims = inst.spec.dims;
  const Index T = static_cast<Index>(dims.size());
  const Index r = inst.spec.rank;
  inst.mode_coherences.clear();
  for (Index t = 0; t < T; ++t) {
    OrthonormalBasis span = orthonormalize(inst.factors[t]);
    if (span.dimension() != r)
      throw std::runtime_error("gen: mode factor span is rank deficient");
    inst.mode_coherences.push_back(coherence_subspace(span));
  }
  inst.row_space_coherence = inst.mode_coherences.back();

  Index outer = 1;
  for (Index t = 0; t < T - 1; ++t) outer *= dims[t];
  DenseMatrix components(outer, r);
  std::vector<Index> head(dims.begin(), dims.end() - 1);
  for (Index k = 0; k < r; ++k) {
    for (Index p = 0; p < outer; ++p) {
      const std::vector<Index> idx = multi_index(head, p);
      double prod = 1.0;
      for (Index t = 0; t < T - 1; ++t) prod *= inst.factors[t](idx[t], k);
      components(p, k) = prod;
    }
  }
  inst.column_space = orthonormalize(components);
  if (inst.column_space.dimension() != r)
    throw std::runtime_error("gen: column space is rank deficient");
  inst.mu0_actual = coherence_subspace(inst.column_space);

  if (DenseTensor::count(dims) <= materialize_cap) {
    inst.ground_truth = materialize_cp(inst.factors, dims);
    inst.materialized = true;
  } else {
    inst.materialized = false;
  }
}

Instance gen_gaussian_matrix(const SyntheticSpec& spec) {
  Instance inst;
  inst.spec = spec;
  const Index n1 = spec.dims[0], n2 = spec.dims[1], r = spec.rank;
  Rng rng(spec.seed);
  OrthonormalBasis u = orthonormalize(draw_gaussian(n1, r, rng));
  OrthonormalBasis v = orthonormalize(draw_gaussian(n2, r, rng));
  if (u.dimension() != r || v.dimension() != r)
    throw std::runtime_error("gen: Gaussian factors degenerate");
  Vector sigma(r);
  for (Index k = 0; k < r; ++k) sigma[k] = rng.real(1.0, 2.0);
  inst.factors = {u.matrix() * sigma.asDiagonal(), v.matrix()};
  return inst;
}

Instance gen_coherent_row(const SyntheticSpec& spec) {
  Instance inst;
  inst.spec = spec;
  const Index n1 = spec.dims[0], n2 = spec.dims[1], r = spec.rank;
  const double theta = spec.theta;
  if (theta < 0.0 || theta > 1.0)
    throw std::invalid_argument("gen: theta must be in [0, 1]");
  if (n2 < r) throw std::invalid_argument("gen: n2 < rank");
  Rng rng(spec.seed);
  OrthonormalBasis u = orthonormalize(draw_gaussian(n1, r, rng));
  if (u.dimension() != r)
    throw std::runtime_error("gen: Gaussian factors degenerate");
  Vector sigma(r);
  for (Index k = 0; k < r; ++k) sigma[k] = rng.real(1.0, 2.0);

  // Row factors interpolate between flat block indicators and the standard
  // basis vector at each block start. Supports are disjoint, so the family
  // stays orthogonal for every theta and its coherence is monotone in theta.
  DenseMatrix v = DenseMatrix::Zero(n2, r);
  const Index base_len = n2 / r;
  const Index remainder = n2 % r;
  Index start = 0;
  for (Index k = 0; k < r; ++k) {
    const Index len = base_len + (k < remainder ? 1 : 0);
    const double flat = (1.0 - theta) / std::sqrt(static_cast<double>(len));
    for (Index j = start; j < start + len; ++j) v(j, k) = flat;
    v(start, k) += theta;
    v.col(k).normalize();
    start += len;
  }
  inst.factors = {u.matrix() * sigma.asDiagonal(), v};
  return inst;
}

Instance gen_blockdiag_any(const SyntheticSpec& spec) {
  Instance inst;
  inst.spec = spec;
  const auto& dims = spec.dims;
  const Index T = static_cast<Index>(dims.size());
  const Index r = spec.rank;
  const double mu0 = spec.mu0;
  if (!(mu0 >= 1.0)) throw std::invalid_argument("gen_blockdiag: mu0 < 1");
  const Index l1 = integral_block(static_cast<double>(dims[0]) / r, "n1/r");
  std::vector<Index> block_len(static_cast<std::size_t>(T));
  block_len[0] = l1;
  for (Index t = 1; t < T; ++t)
    block_len[static_cast<std::size_t>(t)] = integral_block(
        static_cast<double>(dims[t]) / (mu0 * r), "n_t/(mu0 r)");

  Rng rng(spec.seed);
  const double hi = std::sqrt(mu0);
  inst.factors.assign(static_cast<std::size_t>(T), DenseMatrix());
  for (Index t = 0; t < T; ++t) {
    DenseMatrix f = DenseMatrix::Zero(dims[t], r);
    const Index len = block_len[static_cast<std::size_t>(t)];
    for (Index k = 0; k < r; ++k) {
      for (Index j = k * len; j < (k + 1) * len; ++j)
        f(j, k) = (t == 0) ? rng.real(1.0, hi) : 1.0;
    }
    inst.factors[static_cast<std::size_t>(t)] = f;
  }
  return inst;
}

}  // namespace

std::string family_name(Family family) {
  switch (family) {
    case Family::GaussianFactors: return "gaussian";
    case Family::BlockDiagonal: return "blockdiag";
    case Family::CoherentRow: return "coherent";
  }
  throw std::logic_error("family_name: bad family");
}

Family family_from_name(const std::string& name) {
  if (name == "gaussian") return Family::GaussianFactors;
  if (name == "blockdiag") return Family::BlockDiagonal;
  if (name == "coherent") return Family::CoherentRow;
  throw std::invalid_argument("unknown family: " + name);
}

double cp_entry(const std::vector<DenseMatrix>& factors,
                const std::vector<Index>& idx) {
  double sum = 0.0;
  const Index r = factors.front().cols();
  for (Index k = 0; k < r; ++k) {
    double prod = 1.0;
    for (std::size_t t = 0; t < factors.size(); ++t) prod *= factors[t](idx[t], k);
    sum += prod;
  }
  return sum;
}

DenseTensor materialize_cp(const std::vector<DenseMatrix>& factors,
                           const std::vector<Index>& dims) {
  DenseTensor out(dims);
  const Index total = out.size();
  std::vector<Index> idx(dims.size(), 0);
  for (Index flat = 0; flat < total; ++flat) {
    out[flat] = cp_entry(factors, idx);
    for (std::size_t t = 0; t < dims.size(); ++t) {
      if (++idx[t] < dims[t]) break;
      idx[t] = 0;
    }
  }
  return out;
}

double Instance::entry(Index flat) const {
  if (materialized) return ground_truth[flat];
  return cp_entry(factors, multi_index(spec.dims, flat));
}

Vector Instance::true_slice(Index t, Index i) const {
  if (materialized) return ground_truth.slice(t, i);
  const Index len = slice_entry_count(spec.dims, t);
  Vector out(len);
  for (Index p = 0; p < len; ++p)
    out[p] = entry(slice_flat_position(spec.dims, t, i, p));
  return out;
}

double Instance::fro_norm_sq() const {
  if (materialized) return ground_truth.data().squaredNorm();
  double sum = 0.0;
  for (Index flat = 0; flat < DenseTensor::count(spec.dims); ++flat) {
    const double v = entry(flat);
    sum += v * v;
  }
  return sum;
}

IndexSet sample_index_set(Index n, Index m, SamplingMode mode, Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample_index_set: n must be >= 1");
  if (m < 1 || m > 10 * n)
    throw std::invalid_argument("sample_index_set: need 1 <= m <= 10 n");
  IndexSet out;
  out.ambient = n;
  out.mode = mode;
  if (mode == SamplingMode::WithReplacement) {
    out.indices.resize(static_cast<std::size_t>(m));
    for (auto& idx : out.indices) idx = rng.index(n);
  } else {
    const double p = std::min(1.0, static_cast<double>(m) / n);
    for (Index i = 0; i < n; ++i)
      if (rng.real() < p) out.indices.push_back(i);
  }
  return out;
}

Instance gen_matrix(const SyntheticSpec& spec, Index materialize_cap) {
  check_dims(spec, 2);
  if (spec.dims.size() != 2)
    throw std::invalid_argument("gen_matrix: dims must have length 2");
  if (spec.dims[0] < spec.rank || spec.dims[1] < spec.rank)
    throw std::invalid_argument("gen_matrix: rank exceeds a dimension");
  Instance inst;
  switch (spec.family) {
    case Family::GaussianFactors: inst = gen_gaussian_matrix(spec); break;
    case Family::BlockDiagonal: inst = gen_blockdiag_any(spec); break;
    case Family::CoherentRow: inst = gen_coherent_row(spec); break;
  }
  finish_instance(inst, materialize_cap);
  return inst;
}

Instance gen_tensor(const SyntheticSpec& spec, Index materialize_cap) {
  check_dims(spec, 2);
  if (spec.dims.size() == 2) return gen_matrix(spec, materialize_cap);
  Instance inst;
  switch (spec.family) {
    case Family::GaussianFactors: {
      inst.spec = spec;
      Rng rng(spec.seed);
      const Index T = static_cast<Index>(spec.dims.size());
      inst.factors.reserve(static_cast<std::size_t>(T));
      for (Index t = 0; t < T; ++t) {
        DenseMatrix f = draw_gaussian(spec.dims[t], spec.rank, rng);
        for (Index k = 0; k < spec.rank; ++k) f.col(k).normalize();
        inst.factors.push_back(std::move(f));
      }
      for (Index k = 0; k < spec.rank; ++k)
        inst.factors[0].col(k) *= rng.real(1.0, 2.0);
      break;
    }
    case Family::BlockDiagonal:
      inst = gen_blockdiag_any(spec);
      break;
    case Family::CoherentRow:
      throw std::invalid_argument("gen_tensor: CoherentRow is order-2 only");
  }
  finish_instance(inst, materialize_cap);
  return inst;
}

Instance gen_blockdiag(Index n1, Index n2, Index rank, double mu0,
                       std::uint64_t seed) {
  SyntheticSpec spec;
  spec.dims = {n1, n2};
  spec.rank = rank;
  spec.family = Family::BlockDiagonal;
  spec.mu0 = mu0;
  spec.seed = seed;
  return gen_matrix(spec);
}

void write_instance(const std::string& path, const Instance& instance) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_instance: cannot open " + path);
  const auto& spec = instance.spec;
  out << "ADCP v1 " << spec.dims.size();
  for (Index n : spec.dims) out << ' ' << n;
  out << ' ' << spec.rank << ' ' << family_name(spec.family);
  char buf[40];
  if (spec.family == Family::BlockDiagonal) {
    std::snprintf(buf, sizeof buf, ":%.17g", spec.mu0);
    out << buf;
  } else if (spec.family == Family::CoherentRow) {
    std::snprintf(buf, sizeof buf, ":%.17g", spec.theta);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, " %.17g", spec.noise_sigma);
  out << buf << ' ' << spec.seed << '\n';
  for (Index k = 0; k < spec.rank; ++k) {
    for (std::size_t t = 0; t < instance.factors.size(); ++t) {
      const auto& f = instance.factors[t];
      for (Index i = 0; i < f.rows(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", f(i, k));
        out << buf << (i + 1 == f.rows() ? "" : " ");
      }
      out << '\n';
    }
  }
  if (!out) throw std::runtime_error("write_instance: write failed");
}

Instance read_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_instance: cannot open " + path);
  std::string magic, version;
  in >> magic >> version;
  if (magic != "ADCP" || version != "v1")
    throw std::runtime_error("read_instance: bad header");
  std::size_t order = 0;
  in >> order;
  if (order < 2 || order > 16)
    throw std::runtime_error("read_instance: bad order");
  SyntheticSpec spec;
  spec.dims.resize(order);
  for (auto& n : spec.dims) in >> n;
  in >> spec.rank;
  std::string family_token;
  in >> family_token;
  const auto colon = family_token.find(':');
  double family_param = 0.0;
  if (colon != std::string::npos) {
    family_param = std::stod(family_token.substr(colon + 1));
    family_token = family_token.substr(0, colon);
  }
  spec.family = family_from_name(family_token);
  if (spec.family == Family::BlockDiagonal) spec.mu0 = family_param;
  if (spec.family == Family::CoherentRow) spec.theta = family_param;
  in >> spec.noise_sigma >> spec.seed;
  if (!in) throw std::runtime_error("read_instance: bad header fields");

  Instance inst;
  inst.spec = spec;
  inst.factors.assign(order, DenseMatrix());
  for (std::size_t t = 0; t < order; ++t)
    inst.factors[t].resize(spec.dims[t], spec.rank);
  for (Index k = 0; k < spec.rank; ++k) {
    for (std::size_t t = 0; t < order; ++t) {
      for (Index i = 0; i < spec.dims[t]; ++i) {
        if (!(in >> inst.factors[t](i, k)))
          throw std::runtime_error("read_instance: truncated factor data");
      }
    }
  }
  finish_instance(inst, Index(1) << 26);
  return inst;
}

MeasurementOracle::MeasurementOracle(const Instance& instance,
                                     OracleOptions options)
    : dims_(instance.spec.dims),
      total_(DenseTensor::count(instance.spec.dims)),
      sigma_(instance.spec.noise_sigma),
      noise_seed_(derive_seed(instance.spec.seed, kNoiseSalt)),
      log_observed_(options.log_observed),
      record_trace_(options.record_trace) {
  if (instance.materialized)
    dense_ = std::make_shared<const DenseTensor>(instance.ground_truth);
  else
    factors_ = std::make_shared<const std::vector<DenseMatrix>>(instance.factors);
  if (log_observed_) observed_.assign(static_cast<std::size_t>(total_), false);
}

MeasurementOracle::MeasurementOracle(DenseTensor truth, double sigma,
                                     std::uint64_t noise_seed,
                                     OracleOptions options)
    : dims_(truth.dims()),
      total_(truth.size()),
      dense_(std::make_shared<const DenseTensor>(std::move(truth))),
      sigma_(sigma),
      noise_seed_(derive_seed(noise_seed, kNoiseSalt)),
      log_observed_(options.log_observed),
      record_trace_(options.record_trace) {
  if (log_observed_) observed_.assign(static_cast<std::size_t>(total_), false);
}

double MeasurementOracle::value_at(Index flat) const {
  const double truth =
      dense_ ? (*dense_)[flat] : cp_entry(*factors_, multi_index(dims_, flat));
  return sigma_ > 0.0 ? truth + noise_at(flat) : truth;
}

double MeasurementOracle::noise_at(Index flat) const {
  return sigma_ * keyed_normal(noise_seed_, static_cast<std::uint64_t>(flat));
}

void MeasurementOracle::mark(Index flat) {
  if (log_observed_) observed_[static_cast<std::size_t>(flat)] = true;
}

Index MeasurementOracle::slice_base_check(Index t, Index i) const {
  if (t < 0 || t >= order())
    throw std::out_of_range("oracle: bad mode");
  if (i < 0 || i >= dims_[static_cast<std::size_t>(t)])
    throw std::out_of_range("oracle: bad slice index");
  return 0;
}

double MeasurementOracle::observe_entry(Index flat) {
  if (flat < 0 || flat >= total_)
    throw std::out_of_range("oracle: entry out of range");
  observed_count_ += 1;
  mark(flat);
  if (record_trace_) trace_.push_back({QueryKind::Entry, flat, 1});
  return value_at(flat);
}

Vector MeasurementOracle::observe_at(Index t, Index i, const IndexSet& omega) {
  slice_base_check(t, i);
  const Index len = slice_entry_count(dims_, t);
  if (omega.ambient != len)
    throw std::invalid_argument("oracle: omega ambient != slice size");
  Vector out(omega.size());
  for (Index k = 0; k < omega.size(); ++k) {
    const Index pos = omega.indices[static_cast<std::size_t>(k)];
    if (pos < 0 || pos >= len)
      throw std::out_of_range("oracle: omega position out of range");
    const Index flat = slice_flat_position(dims_, t, i, pos);
    out[k] = value_at(flat);
    mark(flat);
  }
  observed_count_ += static_cast<std::uint64_t>(omega.size());
  if (record_trace_)
    trace_.push_back({QueryKind::Probe, slice_flat_position(dims_, t, i, 0),
                      omega.size()});
  return out;
}

Vector MeasurementOracle::observe_subtensor(Index t, Index i) {
  slice_base_check(t, i);
  const Index len = slice_entry_count(dims_, t);
  Vector out(len);
  for (Index p = 0; p < len; ++p) {
    const Index flat = slice_flat_position(dims_, t, i, p);
    out[p] = value_at(flat);
    mark(flat);
  }
  observed_count_ += static_cast<std::uint64_t>(len);
  if (record_trace_)
    trace_.push_back({QueryKind::Full, slice_flat_position(dims_, t, i, 0), len});
  return out;
}

Vector MeasurementOracle::observe_subtensor_rest(
    Index t, Index i, const std::vector<Index>& already) {
  slice_base_check(t, i);
  const Index len = slice_entry_count(dims_, t);
  if (static_cast<Index>(already.size()) > len)
    throw std::invalid_argument("oracle: already larger than slice");
  Vector out(len);
  for (Index p = 0; p < len; ++p) {
    const Index flat = slice_flat_position(dims_, t, i, p);
    out[p] = value_at(flat);
    mark(flat);
  }
  observed_count_ +=
      static_cast<std::uint64_t>(len - static_cast<Index>(already.size()));
  if (record_trace_)
    trace_.push_back({QueryKind::Rest, slice_flat_position(dims_, t, i, 0),
                      len - static_cast<Index>(already.size())});
  return out;
}

Vector MeasurementOracle::observe_column(Index j) {
  if (order() != 2)
    throw std::invalid_argument("oracle: observe_column needs order 2");
  return observe_subtensor(1, j);
}

Vector MeasurementOracle::observe_at_range(Index base, const IndexSet& omega) {
  Vector out(omega.size());
  for (Index k = 0; k < omega.size(); ++k) {
    const Index pos = omega.indices[static_cast<std::size_t>(k)];
    const Index flat = base + pos;
    if (pos < 0 || pos >= omega.ambient || flat >= total_)
      throw std::out_of_range("oracle: range position out of range");
    out[k] = value_at(flat);
    mark(flat);
  }
  observed_count_ += static_cast<std::uint64_t>(omega.size());
  if (record_trace_) trace_.push_back({QueryKind::Probe, base, omega.size()});
  return out;
}

Vector MeasurementOracle::observe_range(Index base, Index len) {
  if (base < 0 || len < 0 || base + len > total_)
    throw std::out_of_range("oracle: range out of bounds");
  Vector out(len);
  for (Index p = 0; p < len; ++p) {
    out[p] = value_at(base + p);
    mark(base + p);
  }
  observed_count_ += static_cast<std::uint64_t>(len);
  if (record_trace_) trace_.push_back({QueryKind::Full, base, len});
  return out;
}

Vector MeasurementOracle::observe_range_rest(Index base, Index len,
                                             const std::vector<Index>& already) {
  if (base < 0 || len < 0 || base + len > total_)
    throw std::out_of_range("oracle: range out of bounds");
  if (static_cast<Index>(already.size()) > len)
    throw std::invalid_argument("oracle: already larger than range");
  Vector out(len);
  for (Index p = 0; p < len; ++p) {
    out[p] = value_at(base + p);
    mark(base + p);
  }
  observed_count_ +=
      static_cast<std::uint64_t>(len - static_cast<Index>(already.size()));
  if (record_trace_)
    trace_.push_back(
        {QueryKind::Rest, base, len - static_cast<Index>(already.size())});
  return out;
}

std::uint64_t MeasurementOracle::distinct_observed() const {
  if (!log_observed_)
    throw std::logic_error("oracle: distinct_observed needs log_observed");
  std::uint64_t count = 0;
  for (bool seen : observed_) count += seen ? 1 : 0;
  return count;
}

double MeasurementOracle::observed_noise_sq() const {
  if (!log_observed_)
    throw std::logic_error("oracle: observed_noise_sq needs log_observed");
  if (sigma_ <= 0.0) return 0.0;
  double sum = 0.0;
  for (Index flat = 0; flat < total_; ++flat) {
    if (observed_[static_cast<std::size_t>(flat)]) {
      const double z = noise_at(flat);
      sum += z * z;
    }
  }
  return sum;
}

}  // namespace adcp
