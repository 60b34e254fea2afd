#include "homopt/tensor.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

namespace homopt {

Shape::Shape(std::vector<index_t> dims) : dims_(std::move(dims)) {
  for (size_t i = 0; i < dims_.size(); ++i) {
    const bool last = (i + 1 == dims_.size());
    if (dims_[i] < 0 || (!last && dims_[i] == 0)) {
      throw std::invalid_argument("Shape: extents must be >= 1 (last may be 0): " + str());
    }
  }
}

index_t Shape::extent(index_t i) const {
  if (i < 0 || i >= rank()) throw std::out_of_range("Shape::extent: axis out of range");
  return dims_[static_cast<size_t>(i)];
}

index_t Shape::last_extent() const {
  if (dims_.empty()) throw std::out_of_range("Shape::last_extent: rank-0 shape");
  return dims_.back();
}

index_t Shape::cardinality() const {
  index_t c = 1;
  for (index_t d : dims_) c *= d;
  return c;
}

Shape Shape::drop_last() const {
  if (dims_.empty()) throw std::out_of_range("Shape::drop_last: rank-0 shape");
  return Shape(std::vector<index_t>(dims_.begin(), dims_.end() - 1));
}

Shape Shape::with_last(index_t r) const {
  if (dims_.empty()) throw std::out_of_range("Shape::with_last: rank-0 shape");
  std::vector<index_t> d(dims_);
  d.back() = r;
  return Shape(std::move(d));
}

std::string Shape::str() const {
  std::ostringstream os;
  for (size_t i = 0; i < dims_.size(); ++i) {
    if (i) os << "x";
    os << dims_[i];
  }
  return os.str();
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
  data_.assign(static_cast<size_t>(shape_.cardinality()), 0.0);
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (static_cast<index_t>(data_.size()) != shape_.cardinality()) {
    throw std::invalid_argument("Tensor: data length " + std::to_string(data_.size()) +
                                " does not match shape " + shape_.str());
  }
  if (!all_finite()) throw std::invalid_argument("Tensor: non-finite entry");
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Tensor slice_last(const Tensor& x, index_t i) {
  const index_t r = x.shape().last_extent();
  if (i < 0 || i >= r) {
    throw std::out_of_range("slice_last: index " + std::to_string(i) + " out of range for shape " +
                            x.shape().str());
  }
  Tensor out(x.shape().drop_last());
  const index_t n = out.size();
  for (index_t j = 0; j < n; ++j) out[j] = x[j * r + i];
  return out;
}

Tensor concat_last(const Tensor& x, const Tensor& y) {
  if (x.shape().rank() != y.shape().rank()) {
    throw std::invalid_argument("concat_last: rank mismatch " + x.shape().str() + " vs " +
                                y.shape().str());
  }
  for (index_t a = 0; a + 1 < x.shape().rank(); ++a) {
    if (x.shape().extent(a) != y.shape().extent(a)) {
      throw std::invalid_argument("concat_last: non-final extents differ, " + x.shape().str() +
                                  " vs " + y.shape().str());
    }
  }
  const index_t rx = x.shape().last_extent();
  const index_t ry = y.shape().last_extent();
  Tensor out(x.shape().with_last(rx + ry));
  const index_t rows = x.shape().drop_last().cardinality();
  for (index_t row = 0; row < rows; ++row) {
    for (index_t j = 0; j < rx; ++j) out[row * (rx + ry) + j] = x[row * rx + j];
    for (index_t j = 0; j < ry; ++j) out[row * (rx + ry) + rx + j] = y[row * ry + j];
  }
  return out;
}

double inner(const Tensor& x, const Tensor& y) {
  if (x.shape() != y.shape()) {
    throw std::invalid_argument("inner: shape mismatch " + x.shape().str() + " vs " +
                                y.shape().str());
  }
  double s = 0.0;
  for (index_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

double frobenius_norm(const Tensor& x) {
  double s = 0.0;
  for (index_t i = 0; i < x.size(); ++i) s += x[i] * x[i];
  return std::sqrt(s);
}

double max_abs(const Tensor& x) {
  double m = 0.0;
  for (index_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i]));
  return m;
}

Tensor add(const Tensor& x, const Tensor& y) {
  if (x.shape() != y.shape()) throw std::invalid_argument("add: shape mismatch");
  Tensor out = x;
  for (index_t i = 0; i < out.size(); ++i) out[i] += y[i];
  return out;
}

Tensor sub(const Tensor& x, const Tensor& y) {
  if (x.shape() != y.shape()) throw std::invalid_argument("sub: shape mismatch");
  Tensor out = x;
  for (index_t i = 0; i < out.size(); ++i) out[i] -= y[i];
  return out;
}

Tensor scale(const Tensor& x, double a) {
  Tensor out = x;
  for (index_t i = 0; i < out.size(); ++i) out[i] *= a;
  return out;
}

void axpy(Tensor& x, double a, const Tensor& y) {
  if (x.shape() != y.shape()) throw std::invalid_argument("axpy: shape mismatch");
  for (index_t i = 0; i < x.size(); ++i) x[i] += a * y[i];
}

FactorSet::FactorSet(std::vector<Tensor> factors) : factors_(std::move(factors)) {
  if (factors_.empty()) throw std::invalid_argument("FactorSet: needs at least one factor");
  r_ = factors_[0].shape().last_extent();
  if (r_ < 1) throw std::invalid_argument("FactorSet: last extent must be >= 1");
  for (const Tensor& f : factors_) {
    if (f.shape().last_extent() != r_) {
      throw std::invalid_argument("FactorSet: factors disagree on final extent");
    }
  }
}

const Tensor& FactorSet::factor(index_t k) const {
  if (k < 0 || k >= num_factors()) throw std::out_of_range("FactorSet::factor");
  return factors_[static_cast<size_t>(k)];
}

Tensor& FactorSet::factor(index_t k) {
  if (k < 0 || k >= num_factors()) throw std::out_of_range("FactorSet::factor");
  return factors_[static_cast<size_t>(k)];
}

Tensor FactorSet::slice(index_t k, index_t i) const { return slice_last(factor(k), i); }

void FactorSet::set_slice(index_t k, index_t i, const Tensor& s) {
  Tensor& f = factor(k);
  if (s.shape() != f.shape().drop_last()) {
    throw std::invalid_argument("FactorSet::set_slice: slice shape mismatch");
  }
  if (i < 0 || i >= r_) throw std::out_of_range("FactorSet::set_slice");
  const index_t n = s.size();
  for (index_t j = 0; j < n; ++j) f[j * r_ + i] = s[j];
}

std::vector<Tensor> FactorSet::slices(index_t i) const {
  std::vector<Tensor> out;
  out.reserve(static_cast<size_t>(num_factors()));
  for (index_t k = 0; k < num_factors(); ++k) out.push_back(slice(k, i));
  return out;
}

void FactorSet::scale_slice(index_t i, double a) {
  if (i < 0 || i >= r_) throw std::out_of_range("FactorSet::scale_slice");
  for (Tensor& f : factors_) {
    const index_t n = f.size() / r_;
    for (index_t j = 0; j < n; ++j) f[j * r_ + i] *= a;
  }
}

void FactorSet::zero_slice(index_t i) {
  if (i < 0 || i >= r_) throw std::out_of_range("FactorSet::zero_slice");
  for (Tensor& f : factors_) {
    const index_t n = f.size() / r_;
    for (index_t j = 0; j < n; ++j) f[j * r_ + i] = 0.0;
  }
}

double FactorSet::slice_max_abs(index_t i) const {
  if (i < 0 || i >= r_) throw std::out_of_range("FactorSet::slice_max_abs");
  double m = 0.0;
  for (const Tensor& f : factors_) {
    const index_t n = f.size() / r_;
    for (index_t j = 0; j < n; ++j) m = std::max(m, std::abs(f[j * r_ + i]));
  }
  return m;
}

double FactorSet::max_abs() const {
  double m = 0.0;
  for (const Tensor& f : factors_) m = std::max(m, homopt::max_abs(f));
  return m;
}

bool FactorSet::slice_is_zero(index_t i, double tol) const { return slice_max_abs(i) <= tol; }

std::optional<index_t> FactorSet::first_zero_slice(double tol) const {
  for (index_t i = 0; i < r_; ++i) {
    if (slice_is_zero(i, tol)) return i;
  }
  return std::nullopt;
}

FactorSet permute_slices(const FactorSet& fs, const std::vector<index_t>& perm) {
  if (static_cast<index_t>(perm.size()) != fs.r()) {
    throw std::invalid_argument("permute_slices: permutation length != r");
  }
  FactorSet out = fs;
  for (index_t k = 0; k < fs.num_factors(); ++k) {
    for (index_t i = 0; i < fs.r(); ++i) {
      out.set_slice(k, i, fs.slice(k, perm[static_cast<size_t>(i)]));
    }
  }
  return out;
}

}  // namespace homopt
