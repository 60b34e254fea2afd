#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace homopt {

using index_t = std::int64_t;

/*
 * Dense tensor shape. Extents are positive, except that the last dimension
 * may be zero so that concatenation along it has an identity element.
 * cardinality() is the product of all extents.
 */
class Shape {
 public:
  Shape() = default;
  explicit Shape(std::vector<index_t> dims);

  index_t rank() const { return static_cast<index_t>(dims_.size()); }
  index_t extent(index_t i) const;
  index_t last_extent() const;
  index_t cardinality() const;
  const std::vector<index_t>& dims() const { return dims_; }

  // Shape with the last dimension removed (slice shape).
  Shape drop_last() const;
  // Shape with the last dimension replaced by r.
  Shape with_last(index_t r) const;

  bool operator==(const Shape& o) const { return dims_ == o.dims_; }
  bool operator!=(const Shape& o) const { return !(*this == o); }

  std::string str() const;  // e.g. "2x3x4"

 private:
  std::vector<index_t> dims_;
};

/*
 * Dense real tensor in canonical row-major linearization: the first
 * dimension varies slowest, the last dimension varies fastest. All entries
 * are finite; checked constructors reject NaN/Inf.
 */
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);  // zero-filled
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }

  const Shape& shape() const { return shape_; }
  index_t size() const { return static_cast<index_t>(data_.size()); }

  double operator[](index_t i) const { return data_[static_cast<size_t>(i)]; }
  double& operator[](index_t i) { return data_[static_cast<size_t>(i)]; }

  const double* data() const { return data_.data(); }
  double* data() { return data_.data(); }
  const std::vector<double>& values() const { return data_; }

  bool all_finite() const;

 private:
  Shape shape_;
  std::vector<double> data_;
};

// i-th slice along the last dimension; result shape is shape().drop_last().
Tensor slice_last(const Tensor& x, index_t i);

// Concatenation along the last dimension; all other extents must agree.
Tensor concat_last(const Tensor& x, const Tensor& y);

// <x,y> = vec(x)^T vec(y); shapes must be identical.
double inner(const Tensor& x, const Tensor& y);

double frobenius_norm(const Tensor& x);
double max_abs(const Tensor& x);

Tensor add(const Tensor& x, const Tensor& y);
Tensor sub(const Tensor& x, const Tensor& y);
Tensor scale(const Tensor& x, double a);
// x += a*y in place.
void axpy(Tensor& x, double a, const Tensor& y);

/*
 * A size-r set of K factor tensors. Factor k has shape D^k x r; slice i of
 * factor k is the i-th slice along its last dimension.
 */
class FactorSet {
 public:
  FactorSet() = default;
  explicit FactorSet(std::vector<Tensor> factors);

  index_t num_factors() const { return static_cast<index_t>(factors_.size()); }
  index_t r() const { return r_; }

  const Tensor& factor(index_t k) const;
  Tensor& factor(index_t k);
  const std::vector<Tensor>& factors() const { return factors_; }

  Tensor slice(index_t k, index_t i) const;
  void set_slice(index_t k, index_t i, const Tensor& s);
  // All K slices at index i, one per factor.
  std::vector<Tensor> slices(index_t i) const;
  // Scale every factor's slice i by a.
  void scale_slice(index_t i, double a);
  void zero_slice(index_t i);

  // Largest |entry| over all factors' slice i.
  double slice_max_abs(index_t i) const;
  double max_abs() const;

  bool slice_is_zero(index_t i, double tol = 0.0) const;
  std::optional<index_t> first_zero_slice(double tol = 0.0) const;

 private:
  std::vector<Tensor> factors_;
  index_t r_ = 0;
};

// Shared-permutation reordering of slices across all factors.
FactorSet permute_slices(const FactorSet& fs, const std::vector<index_t>& perm);

}  // namespace homopt
