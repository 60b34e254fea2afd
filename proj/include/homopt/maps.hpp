#pragma once

#include <vector>

#include "homopt/tensor.hpp"

namespace homopt {

enum class MapKind { MatrixProduct, CpOuterProduct, ReluNetwork };

/*
 * Elemental mapping phi together with its r-element sum. Each built-in is
 * positively homogeneous of degree p equal to its number of factors:
 *
 *   MatrixProduct    phi(u,v) = u v^T
 *   CpOuterProduct   phi(x^1,...,x^K) = x^1 (x) ... (x) x^K
 *   ReluNetwork      K=2: phi(x^1,x^2) = relu(V x^1) (x^2)^T
 *                    K>2: phi = relu(...relu(relu(V x^1) x^2)...) x^K
 *
 * The data matrix V is a constant of the map, not a factor.
 */
class HomogeneousMap {
 public:
  static HomogeneousMap matrix_product(index_t rows, index_t cols);
  static HomogeneousMap cp_outer_product(std::vector<index_t> dims);
  // Three-layer network with one hidden unit per slice (K = 2).
  static HomogeneousMap relu_network(Tensor data, index_t out_dim);
  // K >= 3 weight groups; widths are the inner dimensions h_1..h_{K-2} of
  // each slice's subnetwork.
  static HomogeneousMap relu_network(Tensor data, std::vector<index_t> widths, index_t out_dim);

  MapKind kind() const { return kind_; }
  index_t num_factors() const { return static_cast<index_t>(input_shapes_.size()); }
  int degree() const { return degree_; }
  const std::vector<Shape>& input_shapes() const { return input_shapes_; }
  const Shape& output_shape() const { return output_shape_; }
  const Tensor& data() const { return data_; }

  // Factor shapes of a size-r set compatible with this map.
  std::vector<Shape> factor_shapes(index_t r) const;
  FactorSet zero_factor_set(index_t r) const;
  void check_compatible(const FactorSet& fs) const;

 private:
  HomogeneousMap() = default;
  MapKind kind_ = MapKind::MatrixProduct;
  std::vector<Shape> input_shapes_;
  Shape output_shape_;
  int degree_ = 0;
  Tensor data_;  // ReluNetwork only
};

// phi applied to one slice per factor.
Tensor eval_elemental(const HomogeneousMap& map, const std::vector<Tensor>& slices);

// Phi_r(fs) = sum over slices of phi.
Tensor eval_full(const HomogeneousMap& map, const FactorSet& fs);

// Gradient of <W, Phi_r(fs)> with respect to every factor entry. For the
// ReLU maps the subgradient at a zero pre-activation is taken as 0.
FactorSet adjoint_grad(const HomogeneousMap& map, const FactorSet& fs, const Tensor& w);

// Same, restricted to factor k (cheaper inside block sweeps).
Tensor adjoint_grad_factor(const HomogeneousMap& map, const FactorSet& fs, const Tensor& w,
                           index_t k);

// card(D) x r matrix whose column i is vec(phi(slices_i)).
Tensor vec_phi_matrix(const HomogeneousMap& map, const FactorSet& fs);

}  // namespace homopt
