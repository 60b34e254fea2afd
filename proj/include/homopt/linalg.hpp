#pragma once

#include <Eigen/Core>
#include <Eigen/SVD>

#include "homopt/tensor.hpp"

namespace homopt {

using MatrixRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// View a rank-2 tensor as an Eigen matrix (no copy). The tensor's canonical
// linearization is row-major, so the map is direct.
inline Eigen::Map<const MatrixRM> as_matrix(const Tensor& t) {
  if (t.shape().rank() != 2) throw std::invalid_argument("as_matrix: tensor is not rank-2");
  return Eigen::Map<const MatrixRM>(t.data(), t.shape().extent(0), t.shape().extent(1));
}

inline Eigen::Map<MatrixRM> as_matrix(Tensor& t) {
  if (t.shape().rank() != 2) throw std::invalid_argument("as_matrix: tensor is not rank-2");
  return Eigen::Map<MatrixRM>(t.data(), t.shape().extent(0), t.shape().extent(1));
}

inline Eigen::Map<const Eigen::VectorXd> as_vector(const Tensor& t) {
  return Eigen::Map<const Eigen::VectorXd>(t.data(), t.size());
}

inline Eigen::Map<Eigen::VectorXd> as_vector(Tensor& t) {
  return Eigen::Map<Eigen::VectorXd>(t.data(), t.size());
}

inline Tensor from_matrix(const MatrixRM& m) {
  Tensor t(Shape({m.rows(), m.cols()}));
  Eigen::Map<MatrixRM>(t.data(), m.rows(), m.cols()) = m;
  return t;
}

inline Tensor from_vector(const Eigen::VectorXd& v, const Shape& shape) {
  if (shape.cardinality() != v.size()) throw std::invalid_argument("from_vector: size mismatch");
  Tensor t(shape);
  Eigen::Map<Eigen::VectorXd>(t.data(), v.size()) = v;
  return t;
}

struct Svd {
  Eigen::MatrixXd u;        // m x k
  Eigen::VectorXd sigma;    // k, non-increasing
  Eigen::MatrixXd v;        // n x k
};

// Thin SVD; accurate enough for certificate residuals at desk scale.
inline Svd thin_svd(const Eigen::MatrixXd& a) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return Svd{svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

inline double spectral_norm(const Eigen::MatrixXd& a) {
  return Eigen::JacobiSVD<Eigen::MatrixXd>(a).singularValues()(0);
}

}  // namespace homopt
