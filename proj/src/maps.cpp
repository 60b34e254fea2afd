#include "homopt/maps.hpp"

#include <stdexcept>

#include "homopt/linalg.hpp"

namespace homopt {

namespace {

void check_slices(const HomogeneousMap& map, const std::vector<Tensor>& slices) {
  if (static_cast<index_t>(slices.size()) != map.num_factors()) {
    throw std::invalid_argument("eval_elemental: expected " + std::to_string(map.num_factors()) +
                                " slices, got " + std::to_string(slices.size()));
  }
  for (index_t k = 0; k < map.num_factors(); ++k) {
    if (slices[static_cast<size_t>(k)].shape() != map.input_shapes()[static_cast<size_t>(k)]) {
      throw std::invalid_argument("eval_elemental: slice " + std::to_string(k) +
                                  " has shape " + slices[static_cast<size_t>(k)].shape().str() +
                                  ", expected " +
                                  map.input_shapes()[static_cast<size_t>(k)].str());
    }
  }
}

// Split a linear index of `shape` into per-axis indices.
void decompose(const Shape& shape, index_t lin, std::vector<index_t>& idx) {
  const index_t rank = shape.rank();
  idx.resize(static_cast<size_t>(rank));
  for (index_t a = rank - 1; a >= 0; --a) {
    const index_t d = shape.extent(a);
    idx[static_cast<size_t>(a)] = lin % d;
    lin /= d;
  }
}

MatrixRM relu(const MatrixRM& m) { return m.cwiseMax(0.0); }

}  // namespace

HomogeneousMap HomogeneousMap::matrix_product(index_t rows, index_t cols) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("matrix_product: dims must be >= 1");
  HomogeneousMap m;
  m.kind_ = MapKind::MatrixProduct;
  m.input_shapes_ = {Shape({rows}), Shape({cols})};
  m.output_shape_ = Shape({rows, cols});
  m.degree_ = 2;
  return m;
}

HomogeneousMap HomogeneousMap::cp_outer_product(std::vector<index_t> dims) {
  if (dims.size() < 2) throw std::invalid_argument("cp_outer_product: needs K >= 2 modes");
  HomogeneousMap m;
  m.kind_ = MapKind::CpOuterProduct;
  for (index_t d : dims) {
    if (d < 1) throw std::invalid_argument("cp_outer_product: dims must be >= 1");
    m.input_shapes_.push_back(Shape({d}));
  }
  m.output_shape_ = Shape(std::move(dims));
  m.degree_ = static_cast<int>(m.input_shapes_.size());
  return m;
}

HomogeneousMap HomogeneousMap::relu_network(Tensor data, index_t out_dim) {
  if (data.shape().rank() != 2) throw std::invalid_argument("relu_network: data must be a matrix");
  if (out_dim < 1) throw std::invalid_argument("relu_network: out_dim must be >= 1");
  HomogeneousMap m;
  m.kind_ = MapKind::ReluNetwork;
  const index_t n = data.shape().extent(0);
  const index_t d1 = data.shape().extent(1);
  m.input_shapes_ = {Shape({d1}), Shape({out_dim})};
  m.output_shape_ = Shape({n, out_dim});
  m.degree_ = 2;
  m.data_ = std::move(data);
  return m;
}

HomogeneousMap HomogeneousMap::relu_network(Tensor data, std::vector<index_t> widths,
                                            index_t out_dim) {
  if (widths.empty()) return relu_network(std::move(data), out_dim);
  if (data.shape().rank() != 2) throw std::invalid_argument("relu_network: data must be a matrix");
  HomogeneousMap m;
  m.kind_ = MapKind::ReluNetwork;
  const index_t n = data.shape().extent(0);
  index_t prev = data.shape().extent(1);
  for (index_t h : widths) {
    if (h < 1) throw std::invalid_argument("relu_network: widths must be >= 1");
    m.input_shapes_.push_back(Shape({prev, h}));
    prev = h;
  }
  m.input_shapes_.push_back(Shape({prev, out_dim}));
  m.output_shape_ = Shape({n, out_dim});
  m.degree_ = static_cast<int>(m.input_shapes_.size());
  m.data_ = std::move(data);
  return m;
}

std::vector<Shape> HomogeneousMap::factor_shapes(index_t r) const {
  std::vector<Shape> out;
  out.reserve(input_shapes_.size());
  for (const Shape& s : input_shapes_) {
    std::vector<index_t> d = s.dims();
    d.push_back(r);
    out.push_back(Shape(std::move(d)));
  }
  return out;
}

FactorSet HomogeneousMap::zero_factor_set(index_t r) const {
  std::vector<Tensor> fs;
  for (const Shape& s : factor_shapes(r)) fs.push_back(Tensor(s));
  return FactorSet(std::move(fs));
}

void HomogeneousMap::check_compatible(const FactorSet& fs) const {
  if (fs.num_factors() != num_factors()) {
    throw std::invalid_argument("factor set has " + std::to_string(fs.num_factors()) +
                                " factors, map expects " + std::to_string(num_factors()));
  }
  for (index_t k = 0; k < num_factors(); ++k) {
    if (fs.factor(k).shape().drop_last() != input_shapes_[static_cast<size_t>(k)]) {
      throw std::invalid_argument("factor " + std::to_string(k) + " slice shape " +
                                  fs.factor(k).shape().drop_last().str() + " != expected " +
                                  input_shapes_[static_cast<size_t>(k)].str());
    }
  }
}

Tensor eval_elemental(const HomogeneousMap& map, const std::vector<Tensor>& slices) {
  check_slices(map, slices);
  switch (map.kind()) {
    case MapKind::MatrixProduct: {
      const Tensor& u = slices[0];
      const Tensor& v = slices[1];
      Tensor out(map.output_shape());
      as_matrix(out).noalias() = as_vector(u) * as_vector(v).transpose();
      return out;
    }
    case MapKind::CpOuterProduct: {
      Tensor out(map.output_shape());
      std::vector<index_t> idx;
      for (index_t lin = 0; lin < out.size(); ++lin) {
        decompose(map.output_shape(), lin, idx);
        double p = 1.0;
        for (size_t k = 0; k < slices.size(); ++k) p *= slices[k][idx[k]];
        out[lin] = p;
      }
      return out;
    }
    case MapKind::ReluNetwork: {
      const auto v = as_matrix(map.data());
      if (map.input_shapes()[0].rank() == 1) {
        Eigen::VectorXd h = (v * as_vector(slices[0])).cwiseMax(0.0);
        Tensor out(map.output_shape());
        as_matrix(out).noalias() = h * as_vector(slices[1]).transpose();
        return out;
      }
      MatrixRM a = relu(v * as_matrix(slices[0]));
      for (size_t k = 1; k + 1 < slices.size(); ++k) a = relu(a * as_matrix(slices[k]));
      Tensor out(map.output_shape());
      as_matrix(out).noalias() = a * as_matrix(slices.back());
      return out;
    }
  }
  throw std::logic_error("eval_elemental: unknown map kind");
}

Tensor eval_full(const HomogeneousMap& map, const FactorSet& fs) {
  map.check_compatible(fs);
  switch (map.kind()) {
    case MapKind::MatrixProduct: {
      Tensor out(map.output_shape());
      as_matrix(out).noalias() = as_matrix(fs.factor(0)) * as_matrix(fs.factor(1)).transpose();
      return out;
    }
    case MapKind::ReluNetwork:
      if (map.input_shapes()[0].rank() == 1) {
        Tensor out(map.output_shape());
        MatrixRM h = relu(as_matrix(map.data()) * as_matrix(fs.factor(0)));
        as_matrix(out).noalias() = h * as_matrix(fs.factor(1)).transpose();
        return out;
      }
      [[fallthrough]];
    case MapKind::CpOuterProduct: {
      Tensor out(map.output_shape());
      for (index_t i = 0; i < fs.r(); ++i) {
        const Tensor term = eval_elemental(map, fs.slices(i));
        axpy(out, 1.0, term);
      }
      return out;
    }
  }
  throw std::logic_error("eval_full: unknown map kind");
}

namespace {

// Per-slice CP adjoint: gradient of <W, phi(slices)> for one factor.
Tensor cp_slice_grad(const HomogeneousMap& map, const std::vector<Tensor>& slices, const Tensor& w,
                     index_t k) {
  Tensor g(map.input_shapes()[static_cast<size_t>(k)]);
  std::vector<index_t> idx;
  for (index_t lin = 0; lin < w.size(); ++lin) {
    decompose(map.output_shape(), lin, idx);
    double p = w[lin];
    for (index_t j = 0; j < map.num_factors(); ++j) {
      if (j != k) p *= slices[static_cast<size_t>(j)][idx[static_cast<size_t>(j)]];
    }
    g[idx[static_cast<size_t>(k)]] += p;
  }
  return g;
}

// Per-slice ReLU chain adjoint (K >= 3); masks frozen at the forward pass,
// zero subgradient at zero pre-activations.
std::vector<Tensor> relu_chain_slice_grad(const HomogeneousMap& map,
                                          const std::vector<Tensor>& slices, const Tensor& w) {
  const index_t kk = map.num_factors();
  const auto v = as_matrix(map.data());
  std::vector<MatrixRM> acts;  // post-rectification activations, acts[0] = V
  acts.reserve(static_cast<size_t>(kk));
  acts.push_back(v);
  std::vector<MatrixRM> masks;
  for (index_t k = 0; k + 1 < kk; ++k) {
    MatrixRM z = acts.back() * as_matrix(slices[static_cast<size_t>(k)]);
    masks.push_back((z.array() > 0.0).cast<double>().matrix());
    acts.push_back(relu(z));
  }
  std::vector<Tensor> grads(static_cast<size_t>(kk));
  MatrixRM back = as_matrix(w);  // dL/d(output)
  // final linear layer
  {
    Tensor g(map.input_shapes()[static_cast<size_t>(kk - 1)]);
    as_matrix(g).noalias() = acts.back().transpose() * back;
    grads[static_cast<size_t>(kk - 1)] = std::move(g);
    back = (back * as_matrix(slices[static_cast<size_t>(kk - 1)]).transpose())
               .cwiseProduct(masks.back());
  }
  for (index_t k = kk - 2; k >= 0; --k) {
    Tensor g(map.input_shapes()[static_cast<size_t>(k)]);
    as_matrix(g).noalias() = acts[static_cast<size_t>(k)].transpose() * back;
    grads[static_cast<size_t>(k)] = std::move(g);
    if (k > 0) {
      back = (back * as_matrix(slices[static_cast<size_t>(k)]).transpose())
                 .cwiseProduct(masks[static_cast<size_t>(k - 1)]);
    }
  }
  return grads;
}

}  // namespace

Tensor adjoint_grad_factor(const HomogeneousMap& map, const FactorSet& fs, const Tensor& w,
                           index_t k) {
  map.check_compatible(fs);
  if (w.shape() != map.output_shape()) {
    throw std::invalid_argument("adjoint_grad: W shape " + w.shape().str() + " != output shape " +
                                map.output_shape().str());
  }
  if (k < 0 || k >= map.num_factors()) throw std::out_of_range("adjoint_grad_factor: k");
  Tensor g(fs.factor(k).shape());
  switch (map.kind()) {
    case MapKind::MatrixProduct: {
      if (k == 0) {
        as_matrix(g).noalias() = as_matrix(w) * as_matrix(fs.factor(1));
      } else {
        as_matrix(g).noalias() = as_matrix(w).transpose() * as_matrix(fs.factor(0));
      }
      return g;
    }
    case MapKind::CpOuterProduct: {
      for (index_t i = 0; i < fs.r(); ++i) {
        const Tensor gi = cp_slice_grad(map, fs.slices(i), w, k);
        const index_t n = gi.size();
        for (index_t j = 0; j < n; ++j) g[j * fs.r() + i] = gi[j];
      }
      return g;
    }
    case MapKind::ReluNetwork: {
      if (map.input_shapes()[0].rank() == 1) {
        const auto v = as_matrix(map.data());
        MatrixRM z = v * as_matrix(fs.factor(0));             // N x r pre-activations
        MatrixRM mask = (z.array() > 0.0).cast<double>().matrix();
        if (k == 1) {
          as_matrix(g).noalias() = as_matrix(w).transpose() * relu(z);
        } else {
          MatrixRM t = (as_matrix(w) * as_matrix(fs.factor(1))).cwiseProduct(mask);  // N x r
          as_matrix(g).noalias() = v.transpose() * t;
        }
        return g;
      }
      for (index_t i = 0; i < fs.r(); ++i) {
        const std::vector<Tensor> gi = relu_chain_slice_grad(map, fs.slices(i), w);
        const Tensor& gik = gi[static_cast<size_t>(k)];
        for (index_t j = 0; j < gik.size(); ++j) g[j * fs.r() + i] = gik[j];
      }
      return g;
    }
  }
  throw std::logic_error("adjoint_grad_factor: unknown map kind");
}

FactorSet adjoint_grad(const HomogeneousMap& map, const FactorSet& fs, const Tensor& w) {
  std::vector<Tensor> grads;
  grads.reserve(static_cast<size_t>(map.num_factors()));
  for (index_t k = 0; k < map.num_factors(); ++k) {
    grads.push_back(adjoint_grad_factor(map, fs, w, k));
  }
  return FactorSet(std::move(grads));
}

Tensor vec_phi_matrix(const HomogeneousMap& map, const FactorSet& fs) {
  map.check_compatible(fs);
  const index_t card = map.output_shape().cardinality();
  Tensor m(Shape({card, fs.r()}));
  for (index_t i = 0; i < fs.r(); ++i) {
    const Tensor col = eval_elemental(map, fs.slices(i));
    for (index_t j = 0; j < card; ++j) m[j * fs.r() + i] = col[j];
  }
  return m;
}

}  // namespace homopt
