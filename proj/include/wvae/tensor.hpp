#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace wvae {

using Shape = std::vector<std::size_t>;

namespace detail {

enum class OpTag : std::uint8_t {
  leaf,
  add,
  sub,
  mul,
  neg,
  exp,
  log,
  sigmoid,
  tanh,
  relu,
  square,
  sqrt,
  softplus,
  clamp,
  add_scalar,
  mul_scalar,
  matmul,
  matmul_nt,
  sum,
  tile_rows,
  bce_logits_sum,
  gauss_kl_sum,
};

struct TensorNode {
  Shape shape;
  std::shared_ptr<std::vector<double>> value;   // forward data, shared by views
  std::vector<double> grad;                     // empty until needed
  bool requires_grad = false;                   // true only for parameter leaves
  OpTag op = OpTag::leaf;
  std::vector<std::shared_ptr<TensorNode>> parents;
  double aux0 = 0.0;  // op attribute (scalar operand, clamp lo, ...)
  double aux1 = 0.0;
  std::uint64_t seq = 0;  // creation order; parents always have smaller seq

  std::size_t size() const;
  bool grad_relevant() const { return requires_grad || !parents.empty(); }
};

}  // namespace detail

/// Dense n-d array of doubles, optionally attached to a reverse-mode
/// differentiation graph. Copies share the underlying node (handle
/// semantics); detached() gives a view of the same data outside the graph.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape);
  static Tensor constant(Shape shape, double value);
  static Tensor from_data(Shape shape, std::vector<double> data);
  static Tensor scalar(double value);
  /// Leaf that collects gradients (a trainable parameter).
  static Tensor parameter(Shape shape, std::vector<double> data);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t size() const;
  std::size_t rows() const { return shape().at(0); }
  std::size_t cols() const { return shape().at(1); }

  std::span<const double> values() const;
  /// Mutable view of a leaf's data (optimizer updates); never call on a
  /// tensor produced by an op that is still part of a live graph.
  std::span<double> raw();
  double item() const;

  bool requires_grad() const;
  bool has_grad() const;
  std::span<const double> grad() const;
  void zero_grad();

  /// Same data buffer, no graph attachment, no gradient.
  Tensor detached() const;

  std::uint64_t creation_index() const;
  detail::TensorNode* node() const { return node_.get(); }
  const std::shared_ptr<detail::TensorNode>& node_ptr() const { return node_; }

  static Tensor wrap(std::shared_ptr<detail::TensorNode> n);

 private:
  std::shared_ptr<detail::TensorNode> node_;
};

// Elementwise ops. Binary ops require identical shapes (no broadcasting);
// scalar-with-tensor variants are provided separately.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor square(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor softplus(const Tensor& a);
Tensor clamp(const Tensor& a, double lo, double hi);
Tensor add_scalar(const Tensor& a, double c);
Tensor mul_scalar(const Tensor& a, double c);

/// Standard matrix product [m x k] * [k x n] -> [m x n].
Tensor matmul(const Tensor& a, const Tensor& b);
/// a * b^T for a [m x k], b [n x k] -> [m x n]; how dense layers consume
/// weights stored as [out x in].
Tensor matmul_nt(const Tensor& a, const Tensor& b);

/// Full reduction to a scalar.
Tensor sum(const Tensor& a);
/// Repeats a length-d vector as n rows -> [n x d]; backward sums over rows.
Tensor tile_rows(const Tensor& row, std::size_t n);

/// sum over elements of softplus(logit) - x * logit, the negative Bernoulli
/// log-likelihood in its numerically stable form. Requires x in [0, 1].
Tensor bce_logits_sum(const Tensor& x, const Tensor& logits);
/// sum over elements of (mu^2 + exp(logvar) - logvar - 1) / 2, the closed-form
/// KL of N(mu, exp(logvar)) against a standard normal.
Tensor gauss_kl_sum(const Tensor& mu, const Tensor& logvar);

/// Reverse pass from a scalar loss. Accumulates into the grad buffers of
/// parameter leaves; the traversed graph is released afterwards.
void backward(const Tensor& loss);

/// Max over all parameter elements of
/// |analytic - central difference| / max(1, |central difference|).
/// f must be a deterministic scalar-valued function of params.
double grad_check(const std::function<Tensor()>& f, std::span<Tensor> params,
                  double eps = 1e-5);

}  // namespace wvae
