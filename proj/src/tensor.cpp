#include "wvae/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "wvae/kernels.hpp"

namespace wvae {

using detail::OpTag;
using detail::TensorNode;

namespace {

std::atomic<std::uint64_t> g_seq{0};

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t d : s) n *= d;
  return n;
}

std::shared_ptr<TensorNode> make_node(Shape shape, std::vector<double> data) {
  auto n = std::make_shared<TensorNode>();
  n->shape = std::move(shape);
  if (shape_numel(n->shape) != data.size()) {
    throw std::invalid_argument("Tensor: data length does not match shape " +
                                shape_str(n->shape));
  }
  for (std::size_t d : n->shape) {
    if (d == 0) throw std::invalid_argument("Tensor: zero dimension in shape");
  }
  n->value = std::make_shared<std::vector<double>>(std::move(data));
  n->seq = g_seq.fetch_add(1, std::memory_order_relaxed);
  return n;
}

// Records the node into the graph only when some input can receive a
// gradient; otherwise the result is a plain value.
Tensor finish_op(std::shared_ptr<TensorNode> n, OpTag op,
                 std::initializer_list<Tensor> inputs) {
  bool attach = false;
  for (const Tensor& t : inputs) {
    if (t.node()->grad_relevant()) attach = true;
  }
  if (attach) {
    n->op = op;
    n->parents.reserve(inputs.size());
    for (const Tensor& t : inputs) n->parents.push_back(t.node_ptr());
  }
  return Tensor::wrap(std::move(n));
}

void check_defined(const Tensor& t, const char* who) {
  if (!t.defined()) throw std::invalid_argument(std::string(who) + ": undefined tensor");
}

void check_same_shape(const char* who, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(who) + ": shape mismatch " +
                                shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

Tensor unary_map(const char* who, OpTag op, const Tensor& a,
                 double (*fn)(double)) {
  check_defined(a, who);
  const auto av = a.values();
  std::vector<double> out(av.size());
  kernels::parallel_map(av.size(), [&](std::size_t i) { out[i] = fn(av[i]); });
  return finish_op(make_node(a.shape(), std::move(out)), op, {a});
}

void ensure_grad(TensorNode* n) {
  if (n->grad.size() != n->size()) n->grad.assign(n->size(), 0.0);
}

double stable_softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

}  // namespace

namespace detail {
std::size_t TensorNode::size() const { return shape_numel(shape); }
}  // namespace detail

Tensor Tensor::wrap(std::shared_ptr<TensorNode> n) {
  Tensor t;
  t.node_ = std::move(n);
  return t;
}

Tensor Tensor::zeros(Shape shape) {
  std::size_t n = shape_numel(shape);
  return wrap(make_node(std::move(shape), std::vector<double>(n, 0.0)));
}

Tensor Tensor::constant(Shape shape, double value) {
  std::size_t n = shape_numel(shape);
  return wrap(make_node(std::move(shape), std::vector<double>(n, value)));
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data) {
  return wrap(make_node(std::move(shape), std::move(data)));
}

Tensor Tensor::scalar(double value) { return from_data({1}, {value}); }

Tensor Tensor::parameter(Shape shape, std::vector<double> data) {
  Tensor t = from_data(std::move(shape), std::move(data));
  t.node_->requires_grad = true;
  return t;
}

const Shape& Tensor::shape() const {
  if (!node_) throw std::logic_error("Tensor::shape on undefined tensor");
  return node_->shape;
}

std::size_t Tensor::size() const { return node_ ? node_->size() : 0; }

std::span<const double> Tensor::values() const {
  if (!node_) throw std::logic_error("Tensor::values on undefined tensor");
  return {node_->value->data(), node_->value->size()};
}

std::span<double> Tensor::raw() {
  if (!node_) throw std::logic_error("Tensor::raw on undefined tensor");
  return {node_->value->data(), node_->value->size()};
}

double Tensor::item() const {
  if (size() != 1) {
    throw std::invalid_argument("Tensor::item: tensor has " +
                                std::to_string(size()) + " elements, expected 1");
  }
  return (*node_->value)[0];
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

bool Tensor::has_grad() const { return node_ && !node_->grad.empty(); }

std::span<const double> Tensor::grad() const {
  if (!node_) throw std::logic_error("Tensor::grad on undefined tensor");
  return {node_->grad.data(), node_->grad.size()};
}

void Tensor::zero_grad() {
  if (node_) node_->grad.assign(node_->size(), 0.0);
}

Tensor Tensor::detached() const {
  if (!node_) return {};
  auto n = std::make_shared<TensorNode>();
  n->shape = node_->shape;
  n->value = node_->value;  // shares the buffer
  n->seq = g_seq.fetch_add(1, std::memory_order_relaxed);
  return wrap(std::move(n));
}

std::uint64_t Tensor::creation_index() const {
  if (!node_) throw std::logic_error("Tensor::creation_index on undefined tensor");
  return node_->seq;
}

// ---------------------------------------------------------------------------
// Forward ops

Tensor add(const Tensor& a, const Tensor& b) {
  check_defined(a, "add");
  check_defined(b, "add");
  check_same_shape("add", a, b);
  const auto av = a.values(), bv = b.values();
  std::vector<double> out(av.size());
  kernels::parallel_map(av.size(), [&](std::size_t i) { out[i] = av[i] + bv[i]; });
  return finish_op(make_node(a.shape(), std::move(out)), OpTag::add, {a, b});
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_defined(a, "sub");
  check_defined(b, "sub");
  check_same_shape("sub", a, b);
  const auto av = a.values(), bv = b.values();
  std::vector<double> out(av.size());
  kernels::parallel_map(av.size(), [&](std::size_t i) { out[i] = av[i] - bv[i]; });
  return finish_op(make_node(a.shape(), std::move(out)), OpTag::sub, {a, b});
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_defined(a, "mul");
  check_defined(b, "mul");
  check_same_shape("mul", a, b);
  const auto av = a.values(), bv = b.values();
  std::vector<double> out(av.size());
  kernels::parallel_map(av.size(), [&](std::size_t i) { out[i] = av[i] * bv[i]; });
  return finish_op(make_node(a.shape(), std::move(out)), OpTag::mul, {a, b});
}

Tensor neg(const Tensor& a) {
  return unary_map("neg", OpTag::neg, a, [](double x) { return -x; });
}

Tensor exp(const Tensor& a) {
  return unary_map("exp", OpTag::exp, a, [](double x) { return std::exp(x); });
}

Tensor log(const Tensor& a) {
  check_defined(a, "log");
  for (double x : a.values()) {
    if (x < 0.0) {
      throw std::domain_error("log: negative input " + std::to_string(x));
    }
  }
  return unary_map("log", OpTag::log, a, [](double x) { return std::log(x); });
}

Tensor sigmoid(const Tensor& a) {
  return unary_map("sigmoid", OpTag::sigmoid, a,
                   [](double x) { return 1.0 / (1.0 + std::exp(-x)); });
}

Tensor tanh(const Tensor& a) {
  return unary_map("tanh", OpTag::tanh, a, [](double x) { return std::tanh(x); });
}

Tensor relu(const Tensor& a) {
  return unary_map("relu", OpTag::relu, a,
                   [](double x) { return x > 0.0 ? x : 0.0; });
}

Tensor square(const Tensor& a) {
  return unary_map("square", OpTag::square, a, [](double x) { return x * x; });
}

Tensor sqrt(const Tensor& a) {
  check_defined(a, "sqrt");
  for (double x : a.values()) {
    if (x < 0.0) {
      throw std::domain_error("sqrt: negative input " + std::to_string(x));
    }
  }
  return unary_map("sqrt", OpTag::sqrt, a, [](double x) { return std::sqrt(x); });
}

Tensor softplus(const Tensor& a) {
  return unary_map("softplus", OpTag::softplus, a, stable_softplus);
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  check_defined(a, "clamp");
  if (!(lo <= hi)) throw std::invalid_argument("clamp: lo > hi");
  const auto av = a.values();
  std::vector<double> out(av.size());
  kernels::parallel_map(av.size(),
                        [&](std::size_t i) { out[i] = std::min(std::max(av[i], lo), hi); });
  Tensor r = finish_op(make_node(a.shape(), std::move(out)), OpTag::clamp, {a});
  r.node()->aux0 = lo;
  r.node()->aux1 = hi;
  return r;
}

Tensor add_scalar(const Tensor& a, double c) {
  check_defined(a, "add_scalar");
  const auto av = a.values();
  std::vector<double> out(av.size());
  kernels::parallel_map(av.size(), [&](std::size_t i) { out[i] = av[i] + c; });
  Tensor r = finish_op(make_node(a.shape(), std::move(out)), OpTag::add_scalar, {a});
  r.node()->aux0 = c;
  return r;
}

Tensor mul_scalar(const Tensor& a, double c) {
  check_defined(a, "mul_scalar");
  const auto av = a.values();
  std::vector<double> out(av.size());
  kernels::parallel_map(av.size(), [&](std::size_t i) { out[i] = av[i] * c; });
  Tensor r = finish_op(make_node(a.shape(), std::move(out)), OpTag::mul_scalar, {a});
  r.node()->aux0 = c;
  return r;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_defined(a, "matmul");
  check_defined(b, "matmul");
  if (a.shape().size() != 2 || b.shape().size() != 2) {
    throw std::invalid_argument("matmul: expects 2-d tensors, got " +
                                shape_str(a.shape()) + " and " + shape_str(b.shape()));
  }
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: inner dimensions disagree, " +
                                shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> out(m * n, 0.0);
  kernels::matmul(a.values().data(), b.values().data(), out.data(), m, k, n);
  return finish_op(make_node({m, n}, std::move(out)), OpTag::matmul, {a, b});
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  check_defined(a, "matmul_nt");
  check_defined(b, "matmul_nt");
  if (a.shape().size() != 2 || b.shape().size() != 2) {
    throw std::invalid_argument("matmul_nt: expects 2-d tensors, got " +
                                shape_str(a.shape()) + " and " + shape_str(b.shape()));
  }
  if (a.cols() != b.cols()) {
    throw std::invalid_argument("matmul_nt: inner dimensions disagree, " +
                                shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  std::vector<double> out(m * n, 0.0);
  kernels::matmul_nt(a.values().data(), b.values().data(), out.data(), m, k, n);
  return finish_op(make_node({m, n}, std::move(out)), OpTag::matmul_nt, {a, b});
}

Tensor sum(const Tensor& a) {
  check_defined(a, "sum");
  double acc = 0.0;
  for (double x : a.values()) acc += x;
  return finish_op(make_node({1}, {acc}), OpTag::sum, {a});
}

Tensor tile_rows(const Tensor& row, std::size_t n) {
  check_defined(row, "tile_rows");
  if (row.shape().size() != 1) {
    throw std::invalid_argument("tile_rows: expects a 1-d tensor, got " +
                                shape_str(row.shape()));
  }
  if (n == 0) throw std::invalid_argument("tile_rows: zero rows");
  const auto rv = row.values();
  const std::size_t d = rv.size();
  std::vector<double> out(n * d);
  kernels::parallel_map(n, [&](std::size_t r) {
    std::copy(rv.begin(), rv.end(), out.begin() + r * d);
  });
  Tensor r = finish_op(make_node({n, d}, std::move(out)), OpTag::tile_rows, {row});
  r.node()->aux0 = static_cast<double>(n);
  return r;
}

Tensor bce_logits_sum(const Tensor& x, const Tensor& logits) {
  check_defined(x, "bce_logits_sum");
  check_defined(logits, "bce_logits_sum");
  check_same_shape("bce_logits_sum", x, logits);
  const auto xv = x.values(), lv = logits.values();
  double acc = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) {
    if (!(xv[i] >= 0.0 && xv[i] <= 1.0)) {
      throw std::domain_error("bce_logits_sum: target " + std::to_string(xv[i]) +
                              " outside [0,1]");
    }
    acc += std::max(stable_softplus(lv[i]) - xv[i] * lv[i], 0.0);
  }
  return finish_op(make_node({1}, {acc}), OpTag::bce_logits_sum, {x, logits});
}

Tensor gauss_kl_sum(const Tensor& mu, const Tensor& logvar) {
  check_defined(mu, "gauss_kl_sum");
  check_defined(logvar, "gauss_kl_sum");
  check_same_shape("gauss_kl_sum", mu, logvar);
  const auto mv = mu.values(), lv = logvar.values();
  double acc = 0.0;
  for (std::size_t i = 0; i < mv.size(); ++i) {
    // mu^2 + expm1(lv) - lv  ==  mu^2 + sigma^2 - lv - 1, but exact at 0
    const double term = mv[i] * mv[i] + (std::expm1(lv[i]) - lv[i]);
    if (!std::isfinite(term)) {
      throw std::domain_error("gauss_kl_sum: non-finite term at element " +
                              std::to_string(i));
    }
    acc += 0.5 * std::max(term, 0.0);
  }
  return finish_op(make_node({1}, {acc}), OpTag::gauss_kl_sum, {mu, logvar});
}

// ---------------------------------------------------------------------------
// Reverse pass

namespace {

void backward_into(TensorNode* n) {
  const std::span<const double> g(n->grad.data(), n->grad.size());
  auto parent = [&](std::size_t i) { return n->parents[i].get(); };
  auto pval = [&](std::size_t i) -> const std::vector<double>& {
    return *n->parents[i]->value;
  };
  auto want = [&](std::size_t i) { return parent(i)->grad_relevant(); };
  auto acc = [&](std::size_t i) -> std::vector<double>& {
    ensure_grad(parent(i));
    return parent(i)->grad;
  };

  switch (n->op) {
    case OpTag::leaf:
      break;
    case OpTag::add: {
      for (std::size_t p = 0; p < 2; ++p) {
        if (!want(p)) continue;
        auto& dst = acc(p);
        kernels::parallel_map(g.size(), [&](std::size_t i) { dst[i] += g[i]; });
      }
      break;
    }
    case OpTag::sub: {
      if (want(0)) {
        auto& dst = acc(0);
        kernels::parallel_map(g.size(), [&](std::size_t i) { dst[i] += g[i]; });
      }
      if (want(1)) {
        auto& dst = acc(1);
        kernels::parallel_map(g.size(), [&](std::size_t i) { dst[i] -= g[i]; });
      }
      break;
    }
    case OpTag::mul: {
      if (want(0)) {
        auto& dst = acc(0);
        const auto& b = pval(1);
        kernels::parallel_map(g.size(), [&](std::size_t i) { dst[i] += g[i] * b[i]; });
      }
      if (want(1)) {
        auto& dst = acc(1);
        const auto& a = pval(0);
        kernels::parallel_map(g.size(), [&](std::size_t i) { dst[i] += g[i] * a[i]; });
      }
      break;
    }
    case OpTag::neg: {
      if (!want(0)) break;
      auto& dst = acc(0);
      kernels::parallel_map(g.size(), [&](std::size_t i) { dst[i] -= g[i]; });
      break;
    }
    case OpTag::exp: {
      if (!want(0)) break;
      auto& dst = acc(0);
      const auto& y = *n->value;
      kernels::parallel_map(g.size(), [&](std::size_t i) { dst[i] += g[i] * y[i]; });
      break;
    }
    case OpTag::log: {
      if (!want(0)) break;
      auto& dst = acc(0);
      const auto& a = pval(0);
      kernels::parallel_map(g.size(), [&](std::size_t i) { dst[i] += g[i] / a[i]; });
      break;
    }
    case OpTag::sigmoid: {
      if (!want(0)) break;
      auto& dst = acc(0);
      const auto& y = *n->value;
      kernels::parallel_map(g.size(), [&](std::size_t i) {
        dst[i] += g[i] * y[i] * (1.0 - y[i]);
      });
      break;
    }
    case OpTag::tanh: {
      if (!want(0)) break;
      auto& dst = acc(0);
      const auto& y = *n->value;
      kernels::parallel_map(g.size(), [&](std::size_t i) {
        dst[i] += g[i] * (1.0 - y[i] * y[i]);
      });
      break;
    }
    case OpTag::relu: {
      if (!want(0)) break;
      auto& dst = acc(0);
      const auto& a = pval(0);
      kernels::parallel_map(g.size(), [&](std::size_t i) {
        if (a[i] > 0.0) dst[i] += g[i];
      });
      break;
    }
    case OpTag::square: {
      if (!want(0)) break;
      auto& dst = acc(0);
      const auto& a = pval(0);
      kernels::parallel_map(g.size(), [&](std::size_t i) {
        dst[i] += g[i] * 2.0 * a[i];
      });
      break;
    }
    case OpTag::sqrt: {
      if (!want(0)) break;
      auto& dst = acc(0);
      const auto& y = *n->value;
      kernels::parallel_map(g.size(), [&](std::size_t i) {
        dst[i] += g[i] / (2.0 * y[i]);
      });
      break;
    }
    case OpTag::softplus: {
      if (!want(0)) break;
      auto& dst = acc(0);
      const auto& a = pval(0);
      kernels::parallel_map(g.size(), [&](std::size_t i) {
        dst[i] += g[i] / (1.0 + std::exp(-a[i]));
      });
      break;
    }
    case OpTag::clamp: {
      if (!want(0)) break;
      auto& dst = acc(0);
      const auto& a = pval(0);
      const double lo = n->aux0, hi = n->aux1;
      kernels::parallel_map(g.size(), [&](std::size_t i) {
        if (a[i] > lo && a[i] < hi) dst[i] += g[i];
      });
      break;
    }
    case OpTag::add_scalar: {
      if (!want(0)) break;
      auto& dst = acc(0);
      kernels::parallel_map(g.size(), [&](std::size_t i) { dst[i] += g[i]; });
      break;
    }
    case OpTag::mul_scalar: {
      if (!want(0)) break;
      auto& dst = acc(0);
      const double c = n->aux0;
      kernels::parallel_map(g.size(), [&](std::size_t i) { dst[i] += g[i] * c; });
      break;
    }
    case OpTag::matmul: {
      const std::size_t m = n->shape[0], nn = n->shape[1];
      const std::size_t k = parent(0)->shape[1];
      if (want(0)) {  // dA = dC * B^T
        kernels::matmul_nt(g.data(), pval(1).data(), acc(0).data(), m, nn, k);
      }
      if (want(1)) {  // dB = A^T * dC
        kernels::matmul_tn(pval(0).data(), g.data(), acc(1).data(), k, m, nn);
      }
      break;
    }
    case OpTag::matmul_nt: {
      const std::size_t m = n->shape[0], nn = n->shape[1];
      const std::size_t k = parent(0)->shape[1];
      if (want(0)) {  // dA = dC * B
        kernels::matmul(g.data(), pval(1).data(), acc(0).data(), m, nn, k);
      }
      if (want(1)) {  // dB = dC^T * A
        kernels::matmul_tn(g.data(), pval(0).data(), acc(1).data(), nn, m, k);
      }
      break;
    }
    case OpTag::sum: {
      if (!want(0)) break;
      auto& dst = acc(0);
      const double go = g[0];
      kernels::parallel_map(dst.size(), [&](std::size_t i) { dst[i] += go; });
      break;
    }
    case OpTag::tile_rows: {
      if (!want(0)) break;
      auto& dst = acc(0);
      const std::size_t rows = static_cast<std::size_t>(n->aux0);
      const std::size_t d = dst.size();
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < d; ++j) dst[j] += g[r * d + j];
      }
      break;
    }
    case OpTag::bce_logits_sum: {
      const double go = g[0];
      const auto& xv = pval(0);
      const auto& lv = pval(1);
      if (want(0)) {
        auto& dst = acc(0);
        kernels::parallel_map(xv.size(), [&](std::size_t i) {
          dst[i] += go * (-lv[i]);
        });
      }
      if (want(1)) {
        auto& dst = acc(1);
        kernels::parallel_map(lv.size(), [&](std::size_t i) {
          dst[i] += go * (1.0 / (1.0 + std::exp(-lv[i])) - xv[i]);
        });
      }
      break;
    }
    case OpTag::gauss_kl_sum: {
      const double go = g[0];
      const auto& mv = pval(0);
      const auto& lv = pval(1);
      if (want(0)) {
        auto& dst = acc(0);
        kernels::parallel_map(mv.size(), [&](std::size_t i) { dst[i] += go * mv[i]; });
      }
      if (want(1)) {
        auto& dst = acc(1);
        kernels::parallel_map(lv.size(), [&](std::size_t i) {
          dst[i] += go * 0.5 * std::expm1(lv[i]);
        });
      }
      break;
    }
  }
}

}  // namespace

void backward(const Tensor& loss) {
  if (!loss.defined()) throw std::invalid_argument("backward: undefined tensor");
  if (loss.size() != 1) {
    throw std::invalid_argument("backward: loss must be scalar, got shape " +
                                shape_str(loss.shape()));
  }
  TensorNode* root = loss.node();
  if (!root->grad_relevant()) return;  // constant loss: nothing to do

  // Gather the reachable subgraph; creation order is a topological order.
  // Strong refs keep every node alive until the tape is fully released.
  std::vector<std::shared_ptr<TensorNode>> order;
  std::unordered_set<TensorNode*> seen;
  order.push_back(loss.node_ptr());
  seen.insert(root);
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (const auto& p : order[i]->parents) {
      if (seen.insert(p.get()).second) order.push_back(p);
    }
  }
  std::sort(order.begin(), order.end(),
            [](const auto& a, const auto& b) { return a->seq > b->seq; });

  ensure_grad(root);
  root->grad[0] += 1.0;

  for (const auto& n : order) {
    if (n->grad.empty()) continue;  // no downstream contribution reached it
    backward_into(n.get());
  }

  // Release the tape: intermediate grads and all parent links.
  for (const auto& n : order) {
    if (!n->requires_grad) n->grad = {};
    n->parents.clear();
    n->op = OpTag::leaf;
  }
}

double grad_check(const std::function<Tensor()>& f, std::span<Tensor> params,
                  double eps) {
  if (eps <= 0.0) throw std::invalid_argument("grad_check: eps must be positive");

  for (Tensor& p : params) p.zero_grad();
  Tensor loss = f();
  if (!std::isfinite(loss.item())) {
    throw std::domain_error("grad_check: non-finite loss value");
  }
  backward(loss);

  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (Tensor& p : params) {
    analytic.emplace_back(p.grad().begin(), p.grad().end());
    if (analytic.back().empty()) analytic.back().assign(p.size(), 0.0);
  }

  double worst = 0.0;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& p = params[pi];
    auto data = p.raw();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double orig = data[i];
      data[i] = orig + eps;
      const double fp = f().item();
      data[i] = orig - eps;
      const double fm = f().item();
      data[i] = orig;
      if (!std::isfinite(fp) || !std::isfinite(fm)) {
        throw std::domain_error("grad_check: non-finite loss during perturbation");
      }
      const double central = (fp - fm) / (2.0 * eps);
      const double err =
          std::abs(analytic[pi][i] - central) / std::max(1.0, std::abs(central));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace wvae
