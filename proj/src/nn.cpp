#include "wvae/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace wvae {

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
  }
  return "?";
}

static Tensor apply_activation(Activation act, const Tensor& t) {
  switch (act) {
    case Activation::identity: return t;
    case Activation::relu: return relu(t);
    case Activation::tanh: return tanh(t);
    case Activation::sigmoid: return sigmoid(t);
  }
  throw std::logic_error("unknown activation");
}

Tensor dense_forward(const DenseLayer& layer, const Tensor& x) {
  if (x.shape().size() != 2 || x.cols() != layer.in_dim()) {
    throw std::invalid_argument("dense_forward: input width " +
                                std::to_string(x.shape().size() == 2 ? x.cols() : 0) +
                                " does not match layer input " +
                                std::to_string(layer.in_dim()));
  }
  Tensor out = add(matmul_nt(x, layer.weight), tile_rows(layer.bias, x.rows()));
  return apply_activation(layer.act, out);
}

DenseLayer init_dense(std::size_t in, std::size_t out, Activation act, Rng& rng) {
  // He initialization for relu stacks, LeCun scaling otherwise.
  const double scale =
      act == Activation::relu ? std::sqrt(2.0 / static_cast<double>(in))
                              : std::sqrt(1.0 / static_cast<double>(in));
  std::vector<double> w(out * in);
  for (double& x : w) x = scale * rng.normal();
  DenseLayer layer;
  layer.weight = Tensor::parameter({out, in}, std::move(w));
  layer.bias = Tensor::parameter({out}, std::vector<double>(out, 0.0));
  layer.act = act;
  return layer;
}

Tensor reparameterize(const EncoderOutput& enc, const Tensor& noise) {
  if (enc.mu.shape() != noise.shape()) {
    throw std::invalid_argument("reparameterize: noise shape does not match mu");
  }
  Tensor sigma = exp(mul_scalar(enc.logvar, 0.5));
  return add(enc.mu, mul(sigma, noise));
}

Tensor gaussian_kl(const EncoderOutput& enc) {
  const std::size_t n = enc.mu.rows();
  return mul_scalar(gauss_kl_sum(enc.mu, enc.logvar), 1.0 / static_cast<double>(n));
}

Tensor bernoulli_recon(const Tensor& x, const Tensor& logits) {
  const std::size_t n = x.rows();
  return mul_scalar(bce_logits_sum(x, logits), 1.0 / static_cast<double>(n));
}

RmspropOptimizer::RmspropOptimizer(std::vector<Tensor> params, double lr, double rho,
                                   double eps)
    : params_(std::move(params)), lr_(lr), rho_(rho), eps_(eps) {
  acc_.reserve(params_.size());
  for (const Tensor& p : params_) {
    acc_.emplace_back(p.size(), 0.0);
  }
}

void RmspropOptimizer::step() {
  for (std::size_t pi = 0; pi < params_.size(); ++pi) {
    Tensor& p = params_[pi];
    if (!p.has_grad()) {
      throw std::runtime_error("rmsprop: parameter " + std::to_string(pi) +
                               " has no gradient; run backward first");
    }
    const auto g = p.grad();
    auto data = p.raw();
    auto& acc = acc_[pi];
    for (std::size_t i = 0; i < data.size(); ++i) {
      acc[i] = rho_ * acc[i] + (1.0 - rho_) * g[i] * g[i];
      data[i] -= lr_ * g[i] / (std::sqrt(acc[i]) + eps_);
    }
  }
}

void RmspropOptimizer::zero_grad() {
  for (Tensor& p : params_) p.zero_grad();
}

std::size_t VaeArch::parameter_count() const {
  std::size_t count = 0;
  std::size_t in = input_dim();
  for (std::size_t h : hidden) {
    count += h * in + h;
    in = h;
  }
  count += 2 * (latent_dim * in + latent_dim);  // mu and logvar heads
  in = latent_dim;
  for (auto it = hidden.rbegin(); it != hidden.rend(); ++it) {
    count += *it * in + *it;
    in = *it;
  }
  count += input_dim() * in + input_dim();
  return count;
}

MlpVae MlpVae::init(const VaeArch& arch, Rng& rng) {
  if (arch.latent_dim == 0) throw std::invalid_argument("MlpVae: latent_dim must be >= 1");
  if (arch.input_dim() == 0) throw std::invalid_argument("MlpVae: empty input");
  MlpVae m;
  m.arch = arch;
  std::size_t in = arch.input_dim();
  for (std::size_t h : arch.hidden) {
    m.enc_hidden.push_back(init_dense(in, h, arch.act, rng));
    in = h;
  }
  m.enc_mu = init_dense(in, arch.latent_dim, Activation::identity, rng);
  m.enc_logvar = init_dense(in, arch.latent_dim, Activation::identity, rng);
  in = arch.latent_dim;
  for (auto it = arch.hidden.rbegin(); it != arch.hidden.rend(); ++it) {
    m.dec_hidden.push_back(init_dense(in, *it, arch.act, rng));
    in = *it;
  }
  m.dec_out = init_dense(in, arch.input_dim(), Activation::identity, rng);
  return m;
}

EncoderOutput MlpVae::encode(const Tensor& x) const {
  Tensor h = x;
  for (const DenseLayer& layer : enc_hidden) h = dense_forward(layer, h);
  EncoderOutput out;
  out.mu = dense_forward(enc_mu, h);
  // keeps exp(logvar) bounded early in training
  out.logvar = clamp(dense_forward(enc_logvar, h), -10.0, 10.0);
  return out;
}

Tensor MlpVae::decode(const Tensor& z) const {
  Tensor h = z;
  for (const DenseLayer& layer : dec_hidden) h = dense_forward(layer, h);
  return dense_forward(dec_out, h);  // logits
}

std::vector<Tensor> MlpVae::parameters() {
  std::vector<Tensor> out;
  auto push = [&out](const DenseLayer& l) {
    out.push_back(l.weight);
    out.push_back(l.bias);
  };
  for (auto& l : enc_hidden) push(l);
  push(enc_mu);
  push(enc_logvar);
  for (auto& l : dec_hidden) push(l);
  push(dec_out);
  return out;
}

std::vector<Tensor> MlpVae::parameters() const {
  return const_cast<MlpVae*>(this)->parameters();
}

MlpVae MlpVae::detached_view() const {
  auto detach_layer = [](const DenseLayer& l) {
    DenseLayer d;
    d.weight = l.weight.detached();
    d.bias = l.bias.detached();
    d.act = l.act;
    return d;
  };
  MlpVae m;
  m.arch = arch;
  for (const auto& l : enc_hidden) m.enc_hidden.push_back(detach_layer(l));
  m.enc_mu = detach_layer(enc_mu);
  m.enc_logvar = detach_layer(enc_logvar);
  for (const auto& l : dec_hidden) m.dec_hidden.push_back(detach_layer(l));
  m.dec_out = detach_layer(dec_out);
  return m;
}

Mat MlpVae::encode_mu(const Mat& x) const {
  MlpVae view = detached_view();
  Tensor xt = Tensor::from_data({x.rows, x.cols}, x.v);
  EncoderOutput enc = view.encode(xt);
  Mat out(x.rows, arch.latent_dim);
  const auto mv = enc.mu.values();
  out.v.assign(mv.begin(), mv.end());
  return out;
}

Mat MlpVae::decode_logits(const Mat& z) const {
  MlpVae view = detached_view();
  Tensor zt = Tensor::from_data({z.rows, z.cols}, z.v);
  Tensor logits = view.decode(zt);
  Mat out(z.rows, arch.input_dim());
  const auto lv = logits.values();
  out.v.assign(lv.begin(), lv.end());
  return out;
}

}  // namespace wvae
