#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wvae/mat.hpp"
#include "wvae/rng.hpp"
#include "wvae/tensor.hpp"

namespace wvae {

enum class Activation : std::uint32_t { identity = 0, relu = 1, tanh = 2, sigmoid = 3 };

const char* activation_name(Activation a);

struct DenseLayer {
  Tensor weight;  // [out x in]
  Tensor bias;    // [out]
  Activation act = Activation::identity;

  std::size_t in_dim() const { return weight.cols(); }
  std::size_t out_dim() const { return weight.rows(); }
};

/// x [N x in] -> activation(x W^T + b) [N x out].
Tensor dense_forward(const DenseLayer& layer, const Tensor& x);

DenseLayer init_dense(std::size_t in, std::size_t out, Activation act, Rng& rng);

struct EncoderOutput {
  Tensor mu;      // [N x d]
  Tensor logvar;  // [N x d], clamped to [-10, 10]
};

/// z = mu + exp(logvar / 2) * noise, elementwise; differentiable in mu and
/// logvar. noise is injected by the caller (standard normal draws).
Tensor reparameterize(const EncoderOutput& enc, const Tensor& noise);

/// Mean over the batch of the closed-form KL(q(z|x) || N(0, I)); nonnegative.
Tensor gaussian_kl(const EncoderOutput& enc);

/// Mean over the batch of the summed negative Bernoulli log-likelihood of x
/// under decoder logits; nonnegative. x entries must lie in [0, 1].
Tensor bernoulli_recon(const Tensor& x, const Tensor& logits);

/// RMSprop: acc <- rho * acc + (1 - rho) * g^2; p <- p - lr * g / (sqrt(acc) + eps).
class RmspropOptimizer {
 public:
  explicit RmspropOptimizer(std::vector<Tensor> params, double lr = 1e-3,
                            double rho = 0.9, double eps = 1e-8);

  /// One update over all registered parameters; every parameter must carry a
  /// gradient from a preceding backward().
  void step();
  void zero_grad();

  double learning_rate() const { return lr_; }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> acc_;
  double lr_, rho_, eps_;
};

/// Architecture of the fully connected VAE: encoder input -> hidden... ->
/// (mu, logvar), decoder mirrors the hidden stack back to logits.
struct VaeArch {
  std::size_t input_h = 32;
  std::size_t input_w = 32;
  std::size_t latent_dim = 10;
  std::vector<std::size_t> hidden = {1024, 512};
  Activation act = Activation::relu;

  std::size_t input_dim() const { return input_h * input_w; }
  std::size_t parameter_count() const;
};

struct MlpVae {
  VaeArch arch;
  std::vector<DenseLayer> enc_hidden;
  DenseLayer enc_mu;
  DenseLayer enc_logvar;
  std::vector<DenseLayer> dec_hidden;
  DenseLayer dec_out;

  static MlpVae init(const VaeArch& arch, Rng& rng);

  EncoderOutput encode(const Tensor& x) const;
  Tensor decode(const Tensor& z) const;

  /// Shared handles onto every weight and bias, in checkpoint order.
  std::vector<Tensor> parameters();
  std::vector<Tensor> parameters() const;

  /// Same weights viewed as graph-free constants; forward passes through the
  /// view build no tape and leak no gradients.
  MlpVae detached_view() const;

  /// Convenience eval paths over plain matrices (no gradients).
  Mat encode_mu(const Mat& x) const;
  Mat decode_logits(const Mat& z) const;
};

}  // namespace wvae
