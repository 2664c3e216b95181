#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wvae/nn.hpp"
#include "wvae/shapes.hpp"

namespace wvae {

enum class Objective : std::uint32_t { vae = 0, beta_vae = 1, factor_vae = 2 };

const char* objective_name(Objective o);
Objective objective_from_name(const std::string& name);

struct TrainConfig {
  Objective objective = Objective::vae;
  double beta = 4.0;    // beta-vae weight on the KL term
  double gamma = 6.4;   // factor-vae weight on the total-correlation term
  std::size_t latent_dim = 10;
  std::vector<std::size_t> hidden = {1024, 512};
  std::size_t batch_size = 64;
  std::size_t epochs = 10;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Density-ratio discriminator: latent vector -> one logit.
struct Discriminator {
  std::vector<DenseLayer> hidden;
  DenseLayer out;

  static Discriminator init(std::size_t latent_dim, Rng& rng,
                            std::size_t width = 256, std::size_t depth = 3);
  Tensor forward(const Tensor& z) const;  // [N x d] -> [N x 1] logits
  std::vector<Tensor> parameters();
  Discriminator detached_view() const;
  std::size_t input_dim() const;
};

struct LossParts {
  Tensor total;
  Tensor recon;
  Tensor kl;
  Tensor tc;  // undefined unless factor objective
  Tensor z;   // latent batch used by the loss (graph-attached)
};

LossParts vae_loss(const Tensor& x, const MlpVae& model, const Tensor& noise);
LossParts beta_vae_loss(const Tensor& x, const MlpVae& model, const Tensor& noise,
                        double beta);

/// Samples the product of marginals: each column's rows are permuted by an
/// independent uniform permutation. Column multisets are preserved exactly.
Mat permute_dims(const Mat& z, Rng& rng);

/// Mean discriminator logit over the batch; the logit equals
/// log D / (1 - D) directly. Gradient flows into z and the discriminator's
/// own tensors (pass a detached_view to exclude its parameters).
Tensor tc_estimate(const Tensor& z, const Discriminator& disc);

/// recon + kl + gamma * tc with the discriminator's parameters excluded from
/// the gradient (its weights enter as detached constants).
LossParts factor_vae_loss(const Tensor& x, const MlpVae& model,
                          const Discriminator& disc, const Tensor& noise,
                          double gamma);

/// One BCE step teaching the discriminator to separate q(z) (label 1) from
/// the permuted batch (label 0); returns this batch's classification
/// accuracy. Both inputs must already be detached from the encoder graph.
double discriminator_step(const Mat& z_real, const Mat& z_perm, Discriminator& disc,
                          RmspropOptimizer& opt);

struct EpochStats {
  double recon = 0.0;
  double kl = 0.0;
  double tc = 0.0;
};

struct TrainResult {
  MlpVae model;
  std::vector<EpochStats> curves;  // one entry per epoch
};

/// Trains on the given images per config; deterministic given config.seed.
TrainResult train(const ImageBatch& data, const TrainConfig& config);

}  // namespace wvae
