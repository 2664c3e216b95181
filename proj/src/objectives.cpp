#include "wvae/objectives.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace wvae {

const char* objective_name(Objective o) {
  switch (o) {
    case Objective::vae: return "vae";
    case Objective::beta_vae: return "beta-vae";
    case Objective::factor_vae: return "factor-vae";
  }
  return "?";
}

Objective objective_from_name(const std::string& name) {
  if (name == "vae") return Objective::vae;
  if (name == "beta-vae" || name == "beta_vae") return Objective::beta_vae;
  if (name == "factor-vae" || name == "factor_vae") return Objective::factor_vae;
  throw std::invalid_argument("unknown objective '" + name + "'");
}

void TrainConfig::validate() const {
  if (latent_dim < 1) throw std::invalid_argument("TrainConfig: latent_dim must be >= 1");
  if (objective == Objective::beta_vae && beta < 1.0) {
    throw std::invalid_argument("TrainConfig: beta must be >= 1");
  }
  if (gamma < 0.0) throw std::invalid_argument("TrainConfig: gamma must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
}

Discriminator Discriminator::init(std::size_t latent_dim, Rng& rng, std::size_t width,
                                  std::size_t depth) {
  Discriminator d;
  std::size_t in = latent_dim;
  for (std::size_t i = 0; i < depth; ++i) {
    d.hidden.push_back(init_dense(in, width, Activation::relu, rng));
    in = width;
  }
  d.out = init_dense(in, 1, Activation::identity, rng);
  return d;
}

Tensor Discriminator::forward(const Tensor& z) const {
  Tensor h = z;
  for (const DenseLayer& layer : hidden) h = dense_forward(layer, h);
  return dense_forward(out, h);
}

std::vector<Tensor> Discriminator::parameters() {
  std::vector<Tensor> params;
  for (auto& l : hidden) {
    params.push_back(l.weight);
    params.push_back(l.bias);
  }
  params.push_back(out.weight);
  params.push_back(out.bias);
  return params;
}

Discriminator Discriminator::detached_view() const {
  auto detach_layer = [](const DenseLayer& l) {
    DenseLayer d;
    d.weight = l.weight.detached();
    d.bias = l.bias.detached();
    d.act = l.act;
    return d;
  };
  Discriminator d;
  for (const auto& l : hidden) d.hidden.push_back(detach_layer(l));
  d.out = detach_layer(out);
  return d;
}

std::size_t Discriminator::input_dim() const {
  return hidden.empty() ? out.in_dim() : hidden.front().in_dim();
}

LossParts vae_loss(const Tensor& x, const MlpVae& model, const Tensor& noise) {
  LossParts parts;
  EncoderOutput enc = model.encode(x);
  parts.z = reparameterize(enc, noise);
  Tensor logits = model.decode(parts.z);
  parts.recon = bernoulli_recon(x, logits);
  parts.kl = gaussian_kl(enc);
  parts.total = add(parts.recon, parts.kl);
  return parts;
}

LossParts beta_vae_loss(const Tensor& x, const MlpVae& model, const Tensor& noise,
                        double beta) {
  if (beta < 1.0) throw std::invalid_argument("beta_vae_loss: beta must be >= 1");
  LossParts parts;
  EncoderOutput enc = model.encode(x);
  parts.z = reparameterize(enc, noise);
  Tensor logits = model.decode(parts.z);
  parts.recon = bernoulli_recon(x, logits);
  parts.kl = gaussian_kl(enc);
  parts.total = add(parts.recon, mul_scalar(parts.kl, beta));
  return parts;
}

Mat permute_dims(const Mat& z, Rng& rng) {
  if (z.rows < 1) throw std::invalid_argument("permute_dims: empty batch");
  Mat out(z.rows, z.cols);
  std::vector<std::size_t> perm(z.rows);
  for (std::size_t j = 0; j < z.cols; ++j) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng.shuffle(perm);
    for (std::size_t i = 0; i < z.rows; ++i) {
      out.at(i, j) = z.at(perm[i], j);
    }
  }
  return out;
}

Tensor tc_estimate(const Tensor& z, const Discriminator& disc) {
  Tensor logits = disc.forward(z);
  for (double v : logits.values()) {
    if (!std::isfinite(v)) {
      throw std::domain_error("tc_estimate: non-finite discriminator logit");
    }
  }
  return mul_scalar(sum(logits), 1.0 / static_cast<double>(z.rows()));
}

LossParts factor_vae_loss(const Tensor& x, const MlpVae& model,
                          const Discriminator& disc, const Tensor& noise,
                          double gamma) {
  if (gamma < 0.0) throw std::invalid_argument("factor_vae_loss: gamma must be >= 0");
  LossParts parts = vae_loss(x, model, noise);
  parts.tc = tc_estimate(parts.z, disc.detached_view());
  parts.total = add(parts.total, mul_scalar(parts.tc, gamma));
  return parts;
}

double discriminator_step(const Mat& z_real, const Mat& z_perm, Discriminator& disc,
                          RmspropOptimizer& opt) {
  if (z_real.cols != z_perm.cols || z_real.rows != z_perm.rows) {
    throw std::invalid_argument("discriminator_step: batch shapes disagree");
  }
  const std::size_t n = z_real.rows;
  const std::size_t d = z_real.cols;

  std::vector<double> stacked;
  stacked.reserve(2 * n * d);
  stacked.insert(stacked.end(), z_real.v.begin(), z_real.v.end());
  stacked.insert(stacked.end(), z_perm.v.begin(), z_perm.v.end());
  Tensor z = Tensor::from_data({2 * n, d}, std::move(stacked));

  std::vector<double> labels(2 * n, 0.0);
  std::fill(labels.begin(), labels.begin() + n, 1.0);
  Tensor y = Tensor::from_data({2 * n, 1}, labels);

  Tensor logits = disc.forward(z);
  Tensor loss = mul_scalar(bce_logits_sum(y, logits), 1.0 / (2.0 * n));

  opt.zero_grad();
  backward(loss);
  opt.step();

  std::size_t correct = 0;
  const auto lv = logits.values();
  for (std::size_t i = 0; i < 2 * n; ++i) {
    const bool predicted_real = lv[i] > 0.0;
    if (predicted_real == (i < n)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(2 * n);
}

TrainResult train(const ImageBatch& data, const TrainConfig& config) {
  config.validate();
  if (data.count == 0) throw std::invalid_argument("train: empty dataset");

  Rng rng(config.seed);
  VaeArch arch;
  arch.input_h = data.height;
  arch.input_w = data.width;
  arch.latent_dim = config.latent_dim;
  arch.hidden = config.hidden;

  TrainResult result;
  result.model = MlpVae::init(arch, rng);
  RmspropOptimizer opt(result.model.parameters(), config.learning_rate);

  Discriminator disc;
  std::unique_ptr<RmspropOptimizer> disc_opt;
  if (config.objective == Objective::factor_vae) {
    disc = Discriminator::init(config.latent_dim, rng);
    disc_opt = std::make_unique<RmspropOptimizer>(disc.parameters(), config.learning_rate);
  }

  std::vector<std::size_t> indices(data.count);
  std::iota(indices.begin(), indices.end(), std::size_t{0});

  const std::size_t d = config.latent_dim;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(indices);
    EpochStats stats;
    std::size_t steps = 0;

    for (std::size_t start = 0; start < data.count; start += config.batch_size) {
      const std::size_t bs = std::min(config.batch_size, data.count - start);

      Mat xm(bs, data.image_size());
      for (std::size_t i = 0; i < bs; ++i) {
        const auto img = data.image(indices[start + i]);
        for (std::size_t p = 0; p < img.size(); ++p) {
          xm.at(i, p) = static_cast<double>(img[p]) / 255.0;
        }
      }
      Tensor x = Tensor::from_data({bs, data.image_size()}, std::move(xm.v));

      std::vector<double> nv(bs * d);
      for (double& e : nv) e = rng.normal();
      Tensor noise = Tensor::from_data({bs, d}, std::move(nv));

      LossParts parts;
      switch (config.objective) {
        case Objective::vae:
          parts = vae_loss(x, result.model, noise);
          break;
        case Objective::beta_vae:
          parts = beta_vae_loss(x, result.model, noise, config.beta);
          break;
        case Objective::factor_vae:
          parts = factor_vae_loss(x, result.model, disc, noise, config.gamma);
          break;
      }

      if (!std::isfinite(parts.total.item())) {
        throw std::runtime_error("train: non-finite loss at epoch " +
                                 std::to_string(epoch) + " step " +
                                 std::to_string(steps));
      }

      opt.zero_grad();
      backward(parts.total);
      opt.step();

      if (config.objective == Objective::factor_vae) {
        Mat z_real(bs, d);
        const auto zv = parts.z.values();
        z_real.v.assign(zv.begin(), zv.end());
        Mat z_perm = permute_dims(z_real, rng);
        discriminator_step(z_real, z_perm, disc, *disc_opt);
      }

      stats.recon += parts.recon.item();
      stats.kl += parts.kl.item();
      if (parts.tc.defined()) stats.tc += parts.tc.item();
      ++steps;
    }

    stats.recon /= static_cast<double>(steps);
    stats.kl /= static_cast<double>(steps);
    stats.tc /= static_cast<double>(steps);
    result.curves.push_back(stats);
  }
  return result;
}

}  // namespace wvae
