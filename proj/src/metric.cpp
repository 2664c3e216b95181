#include "wvae/metric.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace wvae {

void MetricConfig::validate() const {
  if (samples_per_vote < 2) {
    throw std::invalid_argument("MetricConfig: samples_per_vote must be >= 2");
  }
  if (train_votes < 1 || test_votes < 1) {
    throw std::invalid_argument("MetricConfig: vote counts must be >= 1");
  }
  if (collapse_threshold < 0.0) {
    throw std::invalid_argument("MetricConfig: collapse_threshold must be >= 0");
  }
}

RescaleVector empirical_std(const Mat& z, double collapse_threshold) {
  if (z.rows < 2) {
    throw std::invalid_argument("empirical_std: need at least 2 samples, got " +
                                std::to_string(z.rows));
  }
  const std::size_t n = z.rows, d = z.cols;
  RescaleVector out;
  out.s.assign(d, 0.0);

  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) mean[j] += z.at(i, j);
  }
  for (double& m : mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double c = z.at(i, j) - mean[j];
      out.s[j] += c * c;
    }
  }
  double smax = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    out.s[j] = std::sqrt(out.s[j] / static_cast<double>(n - 1));
    smax = std::max(smax, out.s[j]);
  }

  out.collapsed.assign(d, false);
  for (std::size_t j = 0; j < d; ++j) {
    out.collapsed[j] = smax == 0.0 || out.s[j] < collapse_threshold * smax;
  }
  return out;
}

Vote cast_vote(const FactorSpace& space, const BatchEncoder& encoder, std::size_t k,
               const RescaleVector& s, std::size_t L, Rng& rng) {
  if (std::all_of(s.collapsed.begin(), s.collapsed.end(), [](bool c) { return c; })) {
    throw std::runtime_error("cast_vote: every latent dimension is collapsed");
  }
  const std::size_t value = rng.bounded(space.counts[k]);
  auto [images, labels] = sample_fixed_factor(space, k, value, L, rng);
  Mat z = encoder(images, labels);
  if (z.rows != L || z.cols != s.s.size()) {
    throw std::runtime_error("cast_vote: encoder returned unexpected latent shape");
  }

  const std::size_t d = z.cols;
  std::vector<double> variance(d, 0.0);
  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < L; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      if (!s.collapsed[j]) mean[j] += z.at(i, j) / s.s[j];
    }
  }
  for (double& m : mean) m /= static_cast<double>(L);
  for (std::size_t i = 0; i < L; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      if (s.collapsed[j]) continue;
      const double c = z.at(i, j) / s.s[j] - mean[j];
      variance[j] += c * c;
    }
  }

  Vote vote;
  vote.k = k;
  double best = std::numeric_limits<double>::infinity();
  bool found = false;
  for (std::size_t j = 0; j < d; ++j) {
    if (s.collapsed[j]) continue;
    if (variance[j] < best) {
      best = variance[j];
      vote.dstar = j;
      found = true;
    }
  }
  if (!found) throw std::runtime_error("cast_vote: no usable latent dimension");
  return vote;
}

double score(std::span<const Vote> votes_train, std::span<const Vote> votes_test) {
  if (votes_train.empty()) {
    throw std::invalid_argument("score: training votes must be nonempty");
  }
  std::size_t d = 0, f = 0;
  for (const Vote& v : votes_train) {
    d = std::max(d, v.dstar + 1);
    f = std::max(f, v.k + 1);
  }
  for (const Vote& v : votes_test) {
    d = std::max(d, v.dstar + 1);
    f = std::max(f, v.k + 1);
  }

  std::vector<std::vector<std::size_t>> counts(d, std::vector<std::size_t>(f, 0));
  for (const Vote& v : votes_train) counts[v.dstar][v.k]++;

  // dimension -> most frequent factor; unseen dimensions predict factor 0
  std::vector<std::size_t> classifier(d, 0);
  for (std::size_t dd = 0; dd < d; ++dd) {
    std::size_t best_factor = 0, best_count = 0;
    for (std::size_t kk = 0; kk < f; ++kk) {
      if (counts[dd][kk] > best_count) {
        best_count = counts[dd][kk];
        best_factor = kk;
      }
    }
    classifier[dd] = best_factor;
  }

  if (votes_test.empty()) return 0.0;
  std::size_t correct = 0;
  for (const Vote& v : votes_test) {
    if (classifier[v.dstar] == v.k) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(votes_test.size());
}

EvalResult evaluate(const FactorSpace& space, const BatchEncoder& encoder,
                    const MetricConfig& config) {
  config.validate();
  space.validate();

  EvalResult result;

  // Rescale vector from the full corpus, encoded in chunks.
  {
    auto [images, labels] = enumerate_dataset(space);
    const std::size_t chunk = 2048;
    Mat z;
    for (std::size_t start = 0; start < images.count; start += chunk) {
      const std::size_t n = std::min(chunk, images.count - start);
      Mat part = encoder(images.slice(start, n),
                         std::span<const FactorTuple>(labels).subspan(start, n));
      if (z.cols == 0) z = Mat(images.count, part.cols);
      std::copy(part.v.begin(), part.v.end(), z.v.begin() + start * part.cols);
    }
    result.rescale = empirical_std(z, config.collapse_threshold);
  }

  std::vector<std::size_t> eligible;
  for (std::size_t k = 0; k < kNumFactors; ++k) {
    if (space.counts[k] >= 2) eligible.push_back(k);
  }
  if (eligible.empty()) {
    throw std::invalid_argument("evaluate: no factor has more than one value");
  }

  const std::size_t total = config.train_votes + config.test_votes;
  std::vector<Vote> votes(total);

  // Each vote owns a derived seed, so the fan-out order cannot matter.
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(total); ++i) {
    Rng vote_rng(Rng::derive(config.seed, static_cast<std::uint64_t>(i)));
    const std::size_t k = eligible[static_cast<std::size_t>(i) % eligible.size()];
    votes[static_cast<std::size_t>(i)] =
        cast_vote(space, encoder, k, result.rescale, config.samples_per_vote, vote_rng);
  }

  result.votes_train.assign(votes.begin(), votes.begin() + config.train_votes);
  result.votes_test.assign(votes.begin() + config.train_votes, votes.end());
  result.score = score(result.votes_train, result.votes_test);
  return result;
}

BatchEncoder make_vae_encoder(const MlpVae& model, const WhiteningTransform* transform) {
  return [&model, transform](const ImageBatch& images,
                             std::span<const FactorTuple>) -> Mat {
    Mat mu = model.encode_mu(images.to_mat());
    return transform ? whiten(mu, *transform) : mu;
  };
}

BatchEncoder make_sampling_vae_encoder(const MlpVae& model,
                                       const WhiteningTransform* transform,
                                       std::uint64_t base_seed) {
  return [&model, transform, base_seed](const ImageBatch& images,
                                        std::span<const FactorTuple> labels) -> Mat {
    Mat x = images.to_mat();
    MlpVae view = model.detached_view();
    Tensor xt = Tensor::from_data({x.rows, x.cols}, std::move(x.v));
    EncoderOutput enc = view.encode(xt);

    // Noise keyed off the labels keeps parallel vote order irrelevant.
    std::uint64_t h = base_seed;
    for (const FactorTuple& t : labels) {
      for (std::size_t v : t.v) h = Rng::derive(h, v + 1);
    }
    Rng rng(h);
    const auto mv = enc.mu.values();
    const auto lv = enc.logvar.values();
    Mat z(images.count, model.arch.latent_dim);
    for (std::size_t i = 0; i < z.v.size(); ++i) {
      z.v[i] = mv[i] + std::exp(0.5 * lv[i]) * rng.normal();
    }
    return transform ? whiten(z, *transform) : z;
  };
}

BatchEncoder make_factor_oracle_encoder() {
  return [](const ImageBatch&, std::span<const FactorTuple> labels) -> Mat {
    Mat z(labels.size(), kNumFactors);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      for (std::size_t j = 0; j < kNumFactors; ++j) {
        z.at(i, j) = static_cast<double>(labels[i].v[j]);
      }
    }
    return z;
  };
}

void write_votes_csv(std::span<const Vote> votes, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "vote_index,dstar,k\n";
  for (std::size_t i = 0; i < votes.size(); ++i) {
    out << i << ',' << votes[i].dstar << ',' << votes[i].k << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<Vote> read_votes_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "vote_index,dstar,k") {
    throw std::runtime_error("votes csv: bad header in " + path.string());
  }
  std::vector<Vote> votes;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string field;
    Vote v;
    std::getline(ss, field, ',');  // index, ignored
    std::getline(ss, field, ',');
    v.dstar = std::stoul(field);
    std::getline(ss, field, ',');
    v.k = std::stoul(field);
    votes.push_back(v);
  }
  return votes;
}

}  // namespace wvae
