#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "wvae/mat.hpp"
#include "wvae/nn.hpp"
#include "wvae/rng.hpp"
#include "wvae/shapes.hpp"
#include "wvae/whitening.hpp"

namespace wvae {

struct MetricConfig {
  std::size_t samples_per_vote = 64;  // L
  std::size_t train_votes = 500;      // M_train
  std::size_t test_votes = 500;       // M_test
  /// Dimensions whose empirical std falls below this fraction of the largest
  /// std are collapsed and excluded from voting.
  double collapse_threshold = 0.05;
  std::uint64_t seed = 0;

  void validate() const;
};

/// One metric datum: the minimum-variance latent dimension seen while the
/// k-th generative factor was held fixed.
struct Vote {
  std::size_t dstar = 0;
  std::size_t k = 0;
};

struct RescaleVector {
  std::vector<double> s;  // per-dimension empirical standard deviation
  std::vector<bool> collapsed;
};

/// Maps a labeled image batch to an N x d latent batch. Real encoders ignore
/// the labels; synthetic oracles (test hooks) may read them.
using BatchEncoder = std::function<Mat(const ImageBatch&, std::span<const FactorTuple>)>;

/// Per-dimension standard deviation with (n-1) denominator over a reference
/// corpus; requires n >= 2.
RescaleVector empirical_std(const Mat& z, double collapse_threshold);

/// Runs Table-style vote casting: renders L images with factor k fixed to a
/// random value, encodes, rescales by s, and returns the argmin-variance
/// non-collapsed dimension (ties to the lowest index).
Vote cast_vote(const FactorSpace& space, const BatchEncoder& encoder, std::size_t k,
               const RescaleVector& s, std::size_t L, Rng& rng);

/// Majority-vote classifier accuracy: each latent dimension predicts the
/// factor most frequent among training votes (ties to the lowest factor,
/// dimensions never voted predict factor 0).
double score(std::span<const Vote> votes_train, std::span<const Vote> votes_test);

struct EvalResult {
  double score = 0.0;
  std::vector<Vote> votes_train;
  std::vector<Vote> votes_test;
  RescaleVector rescale;
};

/// Full metric: fits the rescale vector on the complete factor grid, casts
/// train and test votes round-robin over the factors with at least two
/// values, and scores. Deterministic per config.seed; votes are independent
/// streams and may be computed in parallel.
EvalResult evaluate(const FactorSpace& space, const BatchEncoder& encoder,
                    const MetricConfig& config);

/// Encoder adapters.
BatchEncoder make_vae_encoder(const MlpVae& model, const WhiteningTransform* transform);
/// As above but encoding z = mu + sigma * eps; noise is derived
/// deterministically from the batch labels and base_seed.
BatchEncoder make_sampling_vae_encoder(const MlpVae& model,
                                       const WhiteningTransform* transform,
                                       std::uint64_t base_seed);
/// Test hook: z_j = j-th factor index, the perfectly disentangled encoder.
BatchEncoder make_factor_oracle_encoder();

/// CSV with header vote_index,dstar,k.
void write_votes_csv(std::span<const Vote> votes, const std::filesystem::path& path);
std::vector<Vote> read_votes_csv(const std::filesystem::path& path);

}  // namespace wvae
