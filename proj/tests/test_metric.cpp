#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <vector>

#include "wvae/metric.hpp"
#include "wvae/rng.hpp"

using namespace wvae;

namespace {

// Encoder that applies a fixed linear mix to the factor indices; variance
// structure is analytically recomputable.
BatchEncoder make_linear_mix_encoder(const Mat& mix) {
  return [mix](const ImageBatch&, std::span<const FactorTuple> labels) -> Mat {
    Mat z(labels.size(), mix.rows);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      for (std::size_t r = 0; r < mix.rows; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < kNumFactors; ++c) {
          acc += mix.at(r, c) * static_cast<double>(labels[i].v[c]);
        }
        z.at(i, r) = acc;
      }
    }
    return z;
  };
}

// Encoder ignoring the input entirely; latents are seeded off the labels so
// the result is deterministic but carries no factor information.
BatchEncoder make_gaussian_encoder(std::size_t d, std::uint64_t seed) {
  return [d, seed](const ImageBatch&, std::span<const FactorTuple> labels) -> Mat {
    Mat z(labels.size(), d);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      std::uint64_t h = seed;
      for (std::size_t v : labels[i].v) h = Rng::derive(h, v + 1);
      h = Rng::derive(h, i + 1);
      Rng rng(h);
      for (std::size_t j = 0; j < d; ++j) z.at(i, j) = rng.normal();
    }
    return z;
  };
}

}  // namespace

TEST_CASE("empirical_std") {
  SUBCASE("two-point column") {
    Mat z(2, 2, {-1.0, 5.0, 1.0, 5.0});
    RescaleVector s = empirical_std(z, 0.05);
    CHECK(s.s[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    CHECK(s.s[1] == 0.0);
    CHECK_FALSE(s.collapsed[0]);
    CHECK(s.collapsed[1]);  // constant column flagged
  }
  SUBCASE("large normal sample lands near 1") {
    Rng rng(1);
    Mat z(100000, 2);
    for (double& v : z.v) v = rng.normal();
    RescaleVector s = empirical_std(z, 0.05);
    CHECK(s.s[0] >= 0.99);
    CHECK(s.s[0] <= 1.01);
    CHECK(s.s[1] >= 0.99);
    CHECK(s.s[1] <= 1.01);
  }
  SUBCASE("single sample rejected") {
    Mat z(1, 2, {0.0, 0.0});
    CHECK_THROWS_AS(empirical_std(z, 0.05), std::invalid_argument);
  }
}

TEST_CASE("cast_vote") {
  FactorSpace space;
  MetricConfig config;

  SUBCASE("identity oracle votes its own factor") {
    BatchEncoder oracle = make_factor_oracle_encoder();
    auto [images, labels] = enumerate_dataset(space);
    Mat z = oracle(images, labels);
    RescaleVector s = empirical_std(z, config.collapse_threshold);
    Rng rng(2);
    for (std::size_t k = 0; k < kNumFactors; ++k) {
      Vote v = cast_vote(space, oracle, k, s, 64, rng);
      CHECK(v.dstar == k);
      CHECK(v.k == k);
    }
  }

  SUBCASE("constant encoder errors out as fully collapsed") {
    BatchEncoder constant = [](const ImageBatch&,
                               std::span<const FactorTuple> labels) -> Mat {
      return Mat(labels.size(), 3, std::vector<double>(labels.size() * 3, 1.0));
    };
    FactorSpace sp;
    auto [images, labels] = enumerate_dataset(sp);
    Mat z = constant(images, labels);
    RescaleVector s = empirical_std(z, 0.05);
    Rng rng(3);
    CHECK_THROWS_AS(cast_vote(sp, constant, 0, s, 16, rng), std::runtime_error);
  }

  SUBCASE("linear mix matches a brute-force variance recount") {
    Rng mix_rng(4);
    Mat mix(6, kNumFactors);
    for (double& v : mix.v) v = mix_rng.normal();
    BatchEncoder encoder = make_linear_mix_encoder(mix);

    auto [images, labels] = enumerate_dataset(space);
    Mat zfull = encoder(images, labels);
    RescaleVector s = empirical_std(zfull, 0.05);

    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const std::size_t k = seed % kNumFactors;
      Rng rng_a(100 + seed);
      Rng rng_b(100 + seed);  // identical stream for the recount
      Vote vote = cast_vote(space, encoder, k, s, 64, rng_a);

      const std::size_t value = rng_b.bounded(space.counts[k]);
      auto [imgs, labs] = sample_fixed_factor(space, k, value, 64, rng_b);
      Mat z = encoder(imgs, labs);
      std::size_t best_dim = 0;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < z.cols; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < z.rows; ++i) mean += z.at(i, j) / s.s[j];
        mean /= static_cast<double>(z.rows);
        double var = 0.0;
        for (std::size_t i = 0; i < z.rows; ++i) {
          const double c = z.at(i, j) / s.s[j] - mean;
          var += c * c;
        }
        if (var < best) {
          best = var;
          best_dim = j;
        }
      }
      CHECK(vote.dstar == best_dim);
      CHECK(vote.k == k);
    }
  }
}

TEST_CASE("score") {
  SUBCASE("hand-counted majority") {
    std::vector<Vote> train{{0, 1}, {0, 1}, {0, 2}};
    std::vector<Vote> test{{0, 1}};
    CHECK(score(train, test) == 1.0);
    std::vector<Vote> test2{{0, 2}};
    CHECK(score(train, test2) == 0.0);
  }
  SUBCASE("tie breaks to the lowest factor index") {
    std::vector<Vote> train{{0, 2}, {0, 1}};  // counts equal
    std::vector<Vote> test{{0, 1}};
    CHECK(score(train, test) == 1.0);
  }
  SUBCASE("unseen dimension predicts factor 0") {
    std::vector<Vote> train{{0, 1}};
    std::vector<Vote> test{{3, 0}};
    CHECK(score(train, test) == 1.0);
  }
  SUBCASE("empty training votes rejected") {
    std::vector<Vote> train;
    std::vector<Vote> test{{0, 0}};
    CHECK_THROWS_AS(score(train, test), std::invalid_argument);
  }
  SUBCASE("factor-independent votes sit at chance over 10^4 trials") {
    // classifier fixed by training votes; test ks uniform over 5 factors
    Rng rng(5);
    std::vector<Vote> train;
    for (std::size_t d = 0; d < 10; ++d) {
      train.push_back({d, rng.bounded(5)});
    }
    std::vector<Vote> test;
    for (int i = 0; i < 10000; ++i) {
      test.push_back({rng.bounded(10), rng.bounded(5)});
    }
    const double acc = score(train, test);
    CHECK(acc >= 0.15);
    CHECK(acc <= 0.25);
  }
}

TEST_CASE("evaluate") {
  FactorSpace space;
  space.counts = {3, 4, 4, 6, 6};  // smaller grid keeps the test quick

  MetricConfig config;
  config.train_votes = 60;
  config.test_votes = 60;
  config.samples_per_vote = 32;
  config.seed = 9;

  SUBCASE("identity oracle scores exactly 1") {
    EvalResult res = evaluate(space, make_factor_oracle_encoder(), config);
    CHECK(res.score == 1.0);
    CHECK(res.votes_train.size() == 60);
    CHECK(res.votes_test.size() == 60);
  }

  SUBCASE("fixed seed repeats identically") {
    EvalResult a = evaluate(space, make_factor_oracle_encoder(), config);
    EvalResult b = evaluate(space, make_factor_oracle_encoder(), config);
    CHECK(a.score == b.score);
    REQUIRE(a.votes_train.size() == b.votes_train.size());
    for (std::size_t i = 0; i < a.votes_train.size(); ++i) {
      CHECK(a.votes_train[i].dstar == b.votes_train[i].dstar);
      CHECK(a.votes_train[i].k == b.votes_train[i].k);
    }
  }

  SUBCASE("factor-independent encoder scores near chance") {
    EvalResult res = evaluate(space, make_gaussian_encoder(10, 77), config);
    CHECK(res.score <= 0.35);
  }
}

TEST_CASE("metric invariance properties") {
  FactorSpace space;
  space.counts = {3, 4, 4, 6, 6};

  Rng mix_rng(6);
  Mat mix(5, kNumFactors);
  for (double& v : mix.v) v = mix_rng.normal();
  BatchEncoder base = make_linear_mix_encoder(mix);

  auto [images, labels] = enumerate_dataset(space);
  Mat zfull = base(images, labels);

  SUBCASE("positive rescaling never changes the argmin when s follows") {
    // gains moderate enough to keep the collapse set identical; the
    // invariant concerns the variance ratios, not the collapse flags
    const std::vector<double> gains{0.5, 3.0, 1.0, 2.0, 0.8};
    BatchEncoder scaled = [&](const ImageBatch& im,
                              std::span<const FactorTuple> ls) -> Mat {
      Mat z = base(im, ls);
      for (std::size_t i = 0; i < z.rows; ++i) {
        for (std::size_t j = 0; j < z.cols; ++j) z.at(i, j) *= gains[j];
      }
      return z;
    };
    Mat zscaled = scaled(images, labels);
    RescaleVector s_base = empirical_std(zfull, 0.05);
    RescaleVector s_scaled = empirical_std(zscaled, 0.05);
    REQUIRE(s_base.collapsed == s_scaled.collapsed);

    for (std::uint64_t i = 0; i < 20; ++i) {
      Rng a(Rng::derive(11, i));
      Rng b(Rng::derive(11, i));
      const std::size_t k = i % kNumFactors;
      Vote va = cast_vote(space, base, k, s_base, 48, a);
      Vote vb = cast_vote(space, scaled, k, s_scaled, 48, b);
      CHECK(va.dstar == vb.dstar);
    }
  }

  SUBCASE("permuting latent dimensions permutes dstar and keeps the score") {
    const std::array<std::size_t, 5> perm{3, 0, 4, 1, 2};
    BatchEncoder permuted = [&](const ImageBatch& im,
                                std::span<const FactorTuple> ls) -> Mat {
      Mat z = base(im, ls);
      Mat out(z.rows, z.cols);
      for (std::size_t i = 0; i < z.rows; ++i) {
        for (std::size_t j = 0; j < z.cols; ++j) out.at(i, perm[j]) = z.at(i, j);
      }
      return out;
    };

    MetricConfig config;
    config.train_votes = 50;
    config.test_votes = 50;
    config.samples_per_vote = 32;
    config.seed = 13;

    EvalResult ra = evaluate(space, base, config);
    EvalResult rb = evaluate(space, permuted, config);
    CHECK(ra.score == rb.score);
    REQUIRE(ra.votes_train.size() == rb.votes_train.size());
    for (std::size_t i = 0; i < ra.votes_train.size(); ++i) {
      CHECK(perm[ra.votes_train[i].dstar] == rb.votes_train[i].dstar);
    }
  }

  SUBCASE("votes do not depend on sample order") {
    RescaleVector s = empirical_std(zfull, 0.05);
    for (std::uint64_t i = 0; i < 10; ++i) {
      Rng a(Rng::derive(21, i));
      Rng b(Rng::derive(21, i));
      const std::size_t k = i % kNumFactors;
      Vote va = cast_vote(space, base, k, s, 48, a);

      // same sampled batch, rows shuffled before encoding
      BatchEncoder shuffled = [&](const ImageBatch& im,
                                  std::span<const FactorTuple> ls) -> Mat {
        Mat z = base(im, ls);
        Rng sr(999 + i);
        std::vector<std::size_t> order(z.rows);
        std::iota(order.begin(), order.end(), std::size_t{0});
        sr.shuffle(order);
        Mat out(z.rows, z.cols);
        for (std::size_t r = 0; r < z.rows; ++r) {
          for (std::size_t c = 0; c < z.cols; ++c) out.at(r, c) = z.at(order[r], c);
        }
        return out;
      };
      Vote vb = cast_vote(space, shuffled, k, s, 48, b);
      CHECK(va.dstar == vb.dstar);
    }
  }
}

TEST_CASE("vote csv round trip") {
  namespace fs = std::filesystem;
  const fs::path path = fs::temp_directory_path() / "wvae_votes_test.csv";
  std::vector<Vote> votes{{0, 1}, {3, 2}, {9, 4}};
  write_votes_csv(votes, path);
  const auto back = read_votes_csv(path);
  REQUIRE(back.size() == votes.size());
  for (std::size_t i = 0; i < votes.size(); ++i) {
    CHECK(back[i].dstar == votes[i].dstar);
    CHECK(back[i].k == votes[i].k);
  }
  fs::remove(path);
}
