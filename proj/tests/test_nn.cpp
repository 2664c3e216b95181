#include <doctest.h>

#include <cmath>
#include <vector>

#include "wvae/nn.hpp"
#include "wvae/rng.hpp"

using namespace wvae;

namespace {

EncoderOutput make_enc(std::size_t n, std::size_t d, std::vector<double> mu,
                       std::vector<double> logvar, bool as_params = false) {
  EncoderOutput enc;
  enc.mu = as_params ? Tensor::parameter({n, d}, std::move(mu))
                     : Tensor::from_data({n, d}, std::move(mu));
  enc.logvar = as_params ? Tensor::parameter({n, d}, std::move(logvar))
                         : Tensor::from_data({n, d}, std::move(logvar));
  return enc;
}

}  // namespace

TEST_CASE("reparameterize examples") {
  SUBCASE("zero noise returns mu") {
    auto enc = make_enc(2, 2, {1.0, -2.0, 0.5, 3.0}, {0.3, -0.7, 0.0, 2.0});
    Tensor z = reparameterize(enc, Tensor::zeros({2, 2}));
    auto zv = z.values();
    auto mv = enc.mu.values();
    for (std::size_t i = 0; i < zv.size(); ++i) CHECK(zv[i] == mv[i]);
  }
  SUBCASE("unit sigma adds the noise") {
    auto enc = make_enc(1, 3, {1.0, 2.0, 3.0}, {0.0, 0.0, 0.0});
    Tensor noise = Tensor::from_data({1, 3}, {0.5, -1.5, 2.0});
    Tensor z = reparameterize(enc, noise);
    auto zv = z.values();
    CHECK(zv[0] == 1.5);
    CHECK(zv[1] == 0.5);
    CHECK(zv[2] == 5.0);
  }
  SUBCASE("dz/dmu is the identity map") {
    Rng rng(3);
    std::vector<double> mu(4), lv(4), noise(4);
    for (auto* v : {&mu, &lv, &noise}) {
      for (double& x : *v) x = rng.normal();
    }
    auto enc = make_enc(2, 2, mu, lv, true);
    Tensor nz = Tensor::from_data({2, 2}, noise);
    std::vector<Tensor> params{enc.mu};
    const double err =
        grad_check([&] { return sum(reparameterize(enc, nz)); }, params);
    CHECK(err <= 1e-6);
  }
  SUBCASE("shape mismatch rejected") {
    auto enc = make_enc(2, 2, {0, 0, 0, 0}, {0, 0, 0, 0});
    CHECK_THROWS_AS(reparameterize(enc, Tensor::zeros({2, 3})),
                    std::invalid_argument);
  }
  SUBCASE("same seed stream is bitwise reproducible") {
    auto draw = [] {
      Rng rng(99);
      std::vector<double> noise(6);
      for (double& x : noise) x = rng.normal();
      auto enc = make_enc(2, 3, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6},
                          {-0.5, 0.1, 0.9, -1.0, 0.0, 0.3});
      Tensor z = reparameterize(enc, Tensor::from_data({2, 3}, noise));
      auto zv = z.values();
      return std::vector<double>(zv.begin(), zv.end());
    };
    CHECK(draw() == draw());
  }
}

TEST_CASE("gaussian_kl examples") {
  SUBCASE("prior match gives exactly zero") {
    auto enc = make_enc(3, 4, std::vector<double>(12, 0.0), std::vector<double>(12, 0.0));
    CHECK(gaussian_kl(enc).item() == 0.0);
  }
  SUBCASE("unit mean in one dimension gives 1/2") {
    std::vector<double> mu(8, 0.0);
    mu[0] = 1.0;
    auto enc = make_enc(1, 8, mu, std::vector<double>(8, 0.0));
    CHECK(gaussian_kl(enc).item() == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("matches a Monte-Carlo estimate for mu=0, var=4, d=2") {
    const double logvar = std::log(4.0);
    auto enc = make_enc(1, 2, {0.0, 0.0}, {logvar, logvar});
    const double closed = gaussian_kl(enc).item();

    // MC oracle: E_q[log q(z) - log p(z)] with q = N(0, 4 I2), p = N(0, I2)
    Rng rng(1234);
    const std::size_t samples = 1000000;
    double acc = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
      for (int j = 0; j < 2; ++j) {
        const double z = 2.0 * rng.normal();
        acc += 0.5 * (z * z - (z * z) / 4.0 - logvar);
      }
    }
    const double mc = acc / static_cast<double>(samples);
    CHECK(closed == doctest::Approx(mc).epsilon(0.01));
  }
}

TEST_CASE("gaussian_kl is nonnegative and zero only at the prior") {
  Rng rng(7);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> mu(6), lv(6);
    for (double& x : mu) x = 3.0 * rng.normal();
    for (double& x : lv) x = 2.0 * rng.normal();
    auto enc = make_enc(2, 3, mu, lv);
    const double kl = gaussian_kl(enc).item();
    CHECK(kl >= 0.0);
    CHECK(kl > 1e-12);  // generic inputs never sit at the prior
  }
}

TEST_CASE("bernoulli_recon examples") {
  SUBCASE("zero logits cost P ln 2 per sample") {
    const std::size_t p = 16;
    Tensor x = Tensor::from_data({2, p}, std::vector<double>(2 * p, 0.37));
    Tensor logits = Tensor::zeros({2, p});
    CHECK(bernoulli_recon(x, logits).item() ==
          doctest::Approx(p * std::log(2.0)).epsilon(1e-12));
  }
  SUBCASE("saturated correct prediction costs nearly nothing") {
    Tensor x = Tensor::from_data({1, 4}, {1.0, 1.0, 1.0, 1.0});
    Tensor logits = Tensor::from_data({1, 4}, {20.0, 20.0, 20.0, 20.0});
    CHECK(bernoulli_recon(x, logits).item() / 4.0 <= 1e-8);
  }
  SUBCASE("x out of range rejected") {
    Tensor x = Tensor::from_data({1, 1}, {-0.1});
    CHECK_THROWS_AS(bernoulli_recon(x, Tensor::zeros({1, 1})), std::domain_error);
  }
  SUBCASE("minimized at logit(x), checked by perturbation") {
    Rng rng(13);
    std::vector<double> xs(10);
    for (double& v : xs) v = 0.05 + 0.9 * rng.uniform();
    std::vector<double> opt(10);
    for (std::size_t i = 0; i < 10; ++i) opt[i] = std::log(xs[i] / (1.0 - xs[i]));

    Tensor x = Tensor::from_data({1, 10}, xs);
    const double base = bernoulli_recon(x, Tensor::from_data({1, 10}, opt)).item();
    for (double delta : {-0.1, 0.1, -0.01, 0.01}) {
      for (std::size_t i = 0; i < 10; ++i) {
        auto perturbed = opt;
        perturbed[i] += delta;
        CHECK(bernoulli_recon(x, Tensor::from_data({1, 10}, perturbed)).item() >= base);
      }
    }
  }
}

TEST_CASE("rmsprop examples") {
  SUBCASE("zero gradient leaves parameters unchanged") {
    Tensor w = Tensor::parameter({2}, {1.0, -2.0});
    RmspropOptimizer opt({w});
    w.zero_grad();
    opt.step();
    CHECK(w.values()[0] == 1.0);
    CHECK(w.values()[1] == -2.0);
  }
  SUBCASE("single step from zero accumulator, hand-computed") {
    // g = 2, rho = 0.9: acc = 0.1 * 4 = 0.4; update = lr * 2 / (sqrt(0.4) + eps)
    Tensor w = Tensor::parameter({1}, {5.0});
    RmspropOptimizer opt({w}, 0.001, 0.9, 1e-8);
    backward(sum(mul_scalar(w, 2.0)));
    opt.step();
    const double expect = 5.0 - 0.001 * 2.0 / (std::sqrt(0.4) + 1e-8);
    CHECK(w.values()[0] == doctest::Approx(expect).epsilon(1e-15));
  }
  SUBCASE("two steps with constant gradient match a hand trace") {
    Tensor w = Tensor::parameter({1}, {0.0});
    const double lr = 0.01, rho = 0.9, eps = 1e-8, g = 3.0;
    RmspropOptimizer opt({w}, lr, rho, eps);

    double acc = 0.0, expect = 0.0;
    for (int step = 0; step < 2; ++step) {
      acc = rho * acc + (1.0 - rho) * g * g;
      expect -= lr * g / (std::sqrt(acc) + eps);
      opt.zero_grad();
      backward(sum(mul_scalar(w, g)));
      opt.step();
      CHECK(w.values()[0] == doctest::Approx(expect).epsilon(1e-15));
    }
  }
  SUBCASE("zero learning rate is a no-op on parameters") {
    Tensor w = Tensor::parameter({3}, {1.0, 2.0, 3.0});
    RmspropOptimizer opt({w}, 0.0);
    backward(sum(square(w)));
    opt.step();
    CHECK(w.values()[0] == 1.0);
    CHECK(w.values()[1] == 2.0);
    CHECK(w.values()[2] == 3.0);
  }
  SUBCASE("missing gradient is an error") {
    Tensor w = Tensor::parameter({1}, {1.0});
    RmspropOptimizer opt({w});
    CHECK_THROWS_AS(opt.step(), std::runtime_error);
  }
}

TEST_CASE("mlp vae shapes and eval path") {
  Rng rng(21);
  VaeArch arch;
  arch.input_h = 4;
  arch.input_w = 4;
  arch.latent_dim = 2;
  arch.hidden = {8};
  MlpVae model = MlpVae::init(arch, rng);

  CHECK(model.parameters().size() == 2 * (1 + 2 + 1 + 1));
  CHECK(arch.parameter_count() ==
        8 * 16 + 8 + 2 * (2 * 8 + 2) + 8 * 2 + 8 + 16 * 8 + 16);

  Tensor x = Tensor::constant({3, 16}, 0.5);
  EncoderOutput enc = model.encode(x);
  CHECK(enc.mu.shape() == Shape{3, 2});
  CHECK(enc.logvar.shape() == Shape{3, 2});
  for (double v : enc.logvar.values()) {
    CHECK(v >= -10.0);
    CHECK(v <= 10.0);
  }

  Tensor z = reparameterize(enc, Tensor::zeros({3, 2}));
  Tensor logits = model.decode(z);
  CHECK(logits.shape() == Shape{3, 16});

  // eval path agrees with the graph path bitwise
  Mat xm(3, 16, std::vector<double>(48, 0.5));
  Mat mu = model.encode_mu(xm);
  auto ev = enc.mu.values();
  for (std::size_t i = 0; i < mu.v.size(); ++i) CHECK(mu.v[i] == ev[i]);

  // detached view leaks no gradients into the real parameters
  MlpVae view = model.detached_view();
  backward(sum(square(view.decode(view.encode(x).mu))));
  for (Tensor& p : model.parameters()) CHECK_FALSE(p.has_grad());
}
