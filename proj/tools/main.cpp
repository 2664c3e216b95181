// Command-line driver: dataset generation, training, whitening, scoring and
// latent traversal, each writing a replayable manifest into its output
// directory.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "wvae/io.hpp"
#include "wvae/metric.hpp"
#include "wvae/nn.hpp"
#include "wvae/objectives.hpp"
#include "wvae/shapes.hpp"
#include "wvae/whitening.hpp"

namespace fs = std::filesystem;
using namespace wvae;

namespace {

struct SpaceFlags {
  std::size_t shapes = 3, scales = 6, orientations = 8, xpos = 16, ypos = 16;

  FactorSpace space() const {
    FactorSpace s;
    s.counts = {shapes, scales, orientations, xpos, ypos};
    s.validate();
    return s;
  }
};

void add_space_flags(CLI::App* cmd, SpaceFlags& f) {
  cmd->add_option("--shapes", f.shapes, "shape value count (max 3)")->capture_default_str();
  cmd->add_option("--scales", f.scales, "scale value count (max 6)")->capture_default_str();
  cmd->add_option("--orientations", f.orientations, "orientation value count")
      ->capture_default_str();
  cmd->add_option("--xpos", f.xpos, "posX value count")->capture_default_str();
  cmd->add_option("--ypos", f.ypos, "posY value count")->capture_default_str();
}

fs::path ensure_out_dir(const std::string& out) {
  fs::path dir(out);
  fs::create_directories(dir);
  return dir;
}

void write_manifest(const CLI::App& app, const fs::path& dir, const std::string& command) {
  std::ofstream out(dir / "manifest.cfg", std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write manifest in " + dir.string());
  out << "# replay: wvae " << command << " --config manifest.cfg\n";
  out << app.config_to_str(true, false);
}

ImageBatch load_training_images(const std::string& images_path, const SpaceFlags& flags) {
  if (!images_path.empty()) {
    return load_idx_files(images_path, std::nullopt).images;
  }
  return enumerate_dataset(flags.space()).first;
}

void write_labels_csv(const std::vector<FactorTuple>& labels, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "shape,scale,orientation,posX,posY\n";
  for (const FactorTuple& t : labels) {
    out << t.v[0] << ',' << t.v[1] << ',' << t.v[2] << ',' << t.v[3] << ',' << t.v[4]
        << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variational auto-encoder toolkit with latent-space whitening"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value config file; command-line flags win");

  std::string out_dir = "out";
  std::uint64_t seed = 0;
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_option("--seed", seed, "master random seed")->capture_default_str();

  // --- gen-data --------------------------------------------------------------
  auto* gen = app.add_subcommand("gen-data", "enumerate the procedural shapes dataset");
  gen->configurable();
  SpaceFlags gen_space;
  add_space_flags(gen, gen_space);

  // --- train -----------------------------------------------------------------
  auto* train_cmd = app.add_subcommand("train", "train a model and write a checkpoint");
  train_cmd->configurable();
  SpaceFlags train_space;
  add_space_flags(train_cmd, train_space);
  std::string train_images;
  std::string objective_name_flag = "vae";
  TrainConfig tc;
  train_cmd->add_option("--images", train_images, "IDX image file (default: procedural)")
      ->capture_default_str();
  train_cmd->add_option("--objective", objective_name_flag, "vae | beta-vae | factor-vae")
      ->capture_default_str();
  train_cmd->add_option("--beta", tc.beta, "beta-vae KL weight")->capture_default_str();
  train_cmd->add_option("--gamma", tc.gamma, "factor-vae TC weight")->capture_default_str();
  train_cmd->add_option("--latent-dim", tc.latent_dim, "latent dimension")
      ->capture_default_str();
  train_cmd->add_option("--hidden", tc.hidden, "encoder hidden sizes")
      ->delimiter(',')
      ->capture_default_str();
  train_cmd->add_option("--epochs", tc.epochs, "training epochs")->capture_default_str();
  train_cmd->add_option("--batch", tc.batch_size, "minibatch size")->capture_default_str();
  train_cmd->add_option("--lr", tc.learning_rate, "RMSprop learning rate")
      ->capture_default_str();

  // --- whiten ----------------------------------------------------------------
  auto* whiten_cmd =
      app.add_subcommand("whiten", "fit PCA whitening on a checkpoint's latents");
  whiten_cmd->configurable();
  SpaceFlags whiten_space;
  add_space_flags(whiten_cmd, whiten_space);
  std::string whiten_ckpt, whiten_images;
  whiten_cmd->add_option("--ckpt", whiten_ckpt, "checkpoint path")->required();
  whiten_cmd->add_option("--images", whiten_images, "IDX image file (default: procedural)")
      ->capture_default_str();

  // --- score -----------------------------------------------------------------
  auto* score_cmd =
      app.add_subcommand("score", "majority-vote disentanglement score");
  score_cmd->configurable();
  SpaceFlags score_space;
  add_space_flags(score_cmd, score_space);
  std::string score_ckpt, score_transform;
  MetricConfig mc;
  bool oracle = false, sampled_z = false;
  score_cmd->add_option("--ckpt", score_ckpt, "checkpoint path");
  score_cmd->add_option("--transform", score_transform,
                        "whitening transform; scores both whitened and raw encoders");
  score_cmd->add_option("--votes-train", mc.train_votes, "training votes")
      ->capture_default_str();
  score_cmd->add_option("--votes-test", mc.test_votes, "test votes")->capture_default_str();
  score_cmd->add_option("--samples-per-vote", mc.samples_per_vote, "images per vote (L)")
      ->capture_default_str();
  score_cmd->add_option("--collapse-threshold", mc.collapse_threshold,
                        "collapsed-dimension threshold on s / max(s)")
      ->capture_default_str();
  score_cmd->add_flag("--oracle", oracle, "score the identity oracle encoder (test hook)");
  score_cmd->add_flag("--sampled-z", sampled_z,
                      "encode with sampled z instead of the posterior mean");

  // --- traverse --------------------------------------------------------------
  auto* traverse_cmd =
      app.add_subcommand("traverse", "render a latent traversal grid as PGM");
  traverse_cmd->configurable();
  SpaceFlags traverse_space;
  add_space_flags(traverse_cmd, traverse_space);
  std::string trav_ckpt, trav_transform, trav_images;
  std::size_t image_index = 0;
  std::vector<std::size_t> trav_dims;
  double lo = -2.0, hi = 2.0;
  std::size_t steps = 8;
  traverse_cmd->add_option("--ckpt", trav_ckpt, "checkpoint path")->required();
  traverse_cmd->add_option("--transform", trav_transform,
                           "whitening transform; traversal runs in whitened coordinates");
  traverse_cmd->add_option("--images", trav_images, "IDX image file (default: procedural)")
      ->capture_default_str();
  traverse_cmd->add_option("--image-index", image_index, "dataset index of the base image")
      ->capture_default_str();
  traverse_cmd->add_option("--dims", trav_dims, "latent dimensions to sweep (default all)")
      ->delimiter(',')
      ->capture_default_str();
  traverse_cmd->add_option("--lo", lo, "sweep lower bound")->capture_default_str();
  traverse_cmd->add_option("--hi", hi, "sweep upper bound")->capture_default_str();
  traverse_cmd->add_option("--steps", steps, "sweep steps")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    const fs::path dir = ensure_out_dir(out_dir);

    if (gen->parsed()) {
      const FactorSpace space = gen_space.space();
      auto [images, labels] = enumerate_dataset(space);
      save_idx_images(images, dir / "images.idx");
      write_labels_csv(labels, dir / "labels.csv");
      write_manifest(app, dir, "gen-data");
      std::printf("wrote %zu images to %s\n", images.count,
                  (dir / "images.idx").c_str());
    } else if (train_cmd->parsed()) {
      tc.objective = objective_from_name(objective_name_flag);
      tc.seed = seed;
      tc.validate();
      ImageBatch data = load_training_images(train_images, train_space);
      TrainResult result = train(data, tc);
      save_checkpoint(dir / "model.ckpt", result.model, tc.objective);
      write_curves(result.curves, dir / "curves.csv");
      write_manifest(app, dir, "train");
      std::printf("final epoch: recon=%.6f kl=%.6f tc=%.6f\n",
                  result.curves.back().recon, result.curves.back().kl,
                  result.curves.back().tc);
    } else if (whiten_cmd->parsed()) {
      auto [model, objective] = load_checkpoint(whiten_ckpt);
      (void)objective;
      ImageBatch data = load_training_images(whiten_images, whiten_space);
      // encode the corpus in chunks to bound peak memory
      Mat z(data.count, model.arch.latent_dim);
      const std::size_t chunk = 2048;
      for (std::size_t start = 0; start < data.count; start += chunk) {
        const std::size_t n = std::min(chunk, data.count - start);
        Mat part = model.encode_mu(data.to_mat(start, n));
        std::copy(part.v.begin(), part.v.end(), z.v.begin() + start * part.cols);
      }
      WhiteningTransform t = fit_whitening(z);
      save_transform(dir / "transform.lwht", t);
      write_spectrum(spectrum(t), dir / "spectrum.csv");
      write_manifest(app, dir, "whiten");
      std::printf("top eigenvalue %.6f, smallest %.6g\n", t.eigvals.front(),
                  t.eigvals.back());
    } else if (score_cmd->parsed()) {
      const FactorSpace space = score_space.space();
      mc.seed = seed;
      if (oracle) {
        EvalResult res = evaluate(space, make_factor_oracle_encoder(), mc);
        write_votes_csv(res.votes_train, dir / "votes_train.csv");
        write_votes_csv(res.votes_test, dir / "votes_test.csv");
        write_manifest(app, dir, "score");
        std::printf("score_oracle=%.4f\n", res.score);
      } else {
        if (score_ckpt.empty()) {
          throw std::runtime_error("score: --ckpt is required unless --oracle is given");
        }
        auto [model, objective] = load_checkpoint(score_ckpt);
        (void)objective;
        auto raw_encoder = sampled_z
                               ? make_sampling_vae_encoder(model, nullptr, seed)
                               : make_vae_encoder(model, nullptr);
        EvalResult raw = evaluate(space, raw_encoder, mc);
        if (!score_transform.empty()) {
          WhiteningTransform t = load_transform(score_transform);
          auto w_encoder = sampled_z ? make_sampling_vae_encoder(model, &t, seed)
                                     : make_vae_encoder(model, &t);
          EvalResult whitened = evaluate(space, w_encoder, mc);
          write_votes_csv(whitened.votes_train, dir / "votes_train.csv");
          write_votes_csv(whitened.votes_test, dir / "votes_test.csv");
          write_votes_csv(raw.votes_train, dir / "votes_raw_train.csv");
          write_votes_csv(raw.votes_test, dir / "votes_raw_test.csv");
          write_manifest(app, dir, "score");
          std::printf("score_wvae=%.4f\nscore_vae=%.4f\n", whitened.score, raw.score);
        } else {
          write_votes_csv(raw.votes_train, dir / "votes_train.csv");
          write_votes_csv(raw.votes_test, dir / "votes_test.csv");
          write_manifest(app, dir, "score");
          std::printf("score_vae=%.4f\n", raw.score);
        }
      }
    } else if (traverse_cmd->parsed()) {
      auto [model, objective] = load_checkpoint(trav_ckpt);
      (void)objective;

      GrayImage anchor;
      Mat x(1, model.arch.input_dim());
      if (!trav_images.empty()) {
        ImageBatch data = load_idx_files(trav_images, std::nullopt).images;
        if (image_index >= data.count) {
          throw std::runtime_error("traverse: image index out of range");
        }
        x = data.to_mat(image_index, 1);
        anchor.height = data.height;
        anchor.width = data.width;
      } else {
        const FactorSpace space = traverse_space.space();
        if (image_index >= space.total()) {
          throw std::runtime_error("traverse: image index out of range");
        }
        const auto img = render_shape(tuple_from_index(image_index, space), space);
        for (std::size_t i = 0; i < img.size(); ++i) {
          x.v[i] = static_cast<double>(img[i]) / 255.0;
        }
        anchor.height = kCanvas;
        anchor.width = kCanvas;
      }
      anchor.pix = x.v;

      Mat mu = model.encode_mu(x);
      std::vector<double> z_base = mu.v;

      std::optional<WhiteningTransform> t;
      if (!trav_transform.empty()) {
        t = load_transform(trav_transform);
        z_base = whiten(z_base, *t);
      }

      if (trav_dims.empty()) {
        for (std::size_t j = 0; j < model.arch.latent_dim; ++j) trav_dims.push_back(j);
      }
      GrayImage grid = traversal_grid(model, t ? &*t : nullptr, z_base, trav_dims, lo,
                                      hi, steps, &anchor);
      write_pgm(grid, dir / "traversal.pgm");
      write_manifest(app, dir, "traverse");
      std::printf("wrote %zux%zu grid to %s\n", grid.width, grid.height,
                  (dir / "traversal.pgm").c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
