#pragma once

#include <vector>

#include "dddm/ensemble.hpp"
#include "dddm/nn.hpp"
#include "dddm/toy.hpp"

namespace dddm {

struct CodecConfig {
  std::size_t data_dim = 16;
  std::size_t style_dim = 8;
  std::size_t content_dim = 16;
  std::size_t pitch_units = 20;
  std::size_t unit_embed_dim = 16;
  std::size_t hidden = 128;
  double perturb_noise = 0.1;
  double perturb_drop = 0.25;
  Activation activation = Activation::silu;
};

struct PitchRep {
  double raw = 0.0;
  double normalized = 0.0;
  std::size_t unit = 0;
};

// clamp(floor((n + 3) / 6 * units), 0, units - 1)
std::size_t quantize_pitch(double normalized, std::size_t units = 20);
PitchRep normalize_pitch(double pitch, const StyleStats& stats, std::size_t units = 20);

// Additive N(0, noise^2) then zero each coordinate with probability drop.
Tensor perturb_content(const Tensor& content, Rng& rng, double noise = 0.1, double drop = 0.25);

// Element i takes styles[perm(i)] when mask(i) is set, else styles[i].
struct MixupDraw {
  std::vector<std::size_t> source;
  std::vector<bool> mask;
};
MixupDraw prior_mixup(std::size_t batch, Rng& rng, double rate = 0.5);

class StyleEncoder {
 public:
  StyleEncoder() = default;
  StyleEncoder(std::size_t style_dim, Rng& rng);
  // frames: (B * n_frames) x style_dim -> B x style_dim, tanh(Linear(mean)).
  Var forward(Tape& tape, const Tensor& frames, std::size_t n_frames);
  void collect(std::vector<Parameter*>& out) { proj_.collect(out); }

 private:
  Linear proj_;
};

struct Priors {
  Var z_src;
  Var z_ftr;
};

class SourceFilterEncoder {
 public:
  SourceFilterEncoder() = default;
  SourceFilterEncoder(const CodecConfig& cfg, Rng& rng);

  const CodecConfig& config() const { return cfg_; }
  Var encode_source(Tape& tape, const std::vector<std::size_t>& units, Var style);
  Var encode_filter(Tape& tape, const Tensor& perturbed_content, Var style);
  Priors encode(Tape& tape, const std::vector<std::size_t>& units, const Tensor& perturbed_content, Var style);
  void collect(std::vector<Parameter*>& out);

 private:
  CodecConfig cfg_;
  Embedding units_;
  SkipMlp src_;
  SkipMlp ftr_;
};

// mean |x - (z_src + z_ftr)|
Var recon_loss(Tape& tape, const Tensor& x_target, const Priors& p);

// L_diff(mixed priors, original style) + lambda_rec * L_rec(original priors).
struct TotalLoss {
  Var total;
  Var diff;
  Var rec;
};
TotalLoss total_loss(Tape& tape, DenoiserEnsemble& ens, const Tensor& x0, const Priors& original,
                     const std::vector<Var>& diffusion_priors, const ScoreContext& ctx, const std::vector<Tensor>& eps,
                     double lambda_rec = 1.0);

}  // namespace dddm
