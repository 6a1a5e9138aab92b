#pragma once

#include <cstdint>
#include <string>

#include "dddm/model.hpp"
#include "dddm/toy.hpp"

namespace dddm {

// Every knob of a run. Parsed from flat key=value text; unknown keys and
// malformed values raise UsageError.
struct RunConfig {
  std::uint64_t seed = 0;
  ToyConfig toy;
  std::size_t n_per_style = 128;       // training samples per style
  std::size_t n_eval = 512;            // conversions per evaluation

  double beta_min = 0.05, beta_max = 20.0, t_min = 1e-5;

  std::size_t hidden = 128;
  std::size_t time_dim = 16;
  std::size_t unit_embed_dim = 16;
  std::size_t pitch_units = 20;
  double sigma_data = 0.1;
  bool share_noise = true;
  double perturb_noise = 0.1, perturb_drop = 0.25;

  double lr = 5e-5;
  double beta1 = 0.8, beta2 = 0.99;
  double weight_decay = 0.01;
  double adam_eps = 1e-8;
  double lr_decay = 0.99913643;  // 0.999^(1/8)
  std::string lr_schedule = "exponential";
  std::size_t batch_size = 64;
  std::size_t epochs = 200;
  std::size_t checkpoint_every = 50;

  double mixup_rate = 0.5;
  double lambda_rec = 1.0;
  bool detach_mixed_priors = true;
  bool no_mixup = false, single_denoiser = false, no_pitch_norm = false, zero_prior = false;

  std::size_t steps = 30;
  std::string mode = "ml";  // ml | em
  bool stochastic = true;
  bool share_noise_inference = true;
  bool per_sentence_pitch = false;
  std::size_t n_projections = 64;

  std::size_t adapt_steps = 500;
  double adapt_lr = 2e-5;
  std::size_t adapt_samples = 4;
  std::size_t adapt_batch = 4;
  bool freeze_encoders = false;

  int threads = 0;              // 0 = OpenMP default
  bool record_wall_time = true; // false writes 0 so metrics files are reproducible

  ModelConfig model_config() const;
  NoiseSchedule schedule() const;
  AdamWConfig optimizer() const;
  LrSchedule lr_kind() const;
  SamplerConfig sampler(std::uint64_t seed_offset = 0) const;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
// Canonical key=value form: every key, fixed order, round-trip exact.
std::string serialize_config(const RunConfig& c);
void set_config_value(RunConfig& c, const std::string& key, const std::string& value);
// FNV-1a of the canonical form, 16 hex digits.
std::string config_hash(const RunConfig& c);

}  // namespace dddm
