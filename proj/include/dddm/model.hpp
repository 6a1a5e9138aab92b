#pragma once

#include <memory>
#include <vector>

#include "dddm/adamw.hpp"
#include "dddm/codec.hpp"
#include "dddm/ensemble.hpp"
#include "dddm/sampler.hpp"
#include "dddm/toy.hpp"

namespace dddm {

struct ModelConfig {
  EnsembleConfig ensemble;
  CodecConfig codec;
  double mixup_rate = 0.5;
  double lambda_rec = 1.0;
  bool detach_mixed_priors = true;  // mixed priors carry no encoder gradient
  bool no_mixup = false;
  bool single_denoiser = false;  // one network on Z_src + Z_ftr
  bool no_pitch_norm = false;    // global instead of per-style pitch stats
  bool zero_prior = false;       // diffuse toward N(0, I); priors only condition
};

// Style encoder, source/filter encoders and the denoiser ensemble, plus the
// pitch statistics needed to quantize pitch at inference.
class VcModel {
 public:
  VcModel(const ModelConfig& cfg, const NoiseSchedule& sched, std::uint64_t seed);
  VcModel(const VcModel&) = delete;
  VcModel& operator=(const VcModel&) = delete;

  const ModelConfig& config() const { return cfg_; }
  const NoiseSchedule& schedule() const { return sched_; }
  StyleEncoder& style_encoder() { return style_; }
  SourceFilterEncoder& codec() { return codec_; }
  DenoiserEnsemble& ensemble() { return ens_; }

  // Named parameters in a fixed order; pitch statistics ride along as a
  // non-trainable block so checkpoints carry them.
  std::vector<Parameter*> parameters();
  std::vector<Parameter*> trainable();
  std::vector<Parameter*> encoder_parameters();

  void set_pitch_stats(const ToyDataset& train);
  // Adds or replaces one style's statistics, e.g. for an adaptation style.
  void set_style_stats(std::size_t style, const StyleStats& st);
  std::size_t known_styles() const { return stats_.value.rows() > 0 ? stats_.value.rows() - 1 : 0; }
  StyleStats stats_for(std::size_t style) const;
  std::vector<std::size_t> pitch_units(const std::vector<double>& pitch, const std::vector<std::size_t>& style) const;

  // Attribute priors fed to the diffusion: {Z_src, Z_ftr}, or their sum for
  // the single-denoiser topology.
  std::vector<Var> diffusion_priors(const Priors& p) const;

  bool trained() const { return trained_.value[0] != 0.0; }
  void mark_trained() { trained_.value[0] = 1.0; }

 private:
  ModelConfig cfg_;
  NoiseSchedule sched_;
  StyleEncoder style_;
  SourceFilterEncoder codec_;
  DenoiserEnsemble ens_;
  Parameter stats_;    // (styles + 1) x 2, last row global
  Parameter trained_;  // 1 x 1 flag
};

std::unique_ptr<VcModel> make_model(const ModelConfig& cfg, const NoiseSchedule& sched, std::uint64_t seed);

struct StepLosses {
  double diff = 0.0;
  double rec = 0.0;
  double total = 0.0;
};

// Rows of a dataset gathered for one optimizer step.
Tensor gather_rows(const Tensor& t, const std::vector<std::size_t>& idx);
Tensor gather_frames(const ToyDataset& d, const std::vector<std::size_t>& idx);

// One step of L_diff(mixed priors, original style) + lambda_rec L_rec.
StepLosses train_batch(VcModel& m, const ToyDataset& d, const std::vector<std::size_t>& idx, AdamW& opt, Rng& rng);

struct ConvertRequest {
  Tensor content;                        // B x content_dim, clean source features
  std::vector<double> pitch;             // B raw source pitch
  std::vector<std::size_t> source_style; // B
  Tensor target_frames;                  // (B * n_frames) x style_dim
  std::size_t n_frames = 0;
};

struct ConvertOptions {
  SamplerConfig sampler;
  bool per_sentence_pitch = false;  // normalize with the request's own pitch stats
};

// Priors with the target style, then reverse sampling conditioned on it.
SampleResult convert(VcModel& m, const ConvertRequest& req, const ConvertOptions& opt, Tensor* prior_sum = nullptr);

ConvertRequest make_request(const ToyDataset& src, const std::vector<std::size_t>& idx, const ToyGenerator& gen,
                            const std::vector<std::size_t>& target_style, std::uint64_t seed);

}  // namespace dddm
