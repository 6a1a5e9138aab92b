#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "dddm/adamw.hpp"
#include "dddm/nn.hpp"
#include "dddm/schedule.hpp"

namespace dddm {

struct EnsembleConfig {
  std::size_t n_attributes = 2;
  std::size_t data_dim = 16;
  std::size_t style_dim = 8;
  std::size_t hidden = 128;
  std::size_t time_dim = 16;
  bool share_noise = true;
  bool blend_condition = false;  // adds one input scalar to every network
  // Expected per-coordinate spread of x0 around the prior; sets the input
  // and output scaling c(t) = 1 / sqrt(var_t + alpha_t^2 sigma_data^2).
  double sigma_data = 0.1;
  Activation activation = Activation::silu;
  // Diffuse toward N(0, I) instead of N(Z, I); Z then only conditions the networks.
  bool zero_prior_mean = false;
};

// Sinusoidal features of t at frequencies exp(linspace(0, ln 200, dim/2)).
Tensor time_embedding(const std::vector<double>& t, std::size_t dim);

// Per-sample inputs shared by every attribute network.
struct ScoreContext {
  Var style;                          // B x style_dim
  std::vector<double> t;              // B
  std::optional<std::vector<double>> blend;  // B values in [0, 1]
};

// N score networks whose outputs are summed into one total score.
class DenoiserEnsemble {
 public:
  DenoiserEnsemble() = default;
  DenoiserEnsemble(const EnsembleConfig& cfg, const NoiseSchedule& sched, Rng& rng);

  const EnsembleConfig& config() const { return cfg_; }
  const NoiseSchedule& schedule() const { return sched_; }
  std::size_t size() const { return nets_.size(); }

  // s_theta_n(X_n, Z_n, s, t[, blend]) for a batch. X and Z are B x D.
  Var attribute_score(Tape& tape, std::size_t n, Var x, Var z, const ScoreContext& ctx);
  // Sum over attributes.
  Var combined_score(Tape& tape, const std::vector<Var>& x, const std::vector<Var>& z, const ScoreContext& ctx);

  // Batch mean of lambda_t || sum_n s_n + eps / sigma_t ||^2 with
  // X_n = alpha x0 + (1 - alpha) Z_n + sigma eps_n. eps holds one B x D draw
  // per attribute; under share_noise all entries must be the same draw.
  Var diffusion_loss(Tape& tape, const Tensor& x0, const std::vector<Var>& priors, const ScoreContext& ctx,
                     const std::vector<Tensor>& eps);

  void collect(std::vector<Parameter*>& out);

  // Called with the style values every attribute_score receives.
  void set_style_probe(std::function<void(const Tensor&)> probe) { style_probe_ = std::move(probe); }

 private:
  std::size_t input_dim() const;

  EnsembleConfig cfg_;
  NoiseSchedule sched_;
  std::vector<SkipMlp> nets_;
  std::function<void(const Tensor&)> style_probe_;
};

// Batch of plain (x0, priors, style) triples for standalone ensemble training.
struct EnsembleBatch {
  Tensor x0;                  // B x D
  std::vector<Tensor> priors; // N of B x D
  Tensor style;               // B x style_dim
  std::optional<std::vector<double>> blend;
};

// Draws t ~ U[t_min, 1] per element and eps, evaluates the loss, backprops
// into every theta_n and applies one optimizer step. Returns the pre-step loss.
double train_step(DenoiserEnsemble& ens, const EnsembleBatch& batch, AdamW& opt, Rng& rng);

}  // namespace dddm
