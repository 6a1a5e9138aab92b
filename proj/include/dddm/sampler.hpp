#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "dddm/ensemble.hpp"
#include "dddm/kernels.hpp"
#include "dddm/rng.hpp"
#include "dddm/schedule.hpp"

namespace dddm {

enum class SolverMode { euler_maruyama, ml_sde };

struct SamplerConfig {
  std::size_t n_steps = 30;
  SolverMode mode = SolverMode::ml_sde;
  bool stochastic = true;
  bool share_noise = true;  // one Brownian increment for all attribute chains
  std::uint64_t seed = 0;
  kernels::Exec exec = kernels::default_exec();
};

// Euler-Maruyama on dX = 1/2 beta (Z - X) dt + sqrt(beta) dW from t = 0 to 1.
std::vector<double> simulate_forward(const NoiseSchedule& sched, const std::vector<double>& x0,
                                     const std::vector<double>& z, std::size_t n_steps, Rng& rng);

// Monte Carlo moments of many forward paths recorded at the requested times.
// Paths are split into fixed blocks, each with its own RNG stream, so serial
// and parallel runs agree bitwise.
struct ForwardMoments {
  std::vector<double> times;
  std::vector<std::vector<double>> mean;      // per time, D
  std::vector<std::vector<double>> variance;  // per time, D (population)
};
ForwardMoments simulate_forward_moments(const NoiseSchedule& sched, const std::vector<double>& x0,
                                        const std::vector<double>& z, std::size_t n_paths, double dt,
                                        const std::vector<double>& times, std::uint64_t seed,
                                        kernels::Exec exec = kernels::default_exec());

// Total score for a batch of chains: states and priors hold one B x D tensor
// per attribute; returns B x D.
using ScoreFn = std::function<Tensor(const std::vector<Tensor>& states, const std::vector<Tensor>& priors, double t)>;

// Learned score of an ensemble under fixed per-chain conditioning.
ScoreFn ensemble_score(DenoiserEnsemble& ens, const Tensor& style,
                       std::optional<std::vector<double>> blend = std::nullopt);

// One reverse update from t to t - h for every attribute chain. noise holds
// one B x D draw per attribute (all equal under share_noise); ignored when
// cfg.stochastic is false.
std::vector<Tensor> reverse_step(const NoiseSchedule& sched, const std::vector<Tensor>& states,
                                 const std::vector<Tensor>& priors, const Tensor& score, double t, double h,
                                 const std::vector<Tensor>& noise, const SamplerConfig& cfg);

// Per-chain noise: row b is drawn from its own stream (seed, b).
class ChainNoise {
 public:
  ChainNoise(std::size_t batch, std::size_t dim, std::uint64_t seed, kernels::Exec exec);
  // One draw per attribute; copies of a single draw when shared.
  std::vector<Tensor> draw(std::size_t n_attributes, bool shared);

 private:
  std::size_t dim_;
  kernels::Exec exec_;
  std::vector<Rng> rngs_;
};

struct SampleResult {
  Tensor output;               // B x D, mean of the attribute chains
  std::vector<Tensor> chains;  // terminal state per attribute
  double chain_spread = 0.0;   // mean |X_n - output| over chains, diagnostic
};

// Starts every chain at (1 - alpha_1) Z_n + alpha_1 sum_m Z_m + xi (the t = 1
// marginal whose data term is centred on the summed prior) and integrates
// down to t_min on a uniform grid of cfg.n_steps intervals.
SampleResult sample(const NoiseSchedule& sched, const ScoreFn& score, const std::vector<Tensor>& priors,
                    const SamplerConfig& cfg);

// Two-attribute sampling of a blend-conditioned ensemble: attribute 0 sees
// priors_a, attribute 1 sees priors_b and every network gets the same blend.
// blend = 0 targets source A alone, blend = 1 source B alone.
Tensor mixer_demo(DenoiserEnsemble& ens, const Tensor& priors_a, const Tensor& priors_b, const Tensor& style,
                  double blend, const SamplerConfig& cfg);

}  // namespace dddm
