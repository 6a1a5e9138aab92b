#pragma once

#include <cstdint>
#include <vector>

#include "dddm/tape.hpp"

namespace dddm {

struct AdamWConfig {
  double lr = 5e-5;
  double beta1 = 0.8;
  double beta2 = 0.99;
  double weight_decay = 0.01;
  double eps = 1e-8;
};

// Decoupled weight decay: p <- p (1 - lr wd) - lr m_hat / (sqrt(v_hat) + eps).
class AdamW {
 public:
  AdamW() = default;
  AdamW(std::vector<Parameter*> params, AdamWConfig cfg);

  void step();
  void zero_grad();
  void set_lr(double lr) { cfg_.lr = lr; }
  double lr() const { return cfg_.lr; }
  const AdamWConfig& config() const { return cfg_; }
  std::uint64_t step_count() const { return step_; }

  // Moments in parameter order; exposed for checkpointing.
  std::vector<Tensor>& first_moments() { return m_; }
  std::vector<Tensor>& second_moments() { return v_; }
  void set_step_count(std::uint64_t s) { step_ = s; }
  // Drops moments and step count, keeps hyperparameters.
  void reset();

 private:
  std::vector<Parameter*> params_;
  std::vector<Tensor> m_, v_;
  AdamWConfig cfg_;
  std::uint64_t step_ = 0;
};

enum class LrSchedule { exponential, cosine };

// Exponential: base * decay^epoch (decay applied once per epoch).
// Cosine: base * (1 + cos(pi * step / total_steps)) / 2.
double scheduled_lr(LrSchedule kind, double base, double decay, std::uint64_t epoch, std::uint64_t step,
                    std::uint64_t total_steps);

}  // namespace dddm
