#include "dddm/adamw.hpp"

#include <cmath>
#include <numbers>

#include "dddm/errors.hpp"

namespace dddm {

AdamW::AdamW(std::vector<Parameter*> params, AdamWConfig cfg) : params_(std::move(params)), cfg_(cfg) { reset(); }

void AdamW::reset() {
  m_.clear();
  v_.clear();
  for (const Parameter* p : params_) {
    m_.emplace_back(p->value.rows(), p->value.cols());
    v_.emplace_back(p->value.rows(), p->value.cols());
  }
  step_ = 0;
}

void AdamW::zero_grad() {
  for (Parameter* p : params_) p->zero_grad();
}

void AdamW::step() {
  ++step_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Parameter& p = *params_[k];
    if (!p.grad.same_shape(p.value)) throw ShapeError("AdamW: gradient shape mismatch for " + p.name);
    if (!m_[k].same_shape(p.value)) throw ShapeError("AdamW: moment shape mismatch for " + p.name);
    p.grad.require_finite("gradient of " + p.name);
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      p.value[i] *= 1.0 - cfg_.lr * cfg_.weight_decay;
      m_[k][i] = cfg_.beta1 * m_[k][i] + (1.0 - cfg_.beta1) * g;
      v_[k][i] = cfg_.beta2 * v_[k][i] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = m_[k][i] / bc1;
      const double vhat = v_[k][i] / bc2;
      p.value[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

double scheduled_lr(LrSchedule kind, double base, double decay, std::uint64_t epoch, std::uint64_t step,
                    std::uint64_t total_steps) {
  if (kind == LrSchedule::exponential) return base * std::pow(decay, static_cast<double>(epoch));
  if (total_steps == 0) return base;
  const double frac = static_cast<double>(step) / static_cast<double>(total_steps);
  return base * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

}  // namespace dddm
