#include "dddm/schedule.hpp"

#include <cmath>
#include <string>

#include "dddm/errors.hpp"

namespace dddm {

NoiseSchedule::NoiseSchedule(double beta_min, double beta_max, double t_min)
    : beta_min_(beta_min), beta_max_(beta_max), t_min_(t_min) {
  if (!(beta_min > 0.0) || !(beta_max >= beta_min))
    throw DomainError("schedule requires 0 < beta_min <= beta_max");
  if (!(t_min > 0.0 && t_min < 1.0)) throw DomainError("schedule requires t_min in (0, 1)");
}

void NoiseSchedule::check_time(double t) const {
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("time outside [0, 1]: " + std::to_string(t));
}

double NoiseSchedule::beta_at(double t) const {
  check_time(t);
  return beta_min_ + (beta_max_ - beta_min_) * t;
}

double NoiseSchedule::beta_integral(double t) const {
  check_time(t);
  return beta_min_ * t + 0.5 * (beta_max_ - beta_min_) * t * t;
}

TransitionParams NoiseSchedule::transition(double t) const {
  const double integral = beta_integral(t);
  TransitionParams p;
  p.alpha = std::exp(-0.5 * integral);
  p.data_coef = p.alpha;
  p.prior_coef = 1.0 - p.alpha;
  p.variance = -std::expm1(-integral);
  return p;
}

double NoiseSchedule::lambda_weight(double t) const { return -std::expm1(-beta_integral(t)); }

double NoiseSchedule::decay(double s, double t, double p) const {
  check_time(s);
  check_time(t);
  if (s > t) throw DomainError("decay requires s <= t");
  const double integral = (beta_min_ + 0.5 * (beta_max_ - beta_min_) * (t + s)) * (t - s);
  return std::exp(-0.5 * p * integral);
}

std::vector<double> NoiseSchedule::forward_sample(std::span<const double> x0, std::span<const double> z,
                                                  double t, std::span<const double> eps) const {
  if (x0.size() != z.size() || x0.size() != eps.size())
    throw ShapeError("forward_sample: x0, z, eps must have equal length");
  const TransitionParams tp = transition(t);
  const double sd = std::sqrt(tp.variance);
  std::vector<double> out(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i)
    out[i] = tp.alpha * x0[i] + tp.prior_coef * z[i] + sd * eps[i];
  return out;
}

std::vector<double> NoiseSchedule::score_target(std::span<const double> x_t, std::span<const double> x0,
                                                std::span<const double> z, double t) const {
  if (x_t.size() != x0.size() || x_t.size() != z.size())
    throw ShapeError("score_target: vectors must have equal length");
  if (t <= 0.0) throw DomainError("score_target is singular at t = 0");
  const TransitionParams tp = transition(t);
  std::vector<double> out(x_t.size());
  for (std::size_t i = 0; i < x_t.size(); ++i)
    out[i] = -(x_t[i] - tp.alpha * x0[i] - tp.prior_coef * z[i]) / tp.variance;
  return out;
}

}  // namespace dddm
