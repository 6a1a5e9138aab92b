#pragma once

#include <span>
#include <vector>

namespace dddm {

struct TransitionParams {
  double alpha = 1.0;       // mean coefficient on x0
  double data_coef = 1.0;   // == alpha
  double prior_coef = 0.0;  // 1 - alpha
  double variance = 0.0;    // 1 - alpha^2
};

// Linear-beta variance-preserving schedule with a data-driven prior mean.
class NoiseSchedule {
 public:
  NoiseSchedule() = default;
  NoiseSchedule(double beta_min, double beta_max, double t_min = 1e-5);

  double beta_min() const { return beta_min_; }
  double beta_max() const { return beta_max_; }
  double t_min() const { return t_min_; }

  double beta_at(double t) const;
  double beta_integral(double t) const;
  TransitionParams transition(double t) const;
  double lambda_weight(double t) const;

  // exp(-p/2 * integral of beta over [s, t]); s <= t, both in [0, 1].
  double decay(double s, double t, double p = 1.0) const;

  std::vector<double> forward_sample(std::span<const double> x0, std::span<const double> z, double t,
                                     std::span<const double> eps) const;
  std::vector<double> score_target(std::span<const double> x_t, std::span<const double> x0,
                                   std::span<const double> z, double t) const;

 private:
  void check_time(double t) const;

  double beta_min_ = 0.05;
  double beta_max_ = 20.0;
  double t_min_ = 1e-5;
};

}  // namespace dddm
