#include "dddm/sampler.hpp"

#include <algorithm>
#include <cmath>

#include "dddm/errors.hpp"
#include "dddm/tape.hpp"

namespace dddm {

namespace {

constexpr std::size_t kPathBlock = 1024;

void check_priors(const std::vector<Tensor>& priors) {
  if (priors.empty()) throw ContractError("sampler needs at least one prior");
  for (const Tensor& p : priors)
    if (!p.same_shape(priors[0])) throw ShapeError("sampler: prior shapes differ");
}

}  // namespace

std::vector<double> simulate_forward(const NoiseSchedule& sched, const std::vector<double>& x0,
                                     const std::vector<double>& z, std::size_t n_steps, Rng& rng) {
  if (x0.size() != z.size()) throw ShapeError("simulate_forward: x0 and z differ in length");
  if (n_steps == 0) throw ContractError("simulate_forward: n_steps must be positive");
  std::vector<double> x = x0;
  const double h = 1.0 / static_cast<double>(n_steps);
  for (std::size_t i = 0; i < n_steps; ++i) {
    const double b = sched.beta_at(static_cast<double>(i) * h);
    const double sd = std::sqrt(b * h);
    for (std::size_t d = 0; d < x.size(); ++d) x[d] += 0.5 * b * (z[d] - x[d]) * h + sd * rng.normal();
  }
  return x;
}

ForwardMoments simulate_forward_moments(const NoiseSchedule& sched, const std::vector<double>& x0,
                                        const std::vector<double>& z, std::size_t n_paths, double dt,
                                        const std::vector<double>& times, std::uint64_t seed, kernels::Exec exec) {
  if (x0.size() != z.size()) throw ShapeError("simulate_forward_moments: x0 and z differ in length");
  if (n_paths == 0 || !(dt > 0.0)) throw ContractError("simulate_forward_moments: need paths and a positive step");
  const std::size_t dim = x0.size();
  const std::size_t n_times = times.size();
  std::vector<std::size_t> mark(n_times);
  for (std::size_t k = 0; k < n_times; ++k) {
    if (!(times[k] > 0.0 && times[k] <= 1.0)) throw DomainError("simulate_forward_moments: times must lie in (0, 1]");
    mark[k] = static_cast<std::size_t>(std::llround(times[k] / dt));
  }
  const std::size_t total_steps = n_times ? *std::max_element(mark.begin(), mark.end()) : 0;

  // sums[block][time][2 * dim]: first and second moments
  const std::size_t n_blocks = (n_paths + kPathBlock - 1) / kPathBlock;
  std::vector<std::vector<double>> sums(n_blocks, std::vector<double>(n_times * 2 * dim, 0.0));

  auto run_block = [&](std::size_t blk) {
    Rng rng(seed, blk);
    const std::size_t lo = blk * kPathBlock;
    const std::size_t hi = std::min(n_paths, lo + kPathBlock);
    std::vector<double>& acc = sums[blk];
    std::vector<double> x(dim);
    for (std::size_t p = lo; p < hi; ++p) {
      x = x0;
      std::size_t next = 0;
      for (std::size_t i = 0; i < total_steps; ++i) {
        const double b = sched.beta_at(static_cast<double>(i) * dt);
        const double sd = std::sqrt(b * dt);
        for (std::size_t d = 0; d < dim; ++d) x[d] += 0.5 * b * (z[d] - x[d]) * dt + sd * rng.normal();
        for (std::size_t k = 0; k < n_times; ++k) {
          if (mark[k] != i + 1) continue;
          for (std::size_t d = 0; d < dim; ++d) {
            acc[k * 2 * dim + d] += x[d];
            acc[k * 2 * dim + dim + d] += x[d] * x[d];
          }
        }
        (void)next;
      }
    }
  };

  if (exec == kernels::Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::size_t blk = 0; blk < n_blocks; ++blk) run_block(blk);
  } else {
    for (std::size_t blk = 0; blk < n_blocks; ++blk) run_block(blk);
  }

  ForwardMoments m;
  m.times = times;
  const double n = static_cast<double>(n_paths);
  for (std::size_t k = 0; k < n_times; ++k) {
    std::vector<double> s1(dim, 0.0), s2(dim, 0.0);
    for (std::size_t blk = 0; blk < n_blocks; ++blk)
      for (std::size_t d = 0; d < dim; ++d) {
        s1[d] += sums[blk][k * 2 * dim + d];
        s2[d] += sums[blk][k * 2 * dim + dim + d];
      }
    std::vector<double> mean(dim), var(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      mean[d] = s1[d] / n;
      var[d] = s2[d] / n - mean[d] * mean[d];
    }
    m.mean.push_back(std::move(mean));
    m.variance.push_back(std::move(var));
  }
  return m;
}

ScoreFn ensemble_score(DenoiserEnsemble& ens, const Tensor& style, std::optional<std::vector<double>> blend) {
  return [&ens, style, blend](const std::vector<Tensor>& states, const std::vector<Tensor>& priors, double t) {
    Tape tape(false);
    ScoreContext ctx{tape.constant(style), std::vector<double>(style.rows(), t), blend};
    std::vector<Var> x, z;
    for (const Tensor& s : states) x.push_back(tape.constant(s));
    for (const Tensor& p : priors) z.push_back(tape.constant(p));
    return ens.combined_score(tape, x, z, ctx).value();
  };
}

std::vector<Tensor> reverse_step(const NoiseSchedule& sched, const std::vector<Tensor>& states,
                                 const std::vector<Tensor>& priors, const Tensor& score, double t, double h,
                                 const std::vector<Tensor>& noise, const SamplerConfig& cfg) {
  if (!(h > 0.0)) throw DomainError("reverse_step: h must be positive");
  const double s = t - h;
  if (s < sched.t_min() - 1e-12 || t > 1.0 + 1e-12) throw DomainError("reverse_step: step leaves [t_min, 1]");
  if (states.size() != priors.size()) throw ContractError("reverse_step: one prior per state");
  if (cfg.stochastic && noise.size() != states.size()) throw ContractError("reverse_step: one noise draw per state");
  for (std::size_t n = 0; n < states.size(); ++n) {
    if (!states[n].same_shape(priors[n]) || !states[n].same_shape(score))
      throw ShapeError("reverse_step: state, prior and score shapes differ");
    if (cfg.stochastic && !noise[n].same_shape(score)) throw ShapeError("reverse_step: noise shape");
  }

  const double b = sched.beta_at(t);
  // dx = (Z - X)(beta h / 2 + omega) - score (1 + kappa) beta h + sigma xi,  X <- X - dx
  double omega = 0.0, kappa = 0.0, sigma = std::sqrt(b * h);
  if (cfg.mode == SolverMode::ml_sde) {
    const double g0s = sched.decay(0.0, s), g0t = sched.decay(0.0, t);
    const double gst2 = sched.decay(s, t, 2.0), g0t2 = sched.decay(0.0, t, 2.0), g0s2 = sched.decay(0.0, s, 2.0);
    kappa = g0s * (1.0 - gst2) / (g0t * b * h) - 1.0;
    const double nu = g0s * (1.0 - gst2) / (1.0 - g0t2);
    const double mu = sched.decay(s, t) * (1.0 - g0s2) / (1.0 - g0t2);
    omega = nu / g0t + mu - (0.5 * b * h + 1.0);
    sigma = std::sqrt((1.0 - g0s2) * (1.0 - gst2) / (1.0 - g0t2));
  }
  const double pull = 0.5 * b * h + omega;
  const double push = (1.0 + kappa) * b * h;

  std::vector<Tensor> out;
  out.reserve(states.size());
  for (std::size_t n = 0; n < states.size(); ++n) {
    Tensor x = states[n];
    const Tensor& z = priors[n];
    for (std::size_t i = 0; i < x.size(); ++i) {
      double dx = (z[i] - x[i]) * pull - score[i] * push;
      if (cfg.stochastic) dx += sigma * noise[n][i];
      x[i] -= dx;
    }
    x.require_finite("reverse_step");
    out.push_back(std::move(x));
  }
  return out;
}

ChainNoise::ChainNoise(std::size_t batch, std::size_t dim, std::uint64_t seed, kernels::Exec exec)
    : dim_(dim), exec_(exec) {
  rngs_.reserve(batch);
  for (std::size_t b = 0; b < batch; ++b) rngs_.emplace_back(seed, b);
}

std::vector<Tensor> ChainNoise::draw(std::size_t n_attributes, bool shared) {
  const std::size_t count = shared ? 1 : n_attributes;
  std::vector<Tensor> out(count, Tensor(rngs_.size(), dim_));
  const long rows = static_cast<long>(rngs_.size());
  auto fill = [&](long b) {
    Rng& r = rngs_[static_cast<std::size_t>(b)];
    for (std::size_t n = 0; n < count; ++n) {
      double* p = out[n].row_ptr(static_cast<std::size_t>(b));
      for (std::size_t d = 0; d < dim_; ++d) p[d] = r.normal();
    }
  };
  if (exec_ == kernels::Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (long b = 0; b < rows; ++b) fill(b);
  } else {
    for (long b = 0; b < rows; ++b) fill(b);
  }
  if (shared)
    for (std::size_t n = 1; n < n_attributes; ++n) out.push_back(out[0]);
  return out;
}

SampleResult sample(const NoiseSchedule& sched, const ScoreFn& score, const std::vector<Tensor>& priors,
                    const SamplerConfig& cfg) {
  if (cfg.n_steps < 1) throw ContractError("sample: n_steps must be at least 1");
  check_priors(priors);
  const std::size_t n_attr = priors.size();
  const std::size_t batch = priors[0].rows(), dim = priors[0].cols();

  ChainNoise noise(batch, dim, cfg.seed, cfg.exec);
  Tensor total(batch, dim, 0.0);
  for (const Tensor& p : priors)
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += p[i];
  const double a1 = sched.transition(1.0).alpha;

  std::vector<Tensor> xi = noise.draw(n_attr, cfg.share_noise);
  std::vector<Tensor> x;
  for (std::size_t n = 0; n < n_attr; ++n) {
    Tensor s(batch, dim);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = (1.0 - a1) * priors[n][i] + a1 * total[i] + xi[n][i];
    x.push_back(std::move(s));
  }

  const double h = (1.0 - sched.t_min()) / static_cast<double>(cfg.n_steps);
  for (std::size_t k = 0; k < cfg.n_steps; ++k) {
    const double t = 1.0 - static_cast<double>(k) * h;
    const Tensor sc = score(x, priors, t);
    std::vector<Tensor> nz;
    if (cfg.stochastic) nz = noise.draw(n_attr, cfg.share_noise);
    x = reverse_step(sched, x, priors, sc, t, std::min(h, t - sched.t_min()), nz, cfg);
  }

  SampleResult r;
  r.output = Tensor(batch, dim, 0.0);
  for (const Tensor& c : x)
    for (std::size_t i = 0; i < c.size(); ++i) r.output[i] += c[i] / static_cast<double>(n_attr);
  double spread = 0.0;
  for (const Tensor& c : x)
    for (std::size_t i = 0; i < c.size(); ++i) spread += std::abs(c[i] - r.output[i]);
  r.chain_spread = spread / static_cast<double>(n_attr * r.output.size());
  r.chains = std::move(x);
  return r;
}

Tensor mixer_demo(DenoiserEnsemble& ens, const Tensor& priors_a, const Tensor& priors_b, const Tensor& style,
                  double blend, const SamplerConfig& cfg) {
  if (!(blend >= 0.0 && blend <= 1.0)) throw DomainError("mixer_demo: blend outside [0, 1]");
  if (!ens.config().blend_condition) throw ContractError("mixer_demo: ensemble was built without blend conditioning");
  if (ens.size() != 2) throw ContractError("mixer_demo: needs a two-attribute ensemble");
  if (!priors_a.same_shape(priors_b)) throw ShapeError("mixer_demo: prior shapes differ");
  const ScoreFn score = ensemble_score(ens, style, std::vector<double>(priors_a.rows(), blend));
  return sample(ens.schedule(), score, {priors_a, priors_b}, cfg).output;
}

}  // namespace dddm
