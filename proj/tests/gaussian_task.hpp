#pragma once

// Linear-Gaussian training task with an exact score: priors are the true
// source and filter parts of a toy sample and x0 ~ N(z_src + z_ftr, noise^2 I).

#include <cmath>
#include <vector>

#include "dddm/adamw.hpp"
#include "dddm/ensemble.hpp"
#include "dddm/toy.hpp"

namespace dddm::task {

struct GaussianBatch {
  EnsembleBatch batch;
  Tensor mu;  // conditional mean of x0
};

inline GaussianBatch draw_gaussian(const ToyGenerator& gen, std::size_t n, Rng& rng) {
  const ToyConfig& c = gen.config();
  GaussianBatch g;
  g.batch.x0 = Tensor(n, c.data_dim);
  g.batch.priors = {Tensor(n, c.data_dim), Tensor(n, c.data_dim)};
  g.batch.style = Tensor(n, c.style_dim);
  g.mu = Tensor(n, c.data_dim);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t tok = rng.below(c.n_tokens), sty = rng.below(c.n_styles);
    const double u = rng.normal();
    const std::vector<double> zs = gen.source_part(u, sty), zf = gen.filter_part(tok, sty);
    for (std::size_t j = 0; j < c.data_dim; ++j) {
      g.batch.priors[0](i, j) = zs[j];
      g.batch.priors[1](i, j) = zf[j];
      g.mu(i, j) = zs[j] + zf[j];
      g.batch.x0(i, j) = g.mu(i, j) + c.noise_std * rng.normal();
    }
    for (std::size_t j = 0; j < c.style_dim; ++j) g.batch.style(i, j) = gen.style_embeddings()(sty, j);
  }
  return g;
}

// Cosine-decayed training; returns the per-step losses.
inline std::vector<double> train_gaussian(DenoiserEnsemble& ens, const ToyGenerator& gen, std::size_t steps,
                                          std::size_t batch, double lr, std::uint64_t seed) {
  std::vector<Parameter*> ps;
  ens.collect(ps);
  AdamWConfig oc;
  oc.lr = lr;
  AdamW opt(ps, oc);
  Rng rng(seed, 1);
  std::vector<double> losses;
  for (std::size_t k = 0; k < steps; ++k) {
    opt.set_lr(scheduled_lr(LrSchedule::cosine, lr, 1.0, 0, k, steps));
    const GaussianBatch g = draw_gaussian(gen, batch, rng);
    losses.push_back(train_step(ens, g.batch, opt, rng));
  }
  return losses;
}

// RMS over samples and coordinates of (combined score - exact score), with
// X_{n,t} drawn from the forward marginal of each attribute under shared noise.
// Empty times draws t uniformly from [t_lo, 1].
inline double score_rms(DenoiserEnsemble& ens, const ToyGenerator& gen, const std::vector<double>& times,
                        std::size_t n, std::uint64_t seed, double t_lo = 0.1) {
  const NoiseSchedule& s = ens.schedule();
  Rng rng(seed, 2);
  const GaussianBatch g = draw_gaussian(gen, n, rng);
  const std::size_t d = g.batch.x0.cols();
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i)
    t[i] = times.empty() ? t_lo + (1.0 - t_lo) * rng.uniform() : times[i % times.size()];
  Tape tape(false);
  std::vector<Var> xs, zs;
  Tensor eps(n, d);
  for (std::size_t i = 0; i < eps.size(); ++i) eps[i] = rng.normal();
  for (const Tensor& z : g.batch.priors) {
    Tensor x(n, d);
    for (std::size_t i = 0; i < n; ++i) {
      const TransitionParams p = s.transition(t[i]);
      for (std::size_t j = 0; j < d; ++j)
        x(i, j) = p.alpha * g.batch.x0(i, j) + p.prior_coef * z(i, j) + std::sqrt(p.variance) * eps(i, j);
    }
    xs.push_back(tape.constant(std::move(x)));
    zs.push_back(tape.constant(z));
  }
  const ScoreContext ctx{tape.constant(g.batch.style), t, std::nullopt};
  const Tensor pred = ens.combined_score(tape, xs, zs, ctx).value();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<double> oracle =
        gen.oracle_total_score(s, xs[0].value().row_vec(i), g.mu.row_vec(i), g.batch.priors[0].row_vec(i), t[i]);
    for (std::size_t j = 0; j < d; ++j) acc += (pred(i, j) - oracle[j]) * (pred(i, j) - oracle[j]);
  }
  return std::sqrt(acc / static_cast<double>(n * d));
}

}  // namespace dddm::task
