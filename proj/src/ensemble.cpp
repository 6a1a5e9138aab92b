#include "dddm/ensemble.hpp"

#include <cmath>
#include <numbers>

#include "dddm/errors.hpp"

namespace dddm {

Tensor time_embedding(const std::vector<double>& t, std::size_t dim) {
  if (dim % 2 != 0 || dim == 0) throw ContractError("time embedding width must be even and positive");
  const std::size_t half = dim / 2;
  std::vector<double> freq(half);
  const double top = std::log(200.0);
  for (std::size_t k = 0; k < half; ++k)
    freq[k] = std::exp(half == 1 ? 0.0 : top * static_cast<double>(k) / static_cast<double>(half - 1));
  Tensor out(t.size(), dim);
  for (std::size_t i = 0; i < t.size(); ++i)
    for (std::size_t k = 0; k < half; ++k) {
      out(i, k) = std::sin(t[i] * freq[k]);
      out(i, half + k) = std::cos(t[i] * freq[k]);
    }
  return out;
}

DenoiserEnsemble::DenoiserEnsemble(const EnsembleConfig& cfg, const NoiseSchedule& sched, Rng& rng)
    : cfg_(cfg), sched_(sched) {
  if (cfg.n_attributes < 1) throw ContractError("ensemble needs at least one attribute");
  for (std::size_t n = 0; n < cfg.n_attributes; ++n)
    nets_.emplace_back("denoiser" + std::to_string(n), input_dim(), cfg.hidden, cfg.data_dim, rng, cfg.activation);
}

std::size_t DenoiserEnsemble::input_dim() const {
  return 2 * cfg_.data_dim + cfg_.style_dim + cfg_.time_dim + (cfg_.blend_condition ? 1 : 0);
}

Var DenoiserEnsemble::attribute_score(Tape& tape, std::size_t n, Var x, Var z, const ScoreContext& ctx) {
  if (n >= nets_.size()) throw ContractError("attribute index out of range");
  const std::size_t b = ctx.t.size();
  if (x.rows() != b || z.rows() != b || ctx.style.rows() != b)
    throw ShapeError("attribute_score: batch sizes disagree");
  if (x.cols() != cfg_.data_dim || z.cols() != cfg_.data_dim) throw ShapeError("attribute_score: data dim mismatch");
  if (ctx.style.cols() != cfg_.style_dim) throw ShapeError("attribute_score: style dim mismatch");
  if (style_probe_) style_probe_(ctx.style.value());

  std::vector<double> c(b), ca(b);
  for (std::size_t i = 0; i < b; ++i) {
    if (!(ctx.t[i] >= sched_.t_min() - 1e-12 && ctx.t[i] <= 1.0)) throw DomainError("attribute_score: t outside [t_min, 1]");
    const TransitionParams p = sched_.transition(ctx.t[i]);
    c[i] = 1.0 / std::sqrt(p.variance + p.alpha * p.alpha * cfg_.sigma_data * cfg_.sigma_data);
    ca[i] = c[i] * p.alpha;
  }
  Var cv = tape.constant(Tensor::col(c));
  std::vector<Var> parts{ad::mul(cfg_.zero_prior_mean ? x : ad::sub(x, z), cv), ad::mul(z, tape.constant(Tensor::col(ca))), ctx.style,
                         tape.constant(time_embedding(ctx.t, cfg_.time_dim))};
  if (cfg_.blend_condition) {
    std::vector<double> bl(b, 0.0);
    if (ctx.blend) {
      if (ctx.blend->size() != b) throw ShapeError("blend length mismatch");
      for (std::size_t i = 0; i < b; ++i) {
        const double v = (*ctx.blend)[i];
        if (!(v >= 0.0 && v <= 1.0)) throw DomainError("blend outside [0, 1]");
        bl[i] = 2.0 * v - 1.0;
      }
    }
    parts.push_back(tape.constant(Tensor::col(bl)));
  }
  return ad::mul(nets_[n].forward(tape, ad::concat_cols(parts)), cv);
}

Var DenoiserEnsemble::combined_score(Tape& tape, const std::vector<Var>& x, const std::vector<Var>& z,
                                     const ScoreContext& ctx) {
  if (x.size() != nets_.size() || z.size() != nets_.size())
    throw ContractError("combined_score: expected " + std::to_string(nets_.size()) + " attribute states");
  Var total = attribute_score(tape, 0, x[0], z[0], ctx);
  for (std::size_t n = 1; n < nets_.size(); ++n) total = ad::add(total, attribute_score(tape, n, x[n], z[n], ctx));
  return total;
}

Var DenoiserEnsemble::diffusion_loss(Tape& tape, const Tensor& x0, const std::vector<Var>& priors,
                                     const ScoreContext& ctx, const std::vector<Tensor>& eps) {
  const std::size_t b = x0.rows(), d = x0.cols();
  if (priors.size() != nets_.size() || eps.size() != nets_.size())
    throw ContractError("diffusion_loss: one prior and one noise draw per attribute required");
  if (ctx.t.size() != b) throw ShapeError("diffusion_loss: t length mismatch");
  for (double t : ctx.t)
    if (t < sched_.t_min() - 1e-12 || t > 1.0) throw DomainError("diffusion_loss: t below t_min or above 1");

  std::vector<double> alpha(b), one_minus(b), sd(b), lam(b);
  for (std::size_t i = 0; i < b; ++i) {
    const TransitionParams p = sched_.transition(ctx.t[i]);
    alpha[i] = p.alpha;
    one_minus[i] = p.prior_coef;
    sd[i] = std::sqrt(p.variance);
    lam[i] = sched_.lambda_weight(ctx.t[i]);
  }
  std::vector<Var> xs;
  for (std::size_t n = 0; n < nets_.size(); ++n) {
    if (!eps[n].same_shape(x0) || !priors[n].value().same_shape(x0)) throw ShapeError("diffusion_loss: shape mismatch");
    Tensor fixed(b, d);
    for (std::size_t i = 0; i < b; ++i)
      for (std::size_t j = 0; j < d; ++j) fixed(i, j) = alpha[i] * x0(i, j) + sd[i] * eps[n](i, j);
    if (cfg_.zero_prior_mean)
      xs.push_back(tape.constant(std::move(fixed)));
    else
      xs.push_back(ad::add(ad::mul(priors[n], tape.constant(Tensor::col(one_minus))), tape.constant(std::move(fixed))));
  }
  // Regression target -eps/sigma. Under shared noise it is the same for
  // every attribute; otherwise the sum of the attribute targets is used.
  Tensor offset(b, d);
  for (std::size_t n = 0; n < nets_.size(); ++n)
    for (std::size_t i = 0; i < b; ++i)
      for (std::size_t j = 0; j < d; ++j) offset(i, j) += eps[n](i, j) / sd[i] / (cfg_.share_noise ? nets_.size() : 1);
  Var resid = ad::add(combined_score(tape, xs, priors, ctx), tape.constant(std::move(offset)));
  Var per = ad::mul(ad::mul(resid, resid), tape.constant(Tensor::col(lam)));
  return ad::scale(ad::sum(per), 1.0 / static_cast<double>(b));
}

void DenoiserEnsemble::collect(std::vector<Parameter*>& out) {
  for (SkipMlp& n : nets_) n.collect(out);
}

double train_step(DenoiserEnsemble& ens, const EnsembleBatch& batch, AdamW& opt, Rng& rng) {
  const std::size_t b = batch.x0.rows(), d = batch.x0.cols();
  if (b == 0) throw ContractError("train_step: empty batch");
  const NoiseSchedule& s = ens.schedule();
  std::vector<double> t(b);
  for (double& v : t) v = s.t_min() + (1.0 - s.t_min()) * rng.uniform();
  std::vector<Tensor> eps;
  for (std::size_t n = 0; n < ens.size(); ++n) {
    if (n > 0 && ens.config().share_noise) {
      eps.push_back(eps.front());
      continue;
    }
    Tensor e(b, d);
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = rng.normal();
    eps.push_back(std::move(e));
  }
  opt.zero_grad();
  Tape tape;
  std::vector<Var> priors;
  for (const Tensor& z : batch.priors) priors.push_back(tape.constant(z));
  ScoreContext ctx{tape.constant(batch.style), t, batch.blend};
  Var loss = ens.diffusion_loss(tape, batch.x0, priors, ctx, eps);
  const double value = loss.value()[0];
  if (!std::isfinite(value)) throw NumericError("non-finite diffusion loss");
  tape.backward(loss);
  opt.step();
  return value;
}

}  // namespace dddm
