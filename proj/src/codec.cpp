#include "dddm/codec.hpp"

#include <cmath>

#include "dddm/errors.hpp"

namespace dddm {

std::size_t quantize_pitch(double normalized, std::size_t units) {
  const double b = std::floor((normalized + 3.0) / 6.0 * static_cast<double>(units));
  if (b < 0.0) return 0;
  if (b > static_cast<double>(units - 1)) return units - 1;
  return static_cast<std::size_t>(b);
}

PitchRep normalize_pitch(double pitch, const StyleStats& stats, std::size_t units) {
  if (!(stats.std > 0.0)) throw DegenerateStatsError("pitch statistics have zero spread");
  PitchRep r;
  r.raw = pitch;
  r.normalized = (pitch - stats.mean) / stats.std;
  r.unit = quantize_pitch(r.normalized, units);
  return r;
}

Tensor perturb_content(const Tensor& content, Rng& rng, double noise, double drop) {
  Tensor out = content;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = out[i] + noise * rng.normal();
    out[i] = rng.uniform() < drop ? 0.0 : v;
  }
  return out;
}

MixupDraw prior_mixup(std::size_t batch, Rng& rng, double rate) {
  if (batch < 1) throw ContractError("prior_mixup: empty batch");
  MixupDraw d;
  const std::vector<std::size_t> perm = rng.permutation(batch);
  d.source.resize(batch);
  d.mask.resize(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    d.mask[i] = rng.uniform() < rate;
    d.source[i] = d.mask[i] ? perm[i] : i;
  }
  return d;
}

StyleEncoder::StyleEncoder(std::size_t style_dim, Rng& rng) : proj_("style.proj", style_dim, style_dim, rng) {}

Var StyleEncoder::forward(Tape& tape, const Tensor& frames, std::size_t n_frames) {
  if (n_frames == 0 || frames.rows() == 0) throw ContractError("encode_style: empty frame sequence");
  Var pooled = ad::mean_pool(tape.constant(frames), n_frames);
  return ad::tanh(proj_.forward(tape, pooled));
}

SourceFilterEncoder::SourceFilterEncoder(const CodecConfig& cfg, Rng& rng)
    : cfg_(cfg),
      units_("src.units", cfg.pitch_units, cfg.unit_embed_dim, rng),
      src_("src.net", cfg.unit_embed_dim + cfg.style_dim, cfg.hidden, cfg.data_dim, rng, cfg.activation),
      ftr_("ftr.net", cfg.content_dim + cfg.style_dim, cfg.hidden, cfg.data_dim, rng, cfg.activation) {}

Var SourceFilterEncoder::encode_source(Tape& tape, const std::vector<std::size_t>& units, Var style) {
  if (units.size() != style.rows()) throw ShapeError("encode_source: batch mismatch");
  for (std::size_t u : units)
    if (u >= cfg_.pitch_units) throw ShapeError("encode_source: pitch unit out of range");
  return src_.forward(tape, ad::concat_cols({units_.forward(tape, units), style}));
}

Var SourceFilterEncoder::encode_filter(Tape& tape, const Tensor& perturbed_content, Var style) {
  if (perturbed_content.rows() != style.rows() || perturbed_content.cols() != cfg_.content_dim)
    throw ShapeError("encode_filter: content " + perturbed_content.shape_str());
  return ftr_.forward(tape, ad::concat_cols({tape.constant(perturbed_content), style}));
}

Priors SourceFilterEncoder::encode(Tape& tape, const std::vector<std::size_t>& units, const Tensor& perturbed_content,
                                   Var style) {
  return {encode_source(tape, units, style), encode_filter(tape, perturbed_content, style)};
}

void SourceFilterEncoder::collect(std::vector<Parameter*>& out) {
  units_.collect(out);
  src_.collect(out);
  ftr_.collect(out);
}

Var recon_loss(Tape& tape, const Tensor& x_target, const Priors& p) {
  return ad::l1_loss(tape.constant(x_target), ad::add(p.z_src, p.z_ftr));
}

TotalLoss total_loss(Tape& tape, DenoiserEnsemble& ens, const Tensor& x0, const Priors& original,
                     const std::vector<Var>& diffusion_priors, const ScoreContext& ctx, const std::vector<Tensor>& eps,
                     double lambda_rec) {
  TotalLoss l;
  l.diff = ens.diffusion_loss(tape, x0, diffusion_priors, ctx, eps);
  l.rec = recon_loss(tape, x0, original);
  l.total = lambda_rec == 0.0 ? l.diff : ad::add(l.diff, ad::scale(l.rec, lambda_rec));
  return l;
}

}  // namespace dddm
