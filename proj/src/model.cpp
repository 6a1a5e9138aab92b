#include "dddm/model.hpp"

#include <cmath>
#include <map>

#include "dddm/errors.hpp"

namespace dddm {

namespace {

constexpr std::uint64_t kPerturbStream = 1ull << 40;

EnsembleConfig ensemble_for(const ModelConfig& cfg) {
  EnsembleConfig e = cfg.ensemble;
  e.n_attributes = cfg.single_denoiser ? 1 : 2;
  e.zero_prior_mean = cfg.zero_prior;
  return e;
}

StyleStats stats_of(const std::vector<double>& v) {
  StyleStats s;
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(v.size()));
  return s;
}

}  // namespace

VcModel::VcModel(const ModelConfig& cfg, const NoiseSchedule& sched, std::uint64_t seed) : cfg_(cfg), sched_(sched) {
  if (cfg.codec.data_dim != cfg.ensemble.data_dim || cfg.codec.style_dim != cfg.ensemble.style_dim)
    throw ContractError("codec and ensemble dimensions disagree");
  Rng rng(seed, 0);
  style_ = StyleEncoder(cfg.codec.style_dim, rng);
  codec_ = SourceFilterEncoder(cfg.codec, rng);
  ens_ = DenoiserEnsemble(ensemble_for(cfg), sched, rng);
  stats_ = Parameter("pitch.stats", Tensor(0, 2));
  trained_ = Parameter("model.trained", Tensor(1, 1));
}

std::unique_ptr<VcModel> make_model(const ModelConfig& cfg, const NoiseSchedule& sched, std::uint64_t seed) {
  return std::make_unique<VcModel>(cfg, sched, seed);
}

std::vector<Parameter*> VcModel::trainable() {
  std::vector<Parameter*> out;
  style_.collect(out);
  codec_.collect(out);
  ens_.collect(out);
  return out;
}

std::vector<Parameter*> VcModel::encoder_parameters() {
  std::vector<Parameter*> out;
  style_.collect(out);
  codec_.collect(out);
  return out;
}

std::vector<Parameter*> VcModel::parameters() {
  std::vector<Parameter*> out = trainable();
  out.push_back(&stats_);
  out.push_back(&trained_);
  return out;
}

void VcModel::set_pitch_stats(const ToyDataset& train) {
  std::size_t n_styles = 0;
  for (std::size_t s : train.style) n_styles = std::max(n_styles, s + 1);
  const std::vector<StyleStats> per = pitch_stats_by_style(train, n_styles);
  Tensor t(n_styles + 1, 2);
  for (std::size_t s = 0; s < n_styles; ++s) {
    t(s, 0) = per[s].mean;
    t(s, 1) = per[s].std;
  }
  const StyleStats g = stats_of(train.pitch);
  t(n_styles, 0) = g.mean;
  t(n_styles, 1) = g.std;
  stats_ = Parameter("pitch.stats", std::move(t));
}

void VcModel::set_style_stats(std::size_t style, const StyleStats& st) {
  if (!(st.std > 0.0)) throw DegenerateStatsError("style pitch statistics have zero spread");
  const Tensor& old = stats_.value;
  if (old.rows() == 0) throw ContractError("pitch statistics not set");
  const std::size_t known = old.rows() - 1;
  Tensor t(std::max(known, style + 1) + 1, 2);
  for (std::size_t r = 0; r < known; ++r) t(r, 0) = old(r, 0), t(r, 1) = old(r, 1);
  t(t.rows() - 1, 0) = old(known, 0);
  t(t.rows() - 1, 1) = old(known, 1);
  t(style, 0) = st.mean;
  t(style, 1) = st.std;
  stats_.value = std::move(t);
  stats_.zero_grad();
}

StyleStats VcModel::stats_for(std::size_t style) const {
  const Tensor& t = stats_.value;
  if (t.rows() == 0) throw ContractError("pitch statistics not set");
  const std::size_t row = cfg_.no_pitch_norm ? t.rows() - 1 : style;
  if ((row >= t.rows() - 1 || !(t(row, 1) > 0.0)) && !cfg_.no_pitch_norm) throw ContractError("no pitch statistics for style " + std::to_string(style));
  return {t(row, 0), t(row, 1)};
}

std::vector<std::size_t> VcModel::pitch_units(const std::vector<double>& pitch,
                                              const std::vector<std::size_t>& style) const {
  if (pitch.size() != style.size()) throw ShapeError("pitch_units: pitch and style lengths differ");
  std::vector<std::size_t> u(pitch.size());
  for (std::size_t i = 0; i < pitch.size(); ++i)
    u[i] = normalize_pitch(pitch[i], stats_for(style[i]), cfg_.codec.pitch_units).unit;
  return u;
}

std::vector<Var> VcModel::diffusion_priors(const Priors& p) const {
  if (cfg_.single_denoiser) return {ad::add(p.z_src, p.z_ftr)};
  return {p.z_src, p.z_ftr};
}

Tensor gather_rows(const Tensor& t, const std::vector<std::size_t>& idx) {
  Tensor out(idx.size(), t.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= t.rows()) throw ShapeError("gather_rows: index out of range");
    std::copy(t.row_ptr(idx[i]), t.row_ptr(idx[i]) + t.cols(), out.row_ptr(i));
  }
  return out;
}

Tensor gather_frames(const ToyDataset& d, const std::vector<std::size_t>& idx) {
  const std::size_t f = d.n_frames;
  Tensor out(idx.size() * f, d.frames.cols());
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t k = 0; k < f; ++k)
      std::copy(d.frames.row_ptr(idx[i] * f + k), d.frames.row_ptr(idx[i] * f + k) + d.frames.cols(),
                out.row_ptr(i * f + k));
  return out;
}

StepLosses train_batch(VcModel& m, const ToyDataset& d, const std::vector<std::size_t>& idx, AdamW& opt, Rng& rng) {
  const ModelConfig& cfg = m.config();
  const std::size_t b = idx.size();
  if (b == 0) throw ContractError("train_batch: empty batch");
  const Tensor x0 = gather_rows(d.x, idx);
  const Tensor frames = gather_frames(d, idx);
  std::vector<double> pitch(b);
  std::vector<std::size_t> style(b);
  for (std::size_t i = 0; i < b; ++i) {
    pitch[i] = d.pitch[idx[i]];
    style[i] = d.style[idx[i]];
  }
  const std::vector<std::size_t> units = m.pitch_units(pitch, style);
  const Tensor content = perturb_content(gather_rows(d.content, idx), rng, cfg.codec.perturb_noise, cfg.codec.perturb_drop);

  opt.zero_grad();
  Tape tape;
  Var s = m.style_encoder().forward(tape, frames, d.n_frames);
  const Priors original = m.codec().encode(tape, units, content, s);
  Priors mixed = original;
  if (!cfg.no_mixup) {
    const MixupDraw draw = prior_mixup(b, rng, cfg.mixup_rate);
    mixed = m.codec().encode(tape, units, content, ad::gather_rows(s, draw.source));
    if (cfg.detach_mixed_priors) mixed = {tape.constant(mixed.z_src.value()), tape.constant(mixed.z_ftr.value())};
  }
  const std::vector<Var> diff_priors = m.diffusion_priors(mixed);

  const NoiseSchedule& sched = m.schedule();
  std::vector<double> t(b);
  for (double& v : t) v = sched.t_min() + (1.0 - sched.t_min()) * rng.uniform();
  std::vector<Tensor> eps;
  for (std::size_t n = 0; n < diff_priors.size(); ++n) {
    if (n > 0 && cfg.ensemble.share_noise) {
      eps.push_back(eps.front());
      continue;
    }
    Tensor e(b, x0.cols());
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = rng.normal();
    eps.push_back(std::move(e));
  }
  ScoreContext ctx{s, t, std::nullopt};
  const TotalLoss loss = total_loss(tape, m.ensemble(), x0, original, diff_priors, ctx, eps, cfg.lambda_rec);
  StepLosses out{loss.diff.value()[0], loss.rec.value()[0], loss.total.value()[0]};
  if (!std::isfinite(out.total)) throw NumericError("non-finite training loss");
  tape.backward(loss.total);
  opt.step();
  return out;
}

SampleResult convert(VcModel& m, const ConvertRequest& req, const ConvertOptions& opt, Tensor* prior_sum) {
  if (!m.trained()) throw ContractError("convert: model has not been trained");
  const std::size_t b = req.pitch.size();
  if (b == 0) throw ContractError("convert: empty request");
  if (req.content.rows() != b || req.source_style.size() != b || req.target_frames.rows() != b * req.n_frames)
    throw ShapeError("convert: request fields disagree on batch size");

  std::vector<std::size_t> units;
  if (opt.per_sentence_pitch) {
    // Stats of the request's own pitch values, grouped by source style.
    std::map<std::size_t, std::vector<double>> groups;
    for (std::size_t i = 0; i < b; ++i) groups[req.source_style[i]].push_back(req.pitch[i]);
    units.resize(b);
    for (std::size_t i = 0; i < b; ++i)
      units[i] = normalize_pitch(req.pitch[i], stats_of(groups[req.source_style[i]]), m.config().codec.pitch_units).unit;
  } else {
    units = m.pitch_units(req.pitch, req.source_style);
  }

  Rng prng(opt.sampler.seed, kPerturbStream);
  const CodecConfig& cc = m.config().codec;
  const Tensor content = perturb_content(req.content, prng, cc.perturb_noise, cc.perturb_drop);

  Tape tape(false);
  Var s = m.style_encoder().forward(tape, req.target_frames, req.n_frames);
  const Priors p = m.codec().encode(tape, units, content, s);
  std::vector<Tensor> cond;
  for (const Var& v : m.diffusion_priors(p)) cond.push_back(v.value());
  if (prior_sum) *prior_sum = ad::add(p.z_src, p.z_ftr).value();

  const Tensor style = s.value();
  ScoreFn base = ensemble_score(m.ensemble(), style);
  if (!m.config().zero_prior) return sample(m.schedule(), base, cond, opt.sampler);
  // Drift toward zero; the encoder outputs still reach the networks.
  std::vector<Tensor> zeros(cond.size(), Tensor(b, cond[0].cols()));
  ScoreFn conditioned = [&base, &cond](const std::vector<Tensor>& x, const std::vector<Tensor>&, double t) {
    return base(x, cond, t);
  };
  return sample(m.schedule(), conditioned, zeros, opt.sampler);
}

ConvertRequest make_request(const ToyDataset& src, const std::vector<std::size_t>& idx, const ToyGenerator& gen,
                            const std::vector<std::size_t>& target_style, std::uint64_t seed) {
  if (idx.size() != target_style.size()) throw ShapeError("make_request: one target style per source row");
  ConvertRequest r;
  r.content = gather_rows(src.content, idx);
  r.n_frames = gen.config().n_frames;
  r.target_frames = Tensor(idx.size() * r.n_frames, gen.config().style_dim);
  Rng rng(seed, 0);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    r.pitch.push_back(src.pitch[idx[i]]);
    r.source_style.push_back(src.style[idx[i]]);
    const Tensor f = gen.draw_frames(target_style[i], rng);
    for (std::size_t k = 0; k < r.n_frames; ++k) r.target_frames.set_row(i * r.n_frames + k, f.row_vec(k));
  }
  return r;
}

}  // namespace dddm
