#include "dddm/toy.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <sstream>

#include "dddm/errors.hpp"

namespace dddm {

namespace {

Tensor gaussian(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
  Tensor t(r, c);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = scale * rng.normal();
  return t;
}

// Columns [first, first + k) of an orthonormal basis times a k x m mixing
// matrix, giving a D x m map whose range is that subspace.
Tensor subspace_map(const Eigen::MatrixXd& q, std::size_t first, std::size_t k, const Tensor& mix, double scale) {
  Tensor out(static_cast<std::size_t>(q.rows()), mix.cols());
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(first + p)) * mix(p, j);
      out(i, j) = scale * s;
    }
  return out;
}

void apply_add(const Tensor& a, const double* v, std::vector<double>& out) {
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * v[j];
    out[i] += s;
  }
}

double sq_dist(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

// Exact W1 between two sorted empirical distributions of possibly different sizes.
double wasserstein_1d(const std::vector<double>& a, const std::vector<double>& b) {
  const double wa = 1.0 / static_cast<double>(a.size()), wb = 1.0 / static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double ra = wa, rb = wb, acc = 0.0;
  while (i < a.size() && j < b.size()) {
    const double m = std::min(ra, rb);
    acc += m * std::fabs(a[i] - b[j]);
    ra -= m;
    rb -= m;
    if (ra <= 1e-15) ++i, ra = wa;
    if (rb <= 1e-15) ++j, rb = wb;
  }
  return acc;
}

}  // namespace

ToyGenerator::ToyGenerator(const ToyConfig& cfg) : cfg_(cfg) {
  if (cfg.n_styles < 2 || cfg.n_tokens < 2) throw UsageError("toy world needs at least two styles and tokens");
  if (cfg.data_dim < 16) throw UsageError("toy world data_dim must be at least 16");
  if (cfg.noise_std < 0.0) throw UsageError("noise_std must be non-negative");
  Rng rng(cfg.seed, 0);
  const std::size_t d = cfg.data_dim, total = total_styles();

  // Orthonormal basis split into style (6), token (6) and pitch (4) subspaces.
  Eigen::MatrixXd raw(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < raw.rows(); ++i)
    for (Eigen::Index j = 0; j < raw.cols(); ++j) raw(i, j) = rng.normal();
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(raw).householderQ();

  g_ = gaussian(total, cfg.style_dim, rng);
  e_ = gaussian(cfg.n_tokens, cfg.token_dim, rng);
  a_ftr_tok_ = subspace_map(q, 6, 6, gaussian(6, cfg.token_dim, rng), cfg.token_scale);
  a_ftr_sty_ = subspace_map(q, 0, 6, gaussian(6, cfg.style_dim, rng), 0.5);
  a_src_pitch_ = subspace_map(q, 12, 4, gaussian(4, 4, rng), cfg.pitch_scale);
  a_src_sty_ = subspace_map(q, 0, 6, gaussian(6, cfg.style_dim, rng), 0.5);
  const double cnorm = 1.0 / std::sqrt(static_cast<double>(cfg.token_dim));
  ec_ = gaussian(cfg.content_dim, cfg.token_dim, rng, cfg.content_scale * cnorm);
  lc_ = gaussian(cfg.content_dim, cfg.style_dim, rng, cfg.style_leak / std::sqrt(static_cast<double>(cfg.style_dim)));
  for (std::size_t k = 0; k < total; ++k) {
    pmean_.push_back(cfg.pitch_mean_lo + (cfg.pitch_mean_hi - cfg.pitch_mean_lo) * rng.uniform());
    pstd_.push_back(cfg.pitch_std_lo + (cfg.pitch_std_hi - cfg.pitch_std_lo) * rng.uniform());
  }

  // Rescale the style maps so the closest pair of style centroids sits at
  // exactly style_separation.
  style_centroids_ = style_centroids();
  double closest = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < total; ++a)
    for (std::size_t b = a + 1; b < total; ++b)
      closest = std::min(closest, std::sqrt(sq_dist(style_centroids_.row_ptr(a), style_centroids_.row_ptr(b), d)));
  const double k = cfg.style_separation / closest;
  for (std::size_t i = 0; i < a_ftr_sty_.size(); ++i) a_ftr_sty_[i] *= k;
  for (std::size_t i = 0; i < a_src_sty_.size(); ++i) a_src_sty_[i] *= k;
  style_centroids_ = style_centroids();
  token_centroids_ = token_centroids();
}

std::vector<double> ToyGenerator::pitch_features(double u) {
  // Orthonormal probabilists' Hermite polynomials He_1..He_4.
  const double u2 = u * u;
  return {u, (u2 - 1.0) / std::sqrt(2.0), (u2 * u - 3.0 * u) / std::sqrt(6.0),
          (u2 * u2 - 6.0 * u2 + 3.0) / std::sqrt(24.0)};
}

std::vector<double> ToyGenerator::filter_part(std::size_t token, std::size_t style) const {
  std::vector<double> out(cfg_.data_dim, 0.0);
  apply_add(a_ftr_tok_, e_.row_ptr(token), out);
  apply_add(a_ftr_sty_, g_.row_ptr(style), out);
  return out;
}

std::vector<double> ToyGenerator::source_part(double u, std::size_t style) const {
  std::vector<double> out(cfg_.data_dim, 0.0);
  const std::vector<double> pf = pitch_features(u);
  apply_add(a_src_pitch_, pf.data(), out);
  apply_add(a_src_sty_, g_.row_ptr(style), out);
  return out;
}

std::vector<double> ToyGenerator::mean(std::size_t token, double u, std::size_t style) const {
  std::vector<double> f = filter_part(token, style);
  const std::vector<double> s = source_part(u, style);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] += s[i];
  return f;
}

std::vector<double> ToyGenerator::content_features(std::size_t token, std::size_t style) const {
  std::vector<double> out(cfg_.content_dim, 0.0);
  apply_add(ec_, e_.row_ptr(token), out);
  apply_add(lc_, g_.row_ptr(style), out);
  return out;
}

Tensor ToyGenerator::draw_frames(std::size_t style, Rng& rng) const {
  Tensor f(cfg_.n_frames, cfg_.style_dim);
  for (std::size_t r = 0; r < f.rows(); ++r)
    for (std::size_t c = 0; c < f.cols(); ++c) f(r, c) = g_(style, c) + cfg_.frame_noise * rng.normal();
  return f;
}

ToyDataset ToyGenerator::generate(std::size_t n_per_style, const std::vector<std::size_t>& styles, Rng& rng) const {
  if (n_per_style < 1) throw ContractError("generate: n_per_style must be at least 1");
  const std::size_t n = n_per_style * styles.size(), d = cfg_.data_dim;
  ToyDataset ds;
  ds.x = Tensor(n, d);
  ds.content = Tensor(n, cfg_.content_dim);
  ds.frames = Tensor(n * cfg_.n_frames, cfg_.style_dim);
  ds.n_frames = cfg_.n_frames;
  std::size_t row = 0;
  for (std::size_t sty : styles) {
    if (sty >= total_styles()) throw ContractError("generate: unknown style id");
    for (std::size_t k = 0; k < n_per_style; ++k, ++row) {
      const std::size_t tok = rng.below(cfg_.n_tokens);
      const double u = std::clamp(rng.normal(), -3.0, 3.0);
      std::vector<double> x = mean(tok, u, sty);
      for (double& v : x) v += cfg_.noise_std * rng.normal();
      ds.x.set_row(row, x);
      ds.content.set_row(row, content_features(tok, sty));
      const Tensor f = draw_frames(sty, rng);
      for (std::size_t r = 0; r < f.rows(); ++r)
        for (std::size_t c = 0; c < f.cols(); ++c) ds.frames(row * cfg_.n_frames + r, c) = f(r, c);
      ds.token.push_back(tok);
      ds.style.push_back(sty);
      ds.pitch_z.push_back(u);
      ds.pitch.push_back(pmean_[sty] + pstd_[sty] * u);
    }
  }
  ds.pitch_stats = pitch_stats_by_style(ds, total_styles());
  return ds;
}

ToyDataset ToyGenerator::generate_dataset(std::size_t n_per_style) const {
  std::vector<std::size_t> styles(cfg_.n_styles);
  for (std::size_t k = 0; k < styles.size(); ++k) styles[k] = k;
  Rng rng(cfg_.seed, 1);
  return generate(n_per_style, styles, rng);
}

Tensor ToyGenerator::style_centroids() const {
  const std::size_t d = cfg_.data_dim;
  std::vector<double> ebar(cfg_.token_dim, 0.0);
  for (std::size_t t = 0; t < cfg_.n_tokens; ++t)
    for (std::size_t j = 0; j < cfg_.token_dim; ++j) ebar[j] += e_(t, j) / static_cast<double>(cfg_.n_tokens);
  Tensor c(total_styles(), d);
  for (std::size_t s = 0; s < total_styles(); ++s) {
    std::vector<double> v(d, 0.0);
    apply_add(a_ftr_tok_, ebar.data(), v);
    apply_add(a_ftr_sty_, g_.row_ptr(s), v);
    apply_add(a_src_sty_, g_.row_ptr(s), v);
    c.set_row(s, v);
  }
  return c;
}

Tensor ToyGenerator::token_centroids() const {
  const std::size_t d = cfg_.data_dim;
  std::vector<double> gbar(cfg_.style_dim, 0.0);
  for (std::size_t s = 0; s < cfg_.n_styles; ++s)
    for (std::size_t j = 0; j < cfg_.style_dim; ++j) gbar[j] += g_(s, j) / static_cast<double>(cfg_.n_styles);
  Tensor c(cfg_.n_tokens, d);
  for (std::size_t t = 0; t < cfg_.n_tokens; ++t) {
    std::vector<double> v(d, 0.0);
    apply_add(a_ftr_tok_, e_.row_ptr(t), v);
    apply_add(a_ftr_sty_, gbar.data(), v);
    apply_add(a_src_sty_, gbar.data(), v);
    c.set_row(t, v);
  }
  return c;
}

std::size_t nearest_centroid(const Tensor& centroids, const double* x) {
  std::size_t best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < centroids.rows(); ++k) {
    const double d = sq_dist(centroids.row_ptr(k), x, centroids.cols());
    if (d < bd) bd = d, best = k;
  }
  return best;
}

std::size_t ToyGenerator::classify_style(const double* x) const { return nearest_centroid(style_centroids_, x); }
std::size_t ToyGenerator::classify_token(const double* x) const { return nearest_centroid(token_centroids_, x); }

std::vector<double> ToyGenerator::oracle_total_score(const NoiseSchedule& sched, const std::vector<double>& x_t,
                                                     const std::vector<double>& mu_c,
                                                     const std::vector<double>& z_total, double t) const {
  if (x_t.size() != mu_c.size() || x_t.size() != z_total.size()) throw ShapeError("oracle_total_score: length mismatch");
  const TransitionParams p = sched.transition(t);
  const double var = p.alpha * p.alpha * cfg_.noise_std * cfg_.noise_std + p.variance;
  if (!(var > 0.0)) throw DomainError("oracle_total_score: zero variance (t = 0 with noise_std = 0)");
  std::vector<double> out(x_t.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = -(x_t[i] - p.alpha * mu_c[i] - p.prior_coef * z_total[i]) / var;
  return out;
}

std::vector<StyleStats> pitch_stats_by_style(const ToyDataset& d, std::size_t n_styles) {
  std::vector<StyleStats> st(n_styles);
  std::vector<std::size_t> count(n_styles, 0);
  for (std::size_t i = 0; i < d.size(); ++i) {
    st[d.style[i]].mean += d.pitch[i];
    ++count[d.style[i]];
  }
  for (std::size_t k = 0; k < n_styles; ++k)
    if (count[k]) st[k].mean /= static_cast<double>(count[k]);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double dv = d.pitch[i] - st[d.style[i]].mean;
    st[d.style[i]].std += dv * dv;
  }
  // Population std so normalized pitch has exactly unit variance on the set.
  for (std::size_t k = 0; k < n_styles; ++k)
    if (count[k]) st[k].std = std::sqrt(st[k].std / static_cast<double>(count[k]));
  return st;
}

double distribution_distance(const Tensor& a, const Tensor& b, std::size_t n_projections, std::uint64_t seed,
                             kernels::Exec exec) {
  if (a.rows() == 0 || b.rows() == 0) throw ContractError("distribution_distance: empty sample set");
  if (a.cols() != b.cols()) throw ShapeError("distribution_distance: dimension mismatch");
  if (n_projections == 0) throw ContractError("distribution_distance: need at least one projection");
  const std::size_t d = a.cols();
  Tensor dirs(n_projections, d);
  Rng rng(seed, 0);
  for (std::size_t p = 0; p < n_projections; ++p) {
    double nrm = 0.0;
    for (std::size_t j = 0; j < d; ++j) nrm += (dirs(p, j) = rng.normal()) * dirs(p, j);
    nrm = std::sqrt(nrm);
    for (std::size_t j = 0; j < d; ++j) dirs(p, j) /= nrm;
  }
  std::vector<double> per(n_projections);
  auto one = [&](std::size_t p) {
    auto project = [&](const Tensor& m) {
      std::vector<double> v(m.rows());
      for (std::size_t i = 0; i < m.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += m(i, j) * dirs(p, j);
        v[i] = s;
      }
      std::sort(v.begin(), v.end());
      return v;
    };
    per[p] = wasserstein_1d(project(a), project(b));
  };
  if (exec == kernels::Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (std::size_t p = 0; p < n_projections; ++p) one(p);
  } else {
    for (std::size_t p = 0; p < n_projections; ++p) one(p);
  }
  double acc = 0.0;
  for (double v : per) acc += v;
  return acc / static_cast<double>(n_projections);
}

}  // namespace dddm
