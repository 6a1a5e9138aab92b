#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dddm/kernels.hpp"
#include "dddm/rng.hpp"
#include "dddm/schedule.hpp"
#include "dddm/tensor.hpp"

namespace dddm {

struct ToyConfig {
  std::uint64_t seed = 7;
  std::size_t n_styles = 8;       // training styles
  std::size_t n_heldout = 1;      // extra styles never seen in training
  std::size_t n_tokens = 12;
  std::size_t data_dim = 16;
  std::size_t style_dim = 8;
  std::size_t token_dim = 8;
  std::size_t content_dim = 16;
  std::size_t n_frames = 4;
  double noise_std = 0.05;
  double token_scale = 0.45;
  double pitch_scale = 0.3;
  double style_separation = 1.2;  // minimum pairwise style-centroid distance
  double content_scale = 1.0;     // token signal in content features
  double style_leak = 0.6;        // style signal leaking into content features
  double frame_noise = 0.3;
  double pitch_mean_lo = 100.0, pitch_mean_hi = 250.0;
  double pitch_std_lo = 8.0, pitch_std_hi = 28.0;
};

struct StyleStats {
  double mean = 0.0;
  double std = 0.0;
};

struct ToyDataset {
  Tensor x;                           // n x D
  std::vector<std::size_t> token;
  std::vector<double> pitch;          // raw toy "Hz"
  std::vector<double> pitch_z;        // latent standard-normal pitch draw
  std::vector<std::size_t> style;
  Tensor content;                     // n x content_dim, clean features
  Tensor frames;                      // (n * n_frames) x style_dim
  std::size_t n_frames = 0;
  std::vector<StyleStats> pitch_stats;  // per style id, from this set
  std::size_t size() const { return token.size(); }
};

// Known linear source/filter factorization of x:
//   x = A_ftr (e_token ++ g_style) + A_src (pitch_features ++ g_style) + noise.
class ToyGenerator {
 public:
  explicit ToyGenerator(const ToyConfig& cfg);

  const ToyConfig& config() const { return cfg_; }
  std::size_t total_styles() const { return cfg_.n_styles + cfg_.n_heldout; }

  static std::vector<double> pitch_features(double u);

  std::vector<double> filter_part(std::size_t token, std::size_t style) const;
  std::vector<double> source_part(double u, std::size_t style) const;
  std::vector<double> mean(std::size_t token, double u, std::size_t style) const;
  std::vector<double> content_features(std::size_t token, std::size_t style) const;
  const Tensor& style_embeddings() const { return g_; }
  double pitch_mean(std::size_t style) const { return pmean_[style]; }
  double pitch_std(std::size_t style) const { return pstd_[style]; }

  // n_per_style samples of every listed style, deterministic in (config, rng).
  ToyDataset generate(std::size_t n_per_style, const std::vector<std::size_t>& styles, Rng& rng) const;
  // Training split: all training styles drawn from the generator seed.
  ToyDataset generate_dataset(std::size_t n_per_style) const;
  // Fresh noisy style frames of one style (n_frames x style_dim).
  Tensor draw_frames(std::size_t style, Rng& rng) const;

  // Nearest-centroid oracles. Style centroids average over tokens and the
  // zero-mean pitch features; token centroids average over training styles.
  Tensor style_centroids() const;  // total_styles x D
  Tensor token_centroids() const;  // n_tokens x D
  std::size_t classify_style(const double* x) const;
  std::size_t classify_token(const double* x) const;

  // Exact marginal score of X_t when x0 ~ N(mu_c, noise^2 I).
  std::vector<double> oracle_total_score(const NoiseSchedule& sched, const std::vector<double>& x_t,
                                         const std::vector<double>& mu_c, const std::vector<double>& z_total,
                                         double t) const;

 private:
  ToyConfig cfg_;
  Tensor a_ftr_tok_, a_ftr_sty_, a_src_pitch_, a_src_sty_;  // D x k maps
  Tensor e_, g_;                                            // token and style embeddings
  Tensor ec_, lc_;                                          // content feature maps
  std::vector<double> pmean_, pstd_;
  Tensor style_centroids_, token_centroids_;
};

// Index of the closest row of centroids in L2; ties go to the lower index.
std::size_t nearest_centroid(const Tensor& centroids, const double* x);

std::vector<StyleStats> pitch_stats_by_style(const ToyDataset& d, std::size_t n_styles);

// Sliced 1-Wasserstein distance with n_projections seeded random directions.
double distribution_distance(const Tensor& a, const Tensor& b, std::size_t n_projections, std::uint64_t seed,
                             kernels::Exec exec = kernels::default_exec());

// Dataset CSV + JSON sidecar (generator parameters, per-style pitch stats).
void save_dataset(const ToyDataset& d, const ToyGenerator& gen, const std::string& csv_path);
ToyDataset load_dataset(const std::string& csv_path, ToyConfig* cfg_out = nullptr);
std::string sidecar_path(const std::string& csv_path);

}  // namespace dddm
