#include "dddm/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dddm/errors.hpp"

namespace dddm {

namespace {

template <class F>
void visit(RunConfig& c, F&& f) {
  f("seed", c.seed);
  f("toy.seed", c.toy.seed);
  f("toy.n_styles", c.toy.n_styles);
  f("toy.n_heldout", c.toy.n_heldout);
  f("toy.n_tokens", c.toy.n_tokens);
  f("toy.data_dim", c.toy.data_dim);
  f("toy.style_dim", c.toy.style_dim);
  f("toy.token_dim", c.toy.token_dim);
  f("toy.content_dim", c.toy.content_dim);
  f("toy.n_frames", c.toy.n_frames);
  f("toy.noise_std", c.toy.noise_std);
  f("toy.token_scale", c.toy.token_scale);
  f("toy.pitch_scale", c.toy.pitch_scale);
  f("toy.style_separation", c.toy.style_separation);
  f("toy.content_scale", c.toy.content_scale);
  f("toy.style_leak", c.toy.style_leak);
  f("toy.frame_noise", c.toy.frame_noise);
  f("n_per_style", c.n_per_style);
  f("n_eval", c.n_eval);
  f("beta_min", c.beta_min);
  f("beta_max", c.beta_max);
  f("t_min", c.t_min);
  f("hidden", c.hidden);
  f("time_dim", c.time_dim);
  f("unit_embed_dim", c.unit_embed_dim);
  f("pitch_units", c.pitch_units);
  f("sigma_data", c.sigma_data);
  f("share_noise", c.share_noise);
  f("perturb_noise", c.perturb_noise);
  f("perturb_drop", c.perturb_drop);
  f("lr", c.lr);
  f("beta1", c.beta1);
  f("beta2", c.beta2);
  f("weight_decay", c.weight_decay);
  f("adam_eps", c.adam_eps);
  f("lr_decay", c.lr_decay);
  f("lr_schedule", c.lr_schedule);
  f("batch_size", c.batch_size);
  f("epochs", c.epochs);
  f("checkpoint_every", c.checkpoint_every);
  f("mixup_rate", c.mixup_rate);
  f("lambda_rec", c.lambda_rec);
  f("detach_mixed_priors", c.detach_mixed_priors);
  f("no_mixup", c.no_mixup);
  f("single_denoiser", c.single_denoiser);
  f("no_pitch_norm", c.no_pitch_norm);
  f("zero_prior", c.zero_prior);
  f("steps", c.steps);
  f("mode", c.mode);
  f("stochastic", c.stochastic);
  f("share_noise_inference", c.share_noise_inference);
  f("per_sentence_pitch", c.per_sentence_pitch);
  f("n_projections", c.n_projections);
  f("adapt_steps", c.adapt_steps);
  f("adapt_lr", c.adapt_lr);
  f("adapt_samples", c.adapt_samples);
  f("adapt_batch", c.adapt_batch);
  f("freeze_encoders", c.freeze_encoders);
  f("threads", c.threads);
  f("record_wall_time", c.record_wall_time);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

void parse_into(const std::string& key, const std::string& v, double& out) {
  std::size_t used = 0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size() || !std::isfinite(out)) throw UsageError("config: " + key + " expects a number, got '" + v + "'");
}

void parse_into(const std::string& key, const std::string& v, std::uint64_t& out) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
    throw UsageError("config: " + key + " expects a non-negative integer, got '" + v + "'");
  try {
    out = std::stoull(v);
  } catch (const std::exception&) {
    throw UsageError("config: " + key + " out of range");
  }
}

void parse_into(const std::string& key, const std::string& v, int& out) {
  std::size_t used = 0;
  try {
    out = std::stoi(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw UsageError("config: " + key + " expects an integer, got '" + v + "'");
}

void parse_into(const std::string& key, const std::string& v, bool& out) {
  if (v == "true" || v == "1") out = true;
  else if (v == "false" || v == "0") out = false;
  else throw UsageError("config: " + key + " expects true or false, got '" + v + "'");
}

void parse_into(const std::string&, const std::string& v, std::string& out) { out = v; }

std::string show(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
std::string show(std::uint64_t v) { return std::to_string(v); }
std::string show(int v) { return std::to_string(v); }
std::string show(bool v) { return v ? "true" : "false"; }
std::string show(const std::string& v) { return v; }

void validate(const RunConfig& c) {
  auto need = [](bool ok, const std::string& msg) {
    if (!ok) throw UsageError("config: " + msg);
  };
  need(c.lr_schedule == "exponential" || c.lr_schedule == "cosine", "lr_schedule must be exponential or cosine");
  need(c.mode == "ml" || c.mode == "em", "mode must be ml or em");
  need(c.batch_size >= 1, "batch_size must be at least 1");
  need(c.steps >= 1, "steps must be at least 1");
  need(c.beta_min > 0.0 && c.beta_max >= c.beta_min, "need 0 < beta_min <= beta_max");
  need(c.t_min > 0.0 && c.t_min < 1.0, "t_min must lie in (0, 1)");
  need(c.mixup_rate >= 0.0 && c.mixup_rate <= 1.0, "mixup_rate must lie in [0, 1]");
  need(c.perturb_drop >= 0.0 && c.perturb_drop <= 1.0, "perturb_drop must lie in [0, 1]");
  need(c.lr >= 0.0 && c.adapt_lr >= 0.0, "learning rates must be non-negative");
  need(c.time_dim >= 2 && c.time_dim % 2 == 0, "time_dim must be even");
  need(c.pitch_units >= 2, "pitch_units must be at least 2");
  need(c.toy.n_styles >= 2 && c.toy.n_tokens >= 1 && c.toy.n_frames >= 1, "toy world needs styles, tokens and frames");
  need(c.toy.data_dim == 16, "toy.data_dim is fixed at 16 (three orthogonal blocks of 6, 6 and 4)");
  need(c.n_per_style >= 2, "n_per_style must be at least 2");
  need(c.threads >= 0, "threads must be non-negative");
}

}  // namespace

void set_config_value(RunConfig& c, const std::string& key, const std::string& value) {
  bool found = false;
  visit(c, [&](const char* k, auto& field) {
    if (key == k) {
      parse_into(key, value, field);
      found = true;
    }
  });
  if (!found) throw UsageError("config: unknown key '" + key + "'");
}

RunConfig parse_config(const std::string& text) {
  RunConfig c;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError("config line " + std::to_string(lineno) + ": expected key=value");
    try {
      set_config_value(c, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const UsageError& e) {
      throw UsageError("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  validate(c);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw UsageError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& c) {
  std::string out;
  visit(const_cast<RunConfig&>(c), [&](const char* k, auto& field) { out += std::string(k) + "=" + show(field) + "\n"; });
  return out;
}

std::string config_hash(const RunConfig& c) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : serialize_config(c)) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ModelConfig RunConfig::model_config() const {
  ModelConfig m;
  m.ensemble.data_dim = toy.data_dim;
  m.ensemble.style_dim = toy.style_dim;
  m.ensemble.hidden = hidden;
  m.ensemble.time_dim = time_dim;
  m.ensemble.share_noise = share_noise;
  m.ensemble.sigma_data = sigma_data;
  m.codec.data_dim = toy.data_dim;
  m.codec.style_dim = toy.style_dim;
  m.codec.content_dim = toy.content_dim;
  m.codec.pitch_units = pitch_units;
  m.codec.unit_embed_dim = unit_embed_dim;
  m.codec.hidden = hidden;
  m.codec.perturb_noise = perturb_noise;
  m.codec.perturb_drop = perturb_drop;
  m.mixup_rate = mixup_rate;
  m.lambda_rec = lambda_rec;
  m.detach_mixed_priors = detach_mixed_priors;
  m.no_mixup = no_mixup;
  m.single_denoiser = single_denoiser;
  m.no_pitch_norm = no_pitch_norm;
  m.zero_prior = zero_prior;
  return m;
}

NoiseSchedule RunConfig::schedule() const { return NoiseSchedule(beta_min, beta_max, t_min); }

AdamWConfig RunConfig::optimizer() const { return {lr, beta1, beta2, weight_decay, adam_eps}; }

LrSchedule RunConfig::lr_kind() const { return lr_schedule == "cosine" ? LrSchedule::cosine : LrSchedule::exponential; }

SamplerConfig RunConfig::sampler(std::uint64_t seed_offset) const {
  SamplerConfig s;
  s.n_steps = steps;
  s.mode = mode == "em" ? SolverMode::euler_maruyama : SolverMode::ml_sde;
  s.stochastic = stochastic;
  s.share_noise = share_noise_inference;
  s.seed = seed + seed_offset;
  return s;
}

}  // namespace dddm
