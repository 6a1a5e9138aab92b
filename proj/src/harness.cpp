#include "dddm/harness.hpp"

#include <omp.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <nlohmann/json.hpp>

#include "dddm/checkpoint.hpp"
#include "dddm/errors.hpp"

namespace dddm {

namespace {

constexpr std::uint64_t kTrainStream = 100;
constexpr std::uint64_t kTestStream = 2;
constexpr std::uint64_t kSwapStream = 5;
constexpr std::uint64_t kAdaptStream = 3;
constexpr std::uint64_t kReferenceStream = 7;

std::vector<std::size_t> range(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

std::string join(const std::string& dir, const std::string& name) { return (std::filesystem::path(dir) / name).string(); }

void apply_threads(const RunConfig& cfg) {
  if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
}

}  // namespace

ToyDataset make_train_set(const RunConfig& cfg, const ToyGenerator& gen) { return gen.generate_dataset(cfg.n_per_style); }

ToyDataset make_test_set(const RunConfig& cfg, const ToyGenerator& gen) {
  Rng rng(cfg.toy.seed, kTestStream);
  const std::size_t per = std::max<std::size_t>(1, (cfg.n_eval + cfg.toy.n_styles - 1) / cfg.toy.n_styles);
  return gen.generate(per, range(cfg.toy.n_styles), rng);
}

TrainedModel train_model(const RunConfig& cfg, const ToyDataset& train, const std::string& out_dir) {
  apply_threads(cfg);
  TrainedModel t;
  t.model = make_model(cfg.model_config(), cfg.schedule(), cfg.seed);
  t.rng = Rng(cfg.seed, kTrainStream);
  t.model->set_pitch_stats(train);
  t.opt = std::make_unique<AdamW>(t.model->trainable(), cfg.optimizer());
  if (train.size() == 0) throw UsageError("training set is empty");

  const bool write = !out_dir.empty();
  const std::string hash = config_hash(cfg);
  auto save = [&]() {
    if (write) write_checkpoint(join(out_dir, "checkpoint.bin"), checkpoint_of(t, cfg));
  };
  auto save_metrics = [&]() {
    if (write) atomic_write(join(out_dir, "metrics.csv"), metrics_csv(t.metrics, hash, cfg.seed));
  };
  if (write) std::filesystem::create_directories(out_dir);
  save();
  save_metrics();

  const std::size_t n = train.size();
  const std::size_t per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
  const std::uint64_t total_steps = static_cast<std::uint64_t>(per_epoch) * cfg.epochs;
  std::uint64_t step = 0;
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    const std::vector<std::size_t> perm = t.rng.permutation(n);
    MetricsRow row;
    row.epoch = e + 1;
    try {
      for (std::size_t b = 0; b < per_epoch; ++b) {
        const std::size_t lo = b * cfg.batch_size, hi = std::min(n, lo + cfg.batch_size);
        const std::vector<std::size_t> idx(perm.begin() + static_cast<long>(lo), perm.begin() + static_cast<long>(hi));
        const double lr = scheduled_lr(cfg.lr_kind(), cfg.lr, cfg.lr_decay, e, step, total_steps);
        t.opt->set_lr(lr);
        const StepLosses l = train_batch(*t.model, train, idx, *t.opt, t.rng);
        row.l_diff += l.diff / static_cast<double>(per_epoch);
        row.l_rec += l.rec / static_cast<double>(per_epoch);
        row.l_total += l.total / static_cast<double>(per_epoch);
        row.lr = lr;
        ++step;
      }
    } catch (const NumericError& err) {
      t.numeric_failure = true;
      t.failure = "epoch " + std::to_string(e + 1) + ": " + err.what();
      save_metrics();
      return t;
    }
    if (cfg.record_wall_time)
      row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    t.metrics.push_back(row);
    t.epoch = e + 1;
    if (t.epoch == cfg.epochs) t.model->mark_trained();
    save_metrics();
    if (cfg.checkpoint_every > 0 && t.epoch % cfg.checkpoint_every == 0) save();
  }
  save();
  return t;
}

Checkpoint checkpoint_of(const TrainedModel& t, const RunConfig& cfg) {
  return capture(t.model->parameters(), t.opt.get(), t.epoch, t.rng.save(), serialize_config(cfg));
}

TrainedModel load_trained(const Checkpoint& c, RunConfig* cfg_out) {
  const RunConfig cfg = parse_config(c.config_text);
  TrainedModel t;
  t.model = make_model(cfg.model_config(), cfg.schedule(), cfg.seed);
  t.rng = Rng(cfg.seed, kTrainStream);
  t.opt = std::make_unique<AdamW>(t.model->trainable(), cfg.optimizer());
  // pitch.stats is sized by the data, so seed it with the stored shape first.
  restore(c, t.model->parameters(), t.opt.get());
  t.epoch = c.epoch;
  t.rng.load(c.rng_state);
  if (cfg_out) *cfg_out = cfg;
  return t;
}

SwapPlan make_swaps(const ToyDataset& src, std::size_t n, const std::vector<std::size_t>& targets, std::uint64_t seed) {
  if (src.size() == 0) throw ContractError("make_swaps: empty source set");
  SwapPlan p;
  Rng rng(seed, kSwapStream);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t row = i % src.size();
    std::vector<std::size_t> options;
    for (std::size_t s : targets)
      if (s != src.style[row]) options.push_back(s);
    if (options.empty()) throw ContractError("make_swaps: no target style differs from the source");
    p.index.push_back(row);
    p.target.push_back(options[rng.below(options.size())]);
  }
  return p;
}

SwapPlan identity_plan(const ToyDataset& src) {
  SwapPlan p;
  p.index = range(src.size());
  p.target = src.style;
  return p;
}

std::vector<SampleRow> run_conversion(VcModel& m, const ToyGenerator& gen, const ToyDataset& src, const SwapPlan& plan,
                                      const RunConfig& cfg, std::size_t steps, double* chain_spread) {
  const ConvertRequest req = make_request(src, plan.index, gen, plan.target, cfg.seed + 11);
  ConvertOptions opt;
  opt.sampler = cfg.sampler(13);
  opt.sampler.n_steps = steps;
  opt.per_sentence_pitch = cfg.per_sentence_pitch;
  const SampleResult r = convert(m, req, opt);
  if (chain_spread) *chain_spread = r.chain_spread;
  std::vector<SampleRow> rows;
  for (std::size_t i = 0; i < plan.index.size(); ++i) {
    SampleRow s;
    s.source_index = plan.index[i];
    s.source_style = src.style[plan.index[i]];
    s.target_style = plan.target[i];
    s.token = src.token[plan.index[i]];
    s.x = r.output.row_vec(i);
    s.pred_style = gen.classify_style(s.x.data());
    s.pred_token = gen.classify_token(s.x.data());
    rows.push_back(std::move(s));
  }
  return rows;
}

EvalMetrics evaluate(const std::vector<SampleRow>& rows, const ToyDataset& src, const ToyGenerator& gen,
                     std::size_t n_projections, std::uint64_t seed) {
  if (rows.empty()) throw ContractError("evaluate: no samples");
  const std::size_t d = gen.config().data_dim;
  EvalMetrics m;
  m.n = rows.size();
  Tensor out(rows.size(), d), ref(rows.size(), d);
  Rng rng(seed, kReferenceStream);
  double l1 = 0.0;
  std::size_t style_hits = 0, token_hits = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const SampleRow& r = rows[i];
    if (r.x.size() != d) throw ShapeError("evaluate: sample has " + std::to_string(r.x.size()) + " coordinates, generator uses " + std::to_string(d));
    if (r.source_index >= src.size()) throw UsageError("evaluate: source_index beyond the dataset");
    out.set_row(i, r.x);
    style_hits += gen.classify_style(r.x.data()) == r.target_style;
    token_hits += gen.classify_token(r.x.data()) == r.token;
    std::vector<double> target;
    if (r.target_style == src.style[r.source_index]) {
      target = src.x.row_vec(r.source_index);
      for (std::size_t j = 0; j < d; ++j) l1 += std::abs(r.x[j] - target[j]);
      ++m.identity_rows;
    } else {
      target = gen.mean(r.token, src.pitch_z[r.source_index], r.target_style);
      for (double& v : target) v += gen.config().noise_std * rng.normal();
    }
    ref.set_row(i, target);
  }
  m.style_accuracy = static_cast<double>(style_hits) / static_cast<double>(rows.size());
  m.content_accuracy = static_cast<double>(token_hits) / static_cast<double>(rows.size());
  m.distance = distribution_distance(out, ref, n_projections, seed);
  if (m.identity_rows) m.recon_l1 = l1 / static_cast<double>(m.identity_rows * d);
  return m;
}

std::string eval_json(const EvalMetrics& m, const std::string& config_hash, std::uint64_t seed) {
  nlohmann::json j = {{"config", config_hash},
                      {"seed", seed},
                      {"n", m.n},
                      {"style_accuracy", m.style_accuracy},
                      {"content_accuracy", m.content_accuracy},
                      {"distance", m.distance},
                      {"identity_rows", m.identity_rows}};
  j["recon_l1"] = m.identity_rows ? nlohmann::json(m.recon_l1) : nlohmann::json(nullptr);
  return j.dump(2) + "\n";
}

bool ablation_ordering_holds(const std::vector<AblationRow>& rows, std::string* detail) {
  const AblationRow* base = nullptr;
  const AblationRow* zero = nullptr;
  for (const AblationRow& r : rows) {
    if (r.name == "baseline") base = &r;
    if (r.name == "zero_prior") zero = &r;
  }
  if (!base || !zero) throw ContractError("ablation table needs baseline and zero_prior rows");
  bool ok = true;
  std::string msg;
  for (const AblationRow& r : rows) {
    if (&r == base || &r == zero) continue;
    const double a = r.metrics.style_accuracy;
    if (!(base->metrics.style_accuracy > a)) ok = false, msg += "baseline not above " + r.name + "; ";
    if (!(a > zero->metrics.style_accuracy)) ok = false, msg += r.name + " not above zero_prior; ";
  }
  if (detail) *detail = ok ? "ordering holds" : msg;
  return ok;
}

std::vector<AblationRow> run_ablation(const RunConfig& base, std::vector<std::string> names) {
  if (names.empty()) names = {"baseline", "no_mixup", "single_denoiser", "no_pitch_norm", "zero_prior"};
  const ToyGenerator gen(base.toy);
  const ToyDataset train = make_train_set(base, gen);
  const ToyDataset test = make_test_set(base, gen);
  const SwapPlan plan = make_swaps(test, base.n_eval, range(base.toy.n_styles), base.seed);
  std::vector<AblationRow> rows;
  for (const std::string& name : names) {
    RunConfig cfg = base;
    if (name != "baseline") set_config_value(cfg, name, "true");
    TrainedModel t = train_model(cfg, train);
    if (t.numeric_failure) throw NumericError(name + ": " + t.failure);
    AblationRow r;
    r.name = name;
    r.parameters = parameter_count(t.model->trainable());
    r.metrics = evaluate(run_conversion(*t.model, gen, test, plan, cfg, cfg.steps), test, gen, cfg.n_projections, cfg.seed);
    rows.push_back(r);
  }
  return rows;
}

std::string ablation_table(const std::vector<AblationRow>& rows) {
  std::string out = "variant,parameters,style_accuracy,content_accuracy,distance\n";
  for (const AblationRow& r : rows)
    out += r.name + "," + std::to_string(r.parameters) + "," + fmt_double(r.metrics.style_accuracy) + "," +
           fmt_double(r.metrics.content_accuracy) + "," + fmt_double(r.metrics.distance) + "\n";
  return out;
}

AdaptReport adapt_model(TrainedModel& t, const RunConfig& cfg, std::size_t style) {
  if (style < cfg.toy.n_styles || style >= cfg.toy.n_styles + cfg.toy.n_heldout)
    throw UsageError("adapt: style " + std::to_string(style) + " is not a held-out style");
  if (cfg.adapt_samples == 0) throw UsageError("adapt: empty adaptation set");
  const ToyGenerator gen(cfg.toy);
  Rng data_rng(cfg.seed, kAdaptStream);
  const ToyDataset few = gen.generate(cfg.adapt_samples, {style}, data_rng);
  // Per-sentence statistics: the adaptation set is all that is known about the new style.
  std::vector<double> pitch = few.pitch;
  StyleStats st;
  for (double p : pitch) st.mean += p / static_cast<double>(pitch.size());
  for (double p : pitch) st.std += (p - st.mean) * (p - st.mean) / static_cast<double>(pitch.size());
  st.std = std::sqrt(st.std);
  t.model->set_style_stats(style, st);

  const ToyDataset test = make_test_set(cfg, gen);
  const SwapPlan plan = make_swaps(test, cfg.n_eval, {style}, cfg.seed);
  AdaptReport rep;
  rep.style = style;
  rep.before = evaluate(run_conversion(*t.model, gen, test, plan, cfg, cfg.steps), test, gen, cfg.n_projections, cfg.seed);

  AdamWConfig oc = cfg.optimizer();
  oc.lr = cfg.adapt_lr;
  std::vector<Parameter*> params;
  if (cfg.freeze_encoders) t.model->ensemble().collect(params);
  else params = t.model->trainable();
  AdamW opt(params, oc);
  Rng rng(cfg.seed, kAdaptStream + 1);
  const std::size_t bs = std::min(cfg.adapt_batch, few.size());
  for (std::size_t s = 0; s < cfg.adapt_steps; ++s) {
    std::vector<std::size_t> idx(bs);
    for (std::size_t& i : idx) i = rng.below(few.size());
    train_batch(*t.model, few, idx, opt, rng);
  }
  rep.after = evaluate(run_conversion(*t.model, gen, test, plan, cfg, cfg.steps), test, gen, cfg.n_projections, cfg.seed);
  return rep;
}

// ---------------------------------------------------------------- commands

RunConfig resolve_config(const CommandArgs& a) {
  RunConfig c = a.config_path.empty() ? RunConfig{} : load_config(a.config_path);
  std::string text = serialize_config(c);
  for (const std::string& kv : a.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
    text += kv + "\n";
  }
  if (a.have_seed) text += "seed=" + std::to_string(a.seed) + "\n";
  if (a.steps) text += "steps=" + std::to_string(a.steps) + "\n";
  if (!a.mode.empty()) text += "mode=" + a.mode + "\n";
  return parse_config(text);
}

namespace {

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw UsageError("cannot create output directory '" + dir + "': " + ec.message());
}

}  // namespace

int cmd_gen_data(const CommandArgs& a) {
  const RunConfig cfg = resolve_config(a);
  ensure_dir(a.out_dir);
  const ToyGenerator gen(cfg.toy);
  save_dataset(make_train_set(cfg, gen), gen, join(a.out_dir, "train.csv"));
  save_dataset(make_test_set(cfg, gen), gen, join(a.out_dir, "test.csv"));
  std::cerr << "wrote " << join(a.out_dir, "train.csv") << " and test.csv\n";
  return kOk;
}

int cmd_train(const CommandArgs& a) {
  RunConfig cfg = resolve_config(a);
  if (a.lr >= 0.0) cfg.lr = a.lr;
  ensure_dir(a.out_dir);
  ToyDataset train;
  if (!a.input.empty()) {
    ToyConfig tc;
    train = load_dataset(a.input, &tc);
    cfg.toy = tc;
  } else {
    train = make_train_set(cfg, ToyGenerator(cfg.toy));
  }
  const TrainedModel t = train_model(cfg, train, a.out_dir);
  if (t.numeric_failure) {
    std::cerr << "numeric failure: " << t.failure << "; last good checkpoint kept\n";
    return kNumeric;
  }
  if (!t.metrics.empty())
    std::cerr << "trained " << t.epoch << " epochs, final L_total " << t.metrics.back().l_total << "\n";
  return kOk;
}

int cmd_convert(const CommandArgs& a) {
  if (a.checkpoint.empty()) throw UsageError("convert: --checkpoint is required");
  if (!std::filesystem::exists(a.checkpoint)) throw UsageError("convert: checkpoint '" + a.checkpoint + "' not found");
  RunConfig cfg;
  TrainedModel t = load_trained(read_checkpoint(a.checkpoint), &cfg);
  if (a.have_seed) cfg.seed = a.seed;
  if (a.steps) cfg.steps = a.steps;
  if (!a.mode.empty()) {
    if (a.mode != "ml" && a.mode != "em") throw UsageError("--mode must be ml or em");
    cfg.mode = a.mode;
  }
  const ToyGenerator gen(cfg.toy);
  ToyDataset src;
  if (a.input.empty()) {
    src = make_test_set(cfg, gen);
  } else {
    ToyConfig tc;
    src = load_dataset(a.input, &tc);
    if (tc.data_dim != cfg.toy.data_dim || tc.content_dim != cfg.toy.content_dim)
      throw UsageError("convert: dataset dimensions do not match the checkpoint");
  }
  SwapPlan plan;
  if (a.target == "swap") {
    plan = make_swaps(src, src.size(), range(cfg.toy.n_styles), cfg.seed);
  } else if (a.target == "same") {
    plan = identity_plan(src);
  } else {
    const std::size_t k = parse_index(a.target, "--target");
    if (k >= gen.total_styles()) throw UsageError("--target style out of range");
    plan.index = range(src.size());
    plan.target.assign(src.size(), k);
  }
  ensure_dir(a.out_dir);
  const auto rows = run_conversion(*t.model, gen, src, plan, cfg, cfg.steps);
  atomic_write(join(a.out_dir, "converted.csv"), samples_csv(rows, config_hash(cfg), cfg.seed));
  std::cerr << "converted " << rows.size() << " samples\n";
  return kOk;
}

int cmd_eval(const CommandArgs& a) {
  if (a.input.empty() || a.data.empty()) throw UsageError("eval: --input (converted CSV) and --data (dataset CSV) are required");
  ToyConfig tc;
  const ToyDataset src = load_dataset(a.data, &tc);
  const ToyGenerator gen(tc);
  const std::vector<SampleRow> rows = read_samples(a.input);
  RunConfig cfg = a.config_path.empty() ? RunConfig{} : resolve_config(a);
  const EvalMetrics m = evaluate(rows, src, gen, cfg.n_projections, cfg.seed);
  ensure_dir(a.out_dir);
  const std::string json = eval_json(m, config_hash(cfg), cfg.seed);
  atomic_write(join(a.out_dir, "eval.json"), json);
  std::cout << json;
  return kOk;
}

int cmd_ablate(const CommandArgs& a) {
  const RunConfig cfg = resolve_config(a);
  ensure_dir(a.out_dir);
  const std::vector<AblationRow> rows = run_ablation(cfg);
  const std::string table = ablation_table(rows);
  atomic_write(join(a.out_dir, "ablation.csv"), "# config=" + config_hash(cfg) + " seed=" + std::to_string(cfg.seed) + "\n" + table);
  std::string detail;
  const bool ok = ablation_ordering_holds(rows, &detail);
  std::cout << table << "ordering: " << (ok ? "PASS" : "FAIL") << " (" << detail << ")\n";
  return ok ? kOk : kOrdering;
}

int cmd_adapt(const CommandArgs& a) {
  if (a.checkpoint.empty()) throw UsageError("adapt: --checkpoint is required");
  if (!std::filesystem::exists(a.checkpoint)) throw UsageError("adapt: checkpoint '" + a.checkpoint + "' not found");
  RunConfig cfg;
  TrainedModel t = load_trained(read_checkpoint(a.checkpoint), &cfg);
  if (a.have_seed) cfg.seed = a.seed;
  if (a.steps) cfg.adapt_steps = a.steps;
  if (a.lr >= 0.0) cfg.adapt_lr = a.lr;
  if (a.freeze_encoders) cfg.freeze_encoders = true;
  for (const std::string& kv : a.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
    set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  const std::size_t style = a.style >= 0 ? static_cast<std::size_t>(a.style) : cfg.toy.n_styles;
  const AdaptReport rep = adapt_model(t, cfg, style);
  ensure_dir(a.out_dir);
  write_checkpoint(join(a.out_dir, "adapted.bin"), checkpoint_of(t, cfg));
  nlohmann::json j = {{"config", config_hash(cfg)},
                      {"style", rep.style},
                      {"steps", cfg.adapt_steps},
                      {"lr", cfg.adapt_lr},
                      {"before", nlohmann::json::parse(eval_json(rep.before, config_hash(cfg), cfg.seed))},
                      {"after", nlohmann::json::parse(eval_json(rep.after, config_hash(cfg), cfg.seed))}};
  atomic_write(join(a.out_dir, "adapt.json"), j.dump(2) + "\n");
  std::cout << j.dump(2) << "\n";
  return kOk;
}

}  // namespace dddm
