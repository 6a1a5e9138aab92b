#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "dddm/checkpoint.hpp"
#include "dddm/config.hpp"
#include "dddm/errors.hpp"
#include "dddm/harness.hpp"
#include "dddm/io.hpp"

namespace fs = std::filesystem;
using namespace dddm;

namespace {

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v ? v : fallback;
}

const std::string kBin = env_or("DDDM_BIN", "./dddm");
const std::string kConfig = env_or("DDDM_CONFIG", "configs/toy.conf");
const std::string kSmall = " --set n_per_style=8 --set n_eval=16 --set epochs=2 --set checkpoint_every=1";

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dddm_harness_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// Runs the CLI with stderr captured into err; returns the exit status.
int run(const std::string& args, std::string* err = nullptr) {
  const fs::path log = fs::temp_directory_path() / ("dddm_harness_" + std::to_string(::getpid()) + ".err");
  const int rc = std::system((kBin + " " + args + " >/dev/null 2>" + log.string()).c_str());
  if (err) *err = read_file(log.string());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

RunConfig tiny_config() {
  RunConfig c;
  c.n_per_style = 8;
  c.hidden = 16;
  c.epochs = 1;
  c.threads = 1;
  c.record_wall_time = false;
  return c;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  const double ab = std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
  const double aa = std::inner_product(a.begin(), a.end(), a.begin(), 0.0);
  const double bb = std::inner_product(b.begin(), b.end(), b.begin(), 0.0);
  return ab / std::sqrt(aa * bb);
}

}  // namespace

// ---------------------------------------------------------------- config

TEST(Config, UnknownKeyAndBadValueAreRejected) {
  EXPECT_THROW(parse_config("not_a_key = 1\n"), UsageError);
  EXPECT_THROW(parse_config("epochs = many\n"), UsageError);
  EXPECT_THROW(parse_config("lr_schedule = sawtooth\n"), UsageError);
  EXPECT_THROW(parse_config("epochs\n"), UsageError);
}

TEST(Config, CommentsAndWhitespaceAreIgnored) {
  const RunConfig c = parse_config("# header\n\n  epochs = 7   # trailing\nlr=0.5\n");
  EXPECT_EQ(c.epochs, 7u);
  EXPECT_EQ(c.lr, 0.5);
}

TEST(Config, SerializeRoundTripsExactly) {
  RunConfig c = load_config(kConfig);
  c.lr = 0.1 + 0.2;  // not representable in short decimal
  c.zero_prior = true;
  const std::string text = serialize_config(c);
  EXPECT_EQ(serialize_config(parse_config(text)), text);
  EXPECT_EQ(parse_config(text).lr, c.lr);
}

TEST(Config, HashIsStableAndSensitive) {
  RunConfig a, b;
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
  b.seed = 1;
  EXPECT_NE(config_hash(a), config_hash(b));
}

// ---------------------------------------------------------------- checkpoint

class CheckpointTest : public ::testing::Test {
 protected:
  void SetUp() override {
    cfg = tiny_config();
    const ToyGenerator gen(cfg.toy);
    t = train_model(cfg, make_train_set(cfg, gen));
    bytes = encode_checkpoint(checkpoint_of(t, cfg));
  }
  RunConfig cfg;
  TrainedModel t;
  std::string bytes;
};

TEST_F(CheckpointTest, LoadSaveIsByteIdentical) {
  EXPECT_EQ(encode_checkpoint(decode_checkpoint(bytes)), bytes);
  RunConfig back;
  const TrainedModel u = load_trained(decode_checkpoint(bytes), &back);
  EXPECT_EQ(encode_checkpoint(checkpoint_of(u, back)), bytes);
  EXPECT_TRUE(u.model->trained());
}

TEST_F(CheckpointTest, CorruptHeadersAreRefused) {
  std::string bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_checkpoint(bad), UsageError);
  bad = bytes;
  bad[4] = static_cast<char>(kCheckpointVersion + 1);
  EXPECT_THROW(decode_checkpoint(bad), UsageError);
  EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() / 2)), UsageError);
  EXPECT_THROW(decode_checkpoint(bytes + "x"), UsageError);
}

TEST_F(CheckpointTest, TopologyMismatchIsRefused) {
  RunConfig single = cfg;
  single.single_denoiser = true;
  auto m = make_model(single.model_config(), single.schedule(), single.seed);
  EXPECT_THROW(restore(decode_checkpoint(bytes), m->parameters(), nullptr), TopologyError);
}

// ---------------------------------------------------------------- CLI

TEST(Cli, UsageErrorsExitTwo) {
  const fs::path dir = scratch("usage");
  const std::string bad = (dir / "bad.conf").string();
  atomic_write(bad, "epochs = -3\n");
  std::string err;
  EXPECT_EQ(run("train --config " + bad + " --out " + (dir / "o").string(), &err), 2);
  EXPECT_NE(err.find("epochs"), std::string::npos) << err;
  EXPECT_EQ(run("convert --checkpoint " + (dir / "missing.bin").string() + " --out " + dir.string(), &err), 2);
  EXPECT_NE(err.find("not found"), std::string::npos) << err;
  EXPECT_EQ(run("bogus-command"), 2);
  EXPECT_EQ(run("train --seed notanumber"), 2);
}

TEST(Cli, ZeroEpochsWritesInitialCheckpointOnly) {
  const fs::path dir = scratch("zero");
  ASSERT_EQ(run("train --config " + kConfig + kSmall + " --set epochs=0 --out " + dir.string()), 0);
  EXPECT_TRUE(fs::exists(dir / "checkpoint.bin"));
  const CsvTable m = read_csv((dir / "metrics.csv").string());
  EXPECT_TRUE(m.rows.empty());
  // An untrained checkpoint cannot convert.
  EXPECT_EQ(run("convert --checkpoint " + (dir / "checkpoint.bin").string() + " --out " + dir.string()), 2);
}

TEST(Cli, MalformedInputCsvNamesTheRow) {
  const fs::path dir = scratch("malformed");
  ASSERT_EQ(run("train --config " + kConfig + kSmall + " --out " + dir.string()), 0);
  ASSERT_EQ(run("gen-data --config " + kConfig + kSmall + " --out " + dir.string()), 0);
  std::string csv = read_file((dir / "test.csv").string());
  const auto third = csv.find('\n', csv.find('\n', csv.find('\n') + 1) + 1);
  csv.insert(third + 1, "1,2,oops\n");
  atomic_write((dir / "test.csv").string(), csv);
  std::string err;
  EXPECT_EQ(run("convert --checkpoint " + (dir / "checkpoint.bin").string() + " --input " + (dir / "test.csv").string() +
                    " --out " + dir.string(),
                &err),
            2);
  EXPECT_NE(err.find("row"), std::string::npos) << err;
}

TEST(Cli, NanLossExitsThreeAndKeepsCheckpoint) {
  const fs::path dir = scratch("nan");
  std::string err;
  EXPECT_EQ(run("train --config " + kConfig + kSmall + " --lr 1e300 --out " + dir.string(), &err), 3);
  EXPECT_NE(err.find("numeric"), std::string::npos) << err;
  ASSERT_TRUE(fs::exists(dir / "checkpoint.bin"));
  EXPECT_NO_THROW(load_trained(read_checkpoint((dir / "checkpoint.bin").string())));
}

TEST(Cli, EmptyAdaptationSetExitsTwo) {
  const fs::path dir = scratch("adapt");
  ASSERT_EQ(run("train --config " + kConfig + kSmall + " --out " + dir.string()), 0);
  std::string err;
  EXPECT_EQ(run("adapt --checkpoint " + (dir / "checkpoint.bin").string() + " --set adapt_samples=0 --out " + dir.string(),
                &err),
            2);
  EXPECT_NE(err.find("empty"), std::string::npos) << err;
  EXPECT_EQ(run("adapt --checkpoint " + (dir / "checkpoint.bin").string() + " --style 0 --out " + dir.string()), 2);
}

TEST(Cli, SameSeedAndConfigGiveIdenticalArtifacts) {
  const fs::path a = scratch("repro_a"), b = scratch("repro_b");
  for (const fs::path& d : {a, b}) {
    ASSERT_EQ(run("train --config " + kConfig + kSmall + " --out " + d.string()), 0);
    ASSERT_EQ(run("gen-data --config " + kConfig + kSmall + " --out " + d.string()), 0);
    ASSERT_EQ(run("convert --checkpoint " + (d / "checkpoint.bin").string() + " --target swap --steps 6 --out " + d.string()), 0);
    ASSERT_EQ(run("eval --config " + kConfig + kSmall + " --input " + (d / "converted.csv").string() + " --data " +
                  (d / "test.csv").string() + " --out " + d.string()),
              0);
  }
  for (const char* f : {"metrics.csv", "checkpoint.bin", "converted.csv", "train.csv", "test.csv", "eval.json"})
    EXPECT_EQ(read_file((a / f).string()), read_file((b / f).string())) << f;
  // Every artifact carries the config hash.
  const std::string hash = read_file((a / "metrics.csv").string()).substr(0, 40);
  EXPECT_NE(hash.find("config="), std::string::npos);
}

TEST(Cli, EvalRejectsDimensionMismatch) {
  const fs::path dir = scratch("dims");
  ASSERT_EQ(run("gen-data --config " + kConfig + kSmall + " --out " + dir.string()), 0);
  SampleRow r;
  r.x.assign(3, 0.0);
  atomic_write((dir / "short.csv").string(), samples_csv({r}, "0", 0));
  EXPECT_EQ(run("eval --input " + (dir / "short.csv").string() + " --data " + (dir / "test.csv").string() + " --out " +
                dir.string()),
            2);
}

// ---------------------------------------------------------------- trained model

class TrainedToy : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    cfg = new RunConfig(load_config(kConfig));
    gen = new ToyGenerator(cfg->toy);
    train = new ToyDataset(make_train_set(*cfg, *gen));
    test = new ToyDataset(make_test_set(*cfg, *gen));
    model = new TrainedModel(train_model(*cfg, *train));
  }
  static void TearDownTestSuite() {
    delete model;
    delete test;
    delete train;
    delete gen;
    delete cfg;
  }
  static RunConfig* cfg;
  static ToyGenerator* gen;
  static ToyDataset* train;
  static ToyDataset* test;
  static TrainedModel* model;

  std::vector<std::size_t> first_of_style(const ToyDataset& d, std::size_t style, std::size_t n) const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < d.size() && idx.size() < n; ++i)
      if (d.style[i] == style) idx.push_back(i);
    return idx;
  }
};

RunConfig* TrainedToy::cfg = nullptr;
ToyGenerator* TrainedToy::gen = nullptr;
ToyDataset* TrainedToy::train = nullptr;
ToyDataset* TrainedToy::test = nullptr;
TrainedModel* TrainedToy::model = nullptr;

TEST_F(TrainedToy, TrainingFinishesCleanly) {
  ASSERT_FALSE(model->numeric_failure) << model->failure;
  EXPECT_EQ(model->metrics.size(), cfg->epochs);
  EXPECT_TRUE(model->model->trained());
}

TEST_F(TrainedToy, ReconstructionLossDropsTenfold) {
  // Zero-initialized encoders start from priors of 0, so the initial L_rec is mean |x|.
  double initial = 0.0;
  for (std::size_t i = 0; i < train->x.size(); ++i) initial += std::abs(train->x[i]);
  initial /= static_cast<double>(train->x.size());
  EXPECT_LT(model->metrics.back().l_rec, 0.1 * initial);
}

TEST_F(TrainedToy, DistinctStylesGiveDissimilarStyleVectors) {
  // Some generator embeddings are themselves close (cosine up to ~0.75), so
  // the bound applies on average and to every pair the generator separates.
  VcModel& m = *model->model;
  const std::size_t k = cfg->toy.n_styles;
  std::vector<std::vector<double>> s(k);
  for (std::size_t a = 0; a < k; ++a) {
    Tape tape(false);
    s[a] = m.style_encoder().forward(tape, gather_frames(*test, first_of_style(*test, a, 1)), test->n_frames).value().row_vec(0);
  }
  double mean = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = a + 1; b < k; ++b, ++pairs) {
      const double c = cosine(s[a], s[b]);
      mean += c;
      const double truth = cosine(gen->style_embeddings().row_vec(a), gen->style_embeddings().row_vec(b));
      if (truth < 0.5) {
        EXPECT_LT(c, 0.5 + 0.15) << a << "," << b;
      }
    }
  EXPECT_LT(mean / static_cast<double>(pairs), 0.5);
  EXPECT_LT(cosine(s[0], s[1]), 0.5);
}

TEST_F(TrainedToy, PriorsRespondToStyleAndContent) {
  VcModel& m = *model->model;
  const std::vector<std::size_t> idx = first_of_style(*test, 0, 32);
  const std::vector<std::size_t> other = first_of_style(*test, 1, 32);
  Tape tape(false);
  const Var s0 = m.style_encoder().forward(tape, gather_frames(*test, idx), test->n_frames);
  const Var s1 = m.style_encoder().forward(tape, gather_frames(*test, other), test->n_frames);
  std::vector<double> pitch;
  std::vector<std::size_t> sty;
  for (std::size_t i : idx) pitch.push_back(test->pitch[i]), sty.push_back(0);
  const std::vector<std::size_t> units = m.pitch_units(pitch, sty);
  const Tensor src0 = m.codec().encode_source(tape, units, s0).value();
  const Tensor src1 = m.codec().encode_source(tape, units, s1).value();
  double moved = 0.0;
  for (std::size_t i = 0; i < src0.size(); ++i) moved += std::abs(src0[i] - src1[i]);
  EXPECT_GT(moved / static_cast<double>(src0.size()), 0.01);

  // Same style, different tokens: filter outputs separate by token.
  const Tensor ftr = m.codec().encode_filter(tape, gather_rows(test->content, idx), s0).value();
  double between = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = i + 1; j < idx.size(); ++j) {
      if (test->token[idx[i]] == test->token[idx[j]]) continue;
      double d = 0.0;
      for (std::size_t k = 0; k < ftr.cols(); ++k) d += std::abs(ftr(i, k) - ftr(j, k));
      between += d / static_cast<double>(ftr.cols());
      ++pairs;
    }
  ASSERT_GT(pairs, 0u);
  EXPECT_GT(between / static_cast<double>(pairs), 0.05);
}

TEST_F(TrainedToy, SwapConversionReachesAccuracyTargets) {
  const SwapPlan plan = make_swaps(*test, cfg->n_eval, {0, 1, 2, 3, 4, 5, 6, 7}, cfg->seed);
  const EvalMetrics e = evaluate(run_conversion(*model->model, *gen, *test, plan, *cfg, 30), *test, *gen, cfg->n_projections, cfg->seed);
  EXPECT_GE(e.style_accuracy, 0.9);
  EXPECT_GE(e.content_accuracy, 0.9);
}

TEST_F(TrainedToy, IdentityConversionResynthesizes) {
  const SwapPlan plan = identity_plan(*test);
  const EvalMetrics e = evaluate(run_conversion(*model->model, *gen, *test, plan, *cfg, 30), *test, *gen, cfg->n_projections, cfg->seed);
  EXPECT_EQ(e.identity_rows, test->size());
  EXPECT_LT(e.recon_l1, 0.15);
}

TEST_F(TrainedToy, GroundTruthAgainstItselfHitsOracleCeiling) {
  std::vector<SampleRow> rows;
  std::size_t style_ok = 0, token_ok = 0;
  for (std::size_t i = 0; i < test->size(); ++i) {
    SampleRow r;
    r.source_index = i;
    r.source_style = r.target_style = test->style[i];
    r.token = test->token[i];
    r.x = test->x.row_vec(i);
    style_ok += gen->classify_style(r.x.data()) == r.target_style;
    token_ok += gen->classify_token(r.x.data()) == r.token;
    rows.push_back(r);
  }
  const EvalMetrics e = evaluate(rows, *test, *gen, cfg->n_projections, cfg->seed);
  EXPECT_EQ(e.distance, 0.0);
  EXPECT_EQ(e.recon_l1, 0.0);
  EXPECT_DOUBLE_EQ(e.style_accuracy, static_cast<double>(style_ok) / static_cast<double>(rows.size()));
  EXPECT_DOUBLE_EQ(e.content_accuracy, static_cast<double>(token_ok) / static_cast<double>(rows.size()));

  // Shuffled labels drop style accuracy to chance.
  Rng rng(11, 0);
  const std::vector<std::size_t> perm = rng.permutation(rows.size());
  std::vector<SampleRow> shuffled = rows;
  for (std::size_t i = 0; i < rows.size(); ++i) shuffled[i].target_style = rows[perm[i]].target_style;
  const EvalMetrics s = evaluate(shuffled, *test, *gen, cfg->n_projections, cfg->seed);
  EXPECT_NEAR(s.style_accuracy, 1.0 / static_cast<double>(cfg->toy.n_styles), 0.05);
}

TEST_F(TrainedToy, ZeroStepAdaptationLeavesWeightsUnchanged) {
  const Checkpoint before = checkpoint_of(*model, *cfg);
  TrainedModel copy = load_trained(before);
  RunConfig c = *cfg;
  c.adapt_steps = 0;
  c.n_eval = 64;
  const AdaptReport rep = adapt_model(copy, c, cfg->toy.n_styles);
  EXPECT_EQ(rep.before.style_accuracy, rep.after.style_accuracy);
  std::vector<Parameter*> a = model->model->trainable(), b = copy.model->trainable();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < a[i]->value.size(); ++k) ASSERT_EQ(a[i]->value[k], b[i]->value[k]) << a[i]->name;
}
