#pragma once

#include <memory>
#include <string>
#include <vector>

#include "dddm/adamw.hpp"
#include "dddm/checkpoint.hpp"
#include "dddm/config.hpp"
#include "dddm/io.hpp"
#include "dddm/model.hpp"
#include "dddm/toy.hpp"

namespace dddm {

enum ExitCode : int { kOk = 0, kUsage = 2, kNumeric = 3, kOrdering = 4 };

// Training styles only; test samples come from a separate stream.
ToyDataset make_train_set(const RunConfig& cfg, const ToyGenerator& gen);
ToyDataset make_test_set(const RunConfig& cfg, const ToyGenerator& gen);

struct TrainedModel {
  std::unique_ptr<VcModel> model;
  std::unique_ptr<AdamW> opt;
  Rng rng;
  std::uint64_t epoch = 0;
  std::vector<MetricsRow> metrics;
  bool numeric_failure = false;
  std::string failure;
};

// Runs cfg.epochs passes of total_loss optimization. With a non-empty out_dir
// writes metrics.csv and checkpoint.bin there (initial, every
// checkpoint_every epochs and final). A non-finite loss stops training and
// leaves the last good checkpoint in place.
TrainedModel train_model(const RunConfig& cfg, const ToyDataset& train, const std::string& out_dir = "");

Checkpoint checkpoint_of(const TrainedModel& t, const RunConfig& cfg);
// Rebuilds model, optimizer and RNG from a checkpoint and its embedded config.
TrainedModel load_trained(const Checkpoint& c, RunConfig* cfg_out = nullptr);

// Source rows and target styles for a batch of conversions.
struct SwapPlan {
  std::vector<std::size_t> index;
  std::vector<std::size_t> target;
};
// Each source row gets a uniformly drawn target among `targets` other than its own style.
SwapPlan make_swaps(const ToyDataset& src, std::size_t n, const std::vector<std::size_t>& targets, std::uint64_t seed);
SwapPlan identity_plan(const ToyDataset& src);

std::vector<SampleRow> run_conversion(VcModel& m, const ToyGenerator& gen, const ToyDataset& src, const SwapPlan& plan,
                                      const RunConfig& cfg, std::size_t steps, double* chain_spread = nullptr);

struct EvalMetrics {
  std::size_t n = 0;
  double style_accuracy = 0.0;
  double content_accuracy = 0.0;
  double distance = 0.0;      // sliced W1 to the ground-truth population of the same conversions
  double recon_l1 = -1.0;     // mean |x - source x| over identity rows, -1 when none
  std::size_t identity_rows = 0;
};
// Reference population: for each row the ground-truth sample with the
// source token and pitch under the target style. Rows whose target equals
// the source style use the stored source vector itself.
EvalMetrics evaluate(const std::vector<SampleRow>& rows, const ToyDataset& src, const ToyGenerator& gen,
                     std::size_t n_projections, std::uint64_t seed);
std::string eval_json(const EvalMetrics& m, const std::string& config_hash, std::uint64_t seed);

struct AblationRow {
  std::string name;
  std::size_t parameters = 0;
  EvalMetrics metrics;
};
// Baseline style accuracy above every ablation, which in turn sit above zero_prior.
bool ablation_ordering_holds(const std::vector<AblationRow>& rows, std::string* detail = nullptr);
std::vector<AblationRow> run_ablation(const RunConfig& base, std::vector<std::string> names = {});
std::string ablation_table(const std::vector<AblationRow>& rows);

struct AdaptReport {
  std::size_t style = 0;
  EvalMetrics before;
  EvalMetrics after;
};
// Fine-tunes on cfg.adapt_samples samples of one unseen style with a fresh
// optimizer at cfg.adapt_lr for cfg.adapt_steps steps.
AdaptReport adapt_model(TrainedModel& t, const RunConfig& cfg, std::size_t style);

// Commands behind the CLI. Each returns an exit code and prints diagnostics to stderr.
struct CommandArgs {
  std::string config_path;
  std::string out_dir = ".";
  bool have_seed = false;
  std::uint64_t seed = 0;
  std::string checkpoint;
  std::string input;       // dataset or samples CSV
  std::string data;        // dataset CSV for eval
  std::string target = "swap";  // style id or "swap"
  std::size_t steps = 0;   // 0 = config value
  std::string mode;        // empty = config value
  double lr = -1.0;        // < 0 = config value
  long style = -1;         // adapt target, -1 = first held-out style
  bool freeze_encoders = false;
  std::vector<std::string> set;  // extra key=value overrides
};

int cmd_gen_data(const CommandArgs& a);
int cmd_train(const CommandArgs& a);
int cmd_convert(const CommandArgs& a);
int cmd_eval(const CommandArgs& a);
int cmd_ablate(const CommandArgs& a);
int cmd_adapt(const CommandArgs& a);

RunConfig resolve_config(const CommandArgs& a);

}  // namespace dddm
