#include <CLI11.hpp>
#include <iostream>

#include "dddm/errors.hpp"
#include "dddm/harness.hpp"

namespace {

void common(CLI::App* sub, dddm::CommandArgs& a) {
  sub->add_option("--config", a.config_path, "key=value config file");
  sub->add_option("--seed", a.seed, "run seed")->each([&a](const std::string&) { a.have_seed = true; });
  sub->add_option("--out", a.out_dir, "output directory");
  sub->add_option("--set", a.set, "extra key=value overrides");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dddm: decoupled denoising diffusion on a synthetic source/filter toy world"};
  app.require_subcommand(1);
  dddm::CommandArgs a;

  auto* gen = app.add_subcommand("gen-data", "write train/test datasets with JSON sidecars");
  common(gen, a);

  auto* train = app.add_subcommand("train", "train a model; writes metrics.csv and checkpoint.bin");
  common(train, a);
  train->add_option("--data", a.input, "training dataset CSV (default: generate from config)");
  train->add_option("--lr", a.lr, "initial learning rate");

  auto* convert = app.add_subcommand("convert", "convert samples with a trained checkpoint");
  common(convert, a);
  convert->add_option("--checkpoint", a.checkpoint, "checkpoint file")->required();
  convert->add_option("--input", a.input, "source dataset CSV (default: generated test set)");
  convert->add_option("--target", a.target, "target style id, 'swap' or 'same'");
  convert->add_option("--steps", a.steps, "reverse steps (6 and 30 are the presets)");
  convert->add_option("--mode", a.mode, "em or ml");

  auto* eval = app.add_subcommand("eval", "score converted samples with the oracle classifiers");
  common(eval, a);
  eval->add_option("--input", a.input, "converted samples CSV")->required();
  eval->add_option("--data", a.data, "source dataset CSV (sidecar alongside)")->required();

  auto* ablate = app.add_subcommand("ablate", "train baseline and four ablations, check orderings");
  common(ablate, a);

  auto* adapt = app.add_subcommand("adapt", "fine-tune on a few samples of an unseen style");
  common(adapt, a);
  adapt->add_option("--checkpoint", a.checkpoint, "checkpoint file")->required();
  adapt->add_option("--steps", a.steps, "fine-tuning steps");
  adapt->add_option("--lr", a.lr, "fine-tuning learning rate");
  adapt->add_option("--style", a.style, "held-out style id (default: first held-out)");
  adapt->add_flag("--freeze-encoders", a.freeze_encoders, "fine-tune the denoisers only");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : dddm::kUsage;
  }

  try {
    if (*gen) return dddm::cmd_gen_data(a);
    if (*train) return dddm::cmd_train(a);
    if (*convert) return dddm::cmd_convert(a);
    if (*eval) return dddm::cmd_eval(a);
    if (*ablate) return dddm::cmd_ablate(a);
    if (*adapt) return dddm::cmd_adapt(a);
  } catch (const dddm::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return dddm::kNumeric;
  } catch (const dddm::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return dddm::kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return dddm::kUsage;
  }
  return dddm::kUsage;
}
