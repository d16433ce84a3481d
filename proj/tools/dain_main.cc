// dain: command-line adapter over the dain core library.
//
// Every subcommand loads its inputs, calls one library operation and writes
// plain-text outputs. Errors print a single line "error: <category>: <msg>"
// and exit with status 1 (2 for usage errors).

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dain/augmentation.h"
#include "dain/entity_importance.h"
#include "dain/errors.h"
#include "dain/evaluation.h"
#include "dain/influence.h"
#include "dain/model.h"
#include "dain/model_io.h"
#include "dain/tensor.h"
#include "dain/trainer.h"

namespace dain {
namespace {

namespace fs = std::filesystem;

std::string DescribePreset(const char* name, const TrainConfig& c) {
  std::ostringstream out;
  out << "  " << name << ": R=" << c.embedding_len << ", layers ";
  for (std::size_t i = 0; i < c.layer_sizes.size(); ++i) {
    out << (i ? "," : "") << c.layer_sizes[i];
  }
  out << ", batch " << c.batch_size << ", lr " << c.learning_rate << ", up to " << c.max_epochs
      << " epochs, patience " << c.patience << ", checkpoint step " << c.checkpoint_step_size
      << "\n";
  return out.str();
}

int DefaultThreads() {
  if (const char* env = std::getenv("DAIN_THREADS")) {
    try {
      return std::max(1, std::stoi(env));
    } catch (const std::exception&) {
      throw ArgumentError(std::string("DAIN_THREADS is not an integer: ") + env);
    }
  }
  return 1;
}

// Tensor order of a file: the length of its "# dims:" comment, else the
// token count of the first data line minus the value column.
std::size_t SniffOrder(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream tokens(line);
    std::string token;
    std::size_t count = 0;
    if (line.rfind("# dims:", 0) == 0) {
      tokens.ignore(7);
      while (tokens >> token) ++count;
      return count;
    }
    if (line.empty() || line[0] == '#') continue;
    while (tokens >> token) ++count;
    if (count < 2) throw ParseError(path.string() + ": cannot infer tensor order");
    return count - 1;
  }
  throw ParseError(path.string() + ": no cells");
}

SparseTensor LoadTensor(const fs::path& path, std::optional<std::size_t> order,
                        const std::vector<std::int64_t>& dims) {
  const std::size_t n = order ? *order : (dims.empty() ? SniffOrder(path) : dims.size());
  std::optional<Dims> explicit_dims;
  if (!dims.empty()) explicit_dims = Dims(dims.begin(), dims.end());
  return load_tensor(path, n, explicit_dims);
}

void WriteSplitFile(const fs::path& path, const Dims& dims, const std::vector<Cell>& cells) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_cells(out, dims, cells);
  if (!out) throw IoError("write failed: " + path.string());
}

// A split directory holds train.txt, val.txt and test.txt, each carrying
// the shared dims comment.
DatasetSplit LoadSplit(const fs::path& dir, std::uint64_t seed) {
  const std::size_t order = SniffOrder(dir / "train.txt");
  DatasetSplit split;
  SparseTensor train = load_tensor(dir / "train.txt", order);
  split.dims = train.dims;
  split.train = std::move(train.cells);
  split.val = load_tensor(dir / "val.txt", order, split.dims).cells;
  split.test = load_tensor(dir / "test.txt", order, split.dims).cells;
  split.seed = seed;
  return split;
}

// Training hyperparameters shared by train and augment: a preset plus
// optional per-field overrides.
struct TrainFlags {
  std::string preset = "desk";
  std::optional<int> embedding_len;
  std::vector<int> layers;
  std::optional<int> batch_size;
  std::optional<double> learning_rate;
  std::optional<int> max_epochs;
  std::optional<int> patience;
  std::optional<double> step_size;

  void Register(CLI::App* app) {
    app->add_option("--preset", preset, "Hyperparameter preset")
        ->check(CLI::IsMember({"desk", "full"}))
        ->capture_default_str();
    app->add_option("--embedding-len", embedding_len, "Embedding length R");
    app->add_option("--layers", layers, "Hidden layer widths, e.g. 64,32")->delimiter(',');
    app->add_option("--batch-size", batch_size, "Mini-batch size");
    app->add_option("--lr", learning_rate, "Adam learning rate");
    app->add_option("--epochs", max_epochs, "Maximum epochs");
    app->add_option("--patience", patience, "Early-stopping patience in epochs");
    app->add_option("--step-size", step_size, "Checkpoint step size for influence tracing");
  }

  TrainConfig Resolve(std::uint64_t seed) const {
    TrainConfig c = preset == "full" ? TrainConfig::full() : TrainConfig::desk();
    if (embedding_len) c.embedding_len = *embedding_len;
    if (!layers.empty()) c.layer_sizes = layers;
    if (batch_size) c.batch_size = *batch_size;
    if (learning_rate) c.learning_rate = *learning_rate;
    if (max_epochs) c.max_epochs = *max_epochs;
    // A shortened run keeps the preset patience within its epoch budget.
    c.patience = patience ? *patience : std::min(c.patience, c.max_epochs);
    if (step_size) c.checkpoint_step_size = *step_size;
    c.seed = seed;
    c.validate();
    return c;
  }
};

struct Options {
  std::uint64_t seed = 0;
  std::optional<int> threads;

  // synth
  std::vector<std::int64_t> dims;
  std::size_t nnz = 0;
  int rank = 5;
  double noise = 0.01;

  // tensor inputs
  std::string input;
  std::optional<std::size_t> order;
  std::size_t negatives = 0;

  std::string split_dir;
  std::string out;
  std::string checkpoints_out;
  std::string checkpoints;
  std::string cit;
  std::string entity_prefix;
  std::string model;
  std::string config;

  std::string entity_method = "aggregate";
  CpRank1Options cp;

  std::string method;
  double ratio = 0.0;
  std::string predictor = "costco";
  int channels = 32;
  bool clamp = false;

  TrainFlags train;

  int Threads() const { return threads ? std::max(1, *threads) : DefaultThreads(); }
};

void RunSynth(const Options& o) {
  SyntheticSpec spec;
  spec.dims = Dims(o.dims.begin(), o.dims.end());
  spec.nnz = o.nnz;
  spec.rank = o.rank;
  spec.noise_std = o.noise;
  spec.seed = o.seed;
  const SparseTensor tensor = generate_synthetic(spec);
  std::ostringstream note;
  note << "synthetic rank " << o.rank << " noise " << o.noise << " seed " << o.seed;
  const std::vector<std::string> comments{note.str()};
  save_tensor(tensor, o.out, comments);
  std::cout << "wrote " << tensor.cells.size() << " cells to " << o.out << "\n";
}

void RunSplit(const Options& o) {
  SparseTensor tensor = LoadTensor(o.input, o.order, o.dims);
  if (o.negatives > 0) tensor = add_negative_samples(tensor, o.negatives, o.seed);
  const DatasetSplit split = split_dataset(tensor, o.seed);
  const fs::path dir(o.out);
  fs::create_directories(dir);
  WriteSplitFile(dir / "train.txt", split.dims, split.train);
  WriteSplitFile(dir / "val.txt", split.dims, split.val);
  WriteSplitFile(dir / "test.txt", split.dims, split.test);
  std::cout << "train " << split.train.size() << " val " << split.val.size() << " test "
            << split.test.size() << "\n";
}

void RunTrain(const Options& o) {
  const DatasetSplit split = LoadSplit(o.split_dir, o.seed);
  const auto result = train_completion_model(split, o.train.Resolve(o.seed));
  save_model(result.model, o.out);
  if (!o.checkpoints_out.empty()) save_checkpoints(result.checkpoints, o.checkpoints_out);
  std::printf("epochs %d best_epoch %d val_rmse %.6f test_rmse %.6f\n", result.epochs_run,
              result.best_epoch, rmse(result.model, split.val), rmse(result.model, split.test));
}

void RunInfluence(const Options& o) {
  const DatasetSplit split = LoadSplit(o.split_dir, o.seed);
  const CheckpointSet checkpoints = load_checkpoints(o.checkpoints);
  const auto sums = validation_gradient_sums(checkpoints, split.val);
  save_cell_importance(cell_importance(checkpoints, split.train, sums, o.Threads()), o.out);
  std::cout << "scored " << split.train.size() << " training cells over " << checkpoints.size()
            << " checkpoints\n";
}

void RunEntity(const Options& o) {
  const DatasetSplit split = LoadSplit(o.split_dir, o.seed);
  const CellImportanceTable table = load_cell_importance(o.cit);
  EntityImportance importance;
  if (o.entity_method == "aggregate") {
    importance = aggregate_entity_importance(table, split.dims);
  } else {
    CpRank1Options cp = o.cp;
    cp.seed = o.seed;
    importance = cp_rank1_entity_importance(table, split.dims, cp);
  }
  save_entity_importance(importance, o.out);
  std::cout << "wrote " << importance.order() << " entity importance files with prefix " << o.out
            << "\n";
}

void RunAugment(const Options& o) {
  const DatasetSplit split = LoadSplit(o.split_dir, o.seed);
  const AugmentMethod method = parse_augment_method(o.method);
  if (o.ratio < 0.0) throw ArgumentError("--ratio must be nonnegative");
  const auto n_aug =
      static_cast<std::size_t>(std::llround(o.ratio * static_cast<double>(split.train.size())));
  const TrainConfig config = o.train.Resolve(o.seed);

  AugmentationSet set;
  switch (method) {
    case AugmentMethod::kDain: {
      if (o.entity_prefix.empty()) throw ArgumentError("--entity-prefix is required for dain");
      const auto importance = load_entity_importance(o.entity_prefix, split.dims.size());
      const auto predictor =
          train_value_predictor(parse_predictor_kind(o.predictor), split, config, o.channels);
      set = augment_dain(split, importance, predictor, n_aug, o.seed, o.Threads());
      break;
    }
    case AugmentMethod::kDuplication:
      set = augment_duplication(split, n_aug, o.seed);
      break;
    case AugmentMethod::kEntityReplacement: {
      const CompletionModel model =
          o.model.empty() ? train_completion_model(split, config).model : load_model(o.model);
      set = augment_entity_replacement(split, model, n_aug, o.seed);
      break;
    }
    case AugmentMethod::kRandomMlp:
    case AugmentMethod::kRandomCostco: {
      const auto kind =
          method == AugmentMethod::kRandomMlp ? PredictorKind::kMlp : PredictorKind::kCostco;
      const auto predictor = train_value_predictor(kind, split, config, o.channels);
      set = augment_random(split, predictor, n_aug, o.seed, o.Threads());
      break;
    }
  }
  if (o.clamp) {
    const auto [lo, hi] = std::ranges::minmax(split.train, {}, &Cell::value);
    clamp_values(set, lo.value, hi.value);
  }
  save_augmentation(set, split.dims, o.out);
  std::cout << "wrote " << set.size() << " " << to_string(method) << " cells to " << o.out << "\n";
}

void RunPipeline(const Options& o) {
  ExperimentConfig config;
  if (!o.config.empty()) config = load_experiment_config(o.config);
  if (o.threads || std::getenv("DAIN_THREADS")) config.threads = o.Threads();
  config.validate();

  DatasetSplit split;
  if (!o.split_dir.empty()) {
    split = LoadSplit(o.split_dir, o.seed);
  } else if (!o.input.empty()) {
    split = split_dataset(LoadTensor(o.input, o.order, o.dims), o.seed);
  } else {
    throw ArgumentError("pipeline needs --input or --split-dir");
  }
  const ExperimentReport report = run_pipeline(split, config);
  write_report(report, o.out);
  for (const auto& line : timing_profile(report)) std::cout << line << "\n";
  std::size_t failed = 0;
  for (const auto& t : report.trials) failed += !t.ok();
  std::cout << report.trials.size() << " trials, " << failed << " failed; report in " << o.out
            << "\n";
}

int Main(int argc, char** argv) {
  CLI::App app{"Influence-guided data augmentation for sparse tensor completion."};
  app.require_subcommand(1);
  app.footer(
      "Tensor files hold one cell per line: zero-based integer indices then a value.\n"
      "Hyperparameter presets (--preset):\n" +
      DescribePreset("full", TrainConfig::full()) + DescribePreset("desk", TrainConfig::desk()) +
      "Environment: DAIN_THREADS sets the default worker count.");

  Options o;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--seed", o.seed, "Master seed; stages draw named substreams from it")
        ->capture_default_str();
    sub->add_option("--threads", o.threads, "Worker threads (default: DAIN_THREADS or 1)");
  };
  auto tensor_input = [&](CLI::App* sub, bool required) {
    auto* in = sub->add_option("--input", o.input, "Tensor file")->check(CLI::ExistingFile);
    if (required) in->required();
    sub->add_option("--order", o.order, "Tensor order (default: inferred from the file)");
    sub->add_option("--dims", o.dims, "Explicit shape, e.g. 30,30,30")->delimiter(',');
  };
  auto split_input = [&](CLI::App* sub, bool required) {
    auto* opt = sub->add_option("--split-dir", o.split_dir,
                                "Directory with train.txt, val.txt and test.txt")
                    ->check(CLI::ExistingDirectory);
    if (required) opt->required();
  };

  auto* synth = app.add_subcommand("synth", "Generate a noisy low-rank CP tensor");
  common(synth);
  synth->add_option("--dims", o.dims, "Shape, e.g. 30,30,30")->delimiter(',')->required();
  synth->add_option("--nnz", o.nnz, "Number of observed cells")->required();
  synth->add_option("--rank", o.rank, "CP rank")->capture_default_str();
  synth->add_option("--noise", o.noise, "Gaussian noise standard deviation")->capture_default_str();
  synth->add_option("--out", o.out, "Output tensor file")->required();

  auto* split = app.add_subcommand("split", "Split a tensor 72/18/10 into train/val/test");
  common(split);
  tensor_input(split, true);
  split->add_option("--negatives", o.negatives, "Zero-valued cells to add before splitting");
  split->add_option("--out", o.out, "Output directory")->required();

  auto* train = app.add_subcommand("train", "Train the completion model and keep checkpoints");
  common(train);
  split_input(train, true);
  o.train.Register(train);
  train->add_option("--out", o.out, "Output model file")->required();
  train->add_option("--checkpoints-out", o.checkpoints_out, "Output checkpoint file");

  auto* influence = app.add_subcommand("influence", "Score every training cell's influence");
  common(influence);
  split_input(influence, true);
  influence->add_option("--checkpoints", o.checkpoints, "Checkpoint file from train")
      ->check(CLI::ExistingFile)
      ->required();
  influence->add_option("--out", o.out, "Output cell importance CSV")->required();

  auto* entity = app.add_subcommand("entity", "Derive per-entity importance from cell importance");
  common(entity);
  split_input(entity, true);
  entity->add_option("--cit", o.cit, "Cell importance CSV")->check(CLI::ExistingFile)->required();
  entity->add_option("--method", o.entity_method, "Aggregation method")
      ->check(CLI::IsMember({"aggregate", "cp"}))
      ->capture_default_str();
  entity->add_option("--cp-lambda", o.cp.lambda, "Rank-1 CP L2 weight")->capture_default_str();
  entity->add_option("--cp-epochs", o.cp.epochs, "Rank-1 CP gradient steps")->capture_default_str();
  entity->add_option("--cp-lr", o.cp.learning_rate, "Rank-1 CP step size")->capture_default_str();
  entity->add_option("--out", o.out, "Output prefix; writes <prefix><n>.csv per dimension")
      ->required();

  auto* augment = app.add_subcommand("augment", "Generate augmentation cells");
  common(augment);
  split_input(augment, true);
  augment
      ->add_option("--method", o.method,
                   "dain, duplication, entity_replacement, random_mlp or random_costco")
      ->required();
  augment->add_option("--ratio", o.ratio, "Augmentation size as a fraction of |train|")
      ->required();
  augment->add_option("--entity-prefix", o.entity_prefix, "Entity importance prefix (dain)");
  augment->add_option("--model", o.model,
                      "Completion model file (entity_replacement; trained if omitted)");
  augment->add_option("--predictor", o.predictor, "Value predictor for dain")
      ->check(CLI::IsMember({"mlp", "costco"}))
      ->capture_default_str();
  augment->add_option("--channels", o.channels, "CoSTCo channel count")->capture_default_str();
  augment->add_flag("--clamp", o.clamp, "Clamp imputed values to the training value range");
  o.train.Register(augment);
  augment->add_option("--out", o.out, "Output tensor file")->required();

  auto* pipeline = app.add_subcommand("pipeline", "Run the full augmentation experiment");
  common(pipeline);
  tensor_input(pipeline, false);
  split_input(pipeline, false);
  pipeline->add_option("--config", o.config, "Experiment config file")->check(CLI::ExistingFile);
  pipeline->add_option("--out", o.out, "Report directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::string message = e.what();
    std::replace(message.begin(), message.end(), '\n', ' ');
    std::cerr << "error: usage: " << message << "\n";
    return 2;
  }

  try {
    if (*synth) RunSynth(o);
    if (*split) RunSplit(o);
    if (*train) RunTrain(o);
    if (*influence) RunInfluence(o);
    if (*entity) RunEntity(o);
    if (*augment) RunAugment(o);
    if (*pipeline) RunPipeline(o);
  } catch (const Error& e) {
    // what() already starts with the category.
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: io: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace
}  // namespace dain

int main(int argc, char** argv) { return dain::Main(argc, argv); }
