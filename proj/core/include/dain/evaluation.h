#ifndef DAIN_EVALUATION_H_
#define DAIN_EVALUATION_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dain/augmentation.h"
#include "dain/entity_importance.h"
#include "dain/model.h"
#include "dain/tensor.h"

namespace dain {

enum class EntityMethod { kAggregate, kCpRank1 };

struct ExperimentConfig {
  // Augmentation sizes as fractions of |train|; sorted, in [0, 0.5], with 0.
  std::vector<double> ratios = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
  std::vector<AugmentMethod> methods = {AugmentMethod::kDain, AugmentMethod::kDuplication,
                                        AugmentMethod::kEntityReplacement,
                                        AugmentMethod::kRandomMlp, AugmentMethod::kRandomCostco};
  int repeats = 10;
  // Trial seeds; 1..repeats when empty.
  std::vector<std::uint64_t> seeds;
  // Embedding model and value predictors.
  TrainConfig train_config = TrainConfig::desk();
  // Model retrained on each augmented tensor to measure test RMSE.
  TrainConfig downstream_config = TrainConfig::desk();
  EntityMethod entity_method = EntityMethod::kAggregate;
  CpRank1Options cp;
  PredictorKind dain_predictor = PredictorKind::kCostco;
  int costco_channels = 32;
  // Clamp imputed values to the observed training range.
  bool clamp = false;
  int threads = 1;

  void validate() const;
  std::vector<std::uint64_t> resolved_seeds() const;
};

// "key = value" lines; '#' starts a comment. Keys: ratios, methods,
// repeats, seeds, entity_method, dain_predictor, costco_channels, clamp,
// threads, cp.{lambda,epochs,learning_rate}, and train.* / downstream.*
// with {preset,embedding_len,layer_sizes,batch_size,learning_rate,
// max_epochs,patience,checkpoint_step_size}. Unknown or repeated keys are a
// ConfigError.
ExperimentConfig parse_experiment_config(std::istream& in);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct TrialResult {
  AugmentMethod method = AugmentMethod::kDain;
  double ratio = 0.0;
  std::uint64_t seed = 0;
  std::size_t n_aug = 0;
  double rmse = 0.0;
  std::string error;  // empty on success

  bool ok() const { return error.empty(); }
};

// Wall-clock seconds per stage. Stages that a row's method does not use
// are zero.
struct StageTimings {
  double embedding_training = 0.0;
  double cell_importance = 0.0;
  double entity_importance = 0.0;
  double predictor_training = 0.0;
  double augmentation = 0.0;  // sampling and value inference
  double downstream_training = 0.0;

  // Cost of producing the augmented tensor: every stage except downstream
  // training. At ratio 0 this is the embedding model's training time.
  double total() const;
};

struct TimingRow {
  AugmentMethod method = AugmentMethod::kDain;
  double ratio = 0.0;
  std::uint64_t seed = 0;
  std::size_t n_aug = 0;
  StageTimings stages;
};

struct SummaryRow {
  AugmentMethod method = AugmentMethod::kDain;
  double ratio = 0.0;
  std::vector<double> values;  // successful per-seed RMSEs, in seed order
  double mean = 0.0;
  double stddev = 0.0;
  // Welch p-value against the best method at the largest ratio; only set
  // on that ratio's rows for methods other than the best.
  std::optional<double> p_value;
};

struct ExperimentReport {
  std::vector<TrialResult> trials;
  std::vector<SummaryRow> summary;
  std::vector<TimingRow> timings;
  std::optional<AugmentMethod> best_method;

  const SummaryRow* find(AugmentMethod method, double ratio) const;
};

// Runs every (seed, method, ratio) trial: train the embedding model, trace
// cell importance, derive entity importance, augment, then retrain a fresh
// downstream model on train + augmentation and score it on the untouched
// test set. Ratio 0 is the shared no-augmentation control. A failing trial
// is recorded in TrialResult::error instead of aborting the run.
ExperimentReport run_pipeline(const DatasetSplit& data, const ExperimentConfig& config);

// Per (method, ratio) mean stage timings over seeds, as CSV rows with a
// header: method,ratio,n_aug,<stages...>,total.
std::vector<std::string> timing_profile(const ExperimentReport& report);

// CSV writers. results: method,ratio,seed,rmse. summary: method,ratio,n,
// mean,std,p_value. Timing values are wall-clock and not reproducible.
void write_results_csv(const ExperimentReport& report, std::ostream& out);
void write_summary_csv(const ExperimentReport& report, std::ostream& out);
void write_timing_csv(const ExperimentReport& report, std::ostream& out);
void write_report(const ExperimentReport& report, const std::filesystem::path& dir);

}  // namespace dain

#endif  // DAIN_EVALUATION_H_
