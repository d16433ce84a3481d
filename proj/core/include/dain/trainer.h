#ifndef DAIN_TRAINER_H_
#define DAIN_TRAINER_H_

#include <cstddef>
#include <span>
#include <vector>

#include "dain/costco.h"
#include "dain/model.h"
#include "dain/tensor.h"

namespace dain {

// Adam with bias-corrected moment estimates.
class Adam {
 public:
  Adam(std::size_t size, double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
       double epsilon = 1e-8);

  void step(std::span<double> params, std::span<const double> grad);
  long steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<double> m_, v_;
};

// Parameter snapshots taken at epoch ends, each with the step size used to
// weight it during influence tracing. Snapshots are independent deep copies.
template <class Model>
struct Checkpoints {
  std::vector<Model> snapshots;
  std::vector<double> step_sizes;
  std::vector<int> epochs;  // 1-based

  std::size_t size() const { return snapshots.size(); }
  void validate() const;
};

using CheckpointSet = Checkpoints<CompletionModel>;

struct EpochStats {
  int epoch = 0;
  double train_rmse = 0.0;  // accumulated over the epoch's mini-batches
  double val_rmse = 0.0;    // after the epoch's last update
};

template <class Model>
struct TrainResult {
  Model model;  // parameters from the best validation epoch
  Checkpoints<Model> checkpoints;
  std::vector<EpochStats> history;
  int best_epoch = 0;
  int epochs_run = 0;
};

// Minimizes the summed squared error over `train` by mini-batch Adam,
// shuffling each epoch from the config seed. Stops once validation RMSE has
// not improved for `patience` epochs, or at max_epochs. Throws
// DivergenceError if a batch loss or parameter becomes non-finite.
template <class Model>
TrainResult<Model> fit(Model model, std::span<const Cell> train, std::span<const Cell> val,
                       const TrainConfig& config, bool keep_checkpoints = true);

// Trains a fresh completion model on split.train with early stopping on split.val.
TrainResult<CompletionModel> train_completion_model(const DatasetSplit& split,
                                                    const TrainConfig& config);

}  // namespace dain

#endif  // DAIN_TRAINER_H_
