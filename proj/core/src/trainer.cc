#include "dain/trainer.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dain/errors.h"
#include "dain/random.h"

namespace dain {

Adam::Adam(std::size_t size, double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon), m_(size), v_(size) {}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double g = grad[k];
    m_[k] = beta1_ * m_[k] + (1.0 - beta1_) * g;
    v_[k] = beta2_ * v_[k] + (1.0 - beta2_) * g * g;
    params[k] -= lr_ * (m_[k] / c1) / (std::sqrt(v_[k] / c2) + eps_);
  }
}

template <class Model>
void Checkpoints<Model>::validate() const {
  if (snapshots.empty()) throw ArgumentError("checkpoint set is empty");
  if (step_sizes.size() != snapshots.size() || epochs.size() != snapshots.size()) {
    throw ShapeError("checkpoint lists have unequal lengths");
  }
  for (double eta : step_sizes) {
    if (!(eta > 0)) throw ArgumentError("checkpoint step sizes must be positive");
  }
}

template <class Model>
TrainResult<Model> fit(Model model, std::span<const Cell> train, std::span<const Cell> val,
                       const TrainConfig& config, bool keep_checkpoints) {
  config.validate();
  require_nonempty(train, "training set");
  require_nonempty(val, "validation set");

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto shuffle_rng = make_rng(config.seed, "shuffle");

  Adam adam(model.parameters().size(), config.learning_rate);
  std::vector<double> grad(model.parameters().size());
  auto ws = model.make_workspace();

  TrainResult<Model> result;
  double best_val = std::numeric_limits<double>::infinity();
  int since_best = 0;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      std::fill(grad.begin(), grad.end(), 0.0);
      double batch_loss = 0.0;
      for (std::size_t k = start; k < stop; ++k) {
        const Cell& cell = train[order[k]];
        batch_loss += model.accumulate_gradient(cell.index, cell.value, grad, ws);
      }
      if (!std::isfinite(batch_loss)) {
        throw DivergenceError("non-finite training loss at epoch " + std::to_string(epoch));
      }
      epoch_loss += batch_loss;
      adam.step(model.parameters(), grad);
    }
    for (double p : model.parameters()) {
      if (!std::isfinite(p)) {
        throw DivergenceError("non-finite parameter after epoch " + std::to_string(epoch));
      }
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_rmse = std::sqrt(epoch_loss / static_cast<double>(train.size()));
    stats.val_rmse = rmse(model, val);
    if (!std::isfinite(stats.val_rmse)) {
      throw DivergenceError("non-finite validation loss at epoch " + std::to_string(epoch));
    }
    result.history.push_back(stats);
    result.epochs_run = epoch;
    if (keep_checkpoints) {
      result.checkpoints.snapshots.push_back(model);
      result.checkpoints.step_sizes.push_back(config.checkpoint_step_size);
      result.checkpoints.epochs.push_back(epoch);
    }

    if (stats.val_rmse < best_val) {
      best_val = stats.val_rmse;
      result.best_epoch = epoch;
      result.model = model;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  return result;
}

TrainResult<CompletionModel> train_completion_model(const DatasetSplit& split,
                                                    const TrainConfig& config) {
  return fit(init_model(split.dims, config), split.train, split.val, config);
}

template struct Checkpoints<CompletionModel>;
template struct Checkpoints<CostcoModel>;
template TrainResult<CompletionModel> fit(CompletionModel, std::span<const Cell>,
                                          std::span<const Cell>, const TrainConfig&, bool);
template TrainResult<CostcoModel> fit(CostcoModel, std::span<const Cell>, std::span<const Cell>,
                                      const TrainConfig&, bool);

}  // namespace dain
