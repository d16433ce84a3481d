#ifndef DAIN_MODEL_H_
#define DAIN_MODEL_H_

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "dain/tensor.h"

namespace dain {

// Hyperparameters for training any of the embedding models.
struct TrainConfig {
  int embedding_len = 50;
  std::vector<int> layer_sizes = {1024, 1024, 128};
  int batch_size = 1024;
  double learning_rate = 0.001;
  int max_epochs = 50;
  int patience = 10;
  // Step size attached to every epoch-end checkpoint for influence tracing.
  double checkpoint_step_size = 0.001;
  std::uint64_t seed = 0;

  // Full-scale configuration: R=50, [1024,1024,128], batch 1024.
  static TrainConfig full();
  // Small configuration for quick runs and CI: R=16, [64,32], batch 256,
  // learning rate 0.003, up to 200 epochs.
  static TrainConfig desk();

  void validate() const;
};

// Embedding-based MLP completion model.
//
// Each entity of dimension n owns an embedding row of length R. A cell's
// input is the concatenation of its N entity embeddings, fed through M ReLU
// hidden layers and a final linear layer with a single output.
//
// All parameters live in one flat vector, laid out as: embedding tables in
// dimension order (each I_n x R, row-major), then for each layer its weight
// matrix (out x in, row-major) followed by its bias.
class CompletionModel {
 public:
  CompletionModel() = default;
  // Seeded uniform init in +-1/sqrt(fan_in) (R for embeddings); zero biases.
  CompletionModel(Dims dims, int embedding_len, std::vector<int> layer_sizes,
                  std::uint64_t seed);

  const Dims& dims() const { return dims_; }
  std::size_t order() const { return dims_.size(); }
  int embedding_len() const { return embedding_len_; }
  const std::vector<int>& layer_sizes() const { return layer_sizes_; }
  // Number of weight layers, M + 1.
  std::size_t num_layers() const { return layer_in_.size(); }
  int layer_inputs(std::size_t layer) const { return layer_in_[layer]; }
  int layer_outputs(std::size_t layer) const { return layer_out_[layer]; }

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

  std::span<const double> embedding(std::size_t dim, std::int64_t entity) const;
  std::span<const double> embedding_table(std::size_t dim) const;
  std::span<double> weights(std::size_t layer);
  std::span<const double> weights(std::size_t layer) const;
  std::span<double> bias(std::size_t layer);
  std::span<const double> bias(std::size_t layer) const;

  // Scratch buffers reused across forward/backward calls.
  struct Workspace {
    std::vector<std::vector<double>> activations;  // inputs to each layer
    std::vector<std::vector<double>> preactivations;
    std::vector<double> delta;
    std::vector<double> delta_prev;
  };
  Workspace make_workspace() const;

  double predict(std::span<const std::int64_t> cell) const;
  double predict(std::span<const std::int64_t> cell, Workspace& ws) const;

  // Adds d/dtheta (value - prediction)^2 into `grad` (same layout as
  // parameters()) and returns the squared error.
  double accumulate_gradient(std::span<const std::int64_t> cell, double value,
                             std::span<double> grad, Workspace& ws) const;

  // Gradient of (value - prediction)^2 with respect to the final layer only:
  // (e * Z_M, e) with e = -2 (value - prediction), weights first then bias.
  std::vector<double> last_layer_gradient(std::span<const std::int64_t> cell, double value) const;
  std::vector<double> last_layer_gradient(std::span<const std::int64_t> cell, double value,
                                          Workspace& ws) const;
  // Length of last_layer_gradient(): width(Z_M) + 1.
  std::size_t last_layer_gradient_size() const;

 private:
  void forward(std::span<const std::int64_t> cell, Workspace& ws) const;

  Dims dims_;
  int embedding_len_ = 0;
  std::vector<int> layer_sizes_;
  std::vector<int> layer_in_;
  std::vector<int> layer_out_;
  std::vector<std::size_t> embedding_offset_;
  std::vector<std::size_t> weight_offset_;
  std::vector<std::size_t> bias_offset_;
  std::vector<double> params_;
};

CompletionModel init_model(const Dims& dims, const TrainConfig& config);

void require_nonempty(std::span<const Cell> cells, const char* what);

// Root-mean-square prediction error over `cells`; ArgumentError if empty.
template <class Model>
double rmse(const Model& model, std::span<const Cell> cells) {
  require_nonempty(cells, "rmse");
  auto ws = model.make_workspace();
  double sum = 0.0;
  for (const auto& cell : cells) {
    const double err = cell.value - model.predict(cell.index, ws);
    sum += err * err;
  }
  return std::sqrt(sum / static_cast<double>(cells.size()));
}

}  // namespace dain

#endif  // DAIN_MODEL_H_
