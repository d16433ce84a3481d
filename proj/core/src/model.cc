#include "dain/model.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "dain/errors.h"
#include "dain/random.h"

namespace dain {

TrainConfig TrainConfig::full() { return TrainConfig{}; }

TrainConfig TrainConfig::desk() {
  TrainConfig c;
  c.embedding_len = 16;
  c.layer_sizes = {64, 32};
  c.batch_size = 256;
  c.learning_rate = 0.003;
  c.max_epochs = 200;
  return c;
}

void TrainConfig::validate() const {
  if (embedding_len <= 0) throw ConfigError("embedding_len must be positive");
  if (batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (!(learning_rate > 0)) throw ConfigError("learning_rate must be positive");
  if (max_epochs <= 0) throw ConfigError("max_epochs must be positive");
  if (patience <= 0 || patience > max_epochs) {
    throw ConfigError("patience must be in [1, max_epochs]");
  }
  if (!(checkpoint_step_size > 0)) throw ConfigError("checkpoint_step_size must be positive");
  for (int w : layer_sizes) {
    if (w <= 0) throw ConfigError("layer sizes must be positive");
  }
}

void require_nonempty(std::span<const Cell> cells, const char* what) {
  if (cells.empty()) throw ArgumentError(std::string(what) + ": empty cell list");
}

CompletionModel::CompletionModel(Dims dims, int embedding_len, std::vector<int> layer_sizes,
                                 std::uint64_t seed)
    : dims_(std::move(dims)), embedding_len_(embedding_len), layer_sizes_(std::move(layer_sizes)) {
  if (dims_.empty()) throw ArgumentError("model needs at least one dimension");
  for (auto d : dims_) {
    if (d <= 0) throw ShapeError("dimensions must be positive");
  }
  if (embedding_len_ <= 0) throw ConfigError("embedding_len must be positive");

  std::size_t offset = 0;
  for (auto d : dims_) {
    embedding_offset_.push_back(offset);
    offset += static_cast<std::size_t>(d) * embedding_len_;
  }
  int in = static_cast<int>(dims_.size()) * embedding_len_;
  for (std::size_t l = 0; l <= layer_sizes_.size(); ++l) {
    const int out = l < layer_sizes_.size() ? layer_sizes_[l] : 1;
    if (out <= 0) throw ConfigError("layer sizes must be positive");
    layer_in_.push_back(in);
    layer_out_.push_back(out);
    weight_offset_.push_back(offset);
    offset += static_cast<std::size_t>(in) * out;
    bias_offset_.push_back(offset);
    offset += static_cast<std::size_t>(out);
    in = out;
  }
  params_.assign(offset, 0.0);

  auto rng = make_rng(seed, "init");
  auto fill = [&](std::size_t begin, std::size_t count, int fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (std::size_t k = 0; k < count; ++k) params_[begin + k] = u(rng);
  };
  for (std::size_t n = 0; n < dims_.size(); ++n) {
    fill(embedding_offset_[n], static_cast<std::size_t>(dims_[n]) * embedding_len_, embedding_len_);
  }
  for (std::size_t l = 0; l < layer_in_.size(); ++l) {
    fill(weight_offset_[l], static_cast<std::size_t>(layer_in_[l]) * layer_out_[l], layer_in_[l]);
  }
}

CompletionModel init_model(const Dims& dims, const TrainConfig& config) {
  config.validate();
  return CompletionModel(dims, config.embedding_len, config.layer_sizes, config.seed);
}

std::span<const double> CompletionModel::embedding(std::size_t dim, std::int64_t entity) const {
  return std::span<const double>(params_).subspan(
      embedding_offset_[dim] + static_cast<std::size_t>(entity) * embedding_len_, embedding_len_);
}

std::span<const double> CompletionModel::embedding_table(std::size_t dim) const {
  return std::span<const double>(params_).subspan(
      embedding_offset_[dim], static_cast<std::size_t>(dims_[dim]) * embedding_len_);
}

std::span<double> CompletionModel::weights(std::size_t layer) {
  return std::span<double>(params_).subspan(
      weight_offset_[layer], static_cast<std::size_t>(layer_in_[layer]) * layer_out_[layer]);
}

std::span<const double> CompletionModel::weights(std::size_t layer) const {
  return std::span<const double>(params_).subspan(
      weight_offset_[layer], static_cast<std::size_t>(layer_in_[layer]) * layer_out_[layer]);
}

std::span<double> CompletionModel::bias(std::size_t layer) {
  return std::span<double>(params_).subspan(bias_offset_[layer], layer_out_[layer]);
}

std::span<const double> CompletionModel::bias(std::size_t layer) const {
  return std::span<const double>(params_).subspan(bias_offset_[layer], layer_out_[layer]);
}

CompletionModel::Workspace CompletionModel::make_workspace() const {
  Workspace ws;
  for (std::size_t l = 0; l < layer_in_.size(); ++l) {
    ws.activations.emplace_back(layer_in_[l]);
    ws.preactivations.emplace_back(layer_out_[l]);
  }
  return ws;
}

void CompletionModel::forward(std::span<const std::int64_t> cell, Workspace& ws) const {
  check_index(cell, dims_);
  const auto R = static_cast<std::size_t>(embedding_len_);
  auto& input = ws.activations[0];
  for (std::size_t n = 0; n < dims_.size(); ++n) {
    auto e = embedding(n, cell[n]);
    std::copy(e.begin(), e.end(), input.begin() + static_cast<std::ptrdiff_t>(n * R));
  }
  const std::size_t L = layer_in_.size();
  for (std::size_t l = 0; l < L; ++l) {
    const auto in = static_cast<std::size_t>(layer_in_[l]);
    const double* W = params_.data() + weight_offset_[l];
    const double* b = params_.data() + bias_offset_[l];
    const auto& x = ws.activations[l];
    auto& pre = ws.preactivations[l];
    for (int o = 0; o < layer_out_[l]; ++o) {
      const double* row = W + static_cast<std::size_t>(o) * in;
      double s = b[o];
      for (std::size_t i = 0; i < in; ++i) s += row[i] * x[i];
      pre[o] = s;
    }
    if (l + 1 < L) {
      auto& next = ws.activations[l + 1];
      for (int o = 0; o < layer_out_[l]; ++o) next[o] = std::max(0.0, pre[o]);
    }
  }
}

double CompletionModel::predict(std::span<const std::int64_t> cell) const {
  auto ws = make_workspace();
  return predict(cell, ws);
}

double CompletionModel::predict(std::span<const std::int64_t> cell, Workspace& ws) const {
  forward(cell, ws);
  return ws.preactivations.back()[0];
}

double CompletionModel::accumulate_gradient(std::span<const std::int64_t> cell, double value,
                                            std::span<double> grad, Workspace& ws) const {
  forward(cell, ws);
  const double residual = value - ws.preactivations.back()[0];
  const std::size_t L = layer_in_.size();

  // delta holds dLoss/d(preactivation) of the current layer.
  ws.delta.assign(1, -2.0 * residual);
  for (std::size_t l = L; l-- > 0;) {
    const auto in = static_cast<std::size_t>(layer_in_[l]);
    const auto out = static_cast<std::size_t>(layer_out_[l]);
    const double* W = params_.data() + weight_offset_[l];
    double* gW = grad.data() + weight_offset_[l];
    double* gb = grad.data() + bias_offset_[l];
    const auto& x = ws.activations[l];
    ws.delta_prev.assign(in, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      const double d = ws.delta[o];
      if (d == 0.0) continue;
      gb[o] += d;
      double* gRow = gW + o * in;
      const double* row = W + o * in;
      for (std::size_t i = 0; i < in; ++i) {
        gRow[i] += d * x[i];
        ws.delta_prev[i] += d * row[i];
      }
    }
    if (l > 0) {
      const auto& pre = ws.preactivations[l - 1];
      for (std::size_t i = 0; i < in; ++i) {
        if (pre[i] <= 0.0) ws.delta_prev[i] = 0.0;
      }
    }
    std::swap(ws.delta, ws.delta_prev);
  }

  const auto R = static_cast<std::size_t>(embedding_len_);
  for (std::size_t n = 0; n < dims_.size(); ++n) {
    double* gE = grad.data() + embedding_offset_[n] + static_cast<std::size_t>(cell[n]) * R;
    for (std::size_t r = 0; r < R; ++r) gE[r] += ws.delta[n * R + r];
  }
  return residual * residual;
}

std::size_t CompletionModel::last_layer_gradient_size() const {
  return static_cast<std::size_t>(layer_in_.back()) + 1;
}

std::vector<double> CompletionModel::last_layer_gradient(std::span<const std::int64_t> cell,
                                                         double value) const {
  auto ws = make_workspace();
  return last_layer_gradient(cell, value, ws);
}

std::vector<double> CompletionModel::last_layer_gradient(std::span<const std::int64_t> cell,
                                                         double value, Workspace& ws) const {
  forward(cell, ws);
  const double e = -2.0 * (value - ws.preactivations.back()[0]);
  const auto& z = ws.activations.back();
  std::vector<double> g(z.size() + 1);
  for (std::size_t i = 0; i < z.size(); ++i) g[i] = e * z[i];
  g.back() = e;
  return g;
}

}  // namespace dain
