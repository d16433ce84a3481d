#include "dain/costco.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "dain/errors.h"
#include "dain/random.h"

namespace dain {

CostcoModel::CostcoModel(Dims dims, int embedding_len, int channels, std::uint64_t seed)
    : dims_(std::move(dims)), embedding_len_(embedding_len), channels_(channels) {
  if (dims_.empty()) throw ArgumentError("model needs at least one dimension");
  if (embedding_len_ <= 0 || channels_ <= 0) {
    throw ConfigError("embedding_len and channels must be positive");
  }
  const auto N = dims_.size();
  const auto R = static_cast<std::size_t>(embedding_len_);
  const auto C = static_cast<std::size_t>(channels_);

  std::size_t offset = 0;
  for (auto d : dims_) {
    if (d <= 0) throw ShapeError("dimensions must be positive");
    embedding_offset_.push_back(offset);
    offset += static_cast<std::size_t>(d) * R;
  }
  conv1_w_ = offset; offset += C * R;
  conv1_b_ = offset; offset += C;
  conv2_w_ = offset; offset += C * C * N;
  conv2_b_ = offset; offset += C;
  fc1_w_ = offset; offset += C * C;
  fc1_b_ = offset; offset += C;
  fc2_w_ = offset; offset += C;
  fc2_b_ = offset; offset += 1;
  params_.assign(offset, 0.0);

  auto rng = make_rng(seed, "init");
  auto fill = [&](std::size_t begin, std::size_t count, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (std::size_t k = 0; k < count; ++k) params_[begin + k] = u(rng);
  };
  fill(0, conv1_w_, R);
  fill(conv1_w_, C * R, R);
  fill(conv2_w_, C * C * N, C * N);
  fill(fc1_w_, C * C, C);
  fill(fc2_w_, C, C);
}

const double* CostcoModel::embedding_ptr(std::size_t dim, std::int64_t entity) const {
  return params_.data() + embedding_offset_[dim] +
         static_cast<std::size_t>(entity) * static_cast<std::size_t>(embedding_len_);
}

CostcoModel::Workspace CostcoModel::make_workspace() const {
  const auto N = dims_.size();
  const auto C = static_cast<std::size_t>(channels_);
  Workspace ws;
  ws.h1_pre.resize(C * N);
  ws.h1.resize(C * N);
  ws.h2_pre.resize(C);
  ws.h2.resize(C);
  ws.h3_pre.resize(C);
  ws.h3.resize(C);
  ws.d1.resize(C * N);
  ws.d2.resize(C);
  ws.d3.resize(C);
  return ws;
}

double CostcoModel::forward(std::span<const std::int64_t> cell, Workspace& ws) const {
  check_index(cell, dims_);
  const auto N = dims_.size();
  const auto R = static_cast<std::size_t>(embedding_len_);
  const auto C = static_cast<std::size_t>(channels_);
  const double* p = params_.data();

  // conv1: h1[c][n] over the embedding axis of mode n.
  for (std::size_t c = 0; c < C; ++c) {
    const double* k = p + conv1_w_ + c * R;
    for (std::size_t n = 0; n < N; ++n) {
      const double* e = embedding_ptr(n, cell[n]);
      double s = p[conv1_b_ + c];
      for (std::size_t r = 0; r < R; ++r) s += k[r] * e[r];
      ws.h1_pre[c * N + n] = s;
      ws.h1[c * N + n] = std::max(0.0, s);
    }
  }
  // conv2: mixes all input channels over the mode axis.
  for (std::size_t c = 0; c < C; ++c) {
    const double* k = p + conv2_w_ + c * C * N;
    double s = p[conv2_b_ + c];
    for (std::size_t j = 0; j < C * N; ++j) s += k[j] * ws.h1[j];
    ws.h2_pre[c] = s;
    ws.h2[c] = std::max(0.0, s);
  }
  for (std::size_t c = 0; c < C; ++c) {
    const double* w = p + fc1_w_ + c * C;
    double s = p[fc1_b_ + c];
    for (std::size_t j = 0; j < C; ++j) s += w[j] * ws.h2[j];
    ws.h3_pre[c] = s;
    ws.h3[c] = std::max(0.0, s);
  }
  double out = p[fc2_b_];
  for (std::size_t j = 0; j < C; ++j) out += p[fc2_w_ + j] * ws.h3[j];
  return out;
}

double CostcoModel::predict(std::span<const std::int64_t> cell) const {
  auto ws = make_workspace();
  return forward(cell, ws);
}

double CostcoModel::predict(std::span<const std::int64_t> cell, Workspace& ws) const {
  return forward(cell, ws);
}

double CostcoModel::accumulate_gradient(std::span<const std::int64_t> cell, double value,
                                        std::span<double> grad, Workspace& ws) const {
  const double residual = value - forward(cell, ws);
  const auto N = dims_.size();
  const auto R = static_cast<std::size_t>(embedding_len_);
  const auto C = static_cast<std::size_t>(channels_);
  const double* p = params_.data();
  double* g = grad.data();

  const double e = -2.0 * residual;
  g[fc2_b_] += e;
  for (std::size_t j = 0; j < C; ++j) {
    g[fc2_w_ + j] += e * ws.h3[j];
    ws.d3[j] = ws.h3_pre[j] > 0.0 ? e * p[fc2_w_ + j] : 0.0;
  }

  std::fill(ws.d2.begin(), ws.d2.end(), 0.0);
  for (std::size_t c = 0; c < C; ++c) {
    const double d = ws.d3[c];
    if (d == 0.0) continue;
    g[fc1_b_ + c] += d;
    for (std::size_t j = 0; j < C; ++j) {
      g[fc1_w_ + c * C + j] += d * ws.h2[j];
      ws.d2[j] += d * p[fc1_w_ + c * C + j];
    }
  }
  for (std::size_t c = 0; c < C; ++c) {
    if (ws.h2_pre[c] <= 0.0) ws.d2[c] = 0.0;
  }

  std::fill(ws.d1.begin(), ws.d1.end(), 0.0);
  for (std::size_t c = 0; c < C; ++c) {
    const double d = ws.d2[c];
    if (d == 0.0) continue;
    g[conv2_b_ + c] += d;
    for (std::size_t j = 0; j < C * N; ++j) {
      g[conv2_w_ + c * C * N + j] += d * ws.h1[j];
      ws.d1[j] += d * p[conv2_w_ + c * C * N + j];
    }
  }

  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t n = 0; n < N; ++n) {
      if (ws.h1_pre[c * N + n] <= 0.0) continue;
      const double d = ws.d1[c * N + n];
      if (d == 0.0) continue;
      g[conv1_b_ + c] += d;
      const double* emb = embedding_ptr(n, cell[n]);
      const std::size_t emb_off = embedding_offset_[n] + static_cast<std::size_t>(cell[n]) * R;
      for (std::size_t r = 0; r < R; ++r) {
        g[conv1_w_ + c * R + r] += d * emb[r];
        g[emb_off + r] += d * p[conv1_w_ + c * R + r];
      }
    }
  }
  return residual * residual;
}

}  // namespace dain
