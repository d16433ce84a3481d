#ifndef DAIN_COSTCO_H_
#define DAIN_COSTCO_H_

#include <cstdint>
#include <span>
#include <vector>

#include "dain/tensor.h"

namespace dain {

// Convolutional completion model over stacked entity embeddings.
//
// The N entity embeddings of a cell form an N x R grid. A first convolution
// with C channels and a 1 x R kernel collapses the embedding axis (C x N),
// a second with C channels and an N x 1 kernel collapses the mode axis (C),
// followed by FC C -> C and FC C -> 1. ReLU after every layer but the last.
//
// Flat parameter layout: embedding tables, then conv1 (C x R, bias C),
// conv2 (C x C x N, bias C), fc1 (C x C, bias C), fc2 (1 x C, bias 1).
class CostcoModel {
 public:
  CostcoModel() = default;
  CostcoModel(Dims dims, int embedding_len, int channels, std::uint64_t seed);

  const Dims& dims() const { return dims_; }
  int embedding_len() const { return embedding_len_; }
  int channels() const { return channels_; }

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

  // Output shapes as (channels, rows, cols) for the two convolutions.
  struct Shape {
    int channels, rows, cols;
  };
  Shape conv1_output_shape() const { return {channels_, static_cast<int>(dims_.size()), 1}; }
  Shape conv2_output_shape() const { return {channels_, 1, 1}; }
  int fc_input_width() const { return channels_; }

  struct Workspace {
    std::vector<double> h1_pre, h1, h2_pre, h2, h3_pre, h3;
    std::vector<double> d1, d2, d3;
  };
  Workspace make_workspace() const;

  double predict(std::span<const std::int64_t> cell) const;
  double predict(std::span<const std::int64_t> cell, Workspace& ws) const;

  double accumulate_gradient(std::span<const std::int64_t> cell, double value,
                             std::span<double> grad, Workspace& ws) const;

 private:
  double forward(std::span<const std::int64_t> cell, Workspace& ws) const;
  const double* embedding_ptr(std::size_t dim, std::int64_t entity) const;

  Dims dims_;
  int embedding_len_ = 0;
  int channels_ = 0;
  std::vector<std::size_t> embedding_offset_;
  std::size_t conv1_w_ = 0, conv1_b_ = 0, conv2_w_ = 0, conv2_b_ = 0;
  std::size_t fc1_w_ = 0, fc1_b_ = 0, fc2_w_ = 0, fc2_b_ = 0;
  std::vector<double> params_;
};

}  // namespace dain

#endif  // DAIN_COSTCO_H_
