#include "dain/costco.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "dain/augmentation.h"
#include "dain/errors.h"
#include "dain/model_io.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace dain {
namespace {

using testing::FiniteDifference;
using testing::RelativeError;

// Forward pass read straight from the documented flat parameter layout.
double ScalarCostco(const CostcoModel& m, std::span<const std::int64_t> cell) {
  const auto p = m.parameters();
  const std::size_t N = m.dims().size(), R = m.embedding_len(), C = m.channels();
  std::vector<std::size_t> emb(N);
  std::size_t off = 0;
  for (std::size_t n = 0; n < N; ++n) {
    emb[n] = off;
    off += static_cast<std::size_t>(m.dims()[n]) * R;
  }
  const std::size_t c1w = off, c1b = c1w + C * R, c2w = c1b + C, c2b = c2w + C * C * N;
  const std::size_t f1w = c2b + C, f1b = f1w + C * C, f2w = f1b + C, f2b = f2w + C;
  auto relu = [](double x) { return x > 0 ? x : 0.0; };

  std::vector<double> h1(C * N);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t n = 0; n < N; ++n) {
      double s = p[c1b + c];
      for (std::size_t r = 0; r < R; ++r) s += p[c1w + c * R + r] * p[emb[n] + cell[n] * R + r];
      h1[c * N + n] = relu(s);
    }
  }
  std::vector<double> h2(C), h3(C);
  for (std::size_t o = 0; o < C; ++o) {
    double s = p[c2b + o];
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t n = 0; n < N; ++n) s += p[c2w + (o * C + c) * N + n] * h1[c * N + n];
    }
    h2[o] = relu(s);
  }
  for (std::size_t o = 0; o < C; ++o) {
    double s = p[f1b + o];
    for (std::size_t j = 0; j < C; ++j) s += p[f1w + o * C + j] * h2[j];
    h3[o] = relu(s);
  }
  double out = p[f2b];
  for (std::size_t j = 0; j < C; ++j) out += p[f2w + j] * h3[j];
  EXPECT_EQ(f2b + 1, p.size());
  return out;
}

TEST(CostcoTest, LayerShapes) {
  const CostcoModel m({30, 30, 30}, 16, 32, 1);
  const auto c1 = m.conv1_output_shape();
  const auto c2 = m.conv2_output_shape();
  EXPECT_EQ(c1.channels, 32);
  EXPECT_EQ(c1.rows, 3);
  EXPECT_EQ(c1.cols, 1);
  EXPECT_EQ(c2.channels, 32);
  EXPECT_EQ(c2.rows, 1);
  EXPECT_EQ(c2.cols, 1);
  EXPECT_EQ(m.fc_input_width(), 32);
  EXPECT_EQ(m.parameters().size(),
            90u * 16u + 32u * 16u + 32u + 32u * 32u * 3u + 32u + 32u * 32u + 32u + 32u + 1u);
}

TEST(CostcoTest, ZeroNetworkReturnsOutputBias) {
  CostcoModel m({3, 3}, 2, 4, 1);
  std::ranges::fill(m.parameters(), 0.0);
  m.parameters().back() = -0.25;
  EXPECT_EQ(m.predict(Index{2, 1}), -0.25);
}

TEST(CostcoTest, MatchesScalarForward) {
  CostcoModel m({5, 6, 7}, 4, 6, 3);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  // Perturb biases so they are not all zero.
  for (auto& x : m.parameters()) x += 0.1 * u(rng);
  for (const auto& c : testing::RandomCells(m.dims(), 30, 8)) {
    const double expect = ScalarCostco(m, c.index);
    EXPECT_LE(std::abs(m.predict(c.index) - expect), 1e-12 * std::max(1.0, std::abs(expect)));
  }
}

TEST(CostcoTest, GradientMatchesFiniteDifferences) {
  CostcoModel m({3, 4, 5}, 3, 4, 7);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  for (auto& x : m.parameters()) x += u(rng);
  const auto batch = testing::RandomCells(m.dims(), 5, 9, -1.0, 1.0);

  std::vector<double> grad(m.parameters().size(), 0.0);
  auto ws = m.make_workspace();
  for (const auto& c : batch) m.accumulate_gradient(c.index, c.value, grad, ws);
  std::vector<std::size_t> all(grad.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto numeric = FiniteDifference(m.parameters(), all, [&] {
    double s = 0.0;
    for (const auto& c : batch) {
      const double e = c.value - m.predict(c.index);
      s += e * e;
    }
    return s;
  });
  double worst = 0.0;
  for (std::size_t k = 0; k < grad.size(); ++k) worst = std::max(worst, RelativeError(grad[k], numeric[k]));
  EXPECT_LT(worst, 1e-4);
}

TEST(CostcoTest, SerializationRoundTrip) {
  const CostcoModel m({4, 5}, 3, 6, 2);
  std::stringstream ss;
  write_costco(ss, m);
  const CostcoModel back = read_costco(ss);
  EXPECT_EQ(back.channels(), 6);
  EXPECT_TRUE(std::ranges::equal(back.parameters(), m.parameters()));
}

TEST(CostcoTest, BeatsZeroPredictorOnSynthetic) {
  const DatasetSplit split =
      split_dataset(generate_synthetic({{30, 30, 30}, 1350, 5, 0.01, 11}), 11);
  const ValuePredictor pred =
      train_value_predictor(PredictorKind::kCostco, split, TrainConfig::desk(), 32);
  ASSERT_EQ(pred.kind(), PredictorKind::kCostco);
  double model_ss = 0.0, zero_ss = 0.0;
  for (const auto& c : split.val) {
    const double e = c.value - pred.predict(c.index);
    model_ss += e * e;
    zero_ss += c.value * c.value;
  }
  EXPECT_LT(model_ss, zero_ss);
}

}  // namespace
}  // namespace dain
