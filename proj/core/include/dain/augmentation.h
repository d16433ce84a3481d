#ifndef DAIN_AUGMENTATION_H_
#define DAIN_AUGMENTATION_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "dain/costco.h"
#include "dain/entity_importance.h"
#include "dain/model.h"
#include "dain/tensor.h"

namespace dain {

enum class AugmentMethod { kDain, kDuplication, kEntityReplacement, kRandomMlp, kRandomCostco };

std::string_view to_string(AugmentMethod method);
// Accepts the tags printed by to_string: dain, duplication,
// entity_replacement, random_mlp, random_costco.
AugmentMethod parse_augment_method(std::string_view tag);

struct AugmentationSet {
  std::vector<Index> cells;
  std::vector<double> values;
  AugmentMethod provenance = AugmentMethod::kDain;

  std::size_t size() const { return cells.size(); }
  std::vector<Cell> as_cells() const;
};

enum class PredictorKind { kMlp, kCostco };

std::string_view to_string(PredictorKind kind);
PredictorKind parse_predictor_kind(std::string_view tag);

// A trained model used to impute values at sampled cells.
class ValuePredictor {
 public:
  explicit ValuePredictor(CompletionModel model) : model_(std::move(model)) {}
  explicit ValuePredictor(CostcoModel model) : model_(std::move(model)) {}

  PredictorKind kind() const;
  const Dims& dims() const;
  double predict(std::span<const std::int64_t> cell) const;

  const CompletionModel* mlp() const { return std::get_if<CompletionModel>(&model_); }
  const CostcoModel* costco() const { return std::get_if<CostcoModel>(&model_); }

 private:
  std::variant<CompletionModel, CostcoModel> model_;
};

// Trains a predictor on split.train with early stopping on split.val. The
// costco kind uses config.embedding_len and `costco_channels`; the mlp kind
// trains exactly like the completion model.
ValuePredictor train_value_predictor(PredictorKind kind, const DatasetSplit& split,
                                     const TrainConfig& config, int costco_channels = 32);

std::vector<double> predict_values(const ValuePredictor& predictor, std::span<const Index> cells,
                                   int threads = 1);

// Draws n_aug cells, choosing each dimension's entity independently with
// probability alpha^(n)_i / sum_j alpha^(n)_j. With `distinct`, cells in
// `exclude` or already drawn are rejected and redrawn (budget 1000 * n_aug
// draws); without it every draw is kept. `exclude` fixes the shape.
std::vector<Index> sample_augmentation_cells(const EntityImportance& importance,
                                             std::size_t n_aug, const CellSet& exclude,
                                             std::uint64_t seed, bool distinct = true);

// Uniform counterpart of sample_augmentation_cells.
std::vector<Index> sample_uniform_cells(std::size_t n_aug, const CellSet& exclude,
                                        std::uint64_t seed, bool distinct = true);

// The k entities closest to `entity` in Euclidean distance within an
// embedding table (rows of length `embedding_len`), excluding itself.
// Ties break toward the lower index.
std::vector<std::int64_t> nearest_entities(std::span<const double> table, int embedding_len,
                                           std::int64_t entity, std::size_t k);

// Every cell of the split, for exclusion during sampling.
CellSet observed_cells(const DatasetSplit& split);

AugmentationSet augment_dain(const DatasetSplit& split, const EntityImportance& importance,
                             const ValuePredictor& predictor, std::size_t n_aug,
                             std::uint64_t seed, int threads = 1);

AugmentationSet augment_duplication(const DatasetSplit& split, std::size_t n_aug,
                                    std::uint64_t seed);

AugmentationSet augment_entity_replacement(const DatasetSplit& split,
                                           const CompletionModel& model, std::size_t n_aug,
                                           std::uint64_t seed);

// Provenance is random_mlp or random_costco after the predictor's kind.
AugmentationSet augment_random(const DatasetSplit& split, const ValuePredictor& predictor,
                               std::size_t n_aug, std::uint64_t seed, int threads = 1);

// Clamps imputed values into [lo, hi].
void clamp_values(AugmentationSet& set, double lo, double hi);

// Tensor text format with a "# provenance: <method>" header line.
void save_augmentation(const AugmentationSet& set, const Dims& dims,
                       const std::filesystem::path& path);

}  // namespace dain

#endif  // DAIN_AUGMENTATION_H_
