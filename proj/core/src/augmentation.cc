#include "dain/augmentation.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>

#include "dain/errors.h"
#include "dain/random.h"
#include "dain/trainer.h"
#include "parallel.h"

namespace dain {

std::string_view to_string(AugmentMethod method) {
  switch (method) {
    case AugmentMethod::kDain: return "dain";
    case AugmentMethod::kDuplication: return "duplication";
    case AugmentMethod::kEntityReplacement: return "entity_replacement";
    case AugmentMethod::kRandomMlp: return "random_mlp";
    case AugmentMethod::kRandomCostco: return "random_costco";
  }
  return "unknown";
}

AugmentMethod parse_augment_method(std::string_view tag) {
  for (auto m : {AugmentMethod::kDain, AugmentMethod::kDuplication,
                 AugmentMethod::kEntityReplacement, AugmentMethod::kRandomMlp,
                 AugmentMethod::kRandomCostco}) {
    if (to_string(m) == tag) return m;
  }
  throw ArgumentError("unknown augmentation method '" + std::string(tag) + "'");
}

std::string_view to_string(PredictorKind kind) {
  return kind == PredictorKind::kMlp ? "mlp" : "costco";
}

PredictorKind parse_predictor_kind(std::string_view tag) {
  if (tag == "mlp") return PredictorKind::kMlp;
  if (tag == "costco") return PredictorKind::kCostco;
  throw ArgumentError("unknown predictor kind '" + std::string(tag) + "'");
}

std::vector<Cell> AugmentationSet::as_cells() const {
  std::vector<Cell> out;
  out.reserve(cells.size());
  for (std::size_t k = 0; k < cells.size(); ++k) out.push_back(Cell{cells[k], values[k]});
  return out;
}

PredictorKind ValuePredictor::kind() const {
  return std::holds_alternative<CompletionModel>(model_) ? PredictorKind::kMlp
                                                         : PredictorKind::kCostco;
}

const Dims& ValuePredictor::dims() const {
  return std::visit([](const auto& m) -> const Dims& { return m.dims(); }, model_);
}

double ValuePredictor::predict(std::span<const std::int64_t> cell) const {
  return std::visit([&](const auto& m) { return m.predict(cell); }, model_);
}

ValuePredictor train_value_predictor(PredictorKind kind, const DatasetSplit& split,
                                     const TrainConfig& config, int costco_channels) {
  if (kind == PredictorKind::kMlp) {
    return ValuePredictor(
        fit(init_model(split.dims, config), split.train, split.val, config, false).model);
  }
  config.validate();
  CostcoModel init(split.dims, config.embedding_len, costco_channels, config.seed);
  return ValuePredictor(fit(std::move(init), split.train, split.val, config, false).model);
}

std::vector<double> predict_values(const ValuePredictor& predictor, std::span<const Index> cells,
                                   int threads) {
  std::vector<double> values(cells.size());
  auto run = [&](const auto& model) {
    internal::parallel_chunks(cells.size(), threads, [&](std::size_t begin, std::size_t end) {
      auto ws = model.make_workspace();
      for (std::size_t k = begin; k < end; ++k) values[k] = model.predict(cells[k], ws);
    });
  };
  if (const auto* m = predictor.mlp()) {
    run(*m);
  } else {
    run(*predictor.costco());
  }
  return values;
}

namespace {

// Shared rejection loop; draw(index) fills one candidate index-vector.
template <class Draw>
std::vector<Index> rejection_sample(std::size_t n_aug, const CellSet& exclude, bool distinct,
                                    Draw draw) {
  std::vector<Index> out;
  out.reserve(n_aug);
  if (n_aug == 0) return out;
  CellSet drawn(exclude.dims());
  Index index(exclude.dims().size());
  const std::size_t budget = 1000 * n_aug;
  std::size_t draws = 0;
  while (out.size() < n_aug) {
    if (draws++ >= budget) {
      throw SaturationError("sampled only " + std::to_string(out.size()) + " of " +
                            std::to_string(n_aug) + " cells within " + std::to_string(budget) +
                            " draws");
    }
    draw(index);
    if (exclude.contains(index)) continue;
    if (distinct && !drawn.insert(index)) continue;
    out.push_back(index);
  }
  return out;
}

}  // namespace

std::vector<Index> sample_augmentation_cells(const EntityImportance& importance,
                                             std::size_t n_aug, const CellSet& exclude,
                                             std::uint64_t seed, bool distinct) {
  const Dims& dims = exclude.dims();
  if (importance.order() != dims.size()) {
    throw ShapeError("entity importance has " + std::to_string(importance.order()) +
                     " dimensions, tensor has " + std::to_string(dims.size()));
  }
  std::vector<std::discrete_distribution<std::int64_t>> pick;
  for (std::size_t n = 0; n < dims.size(); ++n) {
    const auto& alpha = importance.per_dim[n];
    if (alpha.size() != static_cast<std::size_t>(dims[n])) {
      throw ShapeError("entity importance for dimension " + std::to_string(n) + " has length " +
                       std::to_string(alpha.size()));
    }
    double total = 0.0;
    for (double a : alpha) {
      if (!(a >= 0) || !std::isfinite(a)) {
        throw ArgumentError("entity importances must be finite and nonnegative");
      }
      total += a;
    }
    if (!(total > 0)) {
      throw DegenerateError("all entity importances of dimension " + std::to_string(n) +
                            " are zero");
    }
    pick.emplace_back(alpha.begin(), alpha.end());
  }
  if (n_aug == 0) return {};

  auto rng = make_rng(seed, "sample");
  return rejection_sample(n_aug, exclude, distinct, [&](Index& index) {
    for (std::size_t n = 0; n < index.size(); ++n) index[n] = pick[n](rng);
  });
}

std::vector<Index> sample_uniform_cells(std::size_t n_aug, const CellSet& exclude,
                                        std::uint64_t seed, bool distinct) {
  std::vector<std::uniform_int_distribution<std::int64_t>> pick;
  for (auto d : exclude.dims()) pick.emplace_back(0, d - 1);
  auto rng = make_rng(seed, "sample");
  return rejection_sample(n_aug, exclude, distinct, [&](Index& index) {
    for (std::size_t n = 0; n < index.size(); ++n) index[n] = pick[n](rng);
  });
}

std::vector<std::int64_t> nearest_entities(std::span<const double> table, int embedding_len,
                                           std::int64_t entity, std::size_t k) {
  const auto R = static_cast<std::size_t>(embedding_len);
  const auto count = static_cast<std::int64_t>(table.size() / R);
  if (entity < 0 || entity >= count) throw BoundsError("entity out of range");
  const double* self = table.data() + static_cast<std::size_t>(entity) * R;

  std::vector<std::pair<double, std::int64_t>> dist;
  dist.reserve(static_cast<std::size_t>(count));
  for (std::int64_t j = 0; j < count; ++j) {
    if (j == entity) continue;
    const double* other = table.data() + static_cast<std::size_t>(j) * R;
    double d = 0.0;
    for (std::size_t r = 0; r < R; ++r) d += (self[r] - other[r]) * (self[r] - other[r]);
    dist.emplace_back(d, j);
  }
  k = std::min(k, dist.size());
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  std::vector<std::int64_t> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(dist[i].second);
  return out;
}

CellSet observed_cells(const DatasetSplit& split) {
  CellSet set(split.dims);
  set.insert_all(split.train);
  set.insert_all(split.val);
  set.insert_all(split.test);
  return set;
}

AugmentationSet augment_dain(const DatasetSplit& split, const EntityImportance& importance,
                             const ValuePredictor& predictor, std::size_t n_aug,
                             std::uint64_t seed, int threads) {
  AugmentationSet set;
  set.provenance = AugmentMethod::kDain;
  set.cells = sample_augmentation_cells(importance, n_aug, observed_cells(split), seed);
  set.values = predict_values(predictor, set.cells, threads);
  return set;
}

AugmentationSet augment_duplication(const DatasetSplit& split, std::size_t n_aug,
                                    std::uint64_t seed) {
  if (split.train.empty()) throw ArgumentError("duplication needs a non-empty training set");
  AugmentationSet set;
  set.provenance = AugmentMethod::kDuplication;
  auto rng = make_rng(seed, "sample");
  std::uniform_int_distribution<std::size_t> pick(0, split.train.size() - 1);
  for (std::size_t k = 0; k < n_aug; ++k) {
    const Cell& c = split.train[pick(rng)];
    set.cells.push_back(c.index);
    set.values.push_back(c.value);
  }
  return set;
}

AugmentationSet augment_entity_replacement(const DatasetSplit& split,
                                           const CompletionModel& model, std::size_t n_aug,
                                           std::uint64_t seed) {
  if (split.train.empty()) throw ArgumentError("entity replacement needs a non-empty training set");
  if (model.dims() != split.dims) throw ShapeError("model dims do not match the split");
  for (std::size_t n = 0; n < split.dims.size(); ++n) {
    if (split.dims[n] < 2) {
      throw ReplacementError("dimension " + std::to_string(n) + " has fewer than 2 entities");
    }
  }
  constexpr std::size_t kNeighbors = 10;

  AugmentationSet set;
  set.provenance = AugmentMethod::kEntityReplacement;
  auto rng = make_rng(seed, "sample");
  std::uniform_int_distribution<std::size_t> pick_cell(0, split.train.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_dim(0, split.dims.size() - 1);
  std::map<std::pair<std::size_t, std::int64_t>, std::vector<std::int64_t>> cache;

  for (std::size_t k = 0; k < n_aug; ++k) {
    const Cell& source = split.train[pick_cell(rng)];
    const std::size_t dim = pick_dim(rng);
    auto key = std::make_pair(dim, source.index[dim]);
    auto it = cache.find(key);
    if (it == cache.end()) {
      it = cache.emplace(key, nearest_entities(model.embedding_table(dim), model.embedding_len(),
                                               source.index[dim], kNeighbors))
               .first;
    }
    const auto& neighbors = it->second;
    std::uniform_int_distribution<std::size_t> pick_neighbor(0, neighbors.size() - 1);
    Index index = source.index;
    index[dim] = neighbors[pick_neighbor(rng)];
    set.cells.push_back(std::move(index));
    set.values.push_back(source.value);
  }
  return set;
}

AugmentationSet augment_random(const DatasetSplit& split, const ValuePredictor& predictor,
                               std::size_t n_aug, std::uint64_t seed, int threads) {
  AugmentationSet set;
  set.provenance = predictor.kind() == PredictorKind::kMlp ? AugmentMethod::kRandomMlp
                                                           : AugmentMethod::kRandomCostco;
  set.cells = sample_uniform_cells(n_aug, observed_cells(split), seed);
  set.values = predict_values(predictor, set.cells, threads);
  return set;
}

void clamp_values(AugmentationSet& set, double lo, double hi) {
  if (lo > hi) throw ArgumentError("clamp range is empty");
  for (auto& v : set.values) v = std::clamp(v, lo, hi);
}

void save_augmentation(const AugmentationSet& set, const Dims& dims,
                       const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  const std::vector<std::string> comments = {"provenance: " + std::string(to_string(set.provenance))};
  write_cells(out, dims, set.as_cells(), comments);
}

}  // namespace dain
