#include "dain/evaluation.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>

#include "dain/errors.h"
#include "dain/influence.h"
#include "dain/random.h"
#include "dain/stats.h"
#include "dain/trainer.h"

namespace dain {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string format(const char* fmt, double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, value);
  return buf;
}

bool contains(const std::vector<AugmentMethod>& methods, AugmentMethod m) {
  return std::find(methods.begin(), methods.end(), m) != methods.end();
}

// Outcome of a stage shared by all trials of one seed.
template <class T>
struct Shared {
  std::optional<T> value;
  std::string error;
  double seconds = 0.0;

  template <class F>
  void run(F&& f) {
    const auto start = Clock::now();
    try {
      value.emplace(f());
    } catch (const std::exception& e) {
      error = e.what();
    }
    seconds = seconds_since(start);
  }

  const T& get(const char* stage) const {
    if (value) return *value;
    throw ArgumentError(std::string(stage) + " unavailable: " +
                        (error.empty() ? std::string("not run") : error));
  }
};

TrainConfig with_seed(TrainConfig config, std::uint64_t seed, std::string_view stream) {
  config.seed = substream_seed(seed, stream);
  return config;
}

}  // namespace

double StageTimings::total() const {
  return embedding_training + cell_importance + entity_importance + predictor_training +
         augmentation;
}

void ExperimentConfig::validate() const {
  if (ratios.empty()) throw ConfigError("ratios must not be empty");
  if (!std::is_sorted(ratios.begin(), ratios.end())) {
    throw ConfigError("ratios must be sorted ascending");
  }
  if (std::adjacent_find(ratios.begin(), ratios.end()) != ratios.end()) {
    throw ConfigError("ratios must be distinct");
  }
  if (ratios.front() != 0.0) throw ConfigError("ratios must include 0 (the control)");
  if (ratios.back() > 0.5) throw ConfigError("ratios must lie in [0, 0.5]");
  if (methods.empty()) throw ConfigError("at least one method is required");
  if (repeats < 1) throw ConfigError("repeats must be at least 1");
  if (!seeds.empty() && seeds.size() != static_cast<std::size_t>(repeats)) {
    throw ConfigError("seeds must list exactly `repeats` values");
  }
  if (costco_channels < 1) throw ConfigError("costco_channels must be positive");
  train_config.validate();
  downstream_config.validate();
}

std::vector<std::uint64_t> ExperimentConfig::resolved_seeds() const {
  if (!seeds.empty()) return seeds;
  std::vector<std::uint64_t> out;
  for (int r = 1; r <= repeats; ++r) out.push_back(static_cast<std::uint64_t>(r));
  return out;
}

const SummaryRow* ExperimentReport::find(AugmentMethod method, double ratio) const {
  for (const auto& row : summary) {
    if (row.method == method && row.ratio == ratio) return &row;
  }
  return nullptr;
}

ExperimentReport run_pipeline(const DatasetSplit& data, const ExperimentConfig& config) {
  config.validate();
  require_nonempty(data.train, "training set");
  require_nonempty(data.val, "validation set");
  require_nonempty(data.test, "test set");

  const bool any_aug = config.ratios.back() > 0.0;
  const bool want_dain = any_aug && contains(config.methods, AugmentMethod::kDain);
  const bool want_embedding =
      want_dain || (any_aug && contains(config.methods, AugmentMethod::kEntityReplacement));
  const bool want_mlp =
      any_aug && (contains(config.methods, AugmentMethod::kRandomMlp) ||
                  (want_dain && config.dain_predictor == PredictorKind::kMlp));
  const bool want_costco =
      any_aug && (contains(config.methods, AugmentMethod::kRandomCostco) ||
                  (want_dain && config.dain_predictor == PredictorKind::kCostco));

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& c : data.train) {
    lo = std::min(lo, c.value);
    hi = std::max(hi, c.value);
  }

  ExperimentReport report;
  for (const std::uint64_t seed : config.resolved_seeds()) {
    Shared<TrainResult<CompletionModel>> embedding;
    Shared<CellImportanceTable> cit;
    Shared<EntityImportance> entity;
    Shared<ValuePredictor> mlp_predictor, costco_predictor;

    if (want_embedding) {
      embedding.run([&] {
        const TrainConfig cfg = with_seed(config.train_config, seed, "embedding");
        return fit(init_model(data.dims, cfg), data.train, data.val, cfg, want_dain);
      });
    }
    if (want_dain) {
      cit.run([&] {
        const auto& checkpoints = embedding.get("embedding model").checkpoints;
        auto sums = validation_gradient_sums(checkpoints, data.val);
        return cell_importance(checkpoints, data.train, sums, config.threads);
      });
      entity.run([&] {
        const auto& table = cit.get("cell importance");
        if (config.entity_method == EntityMethod::kAggregate) {
          return aggregate_entity_importance(table, data.dims);
        }
        CpRank1Options cp = config.cp;
        cp.seed = substream_seed(seed, "cp");
        return cp_rank1_entity_importance(table, data.dims, cp);
      });
    }
    if (want_mlp) {
      mlp_predictor.run([&] {
        return train_value_predictor(PredictorKind::kMlp, data,
                                     with_seed(config.train_config, seed, "predictor-mlp"));
      });
    }
    if (want_costco) {
      costco_predictor.run([&] {
        return train_value_predictor(PredictorKind::kCostco, data,
                                     with_seed(config.train_config, seed, "predictor-costco"),
                                     config.costco_channels);
      });
    }
    auto predictor_for = [&](PredictorKind kind) -> const Shared<ValuePredictor>& {
      return kind == PredictorKind::kMlp ? mlp_predictor : costco_predictor;
    };

    const TrainConfig downstream = with_seed(config.downstream_config, seed, "downstream");
    auto train_downstream = [&](const std::vector<Cell>& train) {
      auto result = fit(init_model(data.dims, downstream), train, data.val, downstream, false);
      return rmse(result.model, data.test);
    };

    Shared<double> control;
    control.run([&] { return train_downstream(data.train); });

    const std::uint64_t sample_seed = substream_seed(seed, "augment");
    for (const AugmentMethod method : config.methods) {
      for (const double ratio : config.ratios) {
        TrialResult trial;
        trial.method = method;
        trial.ratio = ratio;
        trial.seed = seed;
        TimingRow timing;
        timing.method = method;
        timing.ratio = ratio;
        timing.seed = seed;

        if (ratio == 0.0) {
          if (control.value) {
            trial.rmse = *control.value;
          } else {
            trial.error = control.error;
          }
          timing.stages.embedding_training = embedding.seconds;
          timing.stages.downstream_training = control.seconds;
          report.trials.push_back(trial);
          report.timings.push_back(timing);
          continue;
        }

        trial.n_aug = static_cast<std::size_t>(
            std::llround(ratio * static_cast<double>(data.train.size())));
        timing.n_aug = trial.n_aug;
        try {
          AugmentationSet set;
          auto start = Clock::now();
          switch (method) {
            case AugmentMethod::kDain: {
              const auto& predictor = predictor_for(config.dain_predictor);
              const auto& importance = entity.get("entity importance");
              const auto& p = predictor.get("value predictor");
              timing.stages.embedding_training = embedding.seconds;
              timing.stages.cell_importance = cit.seconds;
              timing.stages.entity_importance = entity.seconds;
              timing.stages.predictor_training = predictor.seconds;
              start = Clock::now();
              set = augment_dain(data, importance, p, trial.n_aug, sample_seed, config.threads);
              break;
            }
            case AugmentMethod::kDuplication:
              set = augment_duplication(data, trial.n_aug, sample_seed);
              break;
            case AugmentMethod::kEntityReplacement: {
              const auto& model = embedding.get("embedding model").model;
              timing.stages.embedding_training = embedding.seconds;
              start = Clock::now();
              set = augment_entity_replacement(data, model, trial.n_aug, sample_seed);
              break;
            }
            case AugmentMethod::kRandomMlp:
            case AugmentMethod::kRandomCostco: {
              const auto& predictor = predictor_for(
                  method == AugmentMethod::kRandomMlp ? PredictorKind::kMlp : PredictorKind::kCostco);
              const auto& p = predictor.get("value predictor");
              timing.stages.predictor_training = predictor.seconds;
              start = Clock::now();
              set = augment_random(data, p, trial.n_aug, sample_seed, config.threads);
              break;
            }
          }
          if (config.clamp) clamp_values(set, lo, hi);
          timing.stages.augmentation = seconds_since(start);

          std::vector<Cell> augmented = data.train;
          auto extra = set.as_cells();
          augmented.insert(augmented.end(), extra.begin(), extra.end());
          start = Clock::now();
          trial.rmse = train_downstream(augmented);
          timing.stages.downstream_training = seconds_since(start);
        } catch (const std::exception& e) {
          trial.error = e.what();
        }
        report.trials.push_back(trial);
        report.timings.push_back(timing);
      }
    }
  }

  // Summaries in config order.
  for (const AugmentMethod method : config.methods) {
    for (const double ratio : config.ratios) {
      SummaryRow row;
      row.method = method;
      row.ratio = ratio;
      for (const auto& t : report.trials) {
        if (t.method == method && t.ratio == ratio && t.ok()) row.values.push_back(t.rmse);
      }
      row.mean = row.values.empty() ? std::numeric_limits<double>::quiet_NaN() : mean(row.values);
      row.stddev = sample_stddev(row.values);
      report.summary.push_back(std::move(row));
    }
  }

  const double max_ratio = config.ratios.back();
  const SummaryRow* best = nullptr;
  for (const auto& row : report.summary) {
    if (row.ratio != max_ratio || row.values.empty()) continue;
    if (!best || row.mean < best->mean) best = &row;
  }
  if (best) {
    report.best_method = best->method;
    const auto best_values = best->values;
    const auto best_method = best->method;
    for (auto& row : report.summary) {
      if (row.ratio != max_ratio || row.method == best_method) continue;
      if (row.values.size() >= 2 && best_values.size() >= 2) {
        row.p_value = welch_ttest(row.values, best_values);
      }
    }
  }
  return report;
}

std::vector<std::string> timing_profile(const ExperimentReport& report) {
  std::vector<std::string> rows = {
      "method,ratio,n_aug,embedding_training,cell_importance,entity_importance,"
      "predictor_training,augmentation,downstream_training,total"};
  std::vector<std::pair<AugmentMethod, double>> keys;
  for (const auto& t : report.timings) {
    auto key = std::make_pair(t.method, t.ratio);
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
  }
  for (const auto& [method, ratio] : keys) {
    StageTimings sum;
    std::size_t count = 0;
    std::size_t n_aug = 0;
    for (const auto& t : report.timings) {
      if (t.method != method || t.ratio != ratio) continue;
      sum.embedding_training += t.stages.embedding_training;
      sum.cell_importance += t.stages.cell_importance;
      sum.entity_importance += t.stages.entity_importance;
      sum.predictor_training += t.stages.predictor_training;
      sum.augmentation += t.stages.augmentation;
      sum.downstream_training += t.stages.downstream_training;
      n_aug = t.n_aug;
      ++count;
    }
    const double c = static_cast<double>(count);
    StageTimings avg{sum.embedding_training / c, sum.cell_importance / c,
                     sum.entity_importance / c,  sum.predictor_training / c,
                     sum.augmentation / c,       sum.downstream_training / c};
    std::string row = std::string(to_string(method)) + "," + format("%.6g", ratio) + "," +
                      std::to_string(n_aug);
    for (double v : {avg.embedding_training, avg.cell_importance, avg.entity_importance,
                     avg.predictor_training, avg.augmentation, avg.downstream_training,
                     avg.total()}) {
      row += "," + format("%.6f", v);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_results_csv(const ExperimentReport& report, std::ostream& out) {
  out << "method,ratio,seed,rmse,error\n";
  for (const auto& t : report.trials) {
    out << to_string(t.method) << ',' << format("%.6g", t.ratio) << ',' << t.seed << ',';
    if (t.ok()) {
      out << format("%.9g", t.rmse) << ",\n";
    } else {
      std::string error = t.error;
      std::replace(error.begin(), error.end(), ',', ';');
      std::replace(error.begin(), error.end(), '\n', ' ');
      out << "," << error << '\n';
    }
  }
}

void write_summary_csv(const ExperimentReport& report, std::ostream& out) {
  out << "method,ratio,n,mean_rmse,std_rmse,p_value\n";
  for (const auto& row : report.summary) {
    out << to_string(row.method) << ',' << format("%.6g", row.ratio) << ',' << row.values.size()
        << ',' << format("%.9g", row.mean) << ',' << format("%.9g", row.stddev) << ',';
    if (row.p_value) out << format("%.9g", *row.p_value);
    out << '\n';
  }
}

void write_timing_csv(const ExperimentReport& report, std::ostream& out) {
  for (const auto& row : timing_profile(report)) out << row << '\n';
}

void write_report(const ExperimentReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream out(dir / name);
    if (!out) throw IoError("cannot write " + (dir / name).string());
    return out;
  };
  auto results = open("results.csv");
  write_results_csv(report, results);
  auto summary = open("summary.csv");
  write_summary_csv(report, summary);
  auto timing = open("timing.csv");
  write_timing_csv(report, timing);
}

}  // namespace dain
