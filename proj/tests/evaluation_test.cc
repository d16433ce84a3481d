#include "dain/evaluation.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "dain/errors.h"
#include "dain/stats.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace dain {
namespace {

using ::testing::ElementsAre;
using ::testing::HasSubstr;
using ::testing::StartsWith;

TrainConfig TinyTrain() {
  TrainConfig c = TrainConfig::desk();
  c.embedding_len = 4;
  c.layer_sizes = {8};
  c.batch_size = 64;
  c.learning_rate = 0.01;
  c.max_epochs = 4;
  c.patience = 4;
  return c;
}

ExperimentConfig TinyConfig() {
  ExperimentConfig cfg;
  cfg.ratios = {0.0, 0.2};
  cfg.repeats = 2;
  cfg.train_config = TinyTrain();
  cfg.downstream_config = TinyTrain();
  cfg.costco_channels = 4;
  return cfg;
}

DatasetSplit TinyData(const Dims& dims = {8, 9, 10}) {
  return split_dataset(generate_synthetic({dims, 300, 2, 0.01, 5}), 5);
}

std::vector<double> Values(const ExperimentReport& r, AugmentMethod m, double ratio) {
  std::vector<double> out;
  for (const auto& t : r.trials) {
    if (t.method == m && t.ratio == ratio && t.ok()) out.push_back(t.rmse);
  }
  return out;
}

std::string Csv(void (*writer)(const ExperimentReport&, std::ostream&), const ExperimentReport& r) {
  std::ostringstream out;
  writer(r, out);
  return out.str();
}

TEST(ExperimentConfigTest, Defaults) {
  const ExperimentConfig cfg;
  EXPECT_THAT(cfg.ratios, ElementsAre(0.0, 0.1, 0.2, 0.3, 0.4, 0.5));
  EXPECT_EQ(cfg.methods.size(), 5u);
  EXPECT_EQ(cfg.repeats, 10);
  EXPECT_THAT(cfg.resolved_seeds(), ElementsAre(1, 2, 3, 4, 5, 6, 7, 8, 9, 10));
  EXPECT_NO_THROW(cfg.validate());
}

TEST(ExperimentConfigTest, ValidateRejects) {
  ExperimentConfig cfg;
  cfg.ratios = {0.1, 0.2};
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.ratios = {0.0, 0.3, 0.2};
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.ratios = {0.0, 0.6};
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = ExperimentConfig{};
  cfg.repeats = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = ExperimentConfig{};
  cfg.seeds = {1, 2};
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(ExperimentConfigTest, ParsesEveryKey) {
  std::istringstream in(R"(# experiment
ratios = 0, 0.25, 0.5
methods = dain, duplication
seeds = 4, 5, 6
entity_method = cp
dain_predictor = mlp
costco_channels = 8
clamp = true
threads = 2
cp.lambda = 0.5
cp.epochs = 20
cp.learning_rate = 0.001
train.preset = full
train.max_epochs = 7
train.patience = 5
downstream.embedding_len = 6   # inline comment
downstream.layer_sizes = 10, 5
downstream.batch_size = 32
downstream.learning_rate = 0.02
downstream.patience = 3
downstream.checkpoint_step_size = 0.01
)");
  const ExperimentConfig cfg = parse_experiment_config(in);
  EXPECT_THAT(cfg.ratios, ElementsAre(0.0, 0.25, 0.5));
  EXPECT_THAT(cfg.methods, ElementsAre(AugmentMethod::kDain, AugmentMethod::kDuplication));
  EXPECT_EQ(cfg.repeats, 3);
  EXPECT_THAT(cfg.resolved_seeds(), ElementsAre(4, 5, 6));
  EXPECT_EQ(cfg.entity_method, EntityMethod::kCpRank1);
  EXPECT_EQ(cfg.dain_predictor, PredictorKind::kMlp);
  EXPECT_EQ(cfg.costco_channels, 8);
  EXPECT_TRUE(cfg.clamp);
  EXPECT_EQ(cfg.threads, 2);
  EXPECT_EQ(cfg.cp.lambda, 0.5);
  EXPECT_EQ(cfg.cp.epochs, 20);
  EXPECT_EQ(cfg.cp.learning_rate, 0.001);
  EXPECT_EQ(cfg.train_config.embedding_len, 50);
  EXPECT_EQ(cfg.train_config.max_epochs, 7);
  EXPECT_EQ(cfg.downstream_config.embedding_len, 6);
  EXPECT_THAT(cfg.downstream_config.layer_sizes, ElementsAre(10, 5));
  EXPECT_EQ(cfg.downstream_config.batch_size, 32);
  EXPECT_EQ(cfg.downstream_config.learning_rate, 0.02);
  EXPECT_EQ(cfg.downstream_config.patience, 3);
  EXPECT_EQ(cfg.downstream_config.checkpoint_step_size, 0.01);
}

TEST(ExperimentConfigTest, PresetAppliesBeforeOverrides) {
  std::istringstream in("train.max_epochs = 9\ntrain.patience = 4\ntrain.preset = desk\n");
  const ExperimentConfig cfg = parse_experiment_config(in);
  EXPECT_EQ(cfg.train_config.max_epochs, 9);
  EXPECT_EQ(cfg.train_config.embedding_len, 16);
}

TEST(ExperimentConfigTest, ErrorsAreConfigErrors) {
  for (const char* text : {"unknown = 1\n", "repeats = 2\nrepeats = 3\n", "repeats = two\n",
                           "no equals sign\n", "methods = dain, mixup\n", "clamp = maybe\n",
                           "entity_method = tucker\n", "train.preset = huge\n", "ratios = 0.1\n"}) {
    std::istringstream in(text);
    EXPECT_THROW(parse_experiment_config(in), ConfigError) << text;
  }
}

TEST(ExperimentConfigTest, MissingFileIsIoError) {
  EXPECT_THROW(load_experiment_config("/nonexistent/dain.cfg"), IoError);
}

TEST(PipelineTest, ControlOnly) {
  ExperimentConfig cfg = TinyConfig();
  cfg.ratios = {0.0};
  const auto report = run_pipeline(TinyData(), cfg);
  EXPECT_EQ(report.trials.size(), cfg.methods.size() * 2);
  for (const auto& t : report.trials) {
    EXPECT_EQ(t.ratio, 0.0);
    EXPECT_TRUE(t.ok()) << t.error;
    EXPECT_EQ(t.n_aug, 0u);
  }
  for (const auto& t : report.timings) {
    EXPECT_EQ(t.stages.cell_importance, 0.0);
    EXPECT_EQ(t.stages.entity_importance, 0.0);
    EXPECT_EQ(t.stages.predictor_training, 0.0);
    EXPECT_EQ(t.stages.augmentation, 0.0);
  }
}

class FullPipelineTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { report_ = new ExperimentReport(run_pipeline(TinyData(), TinyConfig())); }
  static void TearDownTestSuite() {
    delete report_;
    report_ = nullptr;
  }
  static const ExperimentReport& report() { return *report_; }

 private:
  static ExperimentReport* report_;
};

ExperimentReport* FullPipelineTest::report_ = nullptr;

TEST_F(FullPipelineTest, EveryTrialSucceedsWithFiniteRmse) {
  EXPECT_EQ(report().trials.size(), 5u * 2u * 2u);
  for (const auto& t : report().trials) {
    ASSERT_TRUE(t.ok()) << to_string(t.method) << ": " << t.error;
    EXPECT_TRUE(std::isfinite(t.rmse));
    EXPECT_GE(t.rmse, 0.0);
  }
}

TEST_F(FullPipelineTest, ControlIdenticalAcrossMethods) {
  std::map<std::uint64_t, double> control;
  for (const auto& t : report().trials) {
    if (t.ratio != 0.0) continue;
    auto [it, inserted] = control.emplace(t.seed, t.rmse);
    if (!inserted) EXPECT_EQ(it->second, t.rmse);
  }
  EXPECT_EQ(control.size(), 2u);
  EXPECT_NE(control[1], control[2]);
}

TEST_F(FullPipelineTest, AugmentationCountsFollowRatio) {
  const std::size_t train = TinyData().train.size();
  for (const auto& t : report().trials) {
    if (t.ratio == 0.2) EXPECT_EQ(t.n_aug, static_cast<std::size_t>(std::llround(0.2 * train)));
  }
}

TEST_F(FullPipelineTest, SummaryRecomputable) {
  for (const auto& row : report().summary) {
    const auto values = Values(report(), row.method, row.ratio);
    ASSERT_EQ(row.values, values);
    EXPECT_NEAR(row.mean, mean(values), 1e-12);
    EXPECT_NEAR(row.stddev, sample_stddev(values), 1e-12);
    EXPECT_GE(row.mean, *std::min_element(values.begin(), values.end()));
    EXPECT_LE(row.mean, *std::max_element(values.begin(), values.end()));
  }
}

TEST_F(FullPipelineTest, BestMethodAndPValues) {
  ASSERT_TRUE(report().best_method.has_value());
  for (const auto& row : report().summary) {
    if (row.ratio == 0.2 && row.method != *report().best_method) {
      ASSERT_TRUE(row.p_value.has_value()) << to_string(row.method);
      EXPECT_GE(*row.p_value, 0.0);
      EXPECT_LE(*row.p_value, 1.0);
    } else {
      EXPECT_FALSE(row.p_value.has_value());
    }
  }
}

TEST_F(FullPipelineTest, TimingProfile) {
  const auto rows = timing_profile(report());
  ASSERT_FALSE(rows.empty());
  EXPECT_EQ(rows[0],
            "method,ratio,n_aug,embedding_training,cell_importance,entity_importance,"
            "predictor_training,augmentation,downstream_training,total");
  EXPECT_EQ(rows.size(), 1u + 5u * 2u);
  for (const auto& t : report().timings) {
    const auto& s = t.stages;
    for (double v : {s.embedding_training, s.cell_importance, s.entity_importance,
                     s.predictor_training, s.augmentation, s.downstream_training}) {
      EXPECT_GE(v, 0.0);
    }
    EXPECT_GE(s.total(), std::max({s.embedding_training, s.cell_importance, s.entity_importance,
                                   s.predictor_training, s.augmentation}));
    if (t.ratio == 0.0) {
      EXPECT_EQ(s.augmentation, 0.0);
      EXPECT_EQ(s.total(), s.embedding_training);
    }
    if (t.method == AugmentMethod::kDain && t.ratio > 0.0) {
      EXPECT_GT(s.cell_importance, 0.0);
      EXPECT_GT(s.augmentation, 0.0);
    }
  }
}

TEST_F(FullPipelineTest, CsvFormats) {
  const std::string results = Csv(write_results_csv, report());
  EXPECT_THAT(results, StartsWith("method,ratio,seed,rmse,error\n"));
  EXPECT_THAT(results, HasSubstr("\ndain,0.2,1,"));
  const std::string summary = Csv(write_summary_csv, report());
  EXPECT_THAT(summary, StartsWith("method,ratio,n,mean_rmse,std_rmse,p_value\n"));
  EXPECT_THAT(summary, HasSubstr("\nduplication,0,2,"));
}

TEST(PipelineTest, DeterministicReportFiles) {
  testing::TempDir dir("report");
  ExperimentConfig cfg = TinyConfig();
  cfg.repeats = 1;
  write_report(run_pipeline(TinyData(), cfg), dir / "a");
  write_report(run_pipeline(TinyData(), cfg), dir / "b");
  for (const char* name : {"results.csv", "summary.csv"}) {
    std::ifstream a(dir / "a" / name), b(dir / "b" / name);
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    EXPECT_FALSE(sa.str().empty());
    EXPECT_EQ(sa.str(), sb.str()) << name;
  }
  EXPECT_TRUE(std::filesystem::exists(dir / "a" / "timing.csv"));
}

TEST(PipelineTest, FailingTrialIsRecorded) {
  ExperimentConfig cfg = TinyConfig();
  cfg.repeats = 1;
  cfg.methods = {AugmentMethod::kDuplication, AugmentMethod::kEntityReplacement};
  const auto report = run_pipeline(TinyData({1, 20, 20}), cfg);
  bool saw_error = false;
  for (const auto& t : report.trials) {
    if (t.method == AugmentMethod::kEntityReplacement && t.ratio > 0.0) {
      EXPECT_FALSE(t.ok());
      EXPECT_THAT(t.error, HasSubstr("replacement"));
      saw_error = true;
    } else {
      EXPECT_TRUE(t.ok()) << t.error;
    }
  }
  EXPECT_TRUE(saw_error);
  EXPECT_THAT(Csv(write_results_csv, report), HasSubstr("replacement: "));
}

TEST(PipelineTest, CpEntityMethodRuns) {
  ExperimentConfig cfg = TinyConfig();
  cfg.repeats = 1;
  cfg.methods = {AugmentMethod::kDain};
  cfg.entity_method = EntityMethod::kCpRank1;
  cfg.cp.epochs = 50;
  cfg.dain_predictor = PredictorKind::kMlp;
  cfg.clamp = true;
  const auto report = run_pipeline(TinyData(), cfg);
  for (const auto& t : report.trials) EXPECT_TRUE(t.ok()) << t.error;
}

}  // namespace
}  // namespace dain
