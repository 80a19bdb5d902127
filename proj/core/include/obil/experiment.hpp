// Copyright 2026 The OBIL Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef OBIL_EXPERIMENT_HPP_
#define OBIL_EXPERIMENT_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "obil/adapter.hpp"
#include "obil/baselines.hpp"
#include "obil/ensemble.hpp"
#include "obil/losses.hpp"
#include "obil/metrics.hpp"
#include "obil/mlp.hpp"
#include "obil/shift_sim.hpp"

namespace obil {

std::string_view version();

struct DataConfig {
  std::string source = "gaussian";  // gaussian | csv
  std::size_t n = 5000;
  double train_p1 = 0.2;
  GaussianProblem problem;
  std::string csv_path;
  std::string label_column = "label";
  std::string positive_value = "1";
};

struct SplitConfig {
  double train = 0.70;
  double calibration = 0.15;  // the remainder is the test split
};

struct ScenarioConfig {
  PriorTrajectory trajectory;
  bool base_qp_set = false;  // otherwise the training Q_P
  std::uint64_t horizon = 1000;
  std::string lr_source = "ensemble";  // ensemble | analytic
  Policy policy = Policy::kAdaptive;
  std::optional<double> fixed_p1;  // defaults to the training prior
};

struct BaselinesConfig {
  std::vector<BaselineKind> kinds = {BaselineKind::kThresholdMoving,
                                     BaselineKind::kLogitAdjustment, BaselineKind::kBbse};
  std::string la_mode = "oracle";  // oracle | stale
  std::size_t bbse_batch = kDefaultBbseBatch;
  std::vector<double> temperature_grid;
};

struct EvaluateConfig {
  std::string test_csv;
  std::string threshold = "adaptive";  // adaptive | fixed
  std::optional<double> fixed_p1;
};

struct ExperimentConfig {
  DataConfig data;
  SplitConfig split;
  // Ensemble members default to dropout 0.1 so MC-dropout weights carry
  // information.
  NetworkConfig network = [] {
    NetworkConfig n;
    n.dropout_rate = 0.1;
    return n;
  }();
  TrainingConfig training;
  LossId loss = LossId::kSquared;
  EnsembleConfig ensemble;
  std::string ensemble_path;
  AdapterConfig adapter;
  bool initial_p1_set = false;  // otherwise the training prior
  ScenarioConfig scenario;
  BaselinesConfig baselines;
  std::size_t ece_bins = kDefaultEceBins;
  EvaluateConfig evaluate;
  std::vector<std::uint64_t> seeds = {0};
  std::string output_dir = "obil_out";

  // Throws kInvalidConfig (or kUnknownLoss) on any inconsistency.
  void validate() const;
};

// Unknown keys, unknown identifiers and out-of-range values are all
// kInvalidConfig (kUnknownLoss for loss names); malformed JSON is kParseError.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
// Fully resolved configuration as JSON, defaults included.
std::string config_echo(const ExperimentConfig& cfg);

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

struct PolicyMetrics {
  MetricValue f1;
  MetricValue g_mean;
  MetricValue auprc;
  MetricValue ece;
};

struct SeedResult {
  std::uint64_t seed = 0;
  bool ok = true;
  std::string failed_stage;
  std::string error;
  std::map<std::string, PolicyMetrics> policies;
};

struct AggregateRow {
  std::string policy;
  std::string metric;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for a single row
  std::size_t n = 0;
};

struct ExperimentReport {
  std::vector<SeedResult> seeds;
  std::vector<AggregateRow> aggregate;
  bool ok() const;
};

std::vector<AggregateRow> aggregate_rows(const std::vector<SeedResult>& seeds);

// Data for one seed: the Gaussian sample or the CSV contents.
LabeledDataset load_dataset(const ExperimentConfig& cfg, std::uint64_t seed);

struct SplitData {
  LabeledDataset train;
  LabeledDataset calibration;
  LabeledDataset test;
};
SplitData split_dataset(const ExperimentConfig& cfg, const LabeledDataset& data,
                        std::uint64_t seed);

// Per seed: data, split, ensemble, optional temperature fit, scenario with
// the adapter and baselines, metrics; then per-seed and aggregate files.
// Stage failures are recorded per seed and do not stop other seeds.
ExperimentReport run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

// Subcommand drivers; each writes into out_dir and a summary to log.
void command_gen(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                 std::ostream& log);
void command_train(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                   std::ostream& log);
struct CalibrationSummary {
  double ece_before = 0.0;
  double ece_after = 0.0;
  std::vector<double> temperatures;
  bool gate_before = false;
  bool gate_after = false;
};
CalibrationSummary command_calibrate(const ExperimentConfig& cfg,
                                     const std::filesystem::path& out_dir, std::ostream& log);
void command_simulate(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                      std::ostream& log);
void command_regret(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                    std::ostream& log);
void command_evaluate(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                      std::ostream& log);

inline constexpr double kEceGate = 0.05;

}  // namespace obil

#endif  // OBIL_EXPERIMENT_HPP_
