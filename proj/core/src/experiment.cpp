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

#include "obil/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "obil/csv.hpp"
#include "obil/error.hpp"
#include "obil/resampling.hpp"
#include "text_io.hpp"

#ifndef OBIL_VERSION_STRING
#define OBIL_VERSION_STRING "0.0.0"
#endif

namespace obil {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string_view version() { return OBIL_VERSION_STRING; }

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over seed + stream * golden gamma.
  std::uint64_t z = seed + (stream + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

enum SeedStream : std::uint64_t {
  kDataStream = 1,
  kSplitStream,
  kEnsembleStream,
  kVanillaStream,
  kScenarioStream,
  kFuseStream,
};

[[noreturn]] void config_error(const std::string& msg) {
  throw Error(ErrorCode::kInvalidConfig, msg);
}

const json& section(const json& root, const char* name, const json& empty) {
  if (!root.contains(name)) return empty;
  const auto& s = root.at(name);
  if (!s.is_object()) config_error(std::string("'") + name + "' must be an object");
  return s;
}

void check_keys(const json& j, std::initializer_list<std::string_view> allowed,
                std::string_view where) {
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      config_error("unknown key '" + key + "' in " + std::string(where));
    }
  }
}

template <class T>
void read(const json& j, const char* key, T& dst) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const json::exception& e) {
    config_error(std::string("bad value for '") + key + "': " + e.what());
  }
}

template <class T>
void read_optional(const json& j, const char* key, std::optional<T>& dst) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  T v{};
  read(j, key, v);
  dst = v;
}

void read_vector(const json& j, const char* key, Vector& dst) {
  if (!j.contains(key)) return;
  std::vector<double> v;
  read(j, key, v);
  dst = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

double logit(double p) { return std::log(p) - std::log1p(-p); }
double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

void ExperimentConfig::validate() const {
  if (data.source != "gaussian" && data.source != "csv") {
    config_error("data.source must be 'gaussian' or 'csv'");
  }
  if (data.source == "gaussian") {
    data.problem.validate();
    if (data.n < 10) config_error("data.n must be at least 10");
    if (!(data.train_p1 > 0.0 && data.train_p1 < 1.0)) config_error("data.train_p1 in (0,1)");
  } else if (data.csv_path.empty()) {
    config_error("data.csv_path is required for csv data");
  }
  if (!(split.train > 0.0 && split.calibration > 0.0 && split.train + split.calibration < 1.0)) {
    config_error("split fractions must be positive and leave a test split");
  }
  network.validate();
  training.validate();
  ensemble.validate();
  adapter.validate();
  scenario.trajectory.validate();
  if (scenario.horizon < 1) config_error("scenario.horizon must be >= 1");
  if (scenario.lr_source != "ensemble" && scenario.lr_source != "analytic") {
    config_error("scenario.lr_source must be 'ensemble' or 'analytic'");
  }
  if (scenario.lr_source == "analytic" && data.source != "gaussian") {
    config_error("the analytic likelihood ratio needs gaussian data");
  }
  if (scenario.fixed_p1 && !(*scenario.fixed_p1 > 0.0 && *scenario.fixed_p1 < 1.0)) {
    config_error("scenario.fixed_p1 must lie in (0,1)");
  }
  if (baselines.la_mode != "oracle" && baselines.la_mode != "stale") {
    config_error("baselines.la_mode must be 'oracle' or 'stale'");
  }
  if (baselines.bbse_batch == 0) config_error("baselines.bbse_batch must be positive");
  for (double t : baselines.temperature_grid) {
    if (!(t > 0.0)) config_error("temperature_grid entries must be positive");
  }
  if (ece_bins == 0) config_error("metrics.ece_bins must be positive");
  if (evaluate.threshold != "adaptive" && evaluate.threshold != "fixed") {
    config_error("evaluate.threshold must be 'adaptive' or 'fixed'");
  }
  if (evaluate.fixed_p1 && !(*evaluate.fixed_p1 > 0.0 && *evaluate.fixed_p1 < 1.0)) {
    config_error("evaluate.fixed_p1 must lie in (0,1)");
  }
  if (seeds.empty()) config_error("seeds must be a nonempty list");
}

ExperimentConfig parse_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParseError, std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) config_error("config root must be an object");
  check_keys(root, {"data", "split", "network", "training", "ensemble", "adapter", "scenario",
                    "baselines", "metrics", "evaluate", "seeds", "output_dir"},
             "config");
  const json empty = json::object();
  ExperimentConfig cfg;

  const auto& d = section(root, "data", empty);
  check_keys(d, {"source", "n", "train_p1", "mu0", "mu1", "sigma2", "csv_path", "label_column",
                 "positive_value"},
             "data");
  read(d, "source", cfg.data.source);
  read(d, "n", cfg.data.n);
  read(d, "train_p1", cfg.data.train_p1);
  read_vector(d, "mu0", cfg.data.problem.mu0);
  read_vector(d, "mu1", cfg.data.problem.mu1);
  read(d, "sigma2", cfg.data.problem.sigma2);
  read(d, "csv_path", cfg.data.csv_path);
  read(d, "label_column", cfg.data.label_column);
  read(d, "positive_value", cfg.data.positive_value);

  const auto& sp = section(root, "split", empty);
  check_keys(sp, {"train", "calibration"}, "split");
  read(sp, "train", cfg.split.train);
  read(sp, "calibration", cfg.split.calibration);

  const auto& n = section(root, "network", empty);
  check_keys(n, {"hidden_dims", "activation", "dropout_rate"}, "network");
  read(n, "hidden_dims", cfg.network.hidden_dims);
  if (n.contains("activation")) {
    std::string a;
    read(n, "activation", a);
    try {
      cfg.network.activation = parse_activation(a);
    } catch (const Error& e) {
      config_error(e.what());
    }
  }
  read(n, "dropout_rate", cfg.network.dropout_rate);

  const auto& t = section(root, "training", empty);
  check_keys(t, {"loss", "learning_rate", "max_epochs", "batch_size", "patience",
                 "validation_fraction", "cost_weight"},
             "training");
  if (t.contains("loss")) {
    std::string l;
    read(t, "loss", l);
    cfg.loss = parse_loss(l);
  }
  read(t, "learning_rate", cfg.training.learning_rate);
  read(t, "max_epochs", cfg.training.max_epochs);
  read(t, "batch_size", cfg.training.batch_size);
  read(t, "patience", cfg.training.early_stop_patience);
  read(t, "validation_fraction", cfg.training.validation_fraction);
  read(t, "cost_weight", cfg.training.cost_weight);

  const auto& e = section(root, "ensemble", empty);
  check_keys(e, {"k", "target_qps", "tau", "mc_samples", "method", "fit_temperature",
                 "calibration_fraction", "path"},
             "ensemble");
  read(e, "k", cfg.ensemble.k);
  read(e, "target_qps", cfg.ensemble.target_qps);
  read(e, "tau", cfg.ensemble.tau);
  read(e, "mc_samples", cfg.ensemble.mc_samples);
  if (e.contains("method")) {
    std::string m;
    read(e, "method", m);
    try {
      cfg.ensemble.method = parse_resample_method(m);
    } catch (const Error& err) {
      config_error(err.what());
    }
  }
  read(e, "fit_temperature", cfg.ensemble.fit_temperature);
  read(e, "calibration_fraction", cfg.ensemble.calibration_fraction);
  read(e, "path", cfg.ensemble_path);

  const auto& a = section(root, "adapter", empty);
  check_keys(a, {"qc", "initial_p1", "alpha", "gamma", "beta", "delta_max", "window_w", "eta"},
             "adapter");
  read(a, "qc", cfg.adapter.qc);
  if (a.contains("initial_p1") && !a.at("initial_p1").is_null()) {
    read(a, "initial_p1", cfg.adapter.initial_p1);
    cfg.initial_p1_set = true;
  }
  read(a, "alpha", cfg.adapter.alpha);
  read(a, "gamma", cfg.adapter.gamma);
  read(a, "beta", cfg.adapter.beta);
  read(a, "delta_max", cfg.adapter.delta_max);
  read(a, "window_w", cfg.adapter.window_w);
  read(a, "eta", cfg.adapter.eta);

  const auto& s = section(root, "scenario", empty);
  check_keys(s, {"kind", "p", "p_before", "p_after", "t_switch", "decay_steps", "p_start", "slope",
                 "p_min", "p_max", "multipliers", "base_qp", "horizon", "lr_source", "policy",
                 "fixed_p1"},
             "scenario");
  auto& tr = cfg.scenario.trajectory;
  if (s.contains("kind")) {
    std::string k;
    read(s, "kind", k);
    tr.kind = parse_trajectory_kind(k);
  }
  read(s, "p", tr.p);
  read(s, "p_before", tr.p_before);
  read(s, "p_after", tr.p_after);
  read(s, "t_switch", tr.t_switch);
  read(s, "decay_steps", tr.decay_steps);
  read(s, "p_start", tr.p_start);
  read(s, "slope", tr.slope);
  read(s, "p_min", tr.p_min);
  read(s, "p_max", tr.p_max);
  read(s, "multipliers", tr.multipliers);
  if (s.contains("base_qp") && !s.at("base_qp").is_null()) {
    read(s, "base_qp", tr.base_qp);
    cfg.scenario.base_qp_set = true;
  }
  read(s, "horizon", cfg.scenario.horizon);
  tr.horizon = cfg.scenario.horizon;
  read(s, "lr_source", cfg.scenario.lr_source);
  if (s.contains("policy")) {
    std::string p;
    read(s, "policy", p);
    cfg.scenario.policy = parse_policy(p);
  }
  read_optional(s, "fixed_p1", cfg.scenario.fixed_p1);

  const auto& b = section(root, "baselines", empty);
  check_keys(b, {"kinds", "la_mode", "bbse_batch", "temperature_grid"}, "baselines");
  if (b.contains("kinds")) {
    std::vector<std::string> names;
    read(b, "kinds", names);
    cfg.baselines.kinds.clear();
    for (const auto& name : names) cfg.baselines.kinds.push_back(parse_baseline(name));
  }
  read(b, "la_mode", cfg.baselines.la_mode);
  read(b, "bbse_batch", cfg.baselines.bbse_batch);
  read(b, "temperature_grid", cfg.baselines.temperature_grid);

  const auto& m = section(root, "metrics", empty);
  check_keys(m, {"ece_bins"}, "metrics");
  read(m, "ece_bins", cfg.ece_bins);

  const auto& ev = section(root, "evaluate", empty);
  check_keys(ev, {"test_csv", "threshold", "fixed_p1"}, "evaluate");
  read(ev, "test_csv", cfg.evaluate.test_csv);
  read(ev, "threshold", cfg.evaluate.threshold);
  read_optional(ev, "fixed_p1", cfg.evaluate.fixed_p1);

  read(root, "seeds", cfg.seeds);
  read(root, "output_dir", cfg.output_dir);
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidConfig, "cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_echo(const ExperimentConfig& cfg) {
  json j;
  j["data"] = {{"source", cfg.data.source},
               {"n", cfg.data.n},
               {"train_p1", cfg.data.train_p1},
               {"mu0", to_std(cfg.data.problem.mu0)},
               {"mu1", to_std(cfg.data.problem.mu1)},
               {"sigma2", cfg.data.problem.sigma2},
               {"csv_path", cfg.data.csv_path},
               {"label_column", cfg.data.label_column},
               {"positive_value", cfg.data.positive_value}};
  j["split"] = {{"train", cfg.split.train}, {"calibration", cfg.split.calibration}};
  j["network"] = {{"hidden_dims", cfg.network.hidden_dims},
                  {"activation", std::string(activation_name(cfg.network.activation))},
                  {"dropout_rate", cfg.network.dropout_rate}};
  j["training"] = {{"loss", std::string(loss_name(cfg.loss))},
                   {"learning_rate", cfg.training.learning_rate},
                   {"max_epochs", cfg.training.max_epochs},
                   {"batch_size", cfg.training.batch_size},
                   {"patience", cfg.training.early_stop_patience},
                   {"validation_fraction", cfg.training.validation_fraction},
                   {"cost_weight", cfg.training.cost_weight}};
  j["ensemble"] = {{"k", cfg.ensemble.k},
                   {"target_qps", cfg.ensemble.target_qps},
                   {"tau", cfg.ensemble.tau},
                   {"mc_samples", cfg.ensemble.mc_samples},
                   {"method", std::string(resample_method_name(cfg.ensemble.method))},
                   {"fit_temperature", cfg.ensemble.fit_temperature},
                   {"calibration_fraction", cfg.ensemble.calibration_fraction},
                   {"path", cfg.ensemble_path}};
  j["adapter"] = {{"qc", cfg.adapter.qc},
                  {"initial_p1", cfg.initial_p1_set ? json(cfg.adapter.initial_p1) : json()},
                  {"alpha", cfg.adapter.alpha},
                  {"gamma", cfg.adapter.gamma},
                  {"beta", cfg.adapter.beta},
                  {"delta_max", cfg.adapter.delta_max},
                  {"window_w", cfg.adapter.window_w},
                  {"eta", cfg.adapter.eta}};
  const auto& tr = cfg.scenario.trajectory;
  j["scenario"] = {{"kind", std::string(trajectory_kind_name(tr.kind))},
                   {"p", tr.p},
                   {"p_before", tr.p_before},
                   {"p_after", tr.p_after},
                   {"t_switch", tr.t_switch},
                   {"decay_steps", tr.decay_steps},
                   {"p_start", tr.p_start},
                   {"slope", tr.slope},
                   {"p_min", tr.p_min},
                   {"p_max", tr.p_max},
                   {"multipliers", tr.multipliers},
                   {"base_qp", cfg.scenario.base_qp_set ? json(tr.base_qp) : json()},
                   {"horizon", cfg.scenario.horizon},
                   {"lr_source", cfg.scenario.lr_source},
                   {"policy", std::string(policy_name(cfg.scenario.policy))},
                   {"fixed_p1", cfg.scenario.fixed_p1 ? json(*cfg.scenario.fixed_p1) : json()}};
  std::vector<std::string> kinds;
  for (auto k : cfg.baselines.kinds) kinds.emplace_back(baseline_name(k));
  j["baselines"] = {{"kinds", kinds},
                    {"la_mode", cfg.baselines.la_mode},
                    {"bbse_batch", cfg.baselines.bbse_batch},
                    {"temperature_grid", cfg.baselines.temperature_grid}};
  j["metrics"] = {{"ece_bins", cfg.ece_bins}};
  j["evaluate"] = {{"test_csv", cfg.evaluate.test_csv},
                   {"threshold", cfg.evaluate.threshold},
                   {"fixed_p1", cfg.evaluate.fixed_p1 ? json(*cfg.evaluate.fixed_p1) : json()}};
  j["seeds"] = cfg.seeds;
  // output_dir is left out: it does not affect results, and leaving it in
  // would make otherwise identical runs differ.
  return j.dump(2) + "\n";
}

bool ExperimentReport::ok() const {
  return std::all_of(seeds.begin(), seeds.end(), [](const SeedResult& s) { return s.ok; });
}

namespace {

constexpr const char* kMetricNames[] = {"f1", "g_mean", "auprc", "ece"};

const MetricValue& metric_of(const PolicyMetrics& m, std::string_view name) {
  if (name == "f1") return m.f1;
  if (name == "g_mean") return m.g_mean;
  if (name == "auprc") return m.auprc;
  return m.ece;
}

}  // namespace

std::vector<AggregateRow> aggregate_rows(const std::vector<SeedResult>& seeds) {
  std::map<std::string, std::map<std::string, std::vector<double>>> values;
  std::vector<std::string> order;
  for (const auto& s : seeds) {
    if (!s.ok) continue;
    for (const auto& [policy, m] : s.policies) {
      if (!values.count(policy)) order.push_back(policy);
      for (const char* name : kMetricNames) values[policy][name].push_back(metric_of(m, name).value);
    }
  }
  std::sort(order.begin(), order.end());
  std::vector<AggregateRow> rows;
  for (const auto& policy : order) {
    for (const char* name : kMetricNames) {
      const auto& v = values[policy][name];
      AggregateRow r;
      r.policy = policy;
      r.metric = name;
      r.n = v.size();
      r.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
      if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - r.mean) * (x - r.mean);
        r.stddev = std::sqrt(ss / static_cast<double>(v.size() - 1));
      }
      rows.push_back(r);
    }
  }
  return rows;
}

LabeledDataset load_dataset(const ExperimentConfig& cfg, std::uint64_t seed) {
  if (cfg.data.source == "csv") {
    return ingest_csv(fs::path(cfg.data.csv_path), cfg.data.label_column,
                      cfg.data.positive_value)
        .data;
  }
  Rng rng(derive_seed(seed, kDataStream));
  return sample_dataset(cfg.data.problem, cfg.data.n, cfg.data.train_p1, rng);
}

SplitData split_dataset(const ExperimentConfig& cfg, const LabeledDataset& data,
                        std::uint64_t seed) {
  const double fr[] = {cfg.split.train, cfg.split.calibration};
  auto parts = stratified_split(data, fr, derive_seed(seed, kSplitStream));
  return {std::move(parts[0]), std::move(parts[1]), std::move(parts[2])};
}

namespace {

void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + p.string() + ": " + ec.message());
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + p.string());
  return out;
}

double training_p1(const ExperimentConfig& cfg, const LabeledDataset& train) {
  if (cfg.data.source == "gaussian") return cfg.data.train_p1;
  return static_cast<double>(train.count(1)) / static_cast<double>(train.size());
}

AdapterConfig adapter_for(const ExperimentConfig& cfg, double train_p1) {
  AdapterConfig a = cfg.adapter;
  if (!cfg.initial_p1_set) a.initial_p1 = train_p1;
  return a;
}

LikelihoodRatioEnsemble obtain_ensemble(const ExperimentConfig& cfg, const SplitData& split,
                                        std::uint64_t seed) {
  if (!cfg.ensemble_path.empty()) {
    std::ifstream in(cfg.ensemble_path);
    if (!in) throw Error(ErrorCode::kIoError, "cannot read ensemble " + cfg.ensemble_path);
    return read_ensemble(in);
  }
  NetworkConfig net = cfg.network;
  net.input_dim = split.train.dim();
  return train_members(split.train, split.calibration, cfg.ensemble, net, cfg.training, cfg.loss,
                       derive_seed(seed, kEnsembleStream));
}

struct Stream {
  std::vector<Vector> x;
  std::vector<int> y;
  std::vector<double> p1;
};

Stream make_stream(const ExperimentConfig& cfg, const LabeledDataset& test, double train_p1,
                   std::uint64_t seed) {
  PriorTrajectory tr = cfg.scenario.trajectory;
  tr.horizon = cfg.scenario.horizon;
  if (!cfg.scenario.base_qp_set) tr.base_qp = (1.0 - train_p1) / train_p1;
  Rng rng(derive_seed(seed, kScenarioStream));
  Stream s;
  const auto T = static_cast<std::size_t>(cfg.scenario.horizon);
  s.x.reserve(T);
  if (cfg.data.source == "gaussian") {
    StreamScenario sc{cfg.data.problem, tr, cfg.scenario.horizon, seed};
    sc.validate();
    for (std::uint64_t t = 0; t < cfg.scenario.horizon; ++t) {
      auto st = sample_step(sc, t, rng);
      s.x.push_back(std::move(st.x));
      s.y.push_back(st.y);
      s.p1.push_back(st.p1);
    }
    return s;
  }
  // Rows drawn from the test split: label from the trajectory, then a
  // uniformly chosen row of that class.
  tr.validate();
  const auto pool0 = test.indices_of(0);
  const auto pool1 = test.indices_of(1);
  if (pool0.empty() || pool1.empty()) {
    throw Error(ErrorCode::kResampleInfeasible, "test split lacks a class");
  }
  std::uniform_int_distribution<std::size_t> pick0(0, pool0.size() - 1);
  std::uniform_int_distribution<std::size_t> pick1(0, pool1.size() - 1);
  for (std::uint64_t t = 0; t < cfg.scenario.horizon; ++t) {
    const double p = tr.prior_at(t);
    std::bernoulli_distribution coin(p);
    const int y = coin(rng) ? 1 : 0;
    const auto row = y == 1 ? pool1[pick1(rng)] : pool0[pick0(rng)];
    s.x.push_back(test.row(row));
    s.y.push_back(y);
    s.p1.push_back(p);
  }
  return s;
}

PolicyMetrics evaluate_policy(std::span<const int> preds, std::span<const int> labels,
                              std::span<const double> scores, std::span<const double> posteriors,
                              std::size_t bins) {
  PolicyMetrics m;
  const auto c = confusion(preds, labels);
  m.f1 = f1(c);
  m.g_mean = g_mean(c);
  m.auprc = auprc(scores, labels);
  m.ece = binary_ece(posteriors, labels, bins);
  return m;
}

void write_metrics(std::ostream& out, const std::map<std::string, PolicyMetrics>& policies) {
  using detail::format_double;
  out << "policy,f1,f1_defined,g_mean,g_mean_defined,auprc,auprc_defined,ece,ece_defined\n";
  for (const auto& [name, m] : policies) {
    out << name;
    for (const char* metric : kMetricNames) {
      const auto& v = metric_of(m, metric);
      out << ',' << format_double(v.value) << ',' << (v.defined ? 1 : 0);
    }
    out << '\n';
  }
}

CalibratedScorer train_vanilla(const ExperimentConfig& cfg, const SplitData& split,
                               std::uint64_t seed) {
  NetworkConfig net = cfg.network;
  net.input_dim = split.train.dim();
  net.seed = derive_seed(seed, kVanillaStream);
  auto v = train(split.train, net, cfg.training, cfg.loss);
  if (!cfg.baselines.temperature_grid.empty() && split.calibration.has_both_classes()) {
    // Grid search on calibration NLL at the native prior.
    std::vector<double> logits;
    for (std::size_t i = 0; i < split.calibration.size(); ++i) {
      logits.push_back(2.0 * preactivation(v, split.calibration.row(i)));
    }
    const std::vector<double> offsets(
        logits.size(), std::log(v.training_qp) - std::log(split.calibration.imbalance_ratio()));
    double best = std::numeric_limits<double>::infinity();
    for (double t : cfg.baselines.temperature_grid) {
      const double nll = mean_temperature_nll(logits, split.calibration.labels, t, offsets);
      if (nll < best) {
        best = nll;
        v.temperature = t;
      }
    }
  } else if (cfg.ensemble.fit_temperature || cfg.loss == LossId::kXentSigmoid) {
    fit_member_temperature(v, split.calibration);
  }
  return v;
}

struct SeedOutputs {
  std::map<std::string, PolicyMetrics> policies;
  std::vector<StepRecord> trace;
  std::optional<RegretLedger> ledger;
  std::vector<ReliabilityBin> reliability;
};

SeedOutputs run_seed(const ExperimentConfig& cfg, std::uint64_t seed, std::string& stage) {
  SeedOutputs out;
  stage = "data";
  const auto data = load_dataset(cfg, seed);
  stage = "split";
  const auto split = split_dataset(cfg, data, seed);
  if (!split.train.has_both_classes()) {
    throw Error(ErrorCode::kDegenerateData, "training split lacks a class");
  }
  const double p_train = training_p1(cfg, split.train);
  const double qc = cfg.adapter.qc;
  stage = "train";
  const auto ensemble = obtain_ensemble(cfg, split, seed);
  const auto vanilla = train_vanilla(cfg, split, seed);
  stage = "scenario";
  const auto stream = make_stream(cfg, split.test, p_train, seed);
  const std::size_t T = stream.x.size();
  Rng fuse_rng(derive_seed(seed, kFuseStream));
  std::vector<double> llr(T);
  std::vector<double> v_llr(T);
  for (std::size_t t = 0; t < T; ++t) {
    llr[t] = cfg.scenario.lr_source == "analytic" ? cfg.data.problem.log_lr(stream.x[t])
                                                  : fused_log_lr(ensemble, stream.x[t], fuse_rng).value;
    v_llr[t] = member_log_lr(vanilla, stream.x[t]).value;
  }
  const auto adapter = adapter_for(cfg, p_train);
  out.trace = run_stream(llr, adapter);

  stage = "metrics";
  const std::size_t bins = cfg.ece_bins;
  std::vector<int> pred(T);
  std::vector<double> post(T);
  {
    double p_before = init_adapter(adapter).p1_hat;
    for (std::size_t t = 0; t < T; ++t) {
      pred[t] = out.trace[t].prediction;
      post[t] = sigmoid(llr[t] + logit(p_before));
      p_before = out.trace[t].p1_hat_after;
    }
    out.policies["obil"] = evaluate_policy(pred, stream.y, llr, post, bins);
    std::vector<double> conf(T);
    std::vector<int> correct(T);
    for (std::size_t t = 0; t < T; ++t) {
      conf[t] = std::max(post[t], 1.0 - post[t]);
      correct[t] = (post[t] > 0.5 ? 1 : 0) == stream.y[t];
    }
    out.reliability = reliability_bins(conf, correct, bins);
  }
  for (std::size_t t = 0; t < T; ++t) {
    pred[t] = oracle_decision(llr[t], qc, stream.p1[t]);
    post[t] = sigmoid(llr[t] + logit(stream.p1[t]));
  }
  out.policies["oracle"] = evaluate_policy(pred, stream.y, llr, post, bins);
  const double vanilla_threshold = qc * (1.0 - p_train) / p_train;
  for (std::size_t t = 0; t < T; ++t) {
    pred[t] = bayes_decision(std::exp(v_llr[t]), vanilla_threshold);
    post[t] = sigmoid(v_llr[t] + logit(p_train));
  }
  out.policies["vanilla"] = evaluate_policy(pred, stream.y, v_llr, post, bins);

  for (const auto kind : cfg.baselines.kinds) {
    switch (kind) {
      case BaselineKind::kNone: break;
      case BaselineKind::kThresholdMoving: {
        std::vector<double> cal_scores;
        for (std::size_t i = 0; i < split.calibration.size(); ++i) {
          cal_scores.push_back(member_log_lr(vanilla, split.calibration.row(i)).value);
        }
        const auto fit = threshold_moving_fit(cal_scores, split.calibration.labels);
        const double thr = fit.ok ? fit.threshold : std::log(vanilla_threshold);
        for (std::size_t t = 0; t < T; ++t) {
          pred[t] = v_llr[t] > thr ? 1 : 0;
          post[t] = sigmoid(v_llr[t] + logit(p_train));
        }
        out.policies["threshold_moving"] = evaluate_policy(pred, stream.y, v_llr, post, bins);
        break;
      }
      case BaselineKind::kLogitAdjustment: {
        const bool oracle_mode = cfg.baselines.la_mode == "oracle";
        for (std::size_t t = 0; t < T; ++t) {
          const double assumed = oracle_mode ? stream.p1[t] : p_train;
          const double z = logit_adjust(v_llr[t] + logit(p_train), p_train, assumed);
          pred[t] = z > std::log(qc) ? 1 : 0;
          post[t] = sigmoid(z);
        }
        out.policies["logit_adjustment"] = evaluate_policy(pred, stream.y, v_llr, post, bins);
        break;
      }
      case BaselineKind::kBbse: {
        std::vector<int> cal_pred;
        for (std::size_t i = 0; i < split.calibration.size(); ++i) {
          cal_pred.push_back(bayes_decision(
              std::exp(member_log_lr(vanilla, split.calibration.row(i)).value),
              vanilla_threshold));
        }
        const auto C = estimate_confusion(cal_pred, split.calibration.labels);
        double p_hat = p_train;
        const std::size_t batch = cfg.baselines.bbse_batch;
        std::size_t batch_pos = 0;
        for (std::size_t t = 0; t < T; ++t) {
          pred[t] = bayes_decision(std::exp(v_llr[t]), qc * (1.0 - p_hat) / p_hat);
          post[t] = sigmoid(v_llr[t] + logit(p_hat));
          if (++batch_pos == batch) {
            // Predicted-label frequencies on the finished batch, at the
            // source threshold the confusion matrix was measured with.
            double ones = 0.0;
            for (std::size_t i = t + 1 - batch; i <= t; ++i) {
              ones += bayes_decision(std::exp(v_llr[i]), vanilla_threshold);
            }
            const double mu1 = ones / static_cast<double>(batch);
            try {
              p_hat = bbse_estimate_prior(C, {1.0 - mu1, mu1}).p1();
            } catch (const Error&) {
              // Keep the previous estimate.
            }
            batch_pos = 0;
          }
        }
        out.policies["bbse"] = evaluate_policy(pred, stream.y, v_llr, post, bins);
        break;
      }
    }
  }

  if (cfg.data.source == "gaussian") {
    RegretLedger L;
    double cum = 0.0;
    double cum_r = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      const double truth_llr = cfg.data.problem.log_lr(stream.x[t]);
      const int alg = out.trace[t].prediction;
      const int orc = oracle_decision(truth_llr, qc, stream.p1[t]);
      const double p = cfg.data.problem.posterior(stream.x[t], stream.p1[t]);
      L.alg_loss.push_back(decision_cost(alg, stream.y[t], qc));
      L.oracle_loss.push_back(decision_cost(orc, stream.y[t], qc));
      L.alg_expected.push_back(expected_decision_cost(alg, p, qc));
      L.oracle_expected.push_back(expected_decision_cost(orc, p, qc));
      cum += L.alg_expected.back() - L.oracle_expected.back();
      cum_r += L.alg_loss.back() - L.oracle_loss.back();
      L.cum_regret.push_back(cum);
      L.cum_regret_realized.push_back(cum_r);
    }
    out.ledger = std::move(L);
  }
  return out;
}

void write_aggregate(const fs::path& dir, const ExperimentReport& report) {
  using detail::format_double;
  {
    auto out = open_out(dir / "per_seed.csv");
    out << "seed,policy,f1,g_mean,auprc,ece\n";
    for (const auto& s : report.seeds) {
      if (!s.ok) continue;
      for (const auto& [name, m] : s.policies) {
        out << s.seed << ',' << name << ',' << format_double(m.f1.value) << ','
            << format_double(m.g_mean.value) << ',' << format_double(m.auprc.value) << ','
            << format_double(m.ece.value) << '\n';
      }
    }
  }
  {
    auto out = open_out(dir / "aggregate.csv");
    out << "policy,metric,mean,std,n\n";
    for (const auto& r : report.aggregate) {
      out << r.policy << ',' << r.metric << ',' << format_double(r.mean) << ','
          << format_double(r.stddev) << ',' << r.n << '\n';
    }
  }
  if (!report.ok()) {
    auto out = open_out(dir / "failures.csv");
    out << "seed,stage,error\n";
    for (const auto& s : report.seeds) {
      if (s.ok) continue;
      std::string msg = s.error;
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      out << s.seed << ',' << s.failed_stage << ',' << msg << '\n';
    }
  }
}

void write_config_echo(const fs::path& dir, const ExperimentConfig& cfg) {
  auto out = open_out(dir / "config.json");
  out << config_echo(cfg);
  auto v = open_out(dir / "VERSION");
  v << "obil " << version() << '\n';
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  ensure_dir(out_dir);
  write_config_echo(out_dir, cfg);
  ExperimentReport report;
  for (const auto seed : cfg.seeds) {
    SeedResult r;
    r.seed = seed;
    const fs::path dir = out_dir / ("seed_" + std::to_string(seed));
    std::string stage;
    try {
      ensure_dir(dir);
      auto outputs = run_seed(cfg, seed, stage);
      stage = "write";
      r.policies = outputs.policies;
      {
        auto m = open_out(dir / "metrics.csv");
        write_metrics(m, outputs.policies);
      }
      {
        auto t = open_out(dir / "trace.jsonl");
        write_trace(t, outputs.trace);
      }
      {
        auto rb = open_out(dir / "reliability_obil.csv");
        write_reliability_bins(rb, outputs.reliability);
      }
      if (outputs.ledger) {
        auto l = open_out(dir / "regret.csv");
        write_regret_ledger(l, *outputs.ledger);
      }
    } catch (const std::exception& e) {
      r.ok = false;
      r.failed_stage = stage.empty() ? "setup" : stage;
      r.error = e.what();
      std::ofstream err(dir / "error.txt");
      err << "stage: " << r.failed_stage << "\nerror: " << r.error << '\n';
    }
    report.seeds.push_back(std::move(r));
  }
  report.aggregate = aggregate_rows(report.seeds);
  write_aggregate(out_dir, report);
  return report;
}

void command_gen(const ExperimentConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  if (cfg.data.source != "gaussian") config_error("gen needs data.source = 'gaussian'");
  ensure_dir(out_dir);
  const auto data = load_dataset(cfg, cfg.seeds.front());
  auto out = open_out(out_dir / "data.csv");
  write_csv(out, data);
  log << "wrote " << data.size() << " rows (d=" << data.dim() << ", N1=" << data.count(1)
      << ", IR=" << detail::format_double(data.imbalance_ratio()) << ") to "
      << (out_dir / "data.csv").string() << '\n';
}

void command_train(const ExperimentConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  ensure_dir(out_dir);
  const auto seed = cfg.seeds.front();
  const auto split = split_dataset(cfg, load_dataset(cfg, seed), seed);
  NetworkConfig net = cfg.network;
  net.input_dim = split.train.dim();
  const auto ensemble = train_members(split.train, split.calibration, cfg.ensemble, net,
                                      cfg.training, cfg.loss, derive_seed(seed, kEnsembleStream));
  {
    auto out = open_out(out_dir / "ensemble.txt");
    write_ensemble(out, ensemble);
  }
  {
    auto out = open_out(out_dir / "test.csv");
    write_csv(out, split.test);
  }
  write_config_echo(out_dir, cfg);
  log << "trained " << ensemble.size() << " members on " << split.train.size() << " rows; targets";
  for (double q : ensemble.config.target_qps) log << ' ' << detail::format_double(q);
  log << "\nwrote " << (out_dir / "ensemble.txt").string() << " and test split ("
      << split.test.size() << " rows)\n";
}

namespace {

double test_ece(const LikelihoodRatioEnsemble& e, const LabeledDataset& test, std::uint64_t seed,
                std::size_t bins, std::vector<ReliabilityBin>* rb) {
  Rng rng(derive_seed(seed, kFuseStream));
  const double prior_shift = -std::log(test.imbalance_ratio());
  std::vector<double> conf(test.size());
  std::vector<int> correct(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    const double p = sigmoid(fused_log_lr(e, test.row(i), rng).value + prior_shift);
    conf[i] = std::max(p, 1.0 - p);
    correct[i] = (p > 0.5 ? 1 : 0) == test.labels[i];
  }
  if (rb) *rb = reliability_bins(conf, correct, bins);
  return ece(conf, correct, bins).value;
}

}  // namespace

CalibrationSummary command_calibrate(const ExperimentConfig& cfg, const fs::path& out_dir,
                                     std::ostream& log) {
  ensure_dir(out_dir);
  const auto seed = cfg.seeds.front();
  const auto split = split_dataset(cfg, load_dataset(cfg, seed), seed);
  if (!split.test.has_both_classes()) {
    throw Error(ErrorCode::kDegenerateData, "test split lacks a class");
  }
  ExperimentConfig raw = cfg;
  raw.ensemble.fit_temperature = false;
  auto ensemble = obtain_ensemble(raw, split, seed);
  if (cfg.ensemble_path.empty() && cfg.loss == LossId::kXentSigmoid) {
    // train_members fits xent temperatures itself; measure from T = 1.
    for (auto& m : ensemble.members) m.temperature = 1.0;
  }
  CalibrationSummary s;
  std::vector<ReliabilityBin> before;
  std::vector<ReliabilityBin> after;
  s.ece_before = test_ece(ensemble, split.test, seed, cfg.ece_bins, &before);
  for (auto& m : ensemble.members) {
    fit_member_temperature(m, split.calibration);
    s.temperatures.push_back(m.temperature);
  }
  s.ece_after = test_ece(ensemble, split.test, seed, cfg.ece_bins, &after);
  s.gate_before = s.ece_before < kEceGate;
  s.gate_after = s.ece_after < kEceGate;
  {
    auto out = open_out(out_dir / "reliability_before.csv");
    write_reliability_bins(out, before);
  }
  {
    auto out = open_out(out_dir / "reliability_after.csv");
    write_reliability_bins(out, after);
  }
  {
    auto out = open_out(out_dir / "ensemble_calibrated.txt");
    write_ensemble(out, ensemble);
  }
  {
    json j;
    j["ece_before"] = s.ece_before;
    j["ece_after"] = s.ece_after;
    j["temperatures"] = s.temperatures;
    j["gate_threshold"] = kEceGate;
    j["gate_before"] = s.gate_before ? "pass" : "fail";
    j["gate_after"] = s.gate_after ? "pass" : "fail";
    j["bins"] = cfg.ece_bins;
    j["test_rows"] = split.test.size();
    auto out = open_out(out_dir / "calibration.json");
    out << j.dump(2) << '\n';
  }
  log << "ECE before " << detail::format_double(s.ece_before) << " ("
      << (s.gate_before ? "pass" : "fail") << "), after temperature scaling "
      << detail::format_double(s.ece_after) << " (" << (s.gate_after ? "pass" : "fail")
      << "); gate ECE < " << kEceGate << '\n';
  return s;
}

void command_simulate(const ExperimentConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  ensure_dir(out_dir);
  const auto seed = cfg.seeds.front();
  const auto split = split_dataset(cfg, load_dataset(cfg, seed), seed);
  const double p_train = training_p1(cfg, split.train);
  const auto stream = make_stream(cfg, split.test, p_train, seed);
  std::vector<double> llr(stream.x.size());
  if (cfg.scenario.lr_source == "analytic") {
    for (std::size_t t = 0; t < llr.size(); ++t) llr[t] = cfg.data.problem.log_lr(stream.x[t]);
  } else {
    const auto ensemble = obtain_ensemble(cfg, split, seed);
    Rng rng(derive_seed(seed, kFuseStream));
    for (std::size_t t = 0; t < llr.size(); ++t) {
      llr[t] = fused_log_lr(ensemble, stream.x[t], rng).value;
    }
  }
  const auto trace = run_stream(llr, adapter_for(cfg, p_train));
  auto out = open_out(out_dir / "trace.jsonl");
  write_trace(out, trace);
  log << "simulated " << trace.size() << " steps; final p1_hat "
      << (trace.empty() ? std::string("n/a") : detail::format_double(trace.back().p1_hat_after))
      << '\n';
}

void command_regret(const ExperimentConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  if (cfg.data.source != "gaussian") config_error("regret needs data.source = 'gaussian'");
  ensure_dir(out_dir);
  write_config_echo(out_dir, cfg);
  auto summary = open_out(out_dir / "regret_summary.csv");
  summary << "seed,horizon,cum_regret,cum_regret_realized\n";
  for (const auto seed : cfg.seeds) {
    PriorTrajectory tr = cfg.scenario.trajectory;
    tr.horizon = cfg.scenario.horizon;
    if (!cfg.scenario.base_qp_set) tr.base_qp = (1.0 - cfg.data.train_p1) / cfg.data.train_p1;
    StreamScenario sc{cfg.data.problem, tr, cfg.scenario.horizon, seed};
    LogLrSource source;
    std::optional<LikelihoodRatioEnsemble> ensemble;
    Rng fuse(derive_seed(seed, kFuseStream));
    if (cfg.scenario.lr_source == "ensemble") {
      const auto split = split_dataset(cfg, load_dataset(cfg, seed), seed);
      ensemble = obtain_ensemble(cfg, split, seed);
      source = [&](const Vector& x) { return fused_log_lr(*ensemble, x, fuse).value; };
    }
    RegretOptions opt;
    opt.policy = cfg.scenario.policy;
    opt.fixed_p1 = cfg.scenario.fixed_p1.value_or(cfg.data.train_p1);
    Rng rng(derive_seed(seed, kScenarioStream));
    const auto run = run_regret_experiment(sc, adapter_for(cfg, cfg.data.train_p1), source, opt, rng);
    const fs::path dir = out_dir / ("seed_" + std::to_string(seed));
    ensure_dir(dir);
    {
      auto out = open_out(dir / "regret.csv");
      write_regret_ledger(out, run.ledger);
    }
    if (!run.trace.empty()) {
      auto out = open_out(dir / "trace.jsonl");
      write_trace(out, run.trace);
    }
    summary << seed << ',' << cfg.scenario.horizon << ','
            << detail::format_double(run.ledger.cum_regret.back()) << ','
            << detail::format_double(run.ledger.cum_regret_realized.back()) << '\n';
    log << "seed " << seed << ": cumulative regret "
        << detail::format_double(run.ledger.cum_regret.back()) << " over "
        << cfg.scenario.horizon << " steps\n";
  }
}

void command_evaluate(const ExperimentConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  if (cfg.ensemble_path.empty()) config_error("evaluate needs ensemble.path");
  ensure_dir(out_dir);
  const auto seed = cfg.seeds.front();
  LabeledDataset test;
  if (!cfg.evaluate.test_csv.empty()) {
    test = ingest_csv(fs::path(cfg.evaluate.test_csv), cfg.data.label_column,
                      cfg.data.positive_value)
               .data;
  } else {
    test = split_dataset(cfg, load_dataset(cfg, seed), seed).test;
  }
  std::ifstream in(cfg.ensemble_path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read ensemble " + cfg.ensemble_path);
  const auto ensemble = read_ensemble(in);
  const double p_ref = cfg.evaluate.fixed_p1.value_or(cfg.data.train_p1);
  Rng rng(derive_seed(seed, kFuseStream));
  const std::size_t n = test.size();
  std::vector<double> llr(n);
  for (std::size_t i = 0; i < n; ++i) llr[i] = fused_log_lr(ensemble, test.row(i), rng).value;
  std::vector<int> pred(n);
  std::vector<double> post(n);
  const double qc = cfg.adapter.qc;
  std::string name;
  if (cfg.evaluate.threshold == "fixed") {
    name = "fixed";
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] = bayes_decision(std::exp(llr[i]), qc * (1.0 - p_ref) / p_ref);
      post[i] = sigmoid(llr[i] + logit(p_ref));
    }
  } else {
    name = "adaptive";
    const auto adapter = adapter_for(cfg, p_ref);
    const auto trace = run_stream(llr, adapter);
    double p_before = init_adapter(adapter).p1_hat;
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] = trace[i].prediction;
      post[i] = sigmoid(llr[i] + logit(p_before));
      p_before = trace[i].p1_hat_after;
    }
    auto out = open_out(out_dir / "trace.jsonl");
    write_trace(out, trace);
  }
  std::map<std::string, PolicyMetrics> policies;
  policies[name] = evaluate_policy(pred, test.labels, llr, post, cfg.ece_bins);
  {
    auto out = open_out(out_dir / "metrics.csv");
    write_metrics(out, policies);
  }
  {
    auto out = open_out(out_dir / "predictions.csv");
    out << "row,label,log_lr,prediction\n";
    for (std::size_t i = 0; i < n; ++i) {
      out << i << ',' << test.labels[i] << ',' << detail::format_double(llr[i]) << ',' << pred[i]
          << '\n';
    }
  }
  const auto& m = policies[name];
  log << name << " threshold on " << n << " rows: F1 " << detail::format_double(m.f1.value)
      << ", G-mean " << detail::format_double(m.g_mean.value) << ", AUPRC "
      << detail::format_double(m.auprc.value) << ", ECE " << detail::format_double(m.ece.value)
      << '\n';
}

}  // namespace obil
