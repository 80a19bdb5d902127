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

#include "obil/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

#include "obil/bayes.hpp"
#include "obil/error.hpp"
#include "text_io.hpp"

namespace obil {
namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

template <typename Derived>
void activate_inplace(Activation a, Eigen::MatrixBase<Derived>& z) {
  if (a == Activation::kRelu) {
    z = z.cwiseMax(0.0);
  } else {
    z = z.array().tanh().matrix();
  }
}

// Activation derivative at pre-activation z. ReLU takes the symmetric
// subgradient 1/2 at exactly zero, where a zero bias parks dead inputs.
Eigen::MatrixXd activation_grad(Activation a, const Eigen::MatrixXd& z) {
  if (a == Activation::kRelu) {
    return z.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? 0.0 : 0.5); });
  }
  return (1.0 - z.array().tanh().square()).matrix();
}

void check_input(const CalibratedScorer& scorer, const Vector& x) {
  if (static_cast<std::size_t>(x.size()) != scorer.config.input_dim) {
    throw Error(ErrorCode::kShapeError,
                "input has " + std::to_string(x.size()) + " features, expected " +
                    std::to_string(scorer.config.input_dim));
  }
}

// Forward/backward state for one mini-batch (samples are columns).
struct BatchTrace {
  std::vector<Eigen::MatrixXd> activations;  // post-activation, post-dropout
  std::vector<Eigen::MatrixXd> slope;        // activation derivative
  Eigen::RowVectorXd g;
};

BatchTrace forward_batch(const CalibratedScorer& s, const Eigen::MatrixXd& x,
                         const std::vector<Eigen::MatrixXd>* masks) {
  BatchTrace tr;
  const std::size_t hidden = s.layers.size() - 1;
  tr.activations.reserve(hidden + 1);
  tr.slope.reserve(hidden);
  tr.activations.push_back(x);
  for (std::size_t l = 0; l < hidden; ++l) {
    Eigen::MatrixXd z = s.layers[l].weight * tr.activations.back();
    z.colwise() += s.layers[l].bias;
    tr.slope.push_back(activation_grad(s.config.activation, z));
    activate_inplace(s.config.activation, z);
    if (masks != nullptr) z.array() *= (*masks)[l].array();
    tr.activations.push_back(std::move(z));
  }
  const auto& out = s.layers.back();
  tr.g = (out.weight * tr.activations.back()).row(0);
  tr.g.array() += out.bias(0);
  return tr;
}

// Accumulates parameter gradients given dL/dg per column.
void backward_batch(const CalibratedScorer& s, const BatchTrace& tr,
                    const Eigen::RowVectorXd& dg,
                    const std::vector<Eigen::MatrixXd>* masks,
                    std::vector<DenseLayer>& grads) {
  const std::size_t hidden = s.layers.size() - 1;
  Eigen::MatrixXd delta = dg;  // 1 x B
  for (std::size_t l = hidden + 1; l-- > 0;) {
    const auto& input = tr.activations[l];
    grads[l].weight.noalias() += delta * input.transpose();
    grads[l].bias += delta.rowwise().sum();
    if (l == 0) break;
    Eigen::MatrixXd back = s.layers[l].weight.transpose() * delta;
    if (masks != nullptr) back.array() *= (*masks)[l - 1].array();
    back.array() *= tr.slope[l - 1].array();
    delta = std::move(back);
  }
}

std::vector<DenseLayer> zero_like(const std::vector<DenseLayer>& layers) {
  std::vector<DenseLayer> z;
  z.reserve(layers.size());
  for (const auto& l : layers) {
    z.push_back({Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()),
                 Eigen::VectorXd::Zero(l.bias.size())});
  }
  return z;
}

Eigen::MatrixXd gather_columns(const LabeledDataset& d, const std::size_t* idx,
                               std::size_t n) {
  Eigen::MatrixXd x(d.features.cols(), static_cast<Eigen::Index>(n));
  for (std::size_t c = 0; c < n; ++c) {
    x.col(static_cast<Eigen::Index>(c)) =
        d.features.row(static_cast<Eigen::Index>(idx[c])).transpose();
  }
  return x;
}

struct AdamState {
  std::vector<DenseLayer> m;
  std::vector<DenseLayer> v;
  long step = 0;
};

void adam_update(std::vector<DenseLayer>& params, const std::vector<DenseLayer>& grads,
                 AdamState& st, double lr) {
  ++st.step;
  const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(st.step));
  auto apply = [&](auto& p, const auto& g, auto& m, auto& v) {
    m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * g;
    v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * g.cwiseProduct(g);
    p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + kAdamEps);
  };
  for (std::size_t l = 0; l < params.size(); ++l) {
    apply(params[l].weight, grads[l].weight, st.m[l].weight, st.v[l].weight);
    apply(params[l].bias, grads[l].bias, st.m[l].bias, st.v[l].bias);
  }
}

double batch_loss_and_grad(const CalibratedScorer& s, const Eigen::RowVectorXd& g,
                           const std::vector<int>& y, double cost_weight,
                           Eigen::RowVectorXd* dg) {
  double total = 0.0;
  const auto n = g.size();
  if (dg != nullptr) dg->resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto l = loss_on_preactivation(s.loss, g(i), y[static_cast<std::size_t>(i)],
                                         cost_weight);
    total += l.value;
    if (dg != nullptr) (*dg)(i) = l.derivative / static_cast<double>(n);
  }
  return total / static_cast<double>(n);
}

std::vector<double*> parameter_pointers(std::vector<DenseLayer>& layers) {
  std::vector<double*> ptrs;
  for (auto& l : layers) {
    // weight is column-major; walk it row-major for a stable flat order.
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) ptrs.push_back(&l.weight(r, c));
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) ptrs.push_back(&l.bias(r));
  }
  return ptrs;
}

}  // namespace

std::string_view activation_name(Activation a) {
  return a == Activation::kRelu ? "relu" : "tanh";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  throw Error(ErrorCode::kInvalidConfig, "unknown activation '" + std::string(name) + "'");
}

void NetworkConfig::validate() const {
  if (input_dim == 0) throw Error(ErrorCode::kInvalidConfig, "input_dim must be positive");
  if (hidden_dims.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "at least one hidden layer is required");
  }
  for (auto h : hidden_dims) {
    if (h == 0) throw Error(ErrorCode::kInvalidConfig, "hidden widths must be positive");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "dropout_rate must lie in [0,1)");
  }
}

void TrainingConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::kInvalidConfig, "learning_rate");
  if (max_epochs <= 0) throw Error(ErrorCode::kInvalidConfig, "max_epochs");
  if (batch_size <= 0) throw Error(ErrorCode::kInvalidConfig, "batch_size");
  if (early_stop_patience < 0) throw Error(ErrorCode::kInvalidConfig, "early_stop_patience");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "validation_fraction must lie in (0,1)");
  }
  if (!(cost_weight > 0.0)) throw Error(ErrorCode::kInvalidWeight, "cost_weight");
}

std::size_t CalibratedScorer::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

CalibratedScorer initialize_scorer(const NetworkConfig& config) {
  config.validate();
  CalibratedScorer s;
  s.config = config;
  Rng rng(config.seed);
  std::size_t fan_in = config.input_dim;
  std::vector<std::size_t> widths = config.hidden_dims;
  widths.push_back(1);
  for (auto fan_out : widths) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    DenseLayer layer{Eigen::MatrixXd(fan_out, fan_in), Eigen::VectorXd::Zero(fan_out)};
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = dist(rng);
    }
    s.layers.push_back(std::move(layer));
    fan_in = fan_out;
  }
  return s;
}

DropoutMasks sample_dropout_masks(const CalibratedScorer& scorer, Rng& rng) {
  const double rate = scorer.config.dropout_rate;
  const double keep_scale = 1.0 / (1.0 - rate);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  DropoutMasks masks;
  masks.reserve(scorer.layers.size() - 1);
  for (std::size_t l = 0; l + 1 < scorer.layers.size(); ++l) {
    Eigen::VectorXd m(scorer.layers[l].bias.size());
    for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = u01(rng) < rate ? 0.0 : keep_scale;
    masks.push_back(std::move(m));
  }
  return masks;
}

double preactivation(const CalibratedScorer& scorer, const Vector& x,
                     const DropoutMasks* masks) {
  check_input(scorer, x);
  Eigen::VectorXd a = x;
  const std::size_t hidden = scorer.layers.size() - 1;
  for (std::size_t l = 0; l < hidden; ++l) {
    Eigen::VectorXd z = scorer.layers[l].weight * a + scorer.layers[l].bias;
    activate_inplace(scorer.config.activation, z);
    if (masks != nullptr) z.array() *= (*masks)[l].array();
    a = std::move(z);
  }
  const auto& out = scorer.layers.back();
  return out.weight.row(0).dot(a) + out.bias(0);
}

double forward_with_masks(const CalibratedScorer& scorer, const Vector& x,
                          const DropoutMasks& masks) {
  return std::tanh(preactivation(scorer, x, &masks) / scorer.temperature);
}

double forward(const CalibratedScorer& scorer, const Vector& x) {
  return std::tanh(preactivation(scorer, x, nullptr) / scorer.temperature);
}

double forward(const CalibratedScorer& scorer, const Vector& x, bool dropout_active,
               Rng& rng) {
  if (!dropout_active || scorer.config.dropout_rate == 0.0) return forward(scorer, x);
  const auto masks = sample_dropout_masks(scorer, rng);
  return forward_with_masks(scorer, x, masks);
}

double mean_loss(const CalibratedScorer& scorer, const LabeledDataset& data,
                 double cost_weight) {
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), 0);
  const auto x = gather_columns(data, idx.data(), idx.size());
  const auto tr = forward_batch(scorer, x, nullptr);
  return batch_loss_and_grad(scorer, tr.g, data.labels, cost_weight, nullptr);
}

std::vector<double> loss_gradient(const CalibratedScorer& scorer, const LabeledDataset& data,
                                  double cost_weight) {
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), 0);
  const auto x = gather_columns(data, idx.data(), idx.size());
  const auto tr = forward_batch(scorer, x, nullptr);
  Eigen::RowVectorXd dg;
  batch_loss_and_grad(scorer, tr.g, data.labels, cost_weight, &dg);
  auto grads = zero_like(scorer.layers);
  backward_batch(scorer, tr, dg, nullptr, grads);
  std::vector<double> flat;
  for (double* p : parameter_pointers(grads)) flat.push_back(*p);
  return flat;
}

double gradient_check(const CalibratedScorer& scorer, const LabeledDataset& sample,
                      LossId loss, double cost_weight) {
  CalibratedScorer probe = scorer;
  probe.loss = loss;
  const auto analytic = loss_gradient(probe, sample, cost_weight);
  auto params = parameter_pointers(probe.layers);
  constexpr double kStep = 1e-6;
  const auto central = [&](double* p, double h) {
    const double saved = *p;
    *p = saved + h;
    const double up = mean_loss(probe, sample, cost_weight);
    *p = saved - h;
    const double down = mean_loss(probe, sample, cost_weight);
    *p = saved;
    return (up - down) / (2.0 * h);
  };
  // Components far below the largest one sit under the difference quotient's
  // rounding noise, so the denominator never drops below a fixed fraction of
  // the gradient scale.
  double scale = 0.0;
  for (double g : analytic) scale = std::max(scale, std::abs(g));
  const double floor = std::max(1e-8, 1e-3 * scale);
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    // Richardson step: cancels the first-order error a ReLU input sitting
    // exactly at zero introduces, keeps second order elsewhere.
    const double fd = 2.0 * central(params[i], 0.5 * kStep) - central(params[i], kStep);
    const double denom = std::max({std::abs(analytic[i]), std::abs(fd), floor});
    worst = std::max(worst, std::abs(analytic[i] - fd) / denom);
  }
  return worst;
}

CalibratedScorer train(const LabeledDataset& dataset, const NetworkConfig& net_cfg,
                       const TrainingConfig& train_cfg, LossId loss) {
  dataset.validate();
  train_cfg.validate();
  if (!dataset.has_both_classes()) {
    throw Error(ErrorCode::kDegenerateData, "training data must contain both classes");
  }
  NetworkConfig cfg = net_cfg;
  cfg.input_dim = dataset.dim();
  CalibratedScorer scorer = initialize_scorer(cfg);
  scorer.loss = loss;
  scorer.training_qp = dataset.imbalance_ratio();

  // Validation needs one sample per class on each side of the split; tiny
  // datasets validate on the training rows instead.
  LabeledDataset fit_set;
  LabeledDataset val_set;
  const double vf = train_cfg.validation_fraction;
  const bool can_split =
      std::llround(vf * static_cast<double>(dataset.count(0))) >= 1 &&
      std::llround(vf * static_cast<double>(dataset.count(1))) >= 1 &&
      dataset.count(0) - static_cast<std::size_t>(std::llround(vf * static_cast<double>(dataset.count(0)))) >= 1 &&
      dataset.count(1) - static_cast<std::size_t>(std::llround(vf * static_cast<double>(dataset.count(1)))) >= 1;
  if (can_split) {
    const double fr[] = {vf};
    auto parts = stratified_split(dataset, fr, cfg.seed ^ 0x5DEECE66DULL);
    val_set = std::move(parts[0]);
    fit_set = std::move(parts[1]);
  } else {
    fit_set = dataset;
    val_set = dataset;
  }

  Rng rng(cfg.seed + 1);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double rate = cfg.dropout_rate;
  AdamState adam{zero_like(scorer.layers), zero_like(scorer.layers), 0};

  std::vector<std::size_t> order(fit_set.size());
  std::iota(order.begin(), order.end(), 0);
  const auto batch = static_cast<std::size_t>(train_cfg.batch_size);

  double best_val = std::numeric_limits<double>::infinity();
  std::vector<DenseLayer> best_layers = scorer.layers;
  int since_best = 0;
  std::vector<int> labels;
  std::vector<Eigen::MatrixXd> masks;

  for (int epoch = 0; epoch < train_cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t n = std::min(batch, order.size() - start);
      const auto x = gather_columns(fit_set, order.data() + start, n);
      labels.assign(n, 0);
      for (std::size_t i = 0; i < n; ++i) labels[i] = fit_set.labels[order[start + i]];
      const std::vector<Eigen::MatrixXd>* mask_ptr = nullptr;
      if (rate > 0.0) {
        masks.clear();
        for (std::size_t l = 0; l + 1 < scorer.layers.size(); ++l) {
          Eigen::MatrixXd m(scorer.layers[l].bias.size(), static_cast<Eigen::Index>(n));
          for (Eigen::Index c = 0; c < m.cols(); ++c) {
            for (Eigen::Index r = 0; r < m.rows(); ++r) {
              m(r, c) = u01(rng) < rate ? 0.0 : 1.0 / (1.0 - rate);
            }
          }
          masks.push_back(std::move(m));
        }
        mask_ptr = &masks;
      }
      const auto tr = forward_batch(scorer, x, mask_ptr);
      Eigen::RowVectorXd dg;
      batch_loss_and_grad(scorer, tr.g, labels, train_cfg.cost_weight, &dg);
      auto grads = zero_like(scorer.layers);
      backward_batch(scorer, tr, dg, mask_ptr, grads);
      adam_update(scorer.layers, grads, adam, train_cfg.learning_rate);
    }
    const double val = mean_loss(scorer, val_set, train_cfg.cost_weight);
    if (val < best_val) {
      best_val = val;
      best_layers = scorer.layers;
      since_best = 0;
    } else if (++since_best >= train_cfg.early_stop_patience) {
      break;
    }
  }
  scorer.layers = std::move(best_layers);
  return scorer;
}

double mc_dropout_log_lr_variance(const CalibratedScorer& scorer, const Vector& x, int m,
                                  Rng& rng) {
  if (m < 2) throw Error(ErrorCode::kInvalidConfig, "mc sample count must be >= 2");
  check_input(scorer, x);
  if (scorer.config.dropout_rate == 0.0) return 0.0;
  std::vector<double> logs;
  logs.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    const auto masks = sample_dropout_masks(scorer, rng);
    logs.push_back(log_lr_from_output(forward_with_masks(scorer, x, masks),
                                      scorer.training_qp).value);
  }
  const double mean = std::accumulate(logs.begin(), logs.end(), 0.0) / m;
  double ss = 0.0;
  for (double v : logs) ss += (v - mean) * (v - mean);
  return ss / m;
}

void write_scorer(std::ostream& out, const CalibratedScorer& s) {
  using detail::format_double;
  out << "OBIL-SCORER-v1\n";
  out << "input_dim " << s.config.input_dim << "\n";
  out << "hidden_dims " << s.config.hidden_dims.size();
  for (auto h : s.config.hidden_dims) out << ' ' << h;
  out << "\n";
  out << "activation " << activation_name(s.config.activation) << "\n";
  out << "dropout_rate " << format_double(s.config.dropout_rate) << "\n";
  out << "seed " << s.config.seed << "\n";
  out << "training_qp " << format_double(s.training_qp) << "\n";
  out << "loss_tag " << loss_name(s.loss) << "\n";
  out << "temperature " << format_double(s.temperature) << "\n";
  out << "layers " << s.layers.size() << "\n";
  for (const auto& l : s.layers) {
    out << "layer " << l.weight.rows() << ' ' << l.weight.cols() << "\n";
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) {
        out << (c ? " " : "") << format_double(l.weight(r, c));
      }
      out << "\n";
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) {
      out << (r ? " " : "") << format_double(l.bias(r));
    }
    out << "\n";
  }
  out << "end\n";
}

CalibratedScorer read_scorer(std::istream& in) {
  using namespace detail;
  expect_token(in, "OBIL-SCORER-v1");
  CalibratedScorer s;
  expect_token(in, "input_dim");
  s.config.input_dim = read_u64(in);
  expect_token(in, "hidden_dims");
  const auto nh = read_u64(in);
  s.config.hidden_dims.clear();
  for (std::uint64_t i = 0; i < nh; ++i) s.config.hidden_dims.push_back(read_u64(in));
  expect_token(in, "activation");
  s.config.activation = parse_activation(next_token(in));
  expect_token(in, "dropout_rate");
  s.config.dropout_rate = read_double(in);
  expect_token(in, "seed");
  s.config.seed = read_u64(in);
  expect_token(in, "training_qp");
  s.training_qp = read_double(in);
  expect_token(in, "loss_tag");
  s.loss = parse_loss(next_token(in));
  expect_token(in, "temperature");
  s.temperature = read_double(in);
  expect_token(in, "layers");
  const auto nl = read_u64(in);
  if (nl != nh + 1) throw Error(ErrorCode::kFormatError, "layer count mismatch");
  std::size_t fan_in = s.config.input_dim;
  for (std::uint64_t l = 0; l < nl; ++l) {
    expect_token(in, "layer");
    const auto rows = read_u64(in);
    const auto cols = read_u64(in);
    const std::size_t want_rows = l < nh ? s.config.hidden_dims[l] : 1;
    if (rows != want_rows || cols != fan_in) {
      throw Error(ErrorCode::kFormatError, "layer shape mismatch");
    }
    DenseLayer layer{Eigen::MatrixXd(rows, cols), Eigen::VectorXd(rows)};
    for (std::uint64_t r = 0; r < rows; ++r) {
      for (std::uint64_t c = 0; c < cols; ++c) {
        layer.weight(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = read_double(in);
      }
    }
    for (std::uint64_t r = 0; r < rows; ++r) layer.bias(static_cast<Eigen::Index>(r)) = read_double(in);
    s.layers.push_back(std::move(layer));
    fan_in = rows;
  }
  expect_token(in, "end");
  s.config.validate();
  return s;
}

}  // namespace obil
