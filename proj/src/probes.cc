// Copyright 2026 The tune-probe Authors.
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

#include "tuneprobe/probes.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "tuneprobe/common.h"
#include "tuneprobe/latent_store.h"

namespace tuneprobe {
namespace {

std::span<double> span_of(Eigen::MatrixXd& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}
std::span<double> span_of(Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

void check_labels(std::span<const int> labels, Eigen::Index rows, int classes) {
  if (static_cast<Eigen::Index>(labels.size()) != rows) {
    throw Error("label count does not match the number of inputs");
  }
  for (int l : labels) {
    if (l < 0 || l >= classes) {
      throw Error("class index " + std::to_string(l) + " outside [0, " +
                  std::to_string(classes) + ")");
    }
  }
}

void check_input(const Eigen::MatrixXd& inputs, Eigen::Index expected) {
  if (inputs.cols() != expected) {
    throw Error("probe expects input dim " + std::to_string(expected) + ", got " +
                std::to_string(inputs.cols()));
  }
}

// Row-wise softmax in place.
void softmax_rows(Eigen::MatrixXd& z) {
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    auto row = z.row(r);
    row.array() = (row.array() - row.maxCoeff()).exp();
    row /= row.sum();
  }
}

struct HiddenState {
  Eigen::MatrixXd normalized;  // layer-norm output before gain/bias
  Eigen::VectorXd inv_std;     // per row
  Eigen::MatrixXd pre_act;     // after gain/bias
  Eigen::MatrixXd activation;  // after leaky ReLU
};

HiddenState hidden_forward(const NonlinearProbe& p, const Eigen::MatrixXd& inputs) {
  HiddenState s;
  Eigen::MatrixXd h = inputs * p.w1.transpose();
  h.rowwise() += p.b1.transpose();
  const double width = static_cast<double>(h.cols());
  s.inv_std.resize(h.rows());
  for (Eigen::Index r = 0; r < h.rows(); ++r) {
    double mu = h.row(r).mean();
    h.row(r).array() -= mu;
    double var = h.row(r).squaredNorm() / width;
    s.inv_std[r] = 1.0 / std::sqrt(var + kLayerNormEpsilon);
    h.row(r) *= s.inv_std[r];
  }
  s.normalized = std::move(h);
  s.pre_act = s.normalized.array().rowwise() * p.ln_gain.transpose().array();
  s.pre_act.rowwise() += p.ln_bias.transpose();
  s.activation = s.pre_act.unaryExpr(
      [leak = p.leak](double a) { return a > 0.0 ? a : leak * a; });
  return s;
}

// (P - onehot) / batch
Eigen::MatrixXd logit_gradient(Eigen::MatrixXd probs, std::span<const int> labels) {
  for (Eigen::Index r = 0; r < probs.rows(); ++r) probs(r, labels[static_cast<std::size_t>(r)]) -= 1.0;
  return probs / static_cast<double>(probs.rows());
}

}  // namespace

std::string_view probe_kind_name(ProbeKind kind) {
  return kind == ProbeKind::kLinear ? "linear" : "nonlinear";
}

ProbeKind parse_probe_kind(std::string_view name) {
  if (name == "linear") return ProbeKind::kLinear;
  if (name == "nonlinear") return ProbeKind::kNonlinear;
  throw Error("unknown probe kind \"" + std::string(name) + "\"");
}

ProbeKind kind_of(const Probe& probe) {
  return std::holds_alternative<LinearProbe>(probe) ? ProbeKind::kLinear
                                                    : ProbeKind::kNonlinear;
}

int input_dim(const Probe& probe) {
  if (auto* p = std::get_if<LinearProbe>(&probe)) return static_cast<int>(p->w.cols());
  return static_cast<int>(std::get<NonlinearProbe>(probe).w1.cols());
}

int num_classes(const Probe& probe) {
  if (auto* p = std::get_if<LinearProbe>(&probe)) return static_cast<int>(p->b.size());
  return static_cast<int>(std::get<NonlinearProbe>(probe).b2.size());
}

std::vector<std::span<double>> parameter_spans(LinearProbe& probe) {
  return {span_of(probe.w), span_of(probe.b)};
}

std::vector<std::span<double>> parameter_spans(NonlinearProbe& probe) {
  return {span_of(probe.w1),      span_of(probe.b1),     span_of(probe.w2),
          span_of(probe.b2),      span_of(probe.ln_gain), span_of(probe.ln_bias)};
}

std::vector<std::span<double>> parameter_spans(Probe& probe) {
  return std::visit([](auto& p) { return parameter_spans(p); }, probe);
}

Eigen::VectorXd softmax(const Eigen::VectorXd& z) {
  Eigen::VectorXd e = (z.array() - z.maxCoeff()).exp();
  return e / e.sum();
}

Eigen::VectorXd forward(const LinearProbe& probe, const Eigen::VectorXd& y) {
  if (y.size() != probe.w.cols()) {
    throw Error("probe expects input dim " + std::to_string(probe.w.cols()) +
                ", got " + std::to_string(y.size()));
  }
  return softmax(probe.w * y + probe.b);
}

Eigen::VectorXd forward(const NonlinearProbe& probe, const Eigen::VectorXd& y) {
  if (y.size() != probe.w1.cols()) {
    throw Error("probe expects input dim " + std::to_string(probe.w1.cols()) +
                ", got " + std::to_string(y.size()));
  }
  HiddenState s = hidden_forward(probe, y.transpose());
  return softmax(probe.w2 * s.activation.row(0).transpose() + probe.b2);
}

Eigen::MatrixXd forward_batch(const Probe& probe, const Eigen::MatrixXd& inputs) {
  Eigen::MatrixXd z;
  if (auto* p = std::get_if<LinearProbe>(&probe)) {
    check_input(inputs, p->w.cols());
    z = inputs * p->w.transpose();
    z.rowwise() += p->b.transpose();
  } else {
    const auto& q = std::get<NonlinearProbe>(probe);
    check_input(inputs, q.w1.cols());
    HiddenState s = hidden_forward(q, inputs);
    z = s.activation * q.w2.transpose();
    z.rowwise() += q.b2.transpose();
  }
  softmax_rows(z);
  return z;
}

double cross_entropy(const Eigen::VectorXd& probabilities, int true_class) {
  if (true_class < 0 || true_class >= probabilities.size()) {
    throw Error("class index " + std::to_string(true_class) + " outside [0, " +
                std::to_string(probabilities.size()) + ")");
  }
  return -std::log(std::max(probabilities[true_class], kProbabilityFloor));
}

double mean_cross_entropy(const Eigen::MatrixXd& probabilities,
                          std::span<const int> labels) {
  check_labels(labels, probabilities.rows(), static_cast<int>(probabilities.cols()));
  if (labels.empty()) throw Error("mean_cross_entropy of an empty batch");
  double sum = 0.0;
  for (Eigen::Index r = 0; r < probabilities.rows(); ++r) {
    sum -= std::log(std::max(probabilities(r, labels[static_cast<std::size_t>(r)]),
                             kProbabilityFloor));
  }
  return sum / static_cast<double>(labels.size());
}

double loss_and_gradients(const LinearProbe& probe, const Eigen::MatrixXd& inputs,
                          std::span<const int> labels, LinearProbe* gradient) {
  check_input(inputs, probe.w.cols());
  check_labels(labels, inputs.rows(), static_cast<int>(probe.b.size()));
  if (labels.empty()) throw Error("gradient of an empty batch");
  Eigen::MatrixXd probs = forward_batch(probe, inputs);
  const double loss = mean_cross_entropy(probs, labels);
  Eigen::MatrixXd g = logit_gradient(std::move(probs), labels);
  gradient->w.noalias() = g.transpose() * inputs;
  gradient->b = g.colwise().sum().transpose();
  return loss;
}

double loss_and_gradients(const NonlinearProbe& probe,
                          const Eigen::MatrixXd& inputs,
                          std::span<const int> labels, NonlinearProbe* gradient) {
  check_input(inputs, probe.w1.cols());
  check_labels(labels, inputs.rows(), static_cast<int>(probe.b2.size()));
  if (labels.empty()) throw Error("gradient of an empty batch");
  HiddenState s = hidden_forward(probe, inputs);
  Eigen::MatrixXd probs = s.activation * probe.w2.transpose();
  probs.rowwise() += probe.b2.transpose();
  softmax_rows(probs);
  const double loss = mean_cross_entropy(probs, labels);
  Eigen::MatrixXd g = logit_gradient(std::move(probs), labels);

  gradient->leak = probe.leak;
  gradient->w2.noalias() = g.transpose() * s.activation;
  gradient->b2 = g.colwise().sum().transpose();
  Eigen::MatrixXd d_act = g * probe.w2;
  Eigen::MatrixXd d_pre = d_act.array() * s.pre_act.unaryExpr([leak = probe.leak](double a) {
                                            return a > 0.0 ? 1.0 : leak;
                                          }).array();
  gradient->ln_gain = (d_pre.array() * s.normalized.array()).colwise().sum().transpose();
  gradient->ln_bias = d_pre.colwise().sum().transpose();
  Eigen::MatrixXd d_norm = d_pre.array().rowwise() * probe.ln_gain.transpose().array();
  const double width = static_cast<double>(d_norm.cols());
  Eigen::MatrixXd d_hidden(d_norm.rows(), d_norm.cols());
  for (Eigen::Index r = 0; r < d_norm.rows(); ++r) {
    const double mean_d = d_norm.row(r).sum() / width;
    const double mean_dn = d_norm.row(r).dot(s.normalized.row(r)) / width;
    d_hidden.row(r) = s.inv_std[r] * (d_norm.row(r).array() - mean_d -
                                      s.normalized.row(r).array() * mean_dn)
                                         .matrix();
  }
  gradient->w1.noalias() = d_hidden.transpose() * inputs;
  gradient->b1 = d_hidden.colwise().sum().transpose();
  return loss;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw Error("learning rate must be positive");
  }
  if (batch_size < 1) throw Error("batch size must be positive");
  if (epochs < 0) throw Error("epoch count must be non-negative");
  if (kind == ProbeKind::kNonlinear && hidden_dim < 1) {
    throw Error("hidden dimension must be positive");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 && epsilon > 0.0)) {
    throw Error("invalid Adam constants");
  }
}

Probe init_probe(ProbeKind kind, int input_dim, int num_classes, int hidden_dim,
                 uint64_t seed) {
  if (input_dim < 1 || num_classes < 1) throw Error("probe dimensions must be positive");
  std::mt19937_64 rng(seed);
  auto uniform = [&rng](Eigen::Index rows, Eigen::Index cols, int fan_in) {
    const double a = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-a, a);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
    return m;
  };
  if (kind == ProbeKind::kLinear) {
    LinearProbe p;
    p.w = uniform(num_classes, input_dim, input_dim);
    p.b = uniform(num_classes, 1, input_dim);
    return p;
  }
  if (hidden_dim < 1) throw Error("hidden dimension must be positive");
  NonlinearProbe p;
  p.w1 = uniform(hidden_dim, input_dim, input_dim);
  p.b1 = uniform(hidden_dim, 1, input_dim);
  p.w2 = uniform(num_classes, hidden_dim, hidden_dim);
  p.b2 = uniform(num_classes, 1, hidden_dim);
  p.ln_gain = Eigen::VectorXd::Ones(hidden_dim);
  p.ln_bias = Eigen::VectorXd::Zero(hidden_dim);
  return p;
}

TrainResult train(const Eigen::MatrixXd& inputs, std::span<const int> labels,
                  int num_classes, const TrainConfig& cfg) {
  cfg.validate();
  if (inputs.rows() < 1) throw Error("training set is empty");
  check_labels(labels, inputs.rows(), num_classes);

  TrainResult result;
  result.probe = init_probe(cfg.kind, static_cast<int>(inputs.cols()), num_classes,
                            cfg.hidden_dim, mix_seed(cfg.seed, 0));
  std::vector<std::span<double>> params = parameter_spans(result.probe);
  std::vector<std::vector<double>> m1, m2;
  for (auto s : params) {
    m1.emplace_back(s.size(), 0.0);
    m2.emplace_back(s.size(), 0.0);
  }
  Probe grad = result.probe;
  std::vector<std::span<double>> grads = parameter_spans(grad);

  const Eigen::Index n = inputs.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Eigen::MatrixXd batch;
  std::vector<int> batch_labels;
  long step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::mt19937_64 rng(mix_seed(cfg.seed, static_cast<uint64_t>(epoch) + 1));
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (Eigen::Index start = 0; start < n; start += cfg.batch_size) {
      const Eigen::Index b = std::min<Eigen::Index>(cfg.batch_size, n - start);
      batch.resize(b, inputs.cols());
      batch_labels.resize(static_cast<std::size_t>(b));
      for (Eigen::Index i = 0; i < b; ++i) {
        Eigen::Index src = order[static_cast<std::size_t>(start + i)];
        batch.row(i) = inputs.row(src);
        batch_labels[static_cast<std::size_t>(i)] = labels[static_cast<std::size_t>(src)];
      }
      double loss = std::visit(
          [&](auto& p) {
            using P = std::decay_t<decltype(p)>;
            return loss_and_gradients(p, batch, batch_labels, &std::get<P>(grad));
          },
          result.probe);
      loss_sum += loss * static_cast<double>(b);

      ++step;
      const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      for (std::size_t g = 0; g < params.size(); ++g) {
        std::span<double> p = params[g];
        std::span<const double> dp = grads[g];
        std::vector<double>& m = m1[g];
        std::vector<double>& v = m2[g];
        for (std::size_t i = 0; i < p.size(); ++i) {
          m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * dp[i];
          v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * dp[i] * dp[i];
          p[i] -= cfg.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg.epsilon);
        }
      }
    }
    const double epoch_loss = loss_sum / static_cast<double>(n);
    if (!std::isfinite(epoch_loss)) {
      throw Error("training diverged at epoch " + std::to_string(epoch));
    }
    result.epoch_losses.push_back(epoch_loss);
  }
  for (auto s : params) {
    for (double v : s) {
      if (!std::isfinite(v)) throw Error("training produced non-finite parameters");
    }
  }
  return result;
}

std::vector<int> predict(const Probe& probe, const Eigen::MatrixXd& inputs) {
  Eigen::MatrixXd probs = forward_batch(probe, inputs);
  std::vector<int> out(static_cast<std::size_t>(probs.rows()));
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    Eigen::Index best = 0;
    probs.row(r).maxCoeff(&best);
    out[static_cast<std::size_t>(r)] = static_cast<int>(best);
  }
  return out;
}

void save_probe(const Probe& probe, const std::filesystem::path& path) {
  std::vector<Eigen::MatrixXd> m;
  Eigen::MatrixXd header(1, 2);
  if (auto* p = std::get_if<LinearProbe>(&probe)) {
    header << 0.0, 0.0;
    m = {header, p->w, p->b.transpose()};
  } else {
    const auto& q = std::get<NonlinearProbe>(probe);
    header << 1.0, q.leak;
    m = {header,           q.w1, q.b1.transpose(),      q.w2,
         q.b2.transpose(), q.ln_gain.transpose(), q.ln_bias.transpose()};
  }
  write_matrix_bundle(path, m);
}

Probe load_probe(const std::filesystem::path& path) {
  auto m = read_matrix_bundle(path);
  if (m.empty() || m[0].rows() != 1 || m[0].cols() != 2) {
    throw Error(path.string() + ": not a probe checkpoint");
  }
  if (m[0](0, 0) == 0.0) {
    if (m.size() != 3 || m[2].cols() != m[1].rows()) {
      throw Error(path.string() + ": malformed linear probe");
    }
    LinearProbe p;
    p.w = m[1];
    p.b = m[2].row(0).transpose();
    return p;
  }
  if (m.size() != 7 || m[1].rows() != m[2].cols() || m[3].cols() != m[1].rows() ||
      m[4].cols() != m[3].rows()) {
    throw Error(path.string() + ": malformed nonlinear probe");
  }
  NonlinearProbe q;
  q.leak = m[0](0, 1);
  q.w1 = m[1];
  q.b1 = m[2].row(0).transpose();
  q.w2 = m[3];
  q.b2 = m[4].row(0).transpose();
  q.ln_gain = m[5].row(0).transpose();
  q.ln_bias = m[6].row(0).transpose();
  return q;
}

}  // namespace tuneprobe
