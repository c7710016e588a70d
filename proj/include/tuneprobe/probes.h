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

#ifndef TUNEPROBE_PROBES_H_
#define TUNEPROBE_PROBES_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace tuneprobe {

enum class ProbeKind { kLinear, kNonlinear };

std::string_view probe_kind_name(ProbeKind kind);
// "linear" or "nonlinear"; throws Error otherwise.
ProbeKind parse_probe_kind(std::string_view name);

inline constexpr double kLayerNormEpsilon = 1e-5;
inline constexpr double kLeakyReluSlope = 0.01;
// Probabilities are clamped here before taking the log in the loss.
inline constexpr double kProbabilityFloor = 1e-12;

// softmax(w * y + b)
struct LinearProbe {
  Eigen::MatrixXd w;  // classes x input
  Eigen::VectorXd b;  // classes
};

// softmax(w2 * leaky_relu(layer_norm(w1 * y + b1)) + b2). The layer norm
// standardizes the hidden vector to mean 0 / variance 1 and then applies the
// per-unit gain and bias.
struct NonlinearProbe {
  Eigen::MatrixXd w1;  // hidden x input
  Eigen::VectorXd b1;  // hidden
  Eigen::MatrixXd w2;  // classes x hidden
  Eigen::VectorXd b2;  // classes
  Eigen::VectorXd ln_gain;
  Eigen::VectorXd ln_bias;
  double leak = kLeakyReluSlope;
};

using Probe = std::variant<LinearProbe, NonlinearProbe>;

ProbeKind kind_of(const Probe& probe);
int input_dim(const Probe& probe);
int num_classes(const Probe& probe);

// Every trainable array of a probe as a flat span, in a fixed order.
std::vector<std::span<double>> parameter_spans(LinearProbe& probe);
std::vector<std::span<double>> parameter_spans(NonlinearProbe& probe);
std::vector<std::span<double>> parameter_spans(Probe& probe);

Eigen::VectorXd softmax(const Eigen::VectorXd& z);

// Class probabilities for one input. Throws Error on a dimension mismatch.
Eigen::VectorXd forward(const LinearProbe& probe, const Eigen::VectorXd& y);
Eigen::VectorXd forward(const NonlinearProbe& probe, const Eigen::VectorXd& y);
// One row of probabilities per row of `inputs`.
Eigen::MatrixXd forward_batch(const Probe& probe, const Eigen::MatrixXd& inputs);

// -log(max(p[true_class], kProbabilityFloor)).
double cross_entropy(const Eigen::VectorXd& probabilities, int true_class);
double mean_cross_entropy(const Eigen::MatrixXd& probabilities,
                          std::span<const int> labels);

// Mean cross-entropy over the batch and its exact gradient with respect to
// every parameter; `gradient` is resized to the probe's shape.
double loss_and_gradients(const LinearProbe& probe, const Eigen::MatrixXd& inputs,
                          std::span<const int> labels, LinearProbe* gradient);
double loss_and_gradients(const NonlinearProbe& probe,
                          const Eigen::MatrixXd& inputs,
                          std::span<const int> labels, NonlinearProbe* gradient);

struct TrainConfig {
  ProbeKind kind = ProbeKind::kLinear;
  double learning_rate = 1e-3;
  int batch_size = 32;
  int epochs = 100;
  int hidden_dim = 64;  // nonlinear only
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  uint64_t seed = 0;

  void validate() const;
};

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases; layer norm
// gain 1 and bias 0.
Probe init_probe(ProbeKind kind, int input_dim, int num_classes, int hidden_dim,
                 uint64_t seed);

struct TrainResult {
  Probe probe;
  std::vector<double> epoch_losses;  // mean training loss of each epoch
};

// Mini-batch Adam. Sample order is reshuffled every epoch from a generator
// derived from (seed, epoch); the final partial batch is kept.
TrainResult train(const Eigen::MatrixXd& inputs, std::span<const int> labels,
                  int num_classes, const TrainConfig& cfg);

std::vector<int> predict(const Probe& probe, const Eigen::MatrixXd& inputs);

void save_probe(const Probe& probe, const std::filesystem::path& path);
Probe load_probe(const std::filesystem::path& path);

}  // namespace tuneprobe

#endif  // TUNEPROBE_PROBES_H_
