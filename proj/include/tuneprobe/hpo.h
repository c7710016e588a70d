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

#ifndef TUNEPROBE_HPO_H_
#define TUNEPROBE_HPO_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "tuneprobe/features.h"
#include "tuneprobe/probes.h"

namespace tuneprobe {

struct HyperParams {
  DecayConfig decay;
  int d_pca = 2;
  int batch_size = 32;
  double learning_rate = 1e-3;
  int epochs = 100;
  int hidden_dim = 0;  // 0 for linear probes

  bool operator==(const HyperParams& o) const {
    return decay.delta_f == o.decay.delta_f && decay.delta_b == o.decay.delta_b &&
           d_pca == o.d_pca && batch_size == o.batch_size &&
           learning_rate == o.learning_rate && epochs == o.epochs &&
           hidden_dim == o.hidden_dim;
  }
};

nlohmann::json to_json(const HyperParams& p);
HyperParams hyper_params_from_json(const nlohmann::json& j);

struct SearchSpace {
  // Decay rates: exactly 0 with probability zero_atom, otherwise
  // log-uniform on [delta_min, delta_max].
  double delta_min = 0.01;
  double delta_max = 5.0;
  double zero_atom = 0.25;
  int d_pca_min = 2;
  int d_pca_max = 512;
  int batch_min = 8;
  int batch_max = 256;
  double lr_min = 1e-4;
  double lr_max = 1e-1;
  int epochs_min = 10;
  int epochs_max = 300;
  bool with_hidden = false;
  int hidden_min = 8;
  int hidden_max = 256;

  // Default ranges for a probe kind over inputs of dimension input_dim.
  static SearchSpace for_probe(ProbeKind kind, int input_dim);

  // Throws Error when a range is empty or out of order.
  void validate() const;
  bool contains(const HyperParams& p) const;
};

// Draws one configuration from a per-trial generator. Implementations must
// only return points for which space.contains() holds.
class Sampler {
 public:
  virtual ~Sampler() = default;
  virtual HyperParams sample(const SearchSpace& space, std::mt19937_64& rng) = 0;
};

class RandomSampler : public Sampler {
 public:
  HyperParams sample(const SearchSpace& space, std::mt19937_64& rng) override;
};

struct TrialOutcome {
  double dev_accuracy = 0.0;
  double train_loss = 0.0;
};

// Trains with the given configuration and seed and scores it on dev data.
using Objective = std::function<TrialOutcome(const HyperParams&, uint64_t seed)>;

struct TrialRecord {
  int trial_id = 0;
  HyperParams params;
  uint64_t seed = 0;
  bool ok = false;
  double dev_accuracy = 0.0;
  double train_loss = 0.0;
  std::string error;  // set when the objective threw
};

nlohmann::json to_json(const TrialRecord& r);
TrialRecord trial_from_json(const nlohmann::json& j);

struct SearchResult {
  std::vector<TrialRecord> trials;  // ordered by trial id
  int best_trial = -1;

  const TrialRecord& best() const { return trials.at(static_cast<std::size_t>(best_trial)); }
};

// Trial t draws its configuration and training seed from mix_seed(seed, t).
// Trials may run on `jobs` threads; the log order never depends on it. A
// throwing objective marks the trial failed and the search continues. The
// best trial has the highest dev accuracy, lowest id on ties. Throws Error
// when budget < 1 or every trial failed.
SearchResult run_search(const SearchSpace& space, int budget, const Objective& objective,
                        uint64_t seed, int jobs = 1, Sampler* sampler = nullptr);

void write_trial_log(const std::vector<TrialRecord>& trials,
                     const std::filesystem::path& path);
std::vector<TrialRecord> read_trial_log(const std::filesystem::path& path);

// Reuses a configuration on a stream of a different dimension. d_pca is
// clamped to the stream dimension; *warning describes the clamp when one
// happened and is cleared otherwise.
HyperParams transfer_config(const HyperParams& best, int stream_dim,
                            std::string* warning = nullptr);

// Seeds of the independent probes trained per stream.
std::vector<uint64_t> probe_seeds(uint64_t seed, int count = 3);

}  // namespace tuneprobe

#endif  // TUNEPROBE_HPO_H_
