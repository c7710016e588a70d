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

#include "tuneprobe/hpo.h"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "tuneprobe/common.h"
#include "tuneprobe/parallel.h"

namespace tuneprobe {
namespace {

double log_uniform(double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::clamp(std::exp(u(rng)), lo, hi);
}

int log_int(int lo, int hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(std::log(static_cast<double>(lo)),
                                           std::log(static_cast<double>(hi) + 1.0));
  int v = static_cast<int>(std::floor(std::exp(u(rng))));
  return std::clamp(v, lo, hi);
}

int uniform_int(int lo, int hi, std::mt19937_64& rng) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

double decay_rate(const SearchSpace& s, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (u(rng) < s.zero_atom) return 0.0;
  return log_uniform(s.delta_min, s.delta_max, rng);
}

}  // namespace

nlohmann::json to_json(const HyperParams& p) {
  nlohmann::json j = {{"delta_f", p.decay.delta_f},
                      {"delta_b", p.decay.delta_b},
                      {"d_pca", p.d_pca},
                      {"batch_size", p.batch_size},
                      {"learning_rate", p.learning_rate},
                      {"epochs", p.epochs}};
  if (p.hidden_dim > 0) j["hidden_dim"] = p.hidden_dim;
  return j;
}

HyperParams hyper_params_from_json(const nlohmann::json& j) {
  HyperParams p;
  try {
    p.decay.delta_f = j.at("delta_f").get<double>();
    p.decay.delta_b = j.at("delta_b").get<double>();
    p.d_pca = j.at("d_pca").get<int>();
    p.batch_size = j.at("batch_size").get<int>();
    p.learning_rate = j.at("learning_rate").get<double>();
    p.epochs = j.at("epochs").get<int>();
    p.hidden_dim = j.value("hidden_dim", 0);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed hyperparameters: ") + e.what());
  }
  return p;
}

SearchSpace SearchSpace::for_probe(ProbeKind kind, int input_dim) {
  SearchSpace s;
  s.d_pca_max = input_dim;
  s.with_hidden = kind == ProbeKind::kNonlinear;
  return s;
}

void SearchSpace::validate() const {
  auto bad = [](const char* what) { throw Error(std::string("search space: ") + what); };
  if (!(delta_min > 0.0 && delta_min <= delta_max)) bad("invalid decay range");
  if (!(zero_atom >= 0.0 && zero_atom <= 1.0)) bad("zero atom must be a probability");
  if (d_pca_min < 1 || d_pca_min > d_pca_max) bad("invalid d_pca range");
  if (batch_min < 1 || batch_min > batch_max) bad("invalid batch range");
  if (!(lr_min > 0.0 && lr_min <= lr_max)) bad("invalid learning-rate range");
  if (epochs_min < 0 || epochs_min > epochs_max) bad("invalid epoch range");
  if (with_hidden && (hidden_min < 1 || hidden_min > hidden_max)) bad("invalid hidden range");
}

bool SearchSpace::contains(const HyperParams& p) const {
  auto delta_ok = [this](double d) {
    return d == 0.0 || (d >= delta_min && d <= delta_max);
  };
  bool hidden_ok = with_hidden ? (p.hidden_dim >= hidden_min && p.hidden_dim <= hidden_max)
                               : p.hidden_dim == 0;
  return delta_ok(p.decay.delta_f) && delta_ok(p.decay.delta_b) &&
         p.d_pca >= d_pca_min && p.d_pca <= d_pca_max && p.batch_size >= batch_min &&
         p.batch_size <= batch_max && p.learning_rate >= lr_min &&
         p.learning_rate <= lr_max && p.epochs >= epochs_min && p.epochs <= epochs_max &&
         hidden_ok;
}

HyperParams RandomSampler::sample(const SearchSpace& space, std::mt19937_64& rng) {
  HyperParams p;
  p.decay.delta_f = decay_rate(space, rng);
  p.decay.delta_b = decay_rate(space, rng);
  p.d_pca = uniform_int(space.d_pca_min, space.d_pca_max, rng);
  p.batch_size = log_int(space.batch_min, space.batch_max, rng);
  p.learning_rate = log_uniform(space.lr_min, space.lr_max, rng);
  p.epochs = uniform_int(space.epochs_min, space.epochs_max, rng);
  p.hidden_dim = space.with_hidden ? log_int(space.hidden_min, space.hidden_max, rng) : 0;
  return p;
}

nlohmann::json to_json(const TrialRecord& r) {
  nlohmann::json j = {{"trial", r.trial_id},
                      {"params", to_json(r.params)},
                      {"seed", r.seed},
                      {"ok", r.ok}};
  if (r.ok) {
    j["dev_accuracy"] = r.dev_accuracy;
    j["train_loss"] = r.train_loss;
  } else {
    j["error"] = r.error;
  }
  return j;
}

TrialRecord trial_from_json(const nlohmann::json& j) {
  TrialRecord r;
  try {
    r.trial_id = j.at("trial").get<int>();
    r.params = hyper_params_from_json(j.at("params"));
    r.seed = j.at("seed").get<uint64_t>();
    r.ok = j.at("ok").get<bool>();
    if (r.ok) {
      r.dev_accuracy = j.at("dev_accuracy").get<double>();
      r.train_loss = j.at("train_loss").get<double>();
    } else {
      r.error = j.value("error", "");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed trial record: ") + e.what());
  }
  return r;
}

SearchResult run_search(const SearchSpace& space, int budget, const Objective& objective,
                        uint64_t seed, int jobs, Sampler* sampler) {
  space.validate();
  if (budget < 1) throw Error("search budget must be at least 1");
  RandomSampler fallback;
  Sampler& draw = sampler ? *sampler : fallback;

  SearchResult result;
  result.trials.resize(static_cast<std::size_t>(budget));
  for (int t = 0; t < budget; ++t) {
    TrialRecord& r = result.trials[static_cast<std::size_t>(t)];
    r.trial_id = t;
    r.seed = mix_seed(seed, static_cast<uint64_t>(t));
    std::mt19937_64 rng(r.seed);
    r.params = draw.sample(space, rng);
    if (!space.contains(r.params)) {
      throw Error("sampler produced a configuration outside the search space");
    }
  }

  parallel_for(result.trials.size(), jobs, [&](std::size_t i) {
    TrialRecord& r = result.trials[i];
    try {
      TrialOutcome o = objective(r.params, r.seed);
      if (!(o.dev_accuracy >= 0.0 && o.dev_accuracy <= 1.0)) {
        throw Error("dev accuracy outside [0, 1]");
      }
      r.dev_accuracy = o.dev_accuracy;
      r.train_loss = o.train_loss;
      r.ok = true;
    } catch (const std::exception& e) {
      r.ok = false;
      r.error = e.what();
    }
  });

  for (const TrialRecord& r : result.trials) {
    if (!r.ok) continue;
    if (result.best_trial < 0 || r.dev_accuracy > result.best().dev_accuracy) {
      result.best_trial = r.trial_id;
    }
  }
  if (result.best_trial < 0) {
    throw Error("all " + std::to_string(budget) + " trials failed; first error: " +
                result.trials.front().error);
  }
  return result;
}

void write_trial_log(const std::vector<TrialRecord>& trials,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write trial log " + path.string());
  for (const TrialRecord& r : trials) out << to_json(r).dump() << "\n";
  if (!out) throw Error("write failed for " + path.string());
}

std::vector<TrialRecord> read_trial_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read trial log " + path.string());
  std::vector<TrialRecord> trials;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      trials.push_back(trial_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(path.string() + ": " + e.what());
    }
  }
  return trials;
}

HyperParams transfer_config(const HyperParams& best, int stream_dim, std::string* warning) {
  if (stream_dim < 1) throw Error("stream dimension must be positive");
  HyperParams p = best;
  if (warning) warning->clear();
  if (p.d_pca > stream_dim) {
    if (warning) {
      *warning = "d_pca " + std::to_string(p.d_pca) + " exceeds stream dim " +
                 std::to_string(stream_dim) + "; clamped to " + std::to_string(stream_dim);
    }
    p.d_pca = stream_dim;
  }
  return p;
}

std::vector<uint64_t> probe_seeds(uint64_t seed, int count) {
  std::vector<uint64_t> seeds;
  for (int i = 0; i < count; ++i) seeds.push_back(seed + static_cast<uint64_t>(i));
  return seeds;
}

}  // namespace tuneprobe
