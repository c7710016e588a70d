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

#ifndef TUNEPROBE_EXPERIMENT_H_
#define TUNEPROBE_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"
#include "tuneprobe/evaluation.h"
#include "tuneprobe/features.h"
#include "tuneprobe/hpo.h"
#include "tuneprobe/latent_store.h"
#include "tuneprobe/probes.h"
#include "tuneprobe/quantizer.h"
#include "tuneprobe/tasks.h"

namespace tuneprobe {

// Nuclear-word frames of one stream, one matrix per utterance.
using StreamFrames = std::vector<MatrixXfR>;

// Rows of `seq` selected by the record's word interval.
MatrixXfR word_frames(const LatentSequence& seq, const UtteranceRecord& record);
StreamFrames load_word_frames(const CorpusManifest& manifest, std::string_view stream,
                              int jobs = 1);

struct ProblemData {
  ClassificationProblem problem;
  std::vector<int> labels;  // per record, ClassificationProblem::kExcluded if unused
  std::vector<std::size_t> train, dev, test;  // record indices
};

// Records included in the problem, stratified by tune.
std::vector<LabeledId> split_items(std::span<const UtteranceRecord> records,
                                   const ClassificationProblem& problem);
SplitAssignment make_split(std::span<const UtteranceRecord> records,
                           const ClassificationProblem& problem, uint64_t seed);
// Throws Error when the split names unknown or excluded ids, or leaves an
// included record out.
ProblemData problem_data(std::span<const UtteranceRecord> records,
                         const ClassificationProblem& problem, const SplitAssignment& split);

// Aggregated vector of each listed utterance, one row each.
Eigen::MatrixXd aggregate_rows(const StreamFrames& frames, std::span<const std::size_t> rows,
                               const DecayConfig& decay);
std::vector<int> gather_labels(const ProblemData& data, std::span<const std::size_t> rows);

struct FittedProbe {
  ProbeKind kind = ProbeKind::kLinear;
  HyperParams params;
  uint64_t seed = 0;
  PcaModel pca;
  Probe probe;
  std::vector<double> epoch_losses;
};

// PCA on the training aggregates, then probe training on the first
// params.d_pca coordinates.
FittedProbe fit_probe(const Eigen::MatrixXd& train_aggregates, std::span<const int> labels,
                      int num_classes, ProbeKind kind, const HyperParams& params,
                      uint64_t seed);
std::vector<int> predict(const FittedProbe& fitted, const Eigen::MatrixXd& aggregates);

// Train on the training split, score on dev.
Objective make_objective(const StreamFrames& frames, const ProblemData& data, ProbeKind kind);
SearchResult search_hyperparams(const StreamFrames& frames, const ProblemData& data,
                                ProbeKind kind, int budget, uint64_t seed, int jobs = 1);

// Trains one probe per seed with `params` (d_pca clamped to the stream
// dimension, *warning set when that happens) and reports test accuracy,
// dev accuracy and confusion averaged over the seeds.
EvalReport train_and_evaluate(const StreamFrames& frames, const ProblemData& data,
                              ProbeKind kind, const HyperParams& params,
                              std::string_view stream, std::span<const uint64_t> seeds,
                              int jobs = 1, std::vector<FittedProbe>* fitted = nullptr,
                              std::string* warning = nullptr);

// Probe checkpoint as <stem>.probe and <stem>.pca bundles plus a <stem>.json
// sidecar holding `meta`, the hyperparameters, the seed and the loss curve.
void save_fitted_probe(const FittedProbe& fitted, const std::filesystem::path& stem,
                       const nlohmann::json& meta);
FittedProbe load_fitted_probe(const std::filesystem::path& stem);

using CodeMatrix = Eigen::Matrix<int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Fits the codec on at most max_train_vectors frames drawn without
// replacement from all sequences (every frame when max_train_vectors <= 0).
RvqCodec fit_corpus_codec(std::span<const MatrixXfR* const> sequences, const RvqOptions& options,
                          int max_train_vectors);
CodeMatrix encode_frames(const RvqCodec& codec, const MatrixXfR& frames);
// Codeword vectors of one stream: level 0 is the VQ branch; level k >= 1
// is the level-k residual codeword, or the sum over levels 1..k when
// cumulative.
MatrixXfR codeword_frames(const RvqCodec& codec, const CodeMatrix& codes, int level,
                          bool cumulative);

}  // namespace tuneprobe

#endif  // TUNEPROBE_EXPERIMENT_H_
