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

#include "tuneprobe/experiment.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <random>

#include "tuneprobe/common.h"
#include "tuneprobe/parallel.h"

namespace tuneprobe {

MatrixXfR word_frames(const LatentSequence& seq, const UtteranceRecord& record) {
  FrameRange range = frames_for_interval(seq, record.tmin, record.tmax);
  return seq.frames.middleRows(range.begin, range.size());
}

StreamFrames load_word_frames(const CorpusManifest& manifest, std::string_view stream,
                              int jobs) {
  StreamFrames out(manifest.records.size());
  parallel_for(out.size(), jobs, [&](std::size_t i) {
    const UtteranceRecord& r = manifest.records[i];
    if (!r.streams.count(std::string(stream))) {
      throw Error("record " + r.id + " has no stream " + std::string(stream));
    }
    out[i] = word_frames(read_latents(manifest.stream_path(r, stream)), r);
  });
  return out;
}

std::vector<LabeledId> split_items(std::span<const UtteranceRecord> records,
                                   const ClassificationProblem& problem) {
  std::vector<LabeledId> items;
  for (const auto& r : records) {
    if (problem.includes(r.tune)) items.push_back({r.id, r.tune.bits()});
  }
  return items;
}

SplitAssignment make_split(std::span<const UtteranceRecord> records,
                           const ClassificationProblem& problem, uint64_t seed) {
  std::vector<LabeledId> items = split_items(records, problem);
  return stratified_split(items, SplitRatios{}, seed);
}

ProblemData problem_data(std::span<const UtteranceRecord> records,
                         const ClassificationProblem& problem, const SplitAssignment& split) {
  ProblemData d;
  d.problem = problem;
  std::map<std::string, std::size_t> index;
  d.labels.resize(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    index[records[i].id] = i;
    d.labels[i] = problem.class_of(records[i].tune);
  }
  std::vector<bool> seen(records.size(), false);
  auto resolve = [&](const std::vector<std::string>& ids, std::vector<std::size_t>& dest) {
    for (const auto& id : ids) {
      auto it = index.find(id);
      if (it == index.end()) throw Error("split names unknown record " + id);
      if (d.labels[it->second] == ClassificationProblem::kExcluded) {
        throw Error("split names record " + id + " excluded from " + problem.name);
      }
      if (seen[it->second]) throw Error("split lists record " + id + " twice");
      seen[it->second] = true;
      dest.push_back(it->second);
    }
  };
  resolve(split.train, d.train);
  resolve(split.dev, d.dev);
  resolve(split.test, d.test);
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (d.labels[i] != ClassificationProblem::kExcluded && !seen[i]) {
      throw Error("record " + records[i].id + " missing from the " + problem.name + " split");
    }
  }
  if (d.train.empty() || d.dev.empty() || d.test.empty()) {
    throw Error("split of " + problem.name + " has an empty part");
  }
  return d;
}

Eigen::MatrixXd aggregate_rows(const StreamFrames& frames, std::span<const std::size_t> rows,
                               const DecayConfig& decay) {
  if (rows.empty()) throw Error("no rows to aggregate");
  const MatrixXfR& first = frames.at(rows.front());
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), first.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const MatrixXfR& f = frames.at(rows[i]);
    if (f.cols() != out.cols()) throw Error("stream frames differ in dimension");
    out.row(static_cast<Eigen::Index>(i)) =
        aggregate(f, FrameRange{0, static_cast<int>(f.rows())}, decay).transpose();
  }
  return out;
}

std::vector<int> gather_labels(const ProblemData& data, std::span<const std::size_t> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(data.labels.at(r));
  return out;
}

FittedProbe fit_probe(const Eigen::MatrixXd& train_aggregates, std::span<const int> labels,
                      int num_classes, ProbeKind kind, const HyperParams& params,
                      uint64_t seed) {
  params.decay.validate();
  if (params.d_pca < 1 || params.d_pca > train_aggregates.cols()) {
    throw Error("d_pca " + std::to_string(params.d_pca) + " outside [1, " +
                std::to_string(train_aggregates.cols()) + "]");
  }
  FittedProbe f;
  f.kind = kind;
  f.params = params;
  f.seed = seed;
  f.pca = fit_pca(train_aggregates);
  Eigen::MatrixXd coords = project_rows(f.pca, train_aggregates, params.d_pca);
  TrainConfig cfg;
  cfg.kind = kind;
  cfg.learning_rate = params.learning_rate;
  cfg.batch_size = params.batch_size;
  cfg.epochs = params.epochs;
  cfg.hidden_dim = kind == ProbeKind::kNonlinear ? params.hidden_dim : cfg.hidden_dim;
  cfg.seed = seed;
  TrainResult trained = train(coords, labels, num_classes, cfg);
  f.probe = std::move(trained.probe);
  f.epoch_losses = std::move(trained.epoch_losses);
  return f;
}

std::vector<int> predict(const FittedProbe& fitted, const Eigen::MatrixXd& aggregates) {
  return predict(fitted.probe, project_rows(fitted.pca, aggregates, fitted.params.d_pca));
}

Objective make_objective(const StreamFrames& frames, const ProblemData& data, ProbeKind kind) {
  return [&frames, &data, kind](const HyperParams& p, uint64_t seed) {
    Eigen::MatrixXd train_x = aggregate_rows(frames, data.train, p.decay);
    Eigen::MatrixXd dev_x = aggregate_rows(frames, data.dev, p.decay);
    std::vector<int> train_y = gather_labels(data, data.train);
    std::vector<int> dev_y = gather_labels(data, data.dev);
    FittedProbe f = fit_probe(train_x, train_y, data.problem.num_classes(), kind, p, seed);
    TrialOutcome o;
    o.dev_accuracy = accuracy(predict(f, dev_x), dev_y);
    o.train_loss = f.epoch_losses.empty() ? 0.0 : f.epoch_losses.back();
    return o;
  };
}

SearchResult search_hyperparams(const StreamFrames& frames, const ProblemData& data,
                                ProbeKind kind, int budget, uint64_t seed, int jobs) {
  if (frames.empty()) throw Error("empty stream");
  const int dim = static_cast<int>(frames.front().cols());
  SearchSpace space = SearchSpace::for_probe(kind, dim);
  space.d_pca_min = std::min(space.d_pca_min, dim);
  return run_search(space, budget, make_objective(frames, data, kind), seed, jobs);
}

EvalReport train_and_evaluate(const StreamFrames& frames, const ProblemData& data,
                              ProbeKind kind, const HyperParams& params,
                              std::string_view stream, std::span<const uint64_t> seeds,
                              int jobs, std::vector<FittedProbe>* fitted,
                              std::string* warning) {
  if (frames.empty()) throw Error("empty stream");
  if (seeds.empty()) throw Error("no probe seeds");
  HyperParams p = transfer_config(params, static_cast<int>(frames.front().cols()), warning);
  Eigen::MatrixXd train_x = aggregate_rows(frames, data.train, p.decay);
  Eigen::MatrixXd dev_x = aggregate_rows(frames, data.dev, p.decay);
  Eigen::MatrixXd test_x = aggregate_rows(frames, data.test, p.decay);
  std::vector<int> train_y = gather_labels(data, data.train);
  std::vector<int> dev_y = gather_labels(data, data.dev);
  std::vector<int> test_y = gather_labels(data, data.test);

  std::vector<FittedProbe> probes(seeds.size());
  std::vector<EvalReport> reports(seeds.size());
  parallel_for(seeds.size(), jobs, [&](std::size_t i) {
    probes[i] = fit_probe(train_x, train_y, data.problem.num_classes(), kind, p, seeds[i]);
    double dev_acc = accuracy(predict(probes[i], dev_x), dev_y);
    std::vector<int> pred = predict(probes[i], test_x);
    reports[i] = single_report(data.problem.name, std::string(stream),
                               std::string(probe_kind_name(kind)), data.problem.classes,
                               seeds[i], pred, test_y, dev_acc);
  });
  if (fitted) *fitted = std::move(probes);
  return mean_report(reports);
}

void save_fitted_probe(const FittedProbe& fitted, const std::filesystem::path& stem,
                       const nlohmann::json& meta) {
  if (stem.has_parent_path()) std::filesystem::create_directories(stem.parent_path());
  save_probe(fitted.probe, stem.string() + ".probe");
  save_pca(fitted.pca, stem.string() + ".pca");
  nlohmann::json j = meta;
  j["kind"] = probe_kind_name(fitted.kind);
  j["params"] = to_json(fitted.params);
  j["seed"] = fitted.seed;
  j["epoch_losses"] = fitted.epoch_losses;
  std::ofstream out(stem.string() + ".json", std::ios::trunc);
  if (!out) throw Error("cannot write " + stem.string() + ".json");
  out << j.dump(2) << "\n";
}

FittedProbe load_fitted_probe(const std::filesystem::path& stem) {
  std::ifstream in(stem.string() + ".json");
  if (!in) throw Error("missing probe sidecar " + stem.string() + ".json");
  FittedProbe f;
  try {
    nlohmann::json j = nlohmann::json::parse(in);
    f.kind = parse_probe_kind(j.at("kind").get<std::string>());
    f.params = hyper_params_from_json(j.at("params"));
    f.seed = j.at("seed").get<uint64_t>();
    f.epoch_losses = j.value("epoch_losses", std::vector<double>{});
  } catch (const nlohmann::json::exception& e) {
    throw Error(stem.string() + ".json: " + e.what());
  }
  f.probe = load_probe(stem.string() + ".probe");
  f.pca = load_pca(stem.string() + ".pca");
  if (kind_of(f.probe) != f.kind) throw Error(stem.string() + ": probe kind mismatch");
  if (input_dim(f.probe) != f.params.d_pca || f.params.d_pca > f.pca.dim()) {
    throw Error(stem.string() + ": probe and PCA dimensions disagree");
  }
  return f;
}

RvqCodec fit_corpus_codec(std::span<const MatrixXfR* const> sequences, const RvqOptions& options,
                          int max_train_vectors) {
  std::vector<std::pair<std::size_t, Eigen::Index>> all;
  Eigen::Index dim = -1;
  for (std::size_t s = 0; s < sequences.size(); ++s) {
    const MatrixXfR& m = *sequences[s];
    if (dim < 0) dim = m.cols();
    if (m.cols() != dim) throw Error("sequences differ in dimension");
    for (Eigen::Index r = 0; r < m.rows(); ++r) all.emplace_back(s, r);
  }
  if (all.empty()) throw Error("no frames to fit a codec on");
  if (max_train_vectors > 0 && all.size() > static_cast<std::size_t>(max_train_vectors)) {
    std::mt19937_64 rng(mix_seed(options.seed, 0x53554253));
    for (std::size_t i = 0; i < static_cast<std::size_t>(max_train_vectors); ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, all.size() - 1);
      std::swap(all[i], all[pick(rng)]);
    }
    all.resize(static_cast<std::size_t>(max_train_vectors));
    std::sort(all.begin(), all.end());
  }
  MatrixXdR train(static_cast<Eigen::Index>(all.size()), dim);
  for (std::size_t i = 0; i < all.size(); ++i) {
    train.row(static_cast<Eigen::Index>(i)) =
        sequences[all[i].first]->row(all[i].second).cast<double>();
  }
  return rvq_fit(train, options);
}

CodeMatrix encode_frames(const RvqCodec& codec, const MatrixXfR& frames) {
  return rvq_encode_batch(codec, frames.cast<double>());
}

MatrixXfR codeword_frames(const RvqCodec& codec, const CodeMatrix& codes, int level,
                          bool cumulative) {
  if (level < 0 || level > codec.num_levels()) {
    throw Error("codebook level " + std::to_string(level) + " outside [0, " +
                std::to_string(codec.num_levels()) + "]");
  }
  if (codes.cols() != codec.num_levels() + 1) throw Error("code matrix has the wrong width");
  MatrixXfR out = MatrixXfR::Zero(codes.rows(), codec.dim());
  for (Eigen::Index r = 0; r < codes.rows(); ++r) {
    if (level == 0) {
      out.row(r) = codec.vq.codewords.row(codes(r, 0)).cast<float>();
      continue;
    }
    const int first = cumulative ? 1 : level;
    Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(codec.dim());
    for (int k = first; k <= level; ++k) {
      sum += codec.levels[static_cast<std::size_t>(k - 1)].codewords.row(codes(r, k));
    }
    out.row(r) = sum.cast<float>();
  }
  return out;
}

}  // namespace tuneprobe
