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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tuneprobe/evaluation.h"
#include "tuneprobe/experiment.h"
#include "tuneprobe/hpo.h"
#include "tuneprobe/latent_store.h"
#include "tuneprobe/parallel.h"
#include "tuneprobe/synth_corpus.h"
#include "tuneprobe/tasks.h"
#include "tuneprobe/textgrid.h"

namespace fs = std::filesystem;
using namespace tuneprobe;

namespace {

void log_line(const std::string& msg) { std::cerr << msg << "\n"; }

struct Common {
  std::string manifest;
  std::string workdir;
  std::string problem = "8class";
  std::string kind = "linear";
  std::string stream = std::string(kUnquantizedStream);
  uint64_t seed = 0;
  int jobs = default_jobs();

  fs::path work() const {
    if (!workdir.empty()) return workdir;
    fs::path parent = fs::path(manifest).parent_path();
    return parent.empty() ? fs::path(".") : parent;
  }
  std::string tag() const { return problem + "." + kind + "." + stream; }
  fs::path split_path() const { return work() / "splits" / (problem + ".jsonl"); }
  fs::path best_path(const std::string& s) const {
    return work() / "hpo" / (problem + "." + kind + "." + s + ".best.json");
  }
  fs::path probe_dir() const { return work() / "probes" / tag(); }
};

void add_manifest(CLI::App* cmd, Common& c) {
  cmd->add_option("manifest,--manifest", c.manifest, "Corpus manifest (JSON lines)")->required();
  cmd->add_option("--workdir", c.workdir, "Output directory (default: manifest directory)");
}

void add_problem(CLI::App* cmd, Common& c) {
  cmd->add_option("--problem", c.problem, "Classification problem")
      ->check(CLI::IsMember(problem_names()));
}

void add_probe(CLI::App* cmd, Common& c) {
  cmd->add_option("--kind", c.kind, "Probe kind")->check(CLI::IsMember({"linear", "nonlinear"}));
  cmd->add_option("--stream", c.stream, "Stream name (unquantized or codebook<k>)");
}

void add_seed(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Random seed");
}

void add_jobs(CLI::App* cmd, Common& c) {
  cmd->add_option("--jobs", c.jobs, "Worker threads (default: $TUNE_PROBE_JOBS or 1)")
      ->check(CLI::PositiveNumber);
}

ProblemData load_problem(const Common& c, const CorpusManifest& m) {
  return problem_data(m.records, problem(c.problem), read_split(c.split_path()));
}

void write_json(const nlohmann::json& j, const fs::path& path) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("missing file: " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

int cmd_synth(const fs::path& out, const CorpusOptions& opts, int jobs) {
  CorpusManifest m = generate_corpus(opts, out, jobs);
  std::cout << "wrote " << m.records.size() << " utterances to "
            << (out / "manifest.jsonl").string() << "\n";
  return 0;
}

int cmd_validate(const Common& c) {
  CorpusValidation v = validate_corpus(c.manifest);
  for (const auto& p : v.problems) std::cout << p << "\n";
  if (!v.ok()) throw Error("corpus has " + std::to_string(v.problems.size()) + " problems");
  std::cout << "ok: " << v.manifest.records.size() << " records\n";
  return 0;
}

int cmd_inspect(const std::string& path, const std::string& tier) {
  TextGridDoc doc = read_textgrid(path);
  std::cout << "xmin " << doc.xmin << " xmax " << doc.xmax << "\n";
  for (const auto& t : doc.tiers) {
    std::cout << "tier \"" << t.name << "\": " << t.intervals.size() << " intervals\n";
  }
  WordInterval w = final_word_interval(doc, tier);
  std::cout << "final word: " << w.word << " " << w.tmin << " " << w.tmax << "\n";
  return 0;
}

int cmd_quantize(const Common& c, const RvqOptions& ro, int max_train_vectors, bool cumulative,
                 std::string out_manifest) {
  CorpusManifest m = load_corpus(c.manifest);
  const fs::path work = c.work();
  std::vector<LatentSequence> seqs(m.records.size());
  parallel_for(seqs.size(), c.jobs, [&](std::size_t i) {
    seqs[i] = read_latents(m.stream_path(m.records[i], kUnquantizedStream));
  });
  std::vector<const MatrixXfR*> ptrs;
  for (const auto& s : seqs) ptrs.push_back(&s.frames);
  log_line("quantize: fitting " + std::to_string(ro.levels) + "-level codec, K=" +
           std::to_string(ro.codebook_size));
  RvqCodec codec = fit_corpus_codec(ptrs, ro, max_train_vectors);
  save_codec(codec, work / "codec.ltnt");

  if (out_manifest.empty()) out_manifest = (work / "manifest.quantized.jsonl").string();
  const fs::path base = fs::absolute(fs::path(out_manifest)).parent_path();
  auto relative_to_base = [&base](const fs::path& p) {
    return fs::proximate(fs::absolute(p), base).generic_string();
  };
  fs::create_directories(work / "codebooks");
  CorpusManifest out = m;
  out.base_dir = base;
  parallel_for(seqs.size(), c.jobs, [&](std::size_t i) {
    UtteranceRecord& r = out.records[i];
    for (auto& [name, path] : r.streams) {
      path = relative_to_base(m.stream_path(m.records[i], name));
    }
    CodeMatrix codes = encode_frames(codec, seqs[i].frames);
    for (int k = 0; k <= codec.num_levels(); ++k) {
      LatentSequence s;
      s.frame_rate = seqs[i].frame_rate;
      s.frames = codeword_frames(codec, codes, k, cumulative);
      const fs::path file = work / "codebooks" / (r.id + "." + codebook_stream_name(k) + ".ltnt");
      write_latents(s, file);
      r.streams[codebook_stream_name(k)] = relative_to_base(file);
    }
  });
  out.metadata["codeword_dim"] = std::to_string(codec.dim());
  out.metadata["codebook_levels"] = std::to_string(codec.num_levels());
  out.metadata["codebook_size"] = std::to_string(codec.codebook_size());
  out.metadata["codeword_mode"] = cumulative ? "cumulative" : "per-level";
  write_manifest(out, out_manifest);
  std::cout << "wrote " << out_manifest << "\n";
  return 0;
}

int cmd_split(const Common& c) {
  CorpusManifest m = load_corpus(c.manifest);
  SplitAssignment s = make_split(m.records, problem(c.problem), c.seed);
  fs::create_directories(c.split_path().parent_path());
  write_split(s, c.split_path());
  std::cout << c.problem << ": train " << s.train.size() << ", dev " << s.dev.size()
            << ", test " << s.test.size() << " -> " << c.split_path().string() << "\n";
  return 0;
}

int cmd_hpo(const Common& c, int budget) {
  CorpusManifest m = load_corpus(c.manifest);
  ProblemData data = load_problem(c, m);
  StreamFrames frames = load_word_frames(m, c.stream, c.jobs);
  SearchResult r =
      search_hyperparams(frames, data, parse_probe_kind(c.kind), budget, c.seed, c.jobs);
  const fs::path base = c.work() / "hpo" / c.tag();
  fs::create_directories(base.parent_path());
  write_trial_log(r.trials, base.string() + ".trials.jsonl");
  int failed = 0;
  for (const auto& t : r.trials) {
    if (!t.ok) {
      ++failed;
      log_line("hpo: trial " + std::to_string(t.trial_id) + " failed: " + t.error);
    }
  }
  nlohmann::json best = {{"problem", c.problem},       {"kind", c.kind},
                         {"stream", c.stream},         {"trial", r.best().trial_id},
                         {"dev_accuracy", r.best().dev_accuracy},
                         {"params", to_json(r.best().params)},
                         {"budget", budget},           {"seed", c.seed},
                         {"failed_trials", failed}};
  write_json(best, c.best_path(c.stream));
  std::cout << c.tag() << ": best trial " << r.best().trial_id << " dev accuracy "
            << r.best().dev_accuracy << "\n";
  return 0;
}

int cmd_train(const Common& c, std::string config) {
  CorpusManifest m = load_corpus(c.manifest);
  if (!fs::exists(c.split_path())) throw Error("missing split: " + c.split_path().string());
  ProblemData data = load_problem(c, m);
  if (config.empty()) config = c.best_path(std::string(kUnquantizedStream)).string();
  HyperParams params = hyper_params_from_json(read_json(config).at("params"));
  StreamFrames frames = load_word_frames(m, c.stream, c.jobs);
  std::vector<uint64_t> seeds = probe_seeds(c.seed);
  std::vector<FittedProbe> fitted;
  std::string warning;
  EvalReport rep = train_and_evaluate(frames, data, parse_probe_kind(c.kind), params, c.stream,
                                      seeds, c.jobs, &fitted, &warning);
  if (!warning.empty()) log_line("warning: " + warning);
  for (std::size_t i = 0; i < fitted.size(); ++i) {
    nlohmann::json meta = {{"problem", c.problem},
                           {"stream", c.stream},
                           {"dev_accuracy", rep.dev_accuracies[i]},
                           {"config", config}};
    save_fitted_probe(fitted[i], c.probe_dir() / ("seed" + std::to_string(seeds[i])), meta);
  }
  std::cout << c.tag() << ": trained " << fitted.size() << " probes, mean dev accuracy "
            << rep.dev_accuracy << "\n";
  return 0;
}

int cmd_evaluate(const Common& c) {
  CorpusManifest m = load_corpus(c.manifest);
  ProblemData data = load_problem(c, m);
  StreamFrames frames = load_word_frames(m, c.stream, c.jobs);
  std::vector<EvalReport> reports;
  for (uint64_t seed : probe_seeds(c.seed)) {
    const fs::path stem = c.probe_dir() / ("seed" + std::to_string(seed));
    FittedProbe f = load_fitted_probe(stem);
    double dev_acc = read_json(stem.string() + ".json").value("dev_accuracy", 0.0);
    std::vector<int> pred = predict(f, aggregate_rows(frames, data.test, f.params.decay));
    reports.push_back(single_report(c.problem, c.stream, c.kind, data.problem.classes, seed,
                                    pred, gather_labels(data, data.test), dev_acc));
  }
  EvalReport r = mean_report(reports);
  write_report(r, c.work() / "reports" / (c.tag() + ".json"));
  write_confusion_csv(r, c.work() / "reports" / (c.tag() + ".confusion.csv"));
  std::cout << c.tag() << ": mean test accuracy " << r.mean_accuracy << " (zero_r "
            << r.zero_r << ")\n";
  return 0;
}

int cmd_report(const fs::path& work) {
  const fs::path dir = work / "reports";
  if (!fs::is_directory(dir)) throw Error("no reports under " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<EvalReport> reports;
  for (const auto& f : files) reports.push_back(read_report(f));
  if (reports.empty()) throw Error("no reports under " + dir.string());
  emit_results(reports, work);
  std::cout << "wrote " << (work / "results.csv").string() << " (" << reports.size()
            << " rows)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Probe codec latent streams for nuclear tunes"};
  app.require_subcommand(1);
  Common c;

  auto* synth = app.add_subcommand("synth", "Generate the synthetic tune corpus");
  std::string synth_out;
  CorpusOptions synth_opts;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--speakers", synth_opts.speakers, "Number of speakers");
  synth->add_option("--per-tune", synth_opts.per_tune, "Utterances per speaker and tune");
  synth->add_option("--dim", synth_opts.embedding.dim, "Latent dimension");
  synth->add_option("--seed", synth_opts.seed, "Random seed");
  add_jobs(synth, c);

  auto* validate = app.add_subcommand("validate-corpus", "Check a manifest and its stream files");
  validate->add_option("manifest", c.manifest, "Corpus manifest")->required();

  auto* inspect = app.add_subcommand("inspect-textgrid", "Summarize a TextGrid file");
  std::string tg_path, tier = "words";
  inspect->add_option("file", tg_path, "TextGrid file")->required();
  inspect->add_option("--tier", tier, "Word tier name");

  auto* quantize = app.add_subcommand("quantize", "Fit VQ/RVQ codebooks and emit codeword streams");
  RvqOptions ro;
  int max_train_vectors = 8192;
  bool cumulative = false, no_guard = false;
  std::string out_manifest;
  add_manifest(quantize, c);
  quantize->add_option("--levels", ro.levels, "Residual levels")->check(CLI::PositiveNumber);
  quantize->add_option("--codebook-size", ro.codebook_size, "Codewords per codebook")
      ->check(CLI::PositiveNumber);
  quantize->add_option("--iters", ro.iters, "Lloyd iterations")->check(CLI::NonNegativeNumber);
  quantize->add_option("--max-train-vectors", max_train_vectors,
                       "Frames sampled for fitting (0: all)");
  quantize->add_flag("--cumulative", cumulative,
                     "Emit sums of levels 1..k instead of per-level codewords");
  quantize->add_flag("--no-zero-guard", no_guard, "Do not reserve a zero codeword per level");
  quantize->add_option("--out", out_manifest, "Augmented manifest path");
  add_seed(quantize, c);
  add_jobs(quantize, c);

  auto* split = app.add_subcommand("split", "Write the train/dev/test split of a problem");
  add_manifest(split, c);
  add_problem(split, c);
  add_seed(split, c);

  auto* hpo = app.add_subcommand("hpo", "Random hyperparameter search on one stream");
  int budget = 50;
  add_manifest(hpo, c);
  add_problem(hpo, c);
  add_probe(hpo, c);
  hpo->add_option("--budget", budget, "Number of trials")->check(CLI::PositiveNumber);
  add_seed(hpo, c);
  add_jobs(hpo, c);

  auto* train_cmd = app.add_subcommand("train", "Train three probes with a chosen configuration");
  std::string config;
  add_manifest(train_cmd, c);
  add_problem(train_cmd, c);
  add_probe(train_cmd, c);
  train_cmd->add_option("--config", config,
                        "Hyperparameter JSON (default: the unquantized search result)");
  add_seed(train_cmd, c);
  add_jobs(train_cmd, c);

  auto* evaluate = app.add_subcommand("evaluate", "Score trained probes on the test split");
  add_manifest(evaluate, c);
  add_problem(evaluate, c);
  add_probe(evaluate, c);
  add_seed(evaluate, c);
  add_jobs(evaluate, c);

  auto* report = app.add_subcommand("report", "Aggregate reports into results.csv and plot data");
  std::string report_dir;
  report->add_option("workdir,--workdir", report_dir, "Pipeline working directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) return cmd_synth(synth_out, synth_opts, c.jobs);
    if (*validate) return cmd_validate(c);
    if (*inspect) return cmd_inspect(tg_path, tier);
    if (*quantize) {
      ro.seed = c.seed;
      ro.zero_codeword_guard = !no_guard;
      return cmd_quantize(c, ro, max_train_vectors, cumulative, out_manifest);
    }
    if (*split) return cmd_split(c);
    if (*hpo) return cmd_hpo(c, budget);
    if (*train_cmd) return cmd_train(c, config);
    if (*evaluate) return cmd_evaluate(c);
    if (*report) return cmd_report(report_dir);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (char& ch : msg) {
      if (ch == '\n') ch = ' ';
    }
    std::cerr << "error: " << msg << "\n";
    return 1;
  }
  return 0;
}
