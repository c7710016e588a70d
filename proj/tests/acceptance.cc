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

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <unistd.h>

#include "tuneprobe/evaluation.h"
#include "tuneprobe/experiment.h"
#include "tuneprobe/features.h"
#include "tuneprobe/probes.h"
#include "tuneprobe/quantizer.h"
#include "tuneprobe/synth_corpus.h"
#include "tuneprobe/tasks.h"

namespace tp = tuneprobe;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void verdict(const std::string& name, bool ok, const std::string& detail) {
  std::printf("%s  %s  (%s)\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Eigen::MatrixXd gaussian(int rows, int cols, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> g(0.0, sd);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

// ---- formula suite --------------------------------------------------------

void check_decay() {
  const double ln2 = std::log(2.0);
  const std::vector<std::pair<tp::DecayConfig, std::vector<double>>> cases = {
      {{0.0, 0.0}, {1.0 / 3, 1.0 / 3, 1.0 / 3}},
      {{ln2, 0.0}, {4.0 / 7, 2.0 / 7, 1.0 / 7}},
      {{0.0, ln2}, {1.0 / 7, 2.0 / 7, 4.0 / 7}}};
  double worst = 0.0;
  for (const auto& [cfg, want] : cases) {
    Eigen::VectorXd w = tp::decay_weights(2, cfg);
    for (int i = 0; i < 3; ++i) worst = std::max(worst, std::abs(w[i] - want[i]));
  }
  verdict("decay weights match closed forms", worst <= 1e-12, fmt("max err %.2e", worst));

  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> n_dist(0, 40);
  std::uniform_real_distribution<double> d_dist(0.0, 5.0);
  double norm_err = 0.0, sym_err = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const int n = n_dist(rng);
    const double a = d_dist(rng), b = d_dist(rng);
    Eigen::VectorXd w = tp::decay_weights(n, {a, b});
    Eigen::VectorXd m = tp::decay_weights(n, {b, a});
    norm_err = std::max(norm_err, std::abs(w.sum() - 1.0));
    for (int i = 0; i <= n; ++i) sym_err = std::max(sym_err, std::abs(w[i] - m[n - i]));
  }
  verdict("decay weights normalized and reversal-symmetric (1000 draws)",
          norm_err < 1e-12 && sym_err < 1e-12,
          fmt("sum err %.2e, mirror err %.2e", norm_err, sym_err));
}

void check_pca() {
  std::mt19937_64 rng(2);
  double ortho = 0.0, recon = 0.0;
  bool descending = true;
  for (int t = 0; t < 20; ++t) {
    const int d = 3 + t % 10;
    Eigen::MatrixXd mix = gaussian(d, d, rng);
    Eigen::MatrixXd y = gaussian(60, d, rng) * mix;
    tp::PcaModel m = tp::fit_pca(y);
    ortho = std::max(ortho, (m.basis.transpose() * m.basis -
                             Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff());
    for (int k = 1; k < d; ++k) descending &= m.eigenvalues[k] <= m.eigenvalues[k - 1];
    for (int i = 0; i < y.rows(); ++i) {
      Eigen::VectorXd yi = y.row(i).transpose();
      recon = std::max(recon, (tp::reconstruct(m, tp::project(m, yi, d)) - yi)
                                  .cwiseAbs().maxCoeff());
    }
  }
  // Four points on the axes: centered Gram is diag(8, 2).
  Eigen::MatrixXd fx(4, 2);
  fx << 2, 0, -2, 0, 0, 1, 0, -1;
  tp::PcaModel f = tp::fit_pca(fx);
  const bool fixture = std::abs(f.eigenvalues[0] - 8.0) < 1e-9 &&
                       std::abs(f.eigenvalues[1] - 2.0) < 1e-9 &&
                       std::abs(std::abs(f.basis(0, 0)) - 1.0) < 1e-12 &&
                       std::abs(std::abs(f.basis(1, 1)) - 1.0) < 1e-12;
  verdict("PCA orthonormal, descending, exact reconstruction, 2-d fixture",
          ortho < 1e-8 && descending && recon < 1e-8 && fixture,
          fmt("|BtB-I| %.2e, recon %.2e, fixture ", ortho, recon) + (fixture ? "ok" : "off"));
}

template <typename P>
double gradient_error(P probe, const Eigen::MatrixXd& x, const std::vector<int>& labels) {
  P grad = probe;
  tp::loss_and_gradients(probe, x, labels, &grad);
  auto params = tp::parameter_spans(probe);
  auto grads = tp::parameter_spans(grad);
  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t s = 0; s < params.size(); ++s) {
    for (std::size_t i = 0; i < params[s].size(); ++i) {
      const double keep = params[s][i];
      params[s][i] = keep + h;
      const double up = tp::mean_cross_entropy(tp::forward_batch(tp::Probe(probe), x), labels);
      params[s][i] = keep - h;
      const double down = tp::mean_cross_entropy(tp::forward_batch(tp::Probe(probe), x), labels);
      params[s][i] = keep;
      const double numeric = (up - down) / (2 * h);
      const double scale = std::max({std::abs(numeric), std::abs(grads[s][i]), 1e-6});
      worst = std::max(worst, std::abs(numeric - grads[s][i]) / scale);
    }
  }
  return worst;
}

void check_gradients() {
  std::mt19937_64 rng(3);
  double lin = 0.0, non = 0.0;
  for (int t = 0; t < 20; ++t) {
    tp::LinearProbe l{gaussian(3, 5, rng), gaussian(3, 1, rng)};
    tp::NonlinearProbe n;
    n.w1 = gaussian(6, 5, rng);
    n.b1 = gaussian(6, 1, rng);
    n.w2 = gaussian(3, 6, rng);
    n.b2 = gaussian(3, 1, rng);
    n.ln_gain = (gaussian(6, 1, rng, 0.2).array() + 1.0).matrix();
    n.ln_bias = gaussian(6, 1, rng, 0.2);
    Eigen::MatrixXd x = gaussian(8, 5, rng);
    std::vector<int> labels;
    for (int i = 0; i < 8; ++i) labels.push_back(static_cast<int>(rng() % 3));
    lin = std::max(lin, gradient_error(l, x, labels));
    non = std::max(non, gradient_error(n, x, labels));
  }
  verdict("gradients match central differences, both probe kinds (20 instances)",
          lin < 1e-4 && non < 1e-4, fmt("max rel err linear %.2e, nonlinear %.2e", lin, non));
}

void check_softmax() {
  std::mt19937_64 rng(4);
  double shift = 0.0;
  for (int t = 0; t < 100; ++t) {
    Eigen::VectorXd z = gaussian(7, 1, rng, 3.0);
    Eigen::VectorXd a = tp::softmax(z);
    Eigen::VectorXd b = tp::softmax((z.array() + 500.0).matrix());
    shift = std::max(shift, (a - b).cwiseAbs().maxCoeff());
  }
  Eigen::VectorXd big = tp::softmax(Eigen::Vector3d(1000.0, -1000.0, 999.0));
  const bool stable = big.allFinite() && std::abs(big.sum() - 1.0) < 1e-12 &&
                      std::abs(big[0] - 1.0 / (1.0 + std::exp(-1.0))) < 1e-12;
  verdict("softmax shift-invariant and stable at logit magnitude 1000",
          shift < 1e-12 && stable, fmt("shift err %.2e", shift) + (stable ? ", stable" : ", unstable"));
}

void check_vq() {
  std::mt19937_64 rng(5);
  tp::Codebook cb;
  cb.codewords = gaussian(512, 32, rng);
  cb.trained = true;
  tp::MatrixXdR queries = gaussian(1000, 32, rng);
  std::vector<int> batch = tp::vq_encode_batch(cb, queries);
  int mismatches = 0;
  for (int q = 0; q < 1000; ++q) {
    int best = 0;
    double best_d = INFINITY;
    for (int k = 0; k < 512; ++k) {
      double d = (queries.row(q) - cb.codewords.row(k)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    mismatches += tp::vq_encode(cb, queries.row(q).transpose()).index != best;
    mismatches += batch[static_cast<std::size_t>(q)] != best;
  }
  verdict("vq_encode equals brute-force nearest neighbour (1000 queries)", mismatches == 0,
          std::to_string(mismatches) + " mismatches");

  tp::MatrixXdR train = gaussian(4000, 16, rng);
  tp::RvqCodec codec = tp::rvq_fit(train, {.levels = 7, .codebook_size = 64, .iters = 10, .seed = 1});
  tp::MatrixXdR samples = gaussian(10000, 16, rng, 1.3);
  auto codes = tp::rvq_encode_batch(codec, samples);
  int increases = 0;
  for (int i = 0; i < samples.rows(); ++i) {
    Eigen::RowVectorXd r = samples.row(i);
    double prev = r.norm();
    for (int level = 1; level <= codec.num_levels(); ++level) {
      r -= codec.levels[static_cast<std::size_t>(level - 1)].codewords.row(codes(i, level));
      const double now = r.norm();
      increases += now > prev;
      prev = now;
    }
  }
  bool guard = true;
  for (const auto& lv : codec.levels) guard &= lv.codewords.row(0).isZero(0.0);
  verdict("RVQ residual norms non-increasing with zero-codeword guard (10000 samples)",
          increases == 0 && guard, std::to_string(increases) + " increases");
}

void check_split_and_zero_r() {
  std::mt19937_64 rng(6);
  bool within = true, deterministic = true;
  for (int t = 0; t < 50; ++t) {
    std::vector<tp::LabeledId> items;
    std::map<int, int> sizes;
    const int classes = 2 + t % 7;
    for (int c = 0; c < classes; ++c) {
      const int n = 3 + static_cast<int>(rng() % 200);
      sizes[c] = n;
      for (int i = 0; i < n; ++i) {
        items.push_back({"c" + std::to_string(c) + "_" + std::to_string(i), c});
      }
    }
    tp::SplitAssignment a = tp::stratified_split(items, {}, t);
    tp::SplitAssignment b = tp::stratified_split(items, {}, t);
    deterministic &= a.train == b.train && a.dev == b.dev && a.test == b.test;
    const std::vector<std::pair<const std::vector<std::string>*, double>> parts = {
        {&a.train, 0.70}, {&a.dev, 0.15}, {&a.test, 0.15}};
    for (const auto& [ids, ratio] : parts) {
      std::map<int, int> got;
      for (const auto& id : *ids) ++got[std::stoi(id.substr(1, id.find('_') - 1))];
      for (const auto& [c, n] : sizes) within &= std::abs(got[c] - ratio * n) <= 1.0;
    }
  }
  verdict("stratified split within +-1 sample per class per part, deterministic per seed",
          within && deterministic,
          std::string(within ? "proportions ok" : "proportions off") +
              (deterministic ? ", deterministic" : ", nondeterministic"));

  std::vector<int> eight, five;
  tp::ClassificationProblem p5 = tp::problem("5class");
  for (tp::Tune t : tp::all_tunes()) {
    for (int i = 0; i < 25; ++i) {
      eight.push_back(t.bits());
      five.push_back(p5.class_of(t));
    }
  }
  const double z8 = tp::zero_r(eight), z5 = tp::zero_r(five);
  verdict("zero_r: balanced 8class 0.125, 5class mapping 0.25", z8 == 0.125 && z5 == 0.25,
          fmt("%.4f, %.4f", z8, z5));
}

// ---- end-to-end -----------------------------------------------------------

constexpr int kSearchBudget = 8;

struct PipelineRun {
  std::vector<tp::EvalReport> reports;
  std::string results_csv;
  double seconds = 0.0;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

PipelineRun run_pipeline(const fs::path& out_dir, int jobs) {
  const auto t0 = std::chrono::steady_clock::now();
  tp::CorpusOptions corpus;  // defaults: 30 speakers x 8 tunes x 20, seed 0
  auto utts = tp::generate_utterances(corpus, jobs);
  std::vector<tp::UtteranceRecord> records;
  tp::StreamFrames unquantized;
  std::vector<const tp::MatrixXfR*> sequences;
  for (const auto& u : utts) {
    records.push_back(u.record);
    unquantized.push_back(tp::word_frames(u.latents, u.record));
    sequences.push_back(&u.latents.frames);
  }
  tp::RvqOptions rvq;  // K = 512, L = 7
  rvq.seed = corpus.seed;
  tp::RvqCodec codec = tp::fit_corpus_codec(sequences, rvq, 8192);
  std::vector<tp::CodeMatrix> codes(unquantized.size());
  for (std::size_t i = 0; i < codes.size(); ++i) codes[i] = tp::encode_frames(codec, unquantized[i]);
  utts.clear();
  sequences.clear();

  std::vector<tp::ProblemData> data;
  std::vector<tp::HyperParams> best;
  for (const auto& name : tp::problem_names()) {
    tp::ClassificationProblem p = tp::problem(name);
    data.push_back(tp::problem_data(records, p, tp::make_split(records, p, corpus.seed)));
    best.push_back(tp::search_hyperparams(unquantized, data.back(), tp::ProbeKind::kLinear,
                                          kSearchBudget, corpus.seed, jobs)
                       .best()
                       .params);
  }

  PipelineRun run;
  const std::vector<uint64_t> seeds = tp::probe_seeds(corpus.seed);
  for (int level = -1; level <= codec.num_levels(); ++level) {
    std::string stream = level < 0 ? "unquantized" : tp::codebook_stream_name(level);
    tp::StreamFrames cw;
    if (level >= 0) {
      for (const auto& c : codes) cw.push_back(tp::codeword_frames(codec, c, level, false));
    }
    const tp::StreamFrames& frames = level < 0 ? unquantized : cw;
    for (std::size_t i = 0; i < data.size(); ++i) {
      run.reports.push_back(tp::train_and_evaluate(frames, data[i], tp::ProbeKind::kLinear,
                                                   best[i], stream, seeds, jobs));
    }
  }
  tp::emit_results(run.reports, out_dir);
  run.seconds = seconds_since(t0);
  run.results_csv = slurp(out_dir / "results.csv");
  return run;
}

const tp::EvalReport& find(const PipelineRun& run, const std::string& problem,
                           const std::string& stream) {
  for (const auto& r : run.reports) {
    if (r.problem == problem && r.stream == stream) return r;
  }
  throw tp::Error("no report for " + problem + " / " + stream);
}

void check_end_to_end() {
  const fs::path root = fs::temp_directory_path() / ("tuneprobe_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  PipelineRun a = run_pipeline(root / "run1", 1);
  auto acc = [&a](const char* problem, const char* stream = "unquantized") {
    return find(a, problem, stream).mean_accuracy;
  };

  const double hl = acc("hhh-vs-lll"), edge = acc("xll-vs-xhh"), pa = acc("hxx-vs-lxx");
  const double c8 = acc("8class"), c5 = acc("5class");
  const double z8 = find(a, "8class", "unquantized").zero_r;
  verdict("unquantized hhh-vs-lll test accuracy >= 0.95", hl >= 0.95, fmt("%.4f", hl));
  verdict("unquantized xll-vs-xhh test accuracy >= 0.85", edge >= 0.85, fmt("%.4f", edge));
  verdict("unquantized 8class accuracy >= 2x ZeroR and >= 0.25",
          c8 >= 2 * z8 && c8 >= 0.25, fmt("%.4f vs ZeroR %.4f", c8, z8));
  verdict("5class accuracy >= 8class accuracy", c5 >= c8, fmt("%.4f vs %.4f", c5, c8));
  verdict("xll-vs-xhh accuracy >= hxx-vs-lxx accuracy", edge >= pa, fmt("%.4f vs %.4f", edge, pa));

  const double cb1 = acc("hhh-vs-lll", "codebook1");
  verdict("codebook1 hhh-vs-lll >= 0.8x unquantized", cb1 >= 0.8 * hl,
          fmt("%.4f vs %.4f", cb1, 0.8 * hl));

  bool above = true;
  double worst_margin = INFINITY;
  std::string worst_where;
  for (int k = 0; k <= 2; ++k) {
    for (const auto& name : tp::problem_names()) {
      const tp::EvalReport& r = find(a, name, tp::codebook_stream_name(k));
      const double margin = r.mean_accuracy - r.zero_r;
      above &= margin > 0.0;
      if (margin < worst_margin) {
        worst_margin = margin;
        worst_where = name + "/" + r.stream;
      }
    }
  }
  verdict("codebooks 0-2 above ZeroR on every problem", above,
          fmt("smallest margin %+.4f at ", worst_margin) + worst_where);

  double row_err = 0.0, diag_err = 0.0;
  for (const auto& r : a.reports) {
    for (int c = 0; c < static_cast<int>(r.classes.size()); ++c) {
      if (r.confusion.populated(c)) {
        row_err = std::max(row_err, std::abs(r.confusion.percent.row(c).sum() - 100.0));
      }
    }
    diag_err = std::max(diag_err, std::abs(tp::prior_weighted_diagonal(r.confusion) -
                                           r.mean_accuracy));
  }
  verdict("confusion rows sum to 100 +- 0.01, weighted diagonal equals accuracy within 1e-9",
          row_err <= 0.01 && diag_err <= 1e-9, fmt("row err %.2e, diag err %.2e", row_err, diag_err));

  verdict("end-to-end run single-threaded < 600 s", a.seconds < 600.0,
          fmt("%.1f s", a.seconds));

  PipelineRun b = run_pipeline(root / "run2", 2);
  verdict("identical seeds give byte-identical results.csv", a.results_csv == b.results_csv,
          std::to_string(a.results_csv.size()) + " bytes, second run with 2 jobs");
  fs::remove_all(root);

  std::printf("\nresults.csv of the first run:\n%s", a.results_csv.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  const bool formulas_only = argc > 1 && std::string(argv[1]) == "--formulas-only";
  try {
    const auto t0 = std::chrono::steady_clock::now();
    check_decay();
    check_pca();
    check_gradients();
    check_softmax();
    check_vq();
    check_split_and_zero_r();
    const double s = seconds_since(t0);
    verdict("formula suite < 60 s", s < 60.0, fmt("%.1f s", s));
    if (!formulas_only) check_end_to_end();
  } catch (const std::exception& e) {
    std::printf("FAIL  acceptance run aborted  (%s)\n", e.what());
    return 1;
  }
  std::printf("\n%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
