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

#ifndef TUNEPROBE_SYNTH_CORPUS_H_
#define TUNEPROBE_SYNTH_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <random>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "tuneprobe/latent_store.h"
#include "tuneprobe/tune.h"

namespace tuneprobe {

struct SpeakerParams {
  double base_f0 = 120.0;  // Hz, the L target
  double range = 80.0;     // Hz, H target is base_f0 + range
  double jitter_sd = 0.0;  // Hz, per-frame Gaussian jitter
  uint64_t seed = 0;

  void validate() const;
};

// Relative positions of the pitch-accent and phrase-accent targets within
// the word; the boundary tone sits on the final frame.
struct ContourOptions {
  double accent_pos = 0.5;
  double phrase_pos = 0.75;
};

struct TuneContour {
  Tune tune;
  std::vector<double> f0;  // Hz, one per word frame
  int accent_end = 0;      // frame of the pitch-accent target
  int phrase_end = 0;      // frame of the phrase-accent target
};

// Piecewise-linear F0 from a neutral onset (base + range / 2 at frame 0)
// through the three tone targets, plus per-frame jitter drawn from rng.
// Values are floored at 1 Hz. Throws Error for n_frames < 6.
TuneContour synth_contour(Tune tune, int n_frames, const SpeakerParams& spk,
                          std::mt19937_64& rng, const ContourOptions& opts = {});
// Same, parsing the tune code; throws Error when it is invalid.
TuneContour synth_contour(std::string_view tune_code, int n_frames,
                          const SpeakerParams& spk, std::mt19937_64& rng,
                          const ContourOptions& opts = {});

struct EmbeddingParams {
  int dim = kUnquantizedDim;
  int nuisance_dims = 16;
  double signal_gain = 3.0;
  double delta_gain = 4.0;
  double nuisance_gain = 2.0;
  double nuisance_rho = 0.8;       // AR(1) coefficient of nuisance channels
  double speaker_offset_sd = 1.0;  // static per-speaker nuisance offset
  double noise_sd = 1.0;           // white noise per latent dim
  uint64_t embedding_seed = 0;
};

// Corpus-global maps from the two pitch features and the nuisance channels
// into the latent space.
struct Embedding {
  EmbeddingParams params;
  Eigen::MatrixXd pitch_map;     // dim x 2
  Eigen::MatrixXd nuisance_map;  // dim x nuisance_dims

  static Embedding create(const EmbeddingParams& params);
};

// Per frame t: pitch_map * (f_t, delta_gain * (f_t - f_{t-1})) with f the
// normalized F0 in [-0.5, 0.5], plus nuisance_map * (speaker_offset + AR(1)
// state), plus white noise. f_{-1} = f_0. Throws Error when dim <= 2 or the
// offset length differs from nuisance_dims.
LatentSequence embed_latents(const std::vector<double>& normalized_f0,
                             const Embedding& embedding,
                             const Eigen::VectorXd& speaker_offset,
                             std::mt19937_64& rng);

struct CorpusOptions {
  int speakers = 30;
  int per_tune = 20;  // utterances per speaker and tune
  uint64_t seed = 0;
  int min_word_frames = 8;
  int max_word_frames = 20;
  int lead_frames = 2;  // frames before the nuclear word
  int tail_frames = 1;  // frames after it
  double jitter_fraction = 0.3;   // jitter_sd as a share of the speaker range
  ContourOptions contour;
  EmbeddingParams embedding;

  void validate() const;
};

struct GeneratedUtterance {
  UtteranceRecord record;
  LatentSequence latents;
};

// Utterance i is generated from mix_seed-derived seeds of (seed, i) alone,
// so the output does not depend on `jobs`. Records are ordered speaker,
// tune, repetition.
std::vector<GeneratedUtterance> generate_utterances(const CorpusOptions& opts,
                                                    int jobs = 1);

// Writes latents/<id>.ltnt and manifest.jsonl under out_dir.
CorpusManifest generate_corpus(const CorpusOptions& opts,
                               const std::filesystem::path& out_dir, int jobs = 1);

}  // namespace tuneprobe

#endif  // TUNEPROBE_SYNTH_CORPUS_H_
