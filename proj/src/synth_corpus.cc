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

#include "tuneprobe/synth_corpus.h"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "tuneprobe/common.h"
#include "tuneprobe/parallel.h"

namespace tuneprobe {
namespace {

constexpr uint64_t kSpeakerDomain = 0x5350454b;    // per-speaker draws
constexpr uint64_t kUtteranceDomain = 0x55545452;  // per-utterance draws
constexpr uint64_t kEmbeddingDomain = 0x454d4244;  // corpus-global maps

std::string utterance_id(int speaker, Tune tune, int rep) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "spk%02d_%s_%02d", speaker, tune.code().c_str(), rep);
  return buf;
}

struct Speaker {
  SpeakerParams params;
  Eigen::VectorXd offset;
};

Speaker make_speaker(const CorpusOptions& opts, int s) {
  std::mt19937_64 rng(mix_seed(opts.seed ^ kSpeakerDomain, static_cast<uint64_t>(s)));
  std::uniform_real_distribution<double> base(90.0, 230.0);
  std::uniform_real_distribution<double> range(50.0, 130.0);
  Speaker spk;
  spk.params.base_f0 = base(rng);
  spk.params.range = range(rng);
  spk.params.jitter_sd = opts.jitter_fraction * spk.params.range;
  spk.params.seed = rng();
  std::normal_distribution<double> gauss(0.0, opts.embedding.speaker_offset_sd);
  spk.offset.resize(opts.embedding.nuisance_dims);
  for (Eigen::Index i = 0; i < spk.offset.size(); ++i) spk.offset[i] = gauss(rng);
  return spk;
}

}  // namespace

void SpeakerParams::validate() const {
  if (!(base_f0 > 0.0) || !(range > 0.0) || !(jitter_sd >= 0.0)) {
    throw Error("speaker parameters need base_f0 > 0, range > 0, jitter_sd >= 0");
  }
}

TuneContour synth_contour(Tune tune, int n_frames, const SpeakerParams& spk,
                          std::mt19937_64& rng, const ContourOptions& opts) {
  spk.validate();
  if (n_frames < 6) throw Error("contour needs at least 6 frames");
  if (!(opts.accent_pos > 0.0 && opts.accent_pos < opts.phrase_pos && opts.phrase_pos < 1.0)) {
    throw Error("target positions must satisfy 0 < accent < phrase < 1");
  }
  const double last = n_frames - 1;
  const int ia = static_cast<int>(std::lround(opts.accent_pos * last));
  const int ip = static_cast<int>(std::lround(opts.phrase_pos * last));
  const int ib = n_frames - 1;
  if (ia <= 0 || ip <= ia || ib <= ip) throw Error("tone targets collapse onto one frame");
  auto level = [&spk](bool high) { return high ? spk.base_f0 + spk.range : spk.base_f0; };
  const double knot_x[4] = {0.0, double(ia), double(ip), double(ib)};
  const double knot_y[4] = {spk.base_f0 + spk.range / 2.0, level(tune.pitch_accent_high()),
                            level(tune.phrase_accent_high()),
                            level(tune.boundary_tone_high())};

  TuneContour c;
  c.tune = tune;
  c.accent_end = ia;
  c.phrase_end = ip;
  c.f0.resize(static_cast<std::size_t>(n_frames));
  std::normal_distribution<double> jitter(0.0, 1.0);
  int seg = 0;
  for (int i = 0; i < n_frames; ++i) {
    while (seg < 2 && i > knot_x[seg + 1]) ++seg;
    const double t = (i - knot_x[seg]) / (knot_x[seg + 1] - knot_x[seg]);
    double v = knot_y[seg] + t * (knot_y[seg + 1] - knot_y[seg]);
    if (spk.jitter_sd > 0.0) v += spk.jitter_sd * jitter(rng);
    c.f0[static_cast<std::size_t>(i)] = std::max(v, 1.0);
  }
  return c;
}

TuneContour synth_contour(std::string_view tune_code, int n_frames, const SpeakerParams& spk,
                          std::mt19937_64& rng, const ContourOptions& opts) {
  auto tune = Tune::parse(tune_code);
  if (!tune) throw Error("invalid tune code \"" + std::string(tune_code) + "\"");
  return synth_contour(*tune, n_frames, spk, rng, opts);
}

Embedding Embedding::create(const EmbeddingParams& params) {
  if (params.dim <= 2) throw Error("embedding dim must exceed 2");
  if (params.nuisance_dims < 0) throw Error("nuisance_dims must be non-negative");
  Embedding e;
  e.params = params;
  std::mt19937_64 rng(mix_seed(params.embedding_seed ^ kEmbeddingDomain, 0));
  std::normal_distribution<double> gauss(0.0, 1.0);
  e.pitch_map.resize(params.dim, 2);
  for (Eigen::Index i = 0; i < e.pitch_map.size(); ++i) {
    e.pitch_map.data()[i] = params.signal_gain * gauss(rng);
  }
  e.nuisance_map.resize(params.dim, params.nuisance_dims);
  const double scale =
      params.nuisance_dims > 0 ? params.nuisance_gain / std::sqrt(params.nuisance_dims) : 0.0;
  for (Eigen::Index i = 0; i < e.nuisance_map.size(); ++i) {
    e.nuisance_map.data()[i] = scale * gauss(rng);
  }
  return e;
}

LatentSequence embed_latents(const std::vector<double>& normalized_f0,
                             const Embedding& embedding,
                             const Eigen::VectorXd& speaker_offset, std::mt19937_64& rng) {
  const EmbeddingParams& p = embedding.params;
  if (p.dim <= 2) throw Error("embedding dim must exceed 2");
  if (speaker_offset.size() != p.nuisance_dims) {
    throw Error("speaker offset length differs from nuisance_dims");
  }
  if (normalized_f0.empty()) throw Error("cannot embed an empty contour");
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double innovation = std::sqrt(std::max(0.0, 1.0 - p.nuisance_rho * p.nuisance_rho));
  Eigen::VectorXd state(p.nuisance_dims);
  for (Eigen::Index k = 0; k < state.size(); ++k) state[k] = gauss(rng);

  LatentSequence seq;
  seq.frame_rate = kDefaultFrameRate;
  seq.frames.resize(static_cast<Eigen::Index>(normalized_f0.size()), p.dim);
  Eigen::VectorXd x(p.dim);
  double prev = normalized_f0.front();
  for (std::size_t t = 0; t < normalized_f0.size(); ++t) {
    const double f = normalized_f0[t];
    if (t > 0) {
      for (Eigen::Index k = 0; k < state.size(); ++k) {
        state[k] = p.nuisance_rho * state[k] + innovation * gauss(rng);
      }
    }
    x = embedding.pitch_map.col(0) * f + embedding.pitch_map.col(1) * (p.delta_gain * (f - prev));
    if (p.nuisance_dims > 0) x += embedding.nuisance_map * (speaker_offset + state);
    if (p.noise_sd > 0.0) {
      for (Eigen::Index i = 0; i < x.size(); ++i) x[i] += p.noise_sd * gauss(rng);
    }
    seq.frames.row(static_cast<Eigen::Index>(t)) = x.cast<float>().transpose();
    prev = f;
  }
  return seq;
}

void CorpusOptions::validate() const {
  if (speakers < 1 || per_tune < 1) throw Error("speaker and per-tune counts must be positive");
  if (min_word_frames < 6 || min_word_frames > max_word_frames) {
    throw Error("word length range must satisfy 6 <= min <= max");
  }
  if (lead_frames < 0 || tail_frames < 0) throw Error("context frame counts must be >= 0");
  if (!(jitter_fraction >= 0.0)) throw Error("jitter fraction must be non-negative");
  if (speakers > 100 || per_tune > 100) {
    throw Error("at most 100 speakers and 100 utterances per tune");
  }
}

std::vector<GeneratedUtterance> generate_utterances(const CorpusOptions& opts, int jobs) {
  opts.validate();
  EmbeddingParams ep = opts.embedding;
  ep.embedding_seed = opts.seed;
  const Embedding embedding = Embedding::create(ep);

  std::vector<Speaker> speakers;
  for (int s = 0; s < opts.speakers; ++s) speakers.push_back(make_speaker(opts, s));

  const std::size_t total =
      static_cast<std::size_t>(opts.speakers) * Tune::kCount * static_cast<std::size_t>(opts.per_tune);
  std::vector<GeneratedUtterance> out(total);
  parallel_for(total, jobs, [&](std::size_t index) {
    const int rep = static_cast<int>(index % static_cast<std::size_t>(opts.per_tune));
    const int tune_bits = static_cast<int>((index / static_cast<std::size_t>(opts.per_tune)) % Tune::kCount);
    const int s = static_cast<int>(index / (static_cast<std::size_t>(opts.per_tune) * Tune::kCount));
    const Tune tune = Tune::from_bits(static_cast<uint8_t>(tune_bits));
    const Speaker& spk = speakers[static_cast<std::size_t>(s)];

    std::mt19937_64 rng(mix_seed(opts.seed ^ kUtteranceDomain, index));
    const int n = std::uniform_int_distribution<int>(opts.min_word_frames,
                                                     opts.max_word_frames)(rng);
    TuneContour contour = synth_contour(tune, n, spk.params, rng, opts.contour);

    std::normal_distribution<double> jitter(0.0, 1.0);
    auto jittered = [&](double hz) {
      return std::max(hz + spk.params.jitter_sd * jitter(rng), 1.0);
    };
    std::vector<double> f0;
    const double onset = spk.params.base_f0 + spk.params.range / 2.0;
    for (int i = 0; i < opts.lead_frames; ++i) f0.push_back(jittered(onset));
    f0.insert(f0.end(), contour.f0.begin(), contour.f0.end());
    const double final_target = spk.params.base_f0 + (tune.boundary_tone_high() ? spk.params.range : 0.0);
    for (int i = 0; i < opts.tail_frames; ++i) f0.push_back(jittered(final_target));
    for (double& v : f0) v = (v - spk.params.base_f0) / spk.params.range - 0.5;

    GeneratedUtterance& u = out[index];
    u.latents = embed_latents(f0, embedding, spk.offset, rng);
    UtteranceRecord& r = u.record;
    r.id = utterance_id(s, tune, rep);
    r.tune = tune;
    char spk_name[16];
    std::snprintf(spk_name, sizeof spk_name, "spk%02d", s);
    r.speaker = spk_name;
    r.sentence = "synthetic-sentence-" + std::to_string(rep % 3);
    r.origin = Origin::kSynthetic;
    r.tmin = opts.lead_frames / static_cast<double>(kDefaultFrameRate);
    r.tmax = (opts.lead_frames + n) / static_cast<double>(kDefaultFrameRate);
  });
  return out;
}

CorpusManifest generate_corpus(const CorpusOptions& opts, const std::filesystem::path& out_dir,
                               int jobs) {
  std::vector<GeneratedUtterance> utts = generate_utterances(opts, jobs);
  std::filesystem::create_directories(out_dir / "latents");
  parallel_for(utts.size(), jobs, [&](std::size_t i) {
    GeneratedUtterance& u = utts[i];
    const std::string rel = "latents/" + u.record.id + ".ltnt";
    write_latents(u.latents, out_dir / rel);
    u.record.streams[std::string(kUnquantizedStream)] = rel;
  });

  CorpusManifest m;
  m.base_dir = out_dir;
  m.metadata["unquantized_dim"] = std::to_string(opts.embedding.dim);
  m.metadata["origin"] = "synthetic";
  m.metadata["seed"] = std::to_string(opts.seed);
  m.metadata["speakers"] = std::to_string(opts.speakers);
  m.metadata["per_tune"] = std::to_string(opts.per_tune);
  m.records.reserve(utts.size());
  for (auto& u : utts) m.records.push_back(std::move(u.record));
  write_manifest(m, out_dir / "manifest.jsonl");
  return m;
}

}  // namespace tuneprobe
