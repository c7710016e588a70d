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

#ifndef TUNEPROBE_LATENT_STORE_H_
#define TUNEPROBE_LATENT_STORE_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "tuneprobe/common.h"
#include "tuneprobe/tune.h"

namespace tuneprobe {

// LTNT binary layout, little-endian:
//   bytes 0-3    magic "LTNT"
//   bytes 4-7    format version (u32)
//   bytes 8-11   frame rate in Hz (f32)
//   bytes 12-15  dim (u32)
//   bytes 16-19  n_frames (u32)
//   then n_frames * dim f32 values, row-major (frame by frame).
inline constexpr char kLatentMagic[4] = {'L', 'T', 'N', 'T'};
inline constexpr uint32_t kLatentFormatVersion = 1;
inline constexpr std::size_t kLatentHeaderBytes = 20;
inline constexpr float kDefaultFrameRate = 12.5f;

inline constexpr int kUnquantizedDim = 512;
inline constexpr int kCodewordDim = 256;

struct LatentSequence {
  float frame_rate = kDefaultFrameRate;
  MatrixXfR frames;  // n_frames x dim

  int n_frames() const { return static_cast<int>(frames.rows()); }
  int dim() const { return static_cast<int>(frames.cols()); }
  double duration() const { return n_frames() / static_cast<double>(frame_rate); }
};

struct LatentHeader {
  uint32_t version = 0;
  float frame_rate = 0.0f;
  uint32_t dim = 0;
  uint32_t n_frames = 0;
};

// Serialized bytes of one LTNT record. Throws Error if the sequence is
// empty or holds non-finite values.
std::string encode_latents(const LatentSequence& seq);
// Decodes the record starting at bytes[0]; `consumed` receives its size.
LatentSequence decode_latents(std::string_view bytes, std::string_view source,
                              std::size_t* consumed = nullptr);

void write_latents(const LatentSequence& seq, const std::filesystem::path& path);
LatentSequence read_latents(const std::filesystem::path& path);
LatentHeader read_latent_header(const std::filesystem::path& path);

// Model checkpoints: consecutive LTNT records with frame rate 0, one per
// matrix. Values round to f32 on write.
void write_matrix_bundle(const std::filesystem::path& path,
                         const std::vector<Eigen::MatrixXd>& matrices);
std::vector<Eigen::MatrixXd> read_matrix_bundle(const std::filesystem::path& path);

enum class Origin { kResynthesized, kImitated, kSynthetic };

std::string_view origin_name(Origin origin);

inline constexpr std::string_view kUnquantizedStream = "unquantized";
std::string codebook_stream_name(int level);
// True for "codebook<k>"; stores k in `level` when non-null.
bool is_codebook_stream(std::string_view name, int* level = nullptr);

struct UtteranceRecord {
  std::string id;
  Tune tune;
  std::string speaker;
  std::string sentence;
  Origin origin = Origin::kSynthetic;
  double tmin = 0.0;  // nuclear word interval, seconds
  double tmax = 0.0;
  // stream name -> file path, relative paths resolve against the manifest
  std::map<std::string, std::string> streams;
};

// Line-delimited manifest. Each line is a JSON object with the record
// fields; an optional line {"metadata": {...}} carries corpus-level
// key/values such as "unquantized_dim" and "codeword_dim".
struct CorpusManifest {
  std::vector<UtteranceRecord> records;
  std::map<std::string, std::string> metadata;
  std::filesystem::path base_dir;

  std::filesystem::path stream_path(const UtteranceRecord& record,
                                    std::string_view stream) const;
  // Expected frame dim of a stream from metadata, falling back to 512 for
  // the unquantized stream and 256 for codebook streams.
  int expected_dim(std::string_view stream) const;
  const UtteranceRecord* find(std::string_view id) const;
};

struct CorpusValidation {
  CorpusManifest manifest;
  std::vector<std::string> problems;  // sorted, each names its record id

  bool ok() const { return problems.empty(); }
};

// Parses the manifest and checks every record and stream file header.
// Problems are collected rather than thrown; only an unreadable manifest
// or malformed line throws.
CorpusValidation validate_corpus(const std::filesystem::path& manifest_path);

// validate_corpus, throwing Error on the first problem.
CorpusManifest load_corpus(const std::filesystem::path& manifest_path);

void write_manifest(const CorpusManifest& manifest,
                    const std::filesystem::path& path);

}  // namespace tuneprobe

#endif  // TUNEPROBE_LATENT_STORE_H_
