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

#ifndef TUNEPROBE_QUANTIZER_H_
#define TUNEPROBE_QUANTIZER_H_

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "tuneprobe/common.h"

namespace tuneprobe {

struct Codebook {
  MatrixXdR codewords;  // K x d
  bool trained = false;
  // Row 0 is the zero vector and is never moved by training.
  bool zero_codeword_guard = false;

  int size() const { return static_cast<int>(codewords.rows()); }
  int dim() const { return static_cast<int>(codewords.cols()); }
};

struct KMeansOptions {
  int k = 512;
  int iters = 25;
  uint64_t seed = 0;
  bool zero_codeword_guard = false;
  // Allow fewer distinct inputs than trainable centroids. Surplus centroids
  // end up duplicating inputs. Used for deep residual levels, where the
  // residuals can collapse.
  bool allow_degenerate = false;
};

// k-means++ seeding followed by Lloyd iterations, stopping early at an
// assignment fixpoint. Empty clusters are moved to the point farthest from
// its centroid. Throws Error when the inputs hold fewer distinct vectors
// than trainable centroids (k, or k - 1 with the guard), unless
// allow_degenerate is set.
Codebook kmeans_fit(const MatrixXdR& vectors, const KMeansOptions& options);

struct Nearest {
  int index = 0;
  double distance = 0.0;  // squared Euclidean
};

// Exhaustive nearest codeword by squared Euclidean distance; ties go to
// the lower index.
Nearest vq_encode(const Codebook& cb, const Eigen::Ref<const Eigen::VectorXd>& x);

// vq_encode for every row. Distances are screened with a matrix product and
// the near-minimal candidates are re-scored exactly, so the result equals
// the row-by-row scan.
std::vector<int> vq_encode_batch(const Codebook& cb, const MatrixXdR& rows);

struct RvqCodec {
  Codebook vq;                  // level 0, fit on the raw vectors
  std::vector<Codebook> levels; // levels 1..L, level j fit on residuals
  bool zero_codeword_guard = true;

  int num_levels() const { return static_cast<int>(levels.size()); }
  int dim() const { return vq.dim(); }
  int codebook_size() const { return vq.size(); }
};

struct RvqOptions {
  int levels = 7;
  int codebook_size = 512;
  int iters = 25;
  uint64_t seed = 0;
  // Reserve codeword 0 = zero vector on every residual level 1..L.
  bool zero_codeword_guard = true;
};

RvqCodec rvq_fit(const MatrixXdR& vectors, const RvqOptions& options);

struct QuantizedFrame {
  std::vector<int> indices;                       // [0] is the VQ branch
  std::vector<Eigen::VectorXd> codeword_vectors;  // per level, same indexing
};

// Greedy per-level encoding with residual subtraction, plus the parallel
// level-0 VQ index.
QuantizedFrame rvq_encode(const RvqCodec& codec,
                          const Eigen::Ref<const Eigen::VectorXd>& x);

// Row-wise rvq_encode; returns an n x (L + 1) index matrix.
Eigen::Matrix<int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
rvq_encode_batch(const RvqCodec& codec, const MatrixXdR& rows);

// Sum of the codeword vectors of residual levels 1..up_to_level.
Eigen::VectorXd reconstruct(const RvqCodec& codec, const QuantizedFrame& frame,
                            int up_to_level);

void save_codec(const RvqCodec& codec, const std::filesystem::path& path);
RvqCodec load_codec(const std::filesystem::path& path);

}  // namespace tuneprobe

#endif  // TUNEPROBE_QUANTIZER_H_
