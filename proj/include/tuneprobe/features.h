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

#ifndef TUNEPROBE_FEATURES_H_
#define TUNEPROBE_FEATURES_H_

#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "tuneprobe/common.h"
#include "tuneprobe/latent_store.h"

namespace tuneprobe {

// Forward (delta_f) and backward (delta_b) decay rates of the aggregation
// weights. Both zero gives the plain average.
struct DecayConfig {
  double delta_f = 0.0;
  double delta_b = 0.0;

  // Throws Error unless both rates are finite and non-negative.
  void validate() const;
};

// Half-open frame index range [begin, end).
struct FrameRange {
  int begin = 0;
  int end = 0;

  int size() const { return end - begin; }
  bool operator==(const FrameRange&) const = default;
};

// Frames whose centers (i + 0.5) / frame_rate fall in [tmin, tmax). When
// none do, the single frame whose center is nearest the interval midpoint
// (lower index on ties). Throws Error when the interval does not overlap
// [0, n_frames / frame_rate].
FrameRange frames_for_interval(int n_frames, double frame_rate, double tmin,
                               double tmax);
FrameRange frames_for_interval(const LatentSequence& seq, double tmin,
                               double tmax);

// Weights over indices 0..n_last:
//   w_i proportional to exp(-delta_f * i - delta_b * (n_last - i)).
Eigen::VectorXd decay_weights(int n_last, const DecayConfig& cfg);

// Decay-weighted average of frames [range.begin, range.end), computed in
// double precision. The weights are recomputed from this range's length.
Eigen::VectorXd aggregate(const MatrixXfR& frames, FrameRange range,
                          const DecayConfig& cfg);
Eigen::VectorXd aggregate(const LatentSequence& seq, FrameRange range,
                          const DecayConfig& cfg);

struct PcaOptions {
  // Subtract the training mean before the decomposition. When false the
  // decomposition is of the raw Gram matrix Y^T Y and the stored mean is 0.
  bool center = true;
};

struct PcaModel {
  Eigen::VectorXd mean;         // d
  Eigen::MatrixXd basis;        // d x d, column k is the k-th direction
  Eigen::VectorXd eigenvalues;  // d, non-increasing, of the (centered) Gram

  int dim() const { return static_cast<int>(mean.size()); }
};

// Eigen-decomposition of the Gram matrix of `samples` (one row per
// aggregated vector). Each basis column is sign-normalized so that its
// first non-negligible component is positive. Throws Error for fewer than
// two samples.
PcaModel fit_pca(const Eigen::MatrixXd& samples, const PcaOptions& options = {});

// Coordinates of (y - mean) on the first d_pca basis columns.
Eigen::VectorXd project(const PcaModel& model, const Eigen::VectorXd& y,
                        int d_pca);
// Row-wise project for a samples matrix.
Eigen::MatrixXd project_rows(const PcaModel& model, const Eigen::MatrixXd& samples,
                             int d_pca);
// mean + basis[:, :k] * coords, with k = coords.size().
Eigen::VectorXd reconstruct(const PcaModel& model, const Eigen::VectorXd& coords);

void save_pca(const PcaModel& model, const std::filesystem::path& path);
PcaModel load_pca(const std::filesystem::path& path);

}  // namespace tuneprobe

#endif  // TUNEPROBE_FEATURES_H_
