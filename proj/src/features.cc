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

#include "tuneprobe/features.h"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

namespace tuneprobe {

void DecayConfig::validate() const {
  if (!std::isfinite(delta_f) || !std::isfinite(delta_b) || delta_f < 0.0 ||
      delta_b < 0.0) {
    throw Error("decay rates must be finite and non-negative (delta_f=" +
                std::to_string(delta_f) + ", delta_b=" + std::to_string(delta_b) +
                ")");
  }
}

FrameRange frames_for_interval(int n_frames, double frame_rate, double tmin,
                               double tmax) {
  if (n_frames < 1 || !(frame_rate > 0.0)) {
    throw Error("frames_for_interval: empty sequence or bad frame rate");
  }
  const double duration = n_frames / frame_rate;
  if (!(tmin < tmax) || tmax <= 0.0 || tmin >= duration) {
    throw Error("interval [" + std::to_string(tmin) + ", " +
                std::to_string(tmax) + ") does not overlap the sequence [0, " +
                std::to_string(duration) + "]");
  }
  FrameRange range{n_frames, n_frames};
  for (int i = 0; i < n_frames; ++i) {
    double center = (i + 0.5) / frame_rate;
    if (center >= tmin && center < tmax) {
      if (range.begin == n_frames) range.begin = i;
      range.end = i + 1;
    }
  }
  if (range.begin < range.end) return range;

  const double mid = 0.5 * (tmin + tmax);
  int best = 0;
  double best_gap = std::abs(0.5 / frame_rate - mid);
  for (int i = 1; i < n_frames; ++i) {
    double gap = std::abs((i + 0.5) / frame_rate - mid);
    if (gap < best_gap) {
      best_gap = gap;
      best = i;
    }
  }
  return FrameRange{best, best + 1};
}

FrameRange frames_for_interval(const LatentSequence& seq, double tmin,
                               double tmax) {
  return frames_for_interval(seq.n_frames(), seq.frame_rate, tmin, tmax);
}

Eigen::VectorXd decay_weights(int n_last, const DecayConfig& cfg) {
  cfg.validate();
  if (n_last < 0) throw Error("decay_weights: negative frame index");
  Eigen::VectorXd w(n_last + 1);
  for (int i = 0; i <= n_last; ++i) {
    w[i] = -cfg.delta_f * i - cfg.delta_b * (n_last - i);
  }
  // Shift by the largest exponent so the biggest weight is exp(0).
  w.array() = (w.array() - w.maxCoeff()).exp();
  return w / w.sum();
}

Eigen::VectorXd aggregate(const MatrixXfR& frames, FrameRange range,
                          const DecayConfig& cfg) {
  if (range.size() < 1 || range.begin < 0 || range.end > frames.rows()) {
    throw Error("aggregate: empty or out-of-bounds frame range");
  }
  Eigen::VectorXd w = decay_weights(range.size() - 1, cfg);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(frames.cols());
  for (int i = 0; i < range.size(); ++i) {
    y += w[i] * frames.row(range.begin + i).transpose().cast<double>();
  }
  return y;
}

Eigen::VectorXd aggregate(const LatentSequence& seq, FrameRange range,
                          const DecayConfig& cfg) {
  return aggregate(seq.frames, range, cfg);
}

PcaModel fit_pca(const Eigen::MatrixXd& samples, const PcaOptions& options) {
  if (samples.rows() < 2) throw Error("fit_pca needs at least 2 samples");
  if (samples.cols() < 1) throw Error("fit_pca needs dimension >= 1");
  const Eigen::Index d = samples.cols();

  PcaModel model;
  model.mean = options.center ? Eigen::VectorXd(samples.colwise().mean().transpose())
                              : Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd centered = samples.rowwise() - model.mean.transpose();
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(d, d);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose());
  gram = gram.selfadjointView<Eigen::Lower>();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
  if (solver.info() != Eigen::Success) {
    throw Error("fit_pca: eigen-decomposition did not converge");
  }
  // Solver order is ascending; flip to descending.
  model.eigenvalues = solver.eigenvalues().reverse();
  model.basis = solver.eigenvectors().rowwise().reverse();
  const double scale = std::max(1.0, model.eigenvalues.cwiseAbs().maxCoeff());
  for (Eigen::Index k = 0; k < d; ++k) {
    // Round-off can leave tiny negatives on a PSD matrix.
    if (model.eigenvalues[k] < 0.0 && model.eigenvalues[k] > -1e-12 * scale) {
      model.eigenvalues[k] = 0.0;
    }
    auto col = model.basis.col(k);
    for (Eigen::Index i = 0; i < d; ++i) {
      if (std::abs(col[i]) > 1e-12) {
        if (col[i] < 0.0) col = -col;
        break;
      }
    }
  }
  return model;
}

Eigen::VectorXd project(const PcaModel& model, const Eigen::VectorXd& y,
                        int d_pca) {
  if (d_pca < 1 || d_pca > model.dim()) {
    throw Error("PCA dimension " + std::to_string(d_pca) + " outside [1, " +
                std::to_string(model.dim()) + "]");
  }
  if (y.size() != model.dim()) {
    throw Error("project: vector has dim " + std::to_string(y.size()) +
                ", model has " + std::to_string(model.dim()));
  }
  return model.basis.leftCols(d_pca).transpose() * (y - model.mean);
}

Eigen::MatrixXd project_rows(const PcaModel& model, const Eigen::MatrixXd& samples,
                             int d_pca) {
  if (d_pca < 1 || d_pca > model.dim()) {
    throw Error("PCA dimension " + std::to_string(d_pca) + " outside [1, " +
                std::to_string(model.dim()) + "]");
  }
  if (samples.cols() != model.dim()) {
    throw Error("project_rows: samples have dim " + std::to_string(samples.cols()) +
                ", model has " + std::to_string(model.dim()));
  }
  return (samples.rowwise() - model.mean.transpose()) * model.basis.leftCols(d_pca);
}

Eigen::VectorXd reconstruct(const PcaModel& model, const Eigen::VectorXd& coords) {
  if (coords.size() < 1 || coords.size() > model.dim()) {
    throw Error("reconstruct: coordinate count outside the basis size");
  }
  return model.mean + model.basis.leftCols(coords.size()) * coords;
}

void save_pca(const PcaModel& model, const std::filesystem::path& path) {
  write_matrix_bundle(path, {Eigen::MatrixXd(model.mean.transpose()), model.basis,
                             Eigen::MatrixXd(model.eigenvalues.transpose())});
}

PcaModel load_pca(const std::filesystem::path& path) {
  auto m = read_matrix_bundle(path);
  if (m.size() != 3 || m[0].rows() != 1 || m[1].rows() != m[0].cols() ||
      m[1].cols() != m[0].cols() || m[2].cols() != m[0].cols()) {
    throw Error(path.string() + ": not a PCA model bundle");
  }
  PcaModel model;
  model.mean = m[0].row(0).transpose();
  model.basis = m[1];
  model.eigenvalues = m[2].row(0).transpose();
  return model;
}

}  // namespace tuneprobe
