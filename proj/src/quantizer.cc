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

#include "tuneprobe/quantizer.h"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "tuneprobe/latent_store.h"

namespace tuneprobe {
namespace {

constexpr Eigen::Index kEncodeChunk = 2048;

double exact_sq_distance(const double* a, const double* b, Eigen::Index d) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    double diff = a[i] - b[i];
    s += diff * diff;
  }
  return s;
}

std::size_t count_distinct_rows(const MatrixXdR& x, std::size_t stop_at) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(x.rows()));
  std::iota(order.begin(), order.end(), 0);
  const Eigen::Index d = x.cols();
  auto less = [&](Eigen::Index a, Eigen::Index b) {
    const double* pa = x.row(a).data();
    const double* pb = x.row(b).data();
    return std::lexicographical_compare(pa, pa + d, pb, pb + d);
  };
  std::sort(order.begin(), order.end(), less);
  std::size_t distinct = order.empty() ? 0 : 1;
  for (std::size_t i = 1; i < order.size() && distinct < stop_at; ++i) {
    if (less(order[i - 1], order[i])) ++distinct;
  }
  return distinct;
}

// Nearest codeword of every row. Float matrix-product distances select
// candidates within a bound that covers their rounding error; candidates
// are then re-scored exactly in double precision.
void nearest_rows(const MatrixXdR& codewords, const MatrixXdR& rows,
                  std::vector<int>* index, std::vector<double>* distance) {
  const Eigen::Index n = rows.rows();
  const Eigen::Index k = codewords.rows();
  const Eigen::Index d = codewords.cols();
  index->assign(static_cast<std::size_t>(n), 0);
  if (distance != nullptr) distance->assign(static_cast<std::size_t>(n), 0.0);

  MatrixXfR cf = codewords.cast<float>();
  Eigen::VectorXd cnorm = codewords.rowwise().squaredNorm();
  const double cmax = k > 0 ? cnorm.maxCoeff() : 0.0;
  Eigen::MatrixXf gram;
  std::vector<Eigen::Index> candidates;

  for (Eigen::Index start = 0; start < n; start += kEncodeChunk) {
    const Eigen::Index m = std::min(kEncodeChunk, n - start);
    MatrixXfR xf = rows.middleRows(start, m).cast<float>();
    gram.noalias() = xf * cf.transpose();
    for (Eigen::Index r = 0; r < m; ++r) {
      const double* x = rows.row(start + r).data();
      const double xnorm = rows.row(start + r).squaredNorm();
      double best_approx = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < k; ++j) {
        double approx = xnorm - 2.0 * gram(r, j) + cnorm[j];
        best_approx = std::min(best_approx, approx);
      }
      const double tol = 1e-4 * (xnorm + cmax) + 1e-300;
      candidates.clear();
      for (Eigen::Index j = 0; j < k; ++j) {
        if (xnorm - 2.0 * gram(r, j) + cnorm[j] <= best_approx + tol) {
          candidates.push_back(j);
        }
      }
      int best = -1;
      double best_dist = std::numeric_limits<double>::infinity();
      for (Eigen::Index j : candidates) {
        double dist = exact_sq_distance(x, codewords.row(j).data(), d);
        if (dist < best_dist) {
          best_dist = dist;
          best = static_cast<int>(j);
        }
      }
      (*index)[static_cast<std::size_t>(start + r)] = best;
      if (distance != nullptr) {
        (*distance)[static_cast<std::size_t>(start + r)] = best_dist;
      }
    }
  }
}

// k-means++ seeding. With the guard, row 0 is the pre-placed zero codeword.
MatrixXdR seed_centroids(const MatrixXdR& x, int k, bool guard,
                         std::mt19937_64& rng) {
  const Eigen::Index n = x.rows();
  MatrixXdR c = MatrixXdR::Zero(k, x.cols());
  Eigen::VectorXd xnorm = x.rowwise().squaredNorm();
  Eigen::VectorXd d2(n);
  std::uniform_int_distribution<Eigen::Index> pick_any(0, n - 1);

  int chosen = 0;
  if (guard) {
    d2 = xnorm;
    chosen = 1;
  } else {
    Eigen::Index first = pick_any(rng);
    c.row(0) = x.row(first);
    d2 = (xnorm.array() - 2.0 * (x * c.row(0).transpose()).array() +
          c.row(0).squaredNorm())
             .max(0.0);
    d2[first] = 0.0;
    chosen = 1;
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (; chosen < k; ++chosen) {
    const double total = d2.sum();
    Eigen::Index pick = 0;
    if (!(total > 0.0)) {
      pick = pick_any(rng);
    } else {
      double target = unit(rng) * total;
      double acc = 0.0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > target && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
      while (d2[pick] <= 0.0 && pick > 0) --pick;
    }
    c.row(chosen) = x.row(pick);
    Eigen::VectorXd fresh =
        (xnorm.array() - 2.0 * (x * c.row(chosen).transpose()).array() +
         c.row(chosen).squaredNorm())
            .max(0.0);
    d2 = d2.cwiseMin(fresh);
    d2[pick] = 0.0;
  }
  return c;
}

void check_codebook(const Codebook& cb) {
  if (!cb.trained || cb.size() < 1) throw Error("codebook is not trained");
}

}  // namespace

Codebook kmeans_fit(const MatrixXdR& vectors, const KMeansOptions& options) {
  const int k = options.k;
  if (k < 1) throw Error("kmeans_fit: K must be >= 1");
  if (options.zero_codeword_guard && k < 2) {
    throw Error("kmeans_fit: the zero-codeword guard needs K >= 2");
  }
  if (options.iters < 0) throw Error("kmeans_fit: negative iteration count");
  if (vectors.rows() < 1 || vectors.cols() < 1) {
    throw Error("kmeans_fit: no input vectors");
  }
  if (!vectors.allFinite()) throw Error("kmeans_fit: non-finite input");
  const std::size_t trainable = static_cast<std::size_t>(
      options.zero_codeword_guard ? k - 1 : k);
  if (!options.allow_degenerate) {
    std::size_t distinct = count_distinct_rows(vectors, trainable);
    if (distinct < trainable) {
      throw Error("kmeans_fit: " + std::to_string(distinct) +
                  " distinct vectors for " + std::to_string(trainable) +
                  " trainable centroids");
    }
  }

  std::mt19937_64 rng(options.seed);
  Codebook cb;
  cb.zero_codeword_guard = options.zero_codeword_guard;
  cb.codewords = seed_centroids(vectors, k, options.zero_codeword_guard, rng);
  const int first_free = options.zero_codeword_guard ? 1 : 0;

  std::vector<int> assign, previous;
  std::vector<double> dist;
  Eigen::MatrixXd sums(k, vectors.cols());
  std::vector<long> counts(static_cast<std::size_t>(k));
  bool reseeded = false;
  for (int it = 0; it < options.iters; ++it) {
    nearest_rows(cb.codewords, vectors, &assign, &dist);
    if (it > 0 && !reseeded && assign == previous) break;
    sums.setZero();
    std::fill(counts.begin(), counts.end(), 0);
    for (Eigen::Index i = 0; i < vectors.rows(); ++i) {
      int a = assign[static_cast<std::size_t>(i)];
      sums.row(a) += vectors.row(i);
      ++counts[static_cast<std::size_t>(a)];
    }
    reseeded = false;
    for (int c = first_free; c < k; ++c) {
      long count = counts[static_cast<std::size_t>(c)];
      if (count > 0) {
        cb.codewords.row(c) = sums.row(c) / static_cast<double>(count);
        continue;
      }
      auto far = std::max_element(dist.begin(), dist.end());
      Eigen::Index p = std::distance(dist.begin(), far);
      cb.codewords.row(c) = vectors.row(p);
      dist[static_cast<std::size_t>(p)] = 0.0;
      reseeded = true;
    }
    previous.swap(assign);
  }
  cb.trained = true;
  return cb;
}

Nearest vq_encode(const Codebook& cb, const Eigen::Ref<const Eigen::VectorXd>& x) {
  check_codebook(cb);
  if (x.size() != cb.dim()) {
    throw Error("vq_encode: vector dim " + std::to_string(x.size()) +
                ", codebook dim " + std::to_string(cb.dim()));
  }
  Eigen::VectorXd xc = x;
  Nearest best{0, std::numeric_limits<double>::infinity()};
  for (int j = 0; j < cb.size(); ++j) {
    double dist = exact_sq_distance(xc.data(), cb.codewords.row(j).data(), cb.dim());
    if (dist < best.distance) best = {j, dist};
  }
  return best;
}

std::vector<int> vq_encode_batch(const Codebook& cb, const MatrixXdR& rows) {
  check_codebook(cb);
  if (rows.cols() != cb.dim()) throw Error("vq_encode_batch: dim mismatch");
  std::vector<int> index;
  nearest_rows(cb.codewords, rows, &index, nullptr);
  return index;
}

RvqCodec rvq_fit(const MatrixXdR& vectors, const RvqOptions& options) {
  if (options.levels < 1) throw Error("rvq_fit: need at least one RVQ level");
  RvqCodec codec;
  codec.zero_codeword_guard = options.zero_codeword_guard;
  KMeansOptions vq_opts;
  vq_opts.k = options.codebook_size;
  vq_opts.iters = options.iters;
  vq_opts.seed = mix_seed(options.seed, 0);
  codec.vq = kmeans_fit(vectors, vq_opts);

  MatrixXdR residual = vectors;
  for (int level = 1; level <= options.levels; ++level) {
    KMeansOptions opts;
    opts.k = options.codebook_size;
    opts.iters = options.iters;
    opts.seed = mix_seed(options.seed, static_cast<uint64_t>(level));
    opts.zero_codeword_guard = options.zero_codeword_guard;
    opts.allow_degenerate = level > 1;
    Codebook cb = kmeans_fit(residual, opts);
    std::vector<int> idx = vq_encode_batch(cb, residual);
    for (Eigen::Index i = 0; i < residual.rows(); ++i) {
      residual.row(i) -= cb.codewords.row(idx[static_cast<std::size_t>(i)]);
    }
    codec.levels.push_back(std::move(cb));
  }
  return codec;
}

QuantizedFrame rvq_encode(const RvqCodec& codec,
                          const Eigen::Ref<const Eigen::VectorXd>& x) {
  QuantizedFrame frame;
  Nearest vq = vq_encode(codec.vq, x);
  frame.indices.push_back(vq.index);
  frame.codeword_vectors.push_back(codec.vq.codewords.row(vq.index).transpose());
  Eigen::VectorXd residual = x;
  for (const Codebook& cb : codec.levels) {
    Nearest hit = vq_encode(cb, residual);
    Eigen::VectorXd cw = cb.codewords.row(hit.index).transpose();
    residual -= cw;
    frame.indices.push_back(hit.index);
    frame.codeword_vectors.push_back(std::move(cw));
  }
  return frame;
}

Eigen::Matrix<int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
rvq_encode_batch(const RvqCodec& codec, const MatrixXdR& rows) {
  Eigen::Matrix<int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> out(
      rows.rows(), codec.num_levels() + 1);
  std::vector<int> idx = vq_encode_batch(codec.vq, rows);
  for (Eigen::Index i = 0; i < rows.rows(); ++i) out(i, 0) = idx[static_cast<std::size_t>(i)];
  MatrixXdR residual = rows;
  for (int level = 1; level <= codec.num_levels(); ++level) {
    const Codebook& cb = codec.levels[static_cast<std::size_t>(level - 1)];
    idx = vq_encode_batch(cb, residual);
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      int j = idx[static_cast<std::size_t>(i)];
      out(i, level) = j;
      residual.row(i) -= cb.codewords.row(j);
    }
  }
  return out;
}

Eigen::VectorXd reconstruct(const RvqCodec& codec, const QuantizedFrame& frame,
                            int up_to_level) {
  if (up_to_level < 1 || up_to_level > codec.num_levels() ||
      static_cast<int>(frame.codeword_vectors.size()) <= up_to_level) {
    throw Error("reconstruct: level " + std::to_string(up_to_level) +
                " outside [1, " + std::to_string(codec.num_levels()) + "]");
  }
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(codec.dim());
  for (int level = 1; level <= up_to_level; ++level) {
    sum += frame.codeword_vectors[static_cast<std::size_t>(level)];
  }
  return sum;
}

void save_codec(const RvqCodec& codec, const std::filesystem::path& path) {
  std::vector<Eigen::MatrixXd> m;
  Eigen::MatrixXd header(1, 2);
  header << codec.num_levels(), codec.zero_codeword_guard ? 1.0 : 0.0;
  m.push_back(header);
  m.push_back(codec.vq.codewords);
  for (const auto& cb : codec.levels) m.push_back(cb.codewords);
  write_matrix_bundle(path, m);
}

RvqCodec load_codec(const std::filesystem::path& path) {
  auto m = read_matrix_bundle(path);
  if (m.size() < 3 || m[0].rows() != 1 || m[0].cols() != 2) {
    throw Error(path.string() + ": not a codec bundle");
  }
  const int levels = static_cast<int>(m[0](0, 0));
  if (levels < 1 || static_cast<int>(m.size()) != levels + 2) {
    throw Error(path.string() + ": codec level count does not match contents");
  }
  RvqCodec codec;
  codec.zero_codeword_guard = m[0](0, 1) != 0.0;
  codec.vq.codewords = m[1];
  codec.vq.trained = true;
  for (int level = 0; level < levels; ++level) {
    Codebook cb;
    cb.codewords = m[static_cast<std::size_t>(level + 2)];
    cb.trained = true;
    cb.zero_codeword_guard = codec.zero_codeword_guard;
    if (cb.dim() != codec.vq.dim() || cb.size() != codec.vq.size()) {
      throw Error(path.string() + ": codebooks disagree on K or d");
    }
    codec.levels.push_back(std::move(cb));
  }
  return codec;
}

}  // namespace tuneprobe
