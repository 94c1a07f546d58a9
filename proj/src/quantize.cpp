// Copyright 2026 The Unitforge Authors
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

#include "unitforge/quantize.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>
#include <json.hpp>

#include "unitforge/io.hpp"
#include "unitforge/random.hpp"

namespace unitforge::quantize {

namespace {

constexpr std::size_t kRowChunk = 256;

double squared_distance(std::span<const float> a, std::span<const float> b) {
  double s = 0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = static_cast<double>(a[j]) - static_cast<double>(b[j]);
    s += d * d;
  }
  return s;
}

struct Assignment {
  std::vector<std::int32_t> labels;
  std::vector<double> dists;
  double inertia = 0;
};

Assignment assign_all(const embed::EmbeddingMatrix& centroids,
                      const embed::EmbeddingMatrix& features, const ExecContext& ctx) {
  const std::size_t n = features.rows();
  Assignment a;
  a.labels.resize(n);
  a.dists.resize(n);
  const std::size_t num_chunks = (n + kRowChunk - 1) / kRowChunk;
  std::vector<double> partial(num_chunks, 0.0);
  parallel_for_chunks(ctx, n, kRowChunk, [&](std::size_t begin, std::size_t end) {
    double sum = 0;
    for (std::size_t i = begin; i < end; ++i) {
      a.labels[i] = nearest_centroid(centroids, features.row(i), &a.dists[i]);
      sum += a.dists[i];
    }
    partial[begin / kRowChunk] = sum;
  });
  for (double p : partial) a.inertia += p;
  return a;
}

std::vector<float> kmeanspp_init(const embed::EmbeddingMatrix& x, std::size_t k, Rng& rng,
                                 const ExecContext& ctx) {
  const std::size_t n = x.rows();
  const std::size_t dim = x.dim();
  std::vector<float> centers;
  centers.reserve(k * dim);
  auto take = [&](std::size_t i) {
    auto row = x.row(i);
    centers.insert(centers.end(), row.begin(), row.end());
  };

  take(rng.uniform_index(n));
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  for (std::size_t c = 1; c < k; ++c) {
    const std::span<const float> last(centers.data() + (c - 1) * dim, dim);
    parallel_for_chunks(ctx, n, kRowChunk, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i)
        d2[i] = std::min(d2[i], squared_distance(x.row(i), last));
    });
    double total = 0;
    for (double v : d2) total += v;
    if (total <= 0) {
      // Every point coincides with a chosen center.
      take(rng.uniform_index(n));
      continue;
    }
    const double target = rng.uniform01() * total;
    double cum = 0;
    std::size_t pick = n;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (d2[i] <= 0) continue;
      last_positive = i;
      cum += d2[i];
      if (cum > target) {
        pick = i;
        break;
      }
    }
    take(pick == n ? last_positive : pick);
  }
  return centers;
}

}  // namespace

UnitSequence make_unit_sequence(std::size_t vocab_size, std::vector<std::int32_t> units) {
  if (vocab_size == 0) throw ValidationError("vocabulary size must be positive");
  for (auto u : units)
    if (u < 0 || static_cast<std::size_t>(u) >= vocab_size)
      throw ValidationError(fmt::format("unit {} outside vocabulary of size {}", u, vocab_size));
  return UnitSequence{vocab_size, std::move(units)};
}

std::int32_t nearest_centroid(const embed::EmbeddingMatrix& centroids,
                              std::span<const float> x, double* best_dist) {
  std::int32_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    const double d = squared_distance(x, centroids.row(c));
    if (d < best_d) {
      best_d = d;
      best = static_cast<std::int32_t>(c);
    }
  }
  if (best_dist) *best_dist = best_d;
  return best;
}

Codebook kmeans_fit(const embed::EmbeddingMatrix& features, const KMeansOptions& options,
                    const ExecContext& ctx) {
  const std::size_t n = features.rows();
  const std::size_t dim = features.dim();
  const std::size_t k = options.k;
  if (k == 0) throw ValidationError("k must be at least 1");
  if (options.max_iters < 1) throw ValidationError("max_iters must be at least 1");
  if (!(options.tol >= 0) || !std::isfinite(options.tol))
    throw ValidationError("tol must be finite and nonnegative");
  if (n < k)
    throw InsufficientData(fmt::format("k-means needs at least k={} rows, got {}", k, n));

  Rng rng(options.seed);
  std::vector<float> centers = kmeanspp_init(features, k, rng, ctx);

  Codebook cb;
  cb.seed = options.seed;
  std::vector<std::size_t> counts(k);
  std::vector<std::size_t> offsets(k + 1);
  std::vector<std::size_t> members(n);
  std::vector<double> movement(k);

  for (int iter = 0; iter < options.max_iters; ++iter) {
    const embed::EmbeddingMatrix current(k, dim, centers);
    Assignment a = assign_all(current, features, ctx);
    cb.inertia_history.push_back(a.inertia);

    // Bucket members per cluster in index order so every centroid sum runs
    // over a fixed sequence regardless of thread count.
    std::fill(counts.begin(), counts.end(), 0);
    for (auto l : a.labels) ++counts[l];
    offsets[0] = 0;
    for (std::size_t c = 0; c < k; ++c) offsets[c + 1] = offsets[c] + counts[c];
    {
      std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
      for (std::size_t i = 0; i < n; ++i) members[cursor[a.labels[i]]++] = i;
    }

    std::vector<float> next(centers.size());
    parallel_for_chunks(ctx, k, 16, [&](std::size_t begin, std::size_t end) {
      std::vector<double> sum(dim);
      for (std::size_t c = begin; c < end; ++c) {
        if (counts[c] == 0) continue;
        std::fill(sum.begin(), sum.end(), 0.0);
        for (std::size_t m = offsets[c]; m < offsets[c + 1]; ++m) {
          auto row = features.row(members[m]);
          for (std::size_t j = 0; j < dim; ++j) sum[j] += row[j];
        }
        const auto cnt = static_cast<double>(counts[c]);
        for (std::size_t j = 0; j < dim; ++j)
          next[c * dim + j] = static_cast<float>(sum[j] / cnt);
      }
    });

    // Empty clusters take the points farthest from their current centroid.
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      std::size_t far = 0;
      for (std::size_t i = 1; i < n; ++i)
        if (a.dists[i] > a.dists[far]) far = i;
      auto row = features.row(far);
      std::copy(row.begin(), row.end(), next.begin() + static_cast<std::ptrdiff_t>(c * dim));
      a.dists[far] = -1;
    }

    double max_move = 0;
    for (std::size_t c = 0; c < k; ++c) {
      const std::span<const float> before(centers.data() + c * dim, dim);
      const std::span<const float> after(next.data() + c * dim, dim);
      max_move = std::max(max_move, std::sqrt(squared_distance(before, after)));
    }
    centers = std::move(next);
    cb.iters_run = iter + 1;
    if (max_move < options.tol) break;
  }

  cb.centroids = embed::EmbeddingMatrix(k, dim, std::move(centers));
  const Assignment final_pass = assign_all(cb.centroids, features, ctx);
  cb.inertia_history.push_back(final_pass.inertia);
  cb.final_inertia = final_pass.inertia;
  return cb;
}

UnitSequence assign_units(const Codebook& codebook, const embed::EmbeddingMatrix& features,
                          const ExecContext& ctx) {
  if (features.rows() > 0 && features.dim() != codebook.dim())
    throw ValidationError(fmt::format("feature dimension {} does not match codebook dimension {}",
                                      features.dim(), codebook.dim()));
  UnitSequence out{codebook.k(), std::vector<std::int32_t>(features.rows())};
  parallel_for_chunks(ctx, features.rows(), kRowChunk, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i)
      out.units[i] = nearest_centroid(codebook.centroids, features.row(i));
  });
  return out;
}

UnitSequence dedup_units(const UnitSequence& s) {
  UnitSequence out{s.vocab_size, {}};
  for (std::size_t i = 0; i < s.units.size(); ++i)
    if (i == 0 || s.units[i] != s.units[i - 1]) out.units.push_back(s.units[i]);
  return out;
}

UnitSequence remove_blanks(const UnitSequence& s, std::int32_t blank) {
  UnitSequence out{s.vocab_size, {}};
  for (auto u : s.units)
    if (u != blank) out.units.push_back(u);
  return out;
}

UnitSequence ctc_collapse(const UnitSequence& frame_labels, std::int32_t blank) {
  if (blank < 0 || static_cast<std::size_t>(blank) >= frame_labels.vocab_size)
    throw ValidationError(fmt::format("blank {} outside vocabulary of size {}", blank,
                                      frame_labels.vocab_size));
  return remove_blanks(dedup_units(frame_labels), blank);
}

std::filesystem::path codebook_meta_path(const std::filesystem::path& path) {
  auto p = path;
  p += ".meta.jsonl";
  return p;
}

void write_codebook(const Codebook& cb, const std::filesystem::path& path) {
  embed::write_emb1(cb.centroids, path);
  nlohmann::ordered_json meta;
  meta["k"] = cb.k();
  meta["dim"] = cb.dim();
  meta["seed"] = cb.seed;
  meta["iters_run"] = cb.iters_run;
  meta["final_inertia"] = cb.final_inertia;
  io::write_file_atomic(codebook_meta_path(path), meta.dump() + "\n");
}

Codebook read_codebook(const std::filesystem::path& path) {
  Codebook cb;
  cb.centroids = embed::read_emb1(path);
  const auto meta_path = codebook_meta_path(path);
  if (!std::filesystem::exists(meta_path)) return cb;
  const auto lines = io::read_lines(meta_path);
  if (lines.empty()) return cb;
  try {
    const auto meta = nlohmann::json::parse(lines.front());
    if (meta.at("k").get<std::size_t>() != cb.k() || meta.at("dim").get<std::size_t>() != cb.dim())
      throw ValidationError(
          fmt::format("{}: k/dim disagree with the centroid matrix", meta_path.string()));
    cb.seed = meta.value("seed", std::uint64_t{0});
    cb.iters_run = meta.value("iters_run", 0);
    cb.final_inertia = meta.value("final_inertia", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(fmt::format("{}: {}", meta_path.string(), e.what()));
  }
  return cb;
}

}  // namespace unitforge::quantize
