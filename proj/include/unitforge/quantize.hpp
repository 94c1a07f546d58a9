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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "unitforge/embed.hpp"
#include "unitforge/error.hpp"
#include "unitforge/parallel.hpp"

namespace unitforge::quantize {

class InsufficientData : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Discrete unit ids under a vocabulary of `vocab_size` symbols.
struct UnitSequence {
  std::size_t vocab_size = 0;
  std::vector<std::int32_t> units;

  bool operator==(const UnitSequence&) const = default;
};

// Throws ValidationError unless vocab_size > 0 and every unit is in range.
UnitSequence make_unit_sequence(std::size_t vocab_size, std::vector<std::int32_t> units);

struct KMeansOptions {
  std::size_t k = 2500;
  std::uint64_t seed = 0;
  int max_iters = 100;
  // Stop once no centroid moves farther than this (L2).
  double tol = 1e-6;
};

struct Codebook {
  embed::EmbeddingMatrix centroids;  // k x dim
  std::uint64_t seed = 0;
  int iters_run = 0;
  double final_inertia = 0;
  // Inertia after every assignment pass, including the final one.
  std::vector<double> inertia_history;

  std::size_t k() const { return centroids.rows(); }
  std::size_t dim() const { return centroids.dim(); }
};

// k-means++ seeding followed by Lloyd iterations.
//
// Centroids are kept in float32 (the on-disk precision) and all distances and
// sums are accumulated in double. An empty cluster is reseeded to the point
// farthest from its assigned centroid. Results depend only on the inputs and
// options, never on ctx.threads.
//
// Throws InsufficientData when rows < k, ValidationError on bad options.
Codebook kmeans_fit(const embed::EmbeddingMatrix& features, const KMeansOptions& options,
                    const ExecContext& ctx = {});

// Nearest centroid per row by squared Euclidean distance; ties go to the
// lowest centroid index.
UnitSequence assign_units(const Codebook& codebook, const embed::EmbeddingMatrix& features,
                          const ExecContext& ctx = {});
std::int32_t nearest_centroid(const embed::EmbeddingMatrix& centroids,
                              std::span<const float> x, double* best_dist = nullptr);

// Keeps the first element of every maximal run of equal units.
UnitSequence dedup_units(const UnitSequence& s);
UnitSequence remove_blanks(const UnitSequence& s, std::int32_t blank);
// Greedy CTC path collapse: merge repeats, then drop blanks.
UnitSequence ctc_collapse(const UnitSequence& frame_labels, std::int32_t blank);

// Codebook file: EMB1 centroids at `path` and a one-line JSON sidecar at
// `<path>.meta.jsonl` with k, dim, seed, iters_run, final_inertia.
void write_codebook(const Codebook& cb, const std::filesystem::path& path);
Codebook read_codebook(const std::filesystem::path& path);
std::filesystem::path codebook_meta_path(const std::filesystem::path& path);

}  // namespace unitforge::quantize
