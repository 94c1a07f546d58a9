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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "unitforge/error.hpp"

namespace unitforge::embed {

// Thrown when a similarity involves a zero vector.
class UndefinedSimilarity : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Dense row-major float32 matrix with optional row ids. Immutable once
// constructed; the constructor validates every invariant.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  // Throws ValidationError if data.size() != rows*dim, dim == 0, an entry is
  // non-finite, or ids are given with the wrong count or duplicates.
  EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<float> data,
                  std::optional<std::vector<std::string>> ids = std::nullopt);

  std::size_t rows() const { return rows_; }
  std::size_t dim() const { return dim_; }
  std::span<const float> row(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }
  const std::vector<float>& data() const { return data_; }
  const std::optional<std::vector<std::string>>& ids() const { return ids_; }

  // Row id, or the decimal row index when the matrix has no ids.
  std::string id_at(std::size_t i) const;

  bool operator==(const EmbeddingMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<float> data_;
  std::optional<std::vector<std::string>> ids_;
};

// EMB1 wire format: "EMB1", u32 rows, u32 dim (little-endian), then
// rows*dim little-endian binary32 values, row-major.
std::string serialize_emb1(const EmbeddingMatrix& m);
EmbeddingMatrix parse_emb1(std::string_view bytes, const std::string& source_name = {});

// Reads `path` and, if present, the sidecar `<path>.ids` (one id per line).
EmbeddingMatrix read_emb1(const std::filesystem::path& path);
// Writes `path`, plus `<path>.ids` when the matrix carries ids.
void write_emb1(const EmbeddingMatrix& m, const std::filesystem::path& path);
std::filesystem::path ids_sidecar(const std::filesystem::path& path);

// Elementwise maximum over the rows of a t x dim frame matrix.
// Throws ValidationError when t == 0.
std::vector<float> max_pool(const EmbeddingMatrix& frames);

struct NormalizeResult {
  EmbeddingMatrix matrix;
  std::size_t zero_rows = 0;  // left as zero and counted here
};

// Scales every nonzero row to unit L2 norm (norm accumulated in double).
NormalizeResult l2_normalize(const EmbeddingMatrix& m);

double dot(std::span<const float> a, std::span<const float> b);
double l2_norm(std::span<const float> a);

// dot(a,b) / (|a| |b|), clamped to [-1, 1]. Throws ValidationError on a
// dimension mismatch and UndefinedSimilarity on a zero vector.
double cosine(std::span<const float> a, std::span<const float> b);

}  // namespace unitforge::embed
