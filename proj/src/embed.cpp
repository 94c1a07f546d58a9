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

#include "unitforge/embed.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <unordered_set>

#include <fmt/format.h>

#include "unitforge/io.hpp"

namespace unitforge::embed {

namespace {

constexpr char kMagic[4] = {'E', 'M', 'B', '1'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

}  // namespace

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<float> data,
                                 std::optional<std::vector<std::string>> ids)
    : rows_(rows), dim_(dim), data_(std::move(data)), ids_(std::move(ids)) {
  if (dim_ == 0) throw ValidationError("embedding dimension must be positive");
  if (data_.size() != rows_ * dim_)
    throw ValidationError(fmt::format("embedding data has {} values, expected {}x{}",
                                      data_.size(), rows_, dim_));
  for (std::size_t i = 0; i < data_.size(); ++i)
    if (!std::isfinite(data_[i]))
      throw ValidationError(
          fmt::format("non-finite embedding value at row {}, column {}", i / dim_, i % dim_));
  if (ids_) {
    if (ids_->size() != rows_)
      throw ValidationError(
          fmt::format("embedding has {} ids for {} rows", ids_->size(), rows_));
    std::unordered_set<std::string_view> seen;
    for (const auto& id : *ids_)
      if (!seen.insert(id).second) throw ValidationError(fmt::format("duplicate row id '{}'", id));
  }
}

std::string EmbeddingMatrix::id_at(std::size_t i) const {
  return ids_ ? (*ids_)[i] : std::to_string(i);
}

std::string serialize_emb1(const EmbeddingMatrix& m) {
  if (m.rows() > UINT32_MAX || m.dim() > UINT32_MAX)
    throw ValidationError("matrix too large for EMB1");
  std::string out(kMagic, 4);
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.dim()));
  out.reserve(out.size() + m.data().size() * 4);
  for (float f : m.data()) put_u32(out, std::bit_cast<std::uint32_t>(f));
  return out;
}

EmbeddingMatrix parse_emb1(std::string_view bytes, const std::string& source_name) {
  const std::string name = source_name.empty() ? "<emb1>" : source_name;
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw ValidationError(fmt::format("{}: not an EMB1 file", name));
  const std::uint64_t rows = get_u32(bytes.data() + 4);
  const std::uint64_t dim = get_u32(bytes.data() + 8);
  if (bytes.size() != 12 + rows * dim * 4)
    throw ValidationError(fmt::format("{}: size {} does not match header {}x{}", name,
                                      bytes.size(), rows, dim));
  std::vector<float> data(rows * dim);
  const char* p = bytes.data() + 12;
  for (std::size_t i = 0; i < data.size(); ++i, p += 4)
    data[i] = std::bit_cast<float>(get_u32(p));
  try {
    return EmbeddingMatrix(rows, dim, std::move(data));
  } catch (const ValidationError& e) {
    throw ValidationError(fmt::format("{}: {}", name, e.what()));
  }
}

std::filesystem::path ids_sidecar(const std::filesystem::path& path) {
  auto p = path;
  p += ".ids";
  return p;
}

EmbeddingMatrix read_emb1(const std::filesystem::path& path) {
  auto m = parse_emb1(io::read_file(path), path.string());
  const auto sidecar = ids_sidecar(path);
  if (!std::filesystem::exists(sidecar)) return m;
  auto ids = io::read_lines(sidecar);
  try {
    return EmbeddingMatrix(m.rows(), m.dim(), m.data(), std::move(ids));
  } catch (const ValidationError& e) {
    throw ValidationError(fmt::format("{}: {}", sidecar.string(), e.what()));
  }
}

void write_emb1(const EmbeddingMatrix& m, const std::filesystem::path& path) {
  io::write_file_atomic(path, serialize_emb1(m));
  const auto sidecar = ids_sidecar(path);
  if (m.ids()) {
    std::string content;
    for (const auto& id : *m.ids()) {
      if (id.find_first_of("\r\n") != std::string::npos)
        throw ValidationError(fmt::format("row id '{}' contains a newline", id));
      content += id;
      content.push_back('\n');
    }
    io::write_file_atomic(sidecar, content);
  } else {
    std::filesystem::remove(sidecar);
  }
}

std::vector<float> max_pool(const EmbeddingMatrix& frames) {
  if (frames.rows() == 0) throw ValidationError("max_pool needs at least one frame");
  auto first = frames.row(0);
  std::vector<float> out(first.begin(), first.end());
  for (std::size_t r = 1; r < frames.rows(); ++r) {
    auto row = frames.row(r);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = std::max(out[j], row[j]);
  }
  return out;
}

double dot(std::span<const float> a, std::span<const float> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return s;
}

double l2_norm(std::span<const float> a) { return std::sqrt(dot(a, a)); }

NormalizeResult l2_normalize(const EmbeddingMatrix& m) {
  std::vector<float> data(m.data());
  std::size_t zero_rows = 0;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double norm = l2_norm(m.row(r));
    if (norm == 0) {
      ++zero_rows;
      continue;
    }
    for (std::size_t j = 0; j < m.dim(); ++j) {
      auto& x = data[r * m.dim() + j];
      x = static_cast<float>(static_cast<double>(x) / norm);
    }
  }
  return {EmbeddingMatrix(m.rows(), m.dim(), std::move(data), m.ids()), zero_rows};
}

double cosine(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size())
    throw ValidationError(fmt::format("dimension mismatch: {} vs {}", a.size(), b.size()));
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na == 0 || nb == 0) throw UndefinedSimilarity("cosine similarity with a zero vector");
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

}  // namespace unitforge::embed
