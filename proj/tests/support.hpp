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

// Shared helpers for the unit tests and the acceptance binary: scratch
// directories, fixture loading, random data, and brute-force oracles that
// deliberately avoid the library's own code paths.

#pragma once

#include <algorithm>
#include <cstdlib>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <unistd.h>

#include "unitforge/corpus.hpp"
#include "unitforge/embed.hpp"
#include "unitforge/random.hpp"

namespace unitforge::testing {

inline std::filesystem::path fixture_dir() { return UNITFORGE_FIXTURE_DIR; }

inline std::vector<std::string> fixture_lines(const std::string& name) {
  std::ifstream in(fixture_dir() / name, std::ios::binary);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    Rng rng(std::hash<std::string>{}(tag) ^ static_cast<std::uint64_t>(::getpid()));
    path_ = std::filesystem::temp_directory_path() /
            ("unitforge-" + tag + "-" + std::to_string(rng.next() % 1000000000));
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    if (!std::getenv("UNITFORGE_KEEP")) std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

// Box-Muller on top of the portable generator.
inline double gaussian(Rng& rng) {
  double u1 = rng.uniform01();
  while (u1 <= 0) u1 = rng.uniform01();
  const double u2 = rng.uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline embed::EmbeddingMatrix random_matrix(Rng& rng, std::size_t rows, std::size_t dim,
                                            bool with_ids = false, const std::string& prefix = "r") {
  std::vector<float> data(rows * dim);
  for (auto& x : data) x = static_cast<float>(gaussian(rng));
  if (!with_ids) return embed::EmbeddingMatrix(rows, dim, std::move(data));
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < rows; ++i) ids.push_back(prefix + std::to_string(i));
  return embed::EmbeddingMatrix(rows, dim, std::move(data), std::move(ids));
}

// ---------------------------------------------------------------- oracles

inline double oracle_cosine(const embed::EmbeddingMatrix& a, std::size_t i,
                            const embed::EmbeddingMatrix& b, std::size_t j) {
  long double d = 0, na = 0, nb = 0;
  for (std::size_t c = 0; c < a.dim(); ++c) {
    const long double x = a.row(i)[c], y = b.row(j)[c];
    d += x * y;
    na += x * x;
    nb += y * y;
  }
  return static_cast<double>(d / std::sqrt(na * nb));
}

// All-pairs cosine table, then a full stable sort per query.
inline std::vector<std::vector<std::pair<std::size_t, double>>> oracle_knn(
    const embed::EmbeddingMatrix& q, const embed::EmbeddingMatrix& db, std::size_t k) {
  std::vector<std::vector<std::pair<std::size_t, double>>> out(q.rows());
  for (std::size_t i = 0; i < q.rows(); ++i) {
    std::vector<std::pair<std::size_t, double>> all;
    for (std::size_t j = 0; j < db.rows(); ++j) all.emplace_back(j, oracle_cosine(q, i, db, j));
    std::stable_sort(all.begin(), all.end(),
                     [](const auto& x, const auto& y) { return x.second > y.second; });
    all.resize(std::min(k, all.size()));
    out[i] = std::move(all);
  }
  return out;
}

inline std::int32_t oracle_nearest(const embed::EmbeddingMatrix& centroids,
                                   const embed::EmbeddingMatrix& x, std::size_t row) {
  std::vector<double> dist(centroids.rows());
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    double s = 0;
    for (std::size_t d = 0; d < x.dim(); ++d) {
      const double diff = static_cast<double>(x.row(row)[d]) - centroids.row(c)[d];
      s += diff * diff;
    }
    dist[c] = s;
  }
  return static_cast<std::int32_t>(std::min_element(dist.begin(), dist.end()) - dist.begin());
}

inline std::vector<std::int32_t> oracle_dedup(const std::vector<std::int32_t>& s) {
  std::vector<std::int32_t> out;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (i == 0 || s[i] != s[i - 1]) out.push_back(s[i]);
  return out;
}

// The textbook recursive definition, memoized so length-8 inputs stay cheap.
template <typename T>
std::size_t oracle_levenshtein(const std::vector<T>& a, const std::vector<T>& b) {
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
  std::function<std::size_t(std::size_t, std::size_t)> lev = [&](std::size_t i,
                                                                 std::size_t j) -> std::size_t {
    if (i == 0) return j;
    if (j == 0) return i;
    if (auto it = memo.find({i, j}); it != memo.end()) return it->second;
    const std::size_t r = std::min({lev(i - 1, j) + 1, lev(i, j - 1) + 1,
                                    lev(i - 1, j - 1) + (a[i - 1] == b[j - 1] ? 0 : 1)});
    memo[{i, j}] = r;
    return r;
  };
  return lev(a.size(), b.size());
}

inline double oracle_overlap(const corpus::Segment& a, const corpus::Segment& b) {
  if (a.audio_id != b.audio_id) return 0;
  const double lo = std::max(a.start_s, b.start_s);
  const double hi = std::min(a.end_s, b.end_s);
  if (hi <= lo) return 0;
  return (hi - lo) / std::min(a.end_s - a.start_s, b.end_s - b.start_s);
}

// Three blocks of two items in dimension 9. Item i is its block axis plus
// half of its own axis, so same-item cosine is 1, same-block cosine 0.8 and
// cross-block cosine 0.
inline embed::EmbeddingMatrix block_fixture(const std::string& prefix) {
  std::vector<float> data(6 * 9, 0.0f);
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < 6; ++i) {
    data[i * 9 + (i / 2)] = 1.0f;
    data[i * 9 + 3 + i] = 0.5f;
    ids.push_back(prefix + std::to_string(i));
  }
  return embed::EmbeddingMatrix(6, 9, std::move(data), std::move(ids));
}

// Ten text items on the axes; audio item i leans 0.9 toward its own axis and
// 0.1 toward the next one. Audio 3 and audio 7 trade embeddings.
struct SimSearchFixture {
  embed::EmbeddingMatrix audio;
  embed::EmbeddingMatrix text;
  std::unordered_map<std::string, std::string> gold;
};

inline SimSearchFixture simsearch_fixture(bool swap) {
  std::vector<float> a(100, 0.0f), t(100, 0.0f);
  std::vector<std::string> aid, tid;
  SimSearchFixture f;
  for (std::size_t i = 0; i < 10; ++i) {
    t[i * 10 + i] = 1.0f;
    std::size_t src = i;
    if (swap && i == 3) src = 7;
    if (swap && i == 7) src = 3;
    a[i * 10 + src] = 0.9f;
    a[i * 10 + (src + 1) % 10] = 0.1f;
    aid.push_back("a" + std::to_string(i));
    tid.push_back("t" + std::to_string(i));
    f.gold[aid.back()] = tid.back();
  }
  f.audio = embed::EmbeddingMatrix(10, 10, std::move(a), std::move(aid));
  f.text = embed::EmbeddingMatrix(10, 10, std::move(t), std::move(tid));
  return f;
}

}  // namespace unitforge::testing
