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

#include <gtest/gtest.h>

#include "unitforge/quantize.hpp"
#include "support.hpp"

namespace unitforge::quantize {
namespace {

using embed::EmbeddingMatrix;

EmbeddingMatrix two_blobs(Rng& rng, std::size_t per_blob, std::size_t dim,
                          std::vector<int>* labels) {
  std::vector<float> data;
  for (std::size_t i = 0; i < 2 * per_blob; ++i) {
    const int blob = i < per_blob ? 0 : 1;
    if (labels) labels->push_back(blob);
    for (std::size_t d = 0; d < dim; ++d) {
      const double center = d == 0 ? (blob == 0 ? -100.0 : 100.0) : 0.0;
      data.push_back(static_cast<float>(center + testing::gaussian(rng)));
    }
  }
  return EmbeddingMatrix(2 * per_blob, dim, std::move(data));
}

TEST(KMeans, IdenticalPointsSingleCluster) {
  std::vector<float> data;
  for (int i = 0; i < 10; ++i) data.insert(data.end(), {1.5f, -2.0f, 3.0f});
  const auto cb = kmeans_fit(EmbeddingMatrix(10, 3, data), {.k = 1, .seed = 0});
  EXPECT_EQ(cb.final_inertia, 0.0);
  EXPECT_EQ(cb.centroids.row(0)[0], 1.5f);
  EXPECT_EQ(cb.centroids.row(0)[2], 3.0f);
}

TEST(KMeans, ExactCover) {
  Rng rng(5);
  const auto pts = testing::random_matrix(rng, 12, 4);
  const auto cb = kmeans_fit(pts, {.k = 12, .seed = 9});
  EXPECT_EQ(cb.final_inertia, 0.0);
  std::vector<std::vector<float>> a, b;
  for (std::size_t i = 0; i < 12; ++i) {
    a.emplace_back(pts.row(i).begin(), pts.row(i).end());
    b.emplace_back(cb.centroids.row(i).begin(), cb.centroids.row(i).end());
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  EXPECT_EQ(a, b);
}

TEST(KMeans, TwoBlobs) {
  Rng rng(17);
  std::vector<int> labels;
  const auto pts = two_blobs(rng, 50, 4, &labels);
  const auto cb = kmeans_fit(pts, {.k = 2, .seed = 1});
  const auto units = assign_units(cb, pts);
  const int flip = units.units[0] == 0 ? 0 : 1;
  for (std::size_t i = 0; i < labels.size(); ++i) EXPECT_EQ(units.units[i] ^ flip, labels[i]);
}

TEST(KMeans, InertiaNonIncreasing) {
  Rng rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const auto pts = testing::random_matrix(rng, 150, 3);
    const auto cb = kmeans_fit(pts, {.k = 8, .seed = static_cast<std::uint64_t>(trial)});
    ASSERT_FALSE(cb.inertia_history.empty());
    for (std::size_t i = 1; i < cb.inertia_history.size(); ++i)
      EXPECT_LE(cb.inertia_history[i], cb.inertia_history[i - 1]);
    EXPECT_EQ(cb.final_inertia, cb.inertia_history.back());
  }
}

TEST(KMeans, DeterministicAcrossThreads) {
  Rng rng(29);
  const auto pts = testing::random_matrix(rng, 3000, 8);
  const auto a = kmeans_fit(pts, {.k = 16, .seed = 4}, ExecContext{1});
  const auto b = kmeans_fit(pts, {.k = 16, .seed = 4}, ExecContext{8});
  EXPECT_EQ(a.centroids, b.centroids);
  EXPECT_EQ(a.inertia_history, b.inertia_history);
}

TEST(KMeans, Errors) {
  Rng rng(1);
  const auto pts = testing::random_matrix(rng, 3, 2);
  EXPECT_THROW(kmeans_fit(pts, {.k = 4}), InsufficientData);
  EXPECT_THROW(kmeans_fit(pts, {.k = 0}), ValidationError);
}

TEST(Assign, ExactAndTies) {
  // Centroid 2 at -1 and centroid 5 at +1; origin is equidistant.
  std::vector<float> c(7 * 2, 50.0f);
  for (std::size_t i = 0; i < 7; ++i) c[i * 2 + 1] = static_cast<float>(i) * 10;
  c[2 * 2] = -1; c[2 * 2 + 1] = 0;
  c[5 * 2] = 1; c[5 * 2 + 1] = 0;
  Codebook cb{EmbeddingMatrix(7, 2, c)};
  const EmbeddingMatrix x(3, 2, {0, 0, c[14 - 2], c[14 - 1], 1, 0});
  const auto u = assign_units(cb, x);
  EXPECT_EQ(u.vocab_size, 7u);
  EXPECT_EQ(u.units, (std::vector<std::int32_t>{2, 6, 5}));
  EXPECT_TRUE(assign_units(cb, EmbeddingMatrix(0, 2, {})).units.empty());
  EXPECT_THROW(assign_units(cb, EmbeddingMatrix(1, 3, {0, 0, 0})), ValidationError);
}

TEST(Assign, MatchesBruteForce) {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t k = 1 + rng.uniform_index(200), n = 1 + rng.uniform_index(200);
    Codebook cb{testing::random_matrix(rng, k, 5)};
    const auto x = testing::random_matrix(rng, n, 5);
    const auto u = assign_units(cb, x, ExecContext{4});
    for (std::size_t i = 0; i < n; ++i) ASSERT_EQ(u.units[i], testing::oracle_nearest(cb.centroids, x, i));
  }
}

TEST(Codebook, RoundTrip) {
  testing::ScratchDir dir("cb");
  Rng rng(3);
  const auto cb = kmeans_fit(testing::random_matrix(rng, 40, 3), {.k = 5, .seed = 77});
  write_codebook(cb, dir / "cb.emb");
  const auto back = read_codebook(dir / "cb.emb");
  EXPECT_EQ(back.centroids, cb.centroids);
  EXPECT_EQ(back.seed, 77u);
  EXPECT_EQ(back.iters_run, cb.iters_run);
  EXPECT_EQ(back.final_inertia, cb.final_inertia);
  EXPECT_TRUE(std::filesystem::exists(codebook_meta_path(dir / "cb.emb")));
}

UnitSequence seq(std::vector<std::int32_t> u, std::size_t vocab = 10) {
  return make_unit_sequence(vocab, std::move(u));
}

TEST(Units, Dedup) {
  EXPECT_EQ(dedup_units(seq({5, 5, 2, 2, 2, 9})).units, (std::vector<std::int32_t>{5, 2, 9}));
  EXPECT_TRUE(dedup_units(seq({})).units.empty());
  EXPECT_EQ(dedup_units(seq({1, 2, 1})).units, (std::vector<std::int32_t>{1, 2, 1}));
  EXPECT_EQ(dedup_units(seq({1}, 2500)).vocab_size, 2500u);
}

TEST(Units, CtcCollapse) {
  EXPECT_EQ(ctc_collapse(seq({3, 3, 0, 4, 4, 0, 0}), 0).units, (std::vector<std::int32_t>{3, 4}));
  EXPECT_TRUE(ctc_collapse(seq({0, 0, 0}), 0).units.empty());
  EXPECT_EQ(ctc_collapse(seq({0, 3, 0, 3, 0}), 0).units, (std::vector<std::int32_t>{3, 3}));
  EXPECT_THROW(ctc_collapse(seq({1}), 10), ValidationError);
  EXPECT_THROW(ctc_collapse(seq({1}), -1), ValidationError);
}

TEST(Units, RangeChecked) {
  EXPECT_THROW(make_unit_sequence(3, {0, 3}), ValidationError);
  EXPECT_THROW(make_unit_sequence(3, {-1}), ValidationError);
  EXPECT_THROW(make_unit_sequence(0, {}), ValidationError);
}

TEST(Units, Properties) {
  Rng rng(41);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t vocab = 1 + rng.uniform_index(6);
    std::vector<std::int32_t> u(rng.uniform_index(40));
    for (auto& x : u) x = static_cast<std::int32_t>(rng.uniform_index(vocab));
    const auto s = seq(u, vocab);
    const auto d = dedup_units(s);
    EXPECT_EQ(d.units, testing::oracle_dedup(u));
    EXPECT_EQ(dedup_units(d), d);
    const auto blank = static_cast<std::int32_t>(rng.uniform_index(vocab));
    EXPECT_EQ(ctc_collapse(s, blank), remove_blanks(d, blank));
  }
}

}  // namespace
}  // namespace unitforge::quantize
