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
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "unitforge/corpus.hpp"
#include "unitforge/embed.hpp"
#include "unitforge/error.hpp"
#include "unitforge/parallel.hpp"

namespace unitforge::mine {

class DegenerateNeighborhood : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

struct Neighbor {
  std::size_t index = 0;
  double cosine = 0;

  bool operator==(const Neighbor&) const = default;
};

// Neighbors of one query, by descending cosine, ties by ascending index.
struct NeighborList {
  std::size_t query_index = 0;
  std::vector<Neighbor> neighbors;
};

// Exact k-nearest neighbors by cosine similarity. Each list holds
// min(k_nn, database.rows()) entries.
//
// Throws ValidationError on a dimension mismatch, an empty database or
// k_nn == 0, and embed::UndefinedSimilarity if any row is zero.
std::vector<NeighborList> knn(const embed::EmbeddingMatrix& queries,
                              const embed::EmbeddingMatrix& database, std::size_t k_nn,
                              const ExecContext& ctx = {});

// How a pair's cosine is compared against its neighborhoods. With
// m = sum(nn_x)/(2|nn_x|) + sum(nn_y)/(2|nn_y|):
//   kRatio     cos / m
//   kDistance  cos - m
//   kAbsolute  cos
enum class MarginKind { kRatio, kDistance, kAbsolute };

MarginKind parse_margin_kind(std::string_view s);
std::string_view to_string(MarginKind k);

// Half the mean neighbor cosine of one side; the margin denominator is the
// sum of both sides' terms.
double neighborhood_term(const NeighborList& nn);

// Throws DegenerateNeighborhood when a list is empty or, for kRatio, when
// the denominator is not positive.
double margin_score(double cos_xy, const NeighborList& nn_x, const NeighborList& nn_y,
                    MarginKind kind = MarginKind::kRatio);

struct MinedPair {
  std::string src_id;
  std::string tgt_id;
  double score = 0;
  std::optional<corpus::Segment> src_segment;
  std::optional<corpus::Segment> tgt_segment;

  bool operator==(const MinedPair&) const = default;
};

enum class Direction { kForward, kBackward, kIntersect };

Direction parse_direction(std::string_view s);
std::string_view to_string(Direction d);

struct MineOptions {
  std::size_t k_nn = 4;
  // Pairs scoring below this are dropped. -inf disables the filter.
  double threshold = -std::numeric_limits<double>::infinity();
  Direction direction = Direction::kForward;
  MarginKind margin = MarginKind::kRatio;
};

// Candidate per source row = margin argmax among its k_nn cosine neighbors
// (forward); per target row (backward); or pairs that are both (intersect).
// Score ties pick the lowest index. Output is sorted by descending score,
// then src_id, then tgt_id. Row ids come from the matrices' ids, or the row
// index when absent.
std::vector<MinedPair> mine_pairs(const embed::EmbeddingMatrix& src,
                                  const embed::EmbeddingMatrix& tgt, const MineOptions& options,
                                  const ExecContext& ctx = {});

// Orders by descending score, then src_id, then tgt_id.
void sort_pairs(std::vector<MinedPair>& pairs);

// Fills segments from id -> Segment tables; ids missing from a table leave
// the segment absent.
void attach_segments(std::vector<MinedPair>& pairs,
                     const std::unordered_map<std::string, corpus::Segment>* src_segments,
                     const std::unordered_map<std::string, corpus::Segment>* tgt_segments);

// Intersection length over the shorter segment's duration; 0 for segments
// on different audio.
double overlap_ratio(const corpus::Segment& a, const corpus::Segment& b);

enum class OverlapSide { kSource, kTarget, kBoth };

OverlapSide parse_overlap_side(std::string_view s);

// Greedy pass in descending score order: a pair survives only if, on every
// constrained side, its segment overlaps each already kept segment of the
// same audio by at most max_overlap. Throws ValidationError when a pair lacks
// a segment on a constrained side or max_overlap is outside [0, 1].
std::vector<MinedPair> filter_overlap(std::vector<MinedPair> pairs, double max_overlap,
                                      OverlapSide side = OverlapSide::kSource);

struct SweepPoint {
  double threshold = 0;
  std::size_t pairs = 0;
  // Summed over pairs that carry the segment; 0 otherwise.
  double src_duration_s = 0;
  double tgt_duration_s = 0;
};

// Pairs (and their segment durations) surviving each threshold, given the
// unfiltered candidates. Counts are non-increasing in the threshold.
std::vector<SweepPoint> threshold_sweep(std::vector<MinedPair> candidates,
                                        const std::vector<double>& thresholds);

struct SimSearchReport {
  std::size_t total = 0;
  std::size_t errors = 0;
  double error_rate_percent = 0;  // rounded to 2 decimals
  // audio id -> selected text id, for the rows that were wrong
  std::map<std::string, std::string> mismatches;
};

// Matches each audio row to the text with the highest margin score among its
// k_nn neighbors and counts the rows whose match is not the gold text.
// Throws ValidationError if an audio id has no gold entry or the gold text id
// is not a row of text_emb.
SimSearchReport simsearch_error_rate(const embed::EmbeddingMatrix& audio_emb,
                                     const embed::EmbeddingMatrix& text_emb,
                                     const std::unordered_map<std::string, std::string>& gold,
                                     std::size_t k_nn, MarginKind margin = MarginKind::kRatio,
                                     const ExecContext& ctx = {});

// Pair file: header row, then
// score, src_id, tgt_id, src_audio, src_start, src_end, tgt_audio, tgt_start, tgt_end
// tab-separated, with empty fields for absent segments.
std::string serialize_pairs(const std::vector<MinedPair>& pairs);
std::vector<MinedPair> parse_pairs(std::string_view content, const std::string& source_name = {});
void write_pairs(const std::vector<MinedPair>& pairs, const std::filesystem::path& path);
std::vector<MinedPair> read_pairs(const std::filesystem::path& path);

}  // namespace unitforge::mine
