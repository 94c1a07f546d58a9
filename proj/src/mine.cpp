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

#include "unitforge/mine.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include <fmt/format.h>

#include "unitforge/io.hpp"
#include "unitforge/text.hpp"

namespace unitforge::mine {

namespace {

constexpr std::size_t kQueryChunk = 64;
constexpr std::string_view kPairHeader =
    "score\tsrc_id\ttgt_id\tsrc_audio\tsrc_start\tsrc_end\ttgt_audio\ttgt_start\ttgt_end";

bool ranks_before(const Neighbor& a, const Neighbor& b) {
  if (a.cosine != b.cosine) return a.cosine > b.cosine;
  return a.index < b.index;
}

std::vector<double> row_norms(const embed::EmbeddingMatrix& m, std::string_view what) {
  std::vector<double> norms(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    norms[i] = embed::l2_norm(m.row(i));
    if (norms[i] == 0)
      throw embed::UndefinedSimilarity(
          fmt::format("{} row {} ('{}') is a zero vector", what, i, m.id_at(i)));
  }
  return norms;
}

double apply_margin(MarginKind kind, double cos_xy, double denom) {
  switch (kind) {
    case MarginKind::kRatio:
      if (!(denom > 0))
        throw DegenerateNeighborhood(
            fmt::format("margin denominator {} is not positive", denom));
      return cos_xy / denom;
    case MarginKind::kDistance:
      return cos_xy - denom;
    case MarginKind::kAbsolute:
      return cos_xy;
  }
  return cos_xy;
}

// Best-scoring neighbor per row of `lists`; score(row, neighbor) supplies the
// margin. Ties keep the lowest neighbor index.
struct Best {
  std::size_t index = 0;
  double score = 0;
};

template <typename ScoreFn>
std::vector<Best> argmax_by_margin(const std::vector<NeighborList>& lists, ScoreFn&& score) {
  std::vector<Best> best(lists.size());
  for (std::size_t r = 0; r < lists.size(); ++r) {
    bool first = true;
    for (const auto& nb : lists[r].neighbors) {
      const double s = score(r, nb);
      if (first || s > best[r].score || (s == best[r].score && nb.index < best[r].index)) {
        best[r] = {nb.index, s};
        first = false;
      }
    }
  }
  return best;
}

}  // namespace

std::vector<NeighborList> knn(const embed::EmbeddingMatrix& queries,
                              const embed::EmbeddingMatrix& database, std::size_t k_nn,
                              const ExecContext& ctx) {
  if (k_nn == 0) throw ValidationError("k_nn must be at least 1");
  if (database.rows() == 0) throw ValidationError("kNN database is empty");
  if (queries.rows() > 0 && queries.dim() != database.dim())
    throw ValidationError(fmt::format("dimension mismatch: queries {} vs database {}",
                                      queries.dim(), database.dim()));
  const auto qnorm = row_norms(queries, "query");
  const auto dnorm = row_norms(database, "database");
  const std::size_t k = std::min(k_nn, database.rows());

  std::vector<NeighborList> out(queries.rows());
  parallel_for_chunks(ctx, queries.rows(), kQueryChunk, [&](std::size_t begin, std::size_t end) {
    std::vector<Neighbor> all(database.rows());
    for (std::size_t q = begin; q < end; ++q) {
      const auto qrow = queries.row(q);
      for (std::size_t d = 0; d < database.rows(); ++d) {
        const double c = embed::dot(qrow, database.row(d)) / (qnorm[q] * dnorm[d]);
        all[d] = {d, std::clamp(c, -1.0, 1.0)};
      }
      std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(),
                        ranks_before);
      out[q].query_index = q;
      out[q].neighbors.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k));
    }
  });
  return out;
}

MarginKind parse_margin_kind(std::string_view s) {
  if (s == "ratio") return MarginKind::kRatio;
  if (s == "distance") return MarginKind::kDistance;
  if (s == "absolute") return MarginKind::kAbsolute;
  throw ValidationError(fmt::format("unknown margin '{}' (expected ratio, distance, absolute)", s));
}

std::string_view to_string(MarginKind k) {
  switch (k) {
    case MarginKind::kRatio: return "ratio";
    case MarginKind::kDistance: return "distance";
    case MarginKind::kAbsolute: return "absolute";
  }
  return "ratio";
}

Direction parse_direction(std::string_view s) {
  if (s == "forward") return Direction::kForward;
  if (s == "backward") return Direction::kBackward;
  if (s == "intersect") return Direction::kIntersect;
  throw ValidationError(
      fmt::format("unknown direction '{}' (expected forward, backward, intersect)", s));
}

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::kForward: return "forward";
    case Direction::kBackward: return "backward";
    case Direction::kIntersect: return "intersect";
  }
  return "forward";
}

double neighborhood_term(const NeighborList& nn) {
  if (nn.neighbors.empty())
    throw DegenerateNeighborhood(
        fmt::format("neighbor list of row {} is empty", nn.query_index));
  double sum = 0;
  for (const auto& n : nn.neighbors) sum += n.cosine;
  return sum / (2.0 * static_cast<double>(nn.neighbors.size()));
}

double margin_score(double cos_xy, const NeighborList& nn_x, const NeighborList& nn_y,
                    MarginKind kind) {
  return apply_margin(kind, cos_xy, neighborhood_term(nn_x) + neighborhood_term(nn_y));
}

void sort_pairs(std::vector<MinedPair>& pairs) {
  std::stable_sort(pairs.begin(), pairs.end(), [](const MinedPair& a, const MinedPair& b) {
    if (a.score != b.score) return a.score > b.score;
    return std::tie(a.src_id, a.tgt_id) < std::tie(b.src_id, b.tgt_id);
  });
}

std::vector<MinedPair> mine_pairs(const embed::EmbeddingMatrix& src,
                                  const embed::EmbeddingMatrix& tgt, const MineOptions& options,
                                  const ExecContext& ctx) {
  if (std::isnan(options.threshold) || options.threshold == std::numeric_limits<double>::infinity())
    throw ValidationError("threshold must be finite or -inf");
  const auto fwd = knn(src, tgt, options.k_nn, ctx);
  const auto bwd = knn(tgt, src, options.k_nn, ctx);

  std::vector<double> src_term(fwd.size()), tgt_term(bwd.size());
  for (std::size_t i = 0; i < fwd.size(); ++i) src_term[i] = neighborhood_term(fwd[i]);
  for (std::size_t j = 0; j < bwd.size(); ++j) tgt_term[j] = neighborhood_term(bwd[j]);

  const auto fbest = argmax_by_margin(fwd, [&](std::size_t i, const Neighbor& nb) {
    return apply_margin(options.margin, nb.cosine, src_term[i] + tgt_term[nb.index]);
  });
  const auto bbest = argmax_by_margin(bwd, [&](std::size_t j, const Neighbor& nb) {
    return apply_margin(options.margin, nb.cosine, src_term[nb.index] + tgt_term[j]);
  });

  std::vector<MinedPair> pairs;
  auto emit = [&](std::size_t i, std::size_t j, double score) {
    if (score >= options.threshold) pairs.push_back({src.id_at(i), tgt.id_at(j), score, {}, {}});
  };
  switch (options.direction) {
    case Direction::kForward:
      for (std::size_t i = 0; i < fbest.size(); ++i) emit(i, fbest[i].index, fbest[i].score);
      break;
    case Direction::kBackward:
      for (std::size_t j = 0; j < bbest.size(); ++j) emit(bbest[j].index, j, bbest[j].score);
      break;
    case Direction::kIntersect:
      for (std::size_t i = 0; i < fbest.size(); ++i)
        if (bbest[fbest[i].index].index == i) emit(i, fbest[i].index, fbest[i].score);
      break;
  }
  sort_pairs(pairs);
  return pairs;
}

void attach_segments(std::vector<MinedPair>& pairs,
                     const std::unordered_map<std::string, corpus::Segment>* src_segments,
                     const std::unordered_map<std::string, corpus::Segment>* tgt_segments) {
  for (auto& p : pairs) {
    if (src_segments) {
      auto it = src_segments->find(p.src_id);
      if (it != src_segments->end()) p.src_segment = it->second;
    }
    if (tgt_segments) {
      auto it = tgt_segments->find(p.tgt_id);
      if (it != tgt_segments->end()) p.tgt_segment = it->second;
    }
  }
}

double overlap_ratio(const corpus::Segment& a, const corpus::Segment& b) {
  if (a.audio_id != b.audio_id) return 0;
  const double inter = std::min(a.end_s, b.end_s) - std::max(a.start_s, b.start_s);
  if (inter <= 0) return 0;
  return inter / std::min(a.duration(), b.duration());
}

OverlapSide parse_overlap_side(std::string_view s) {
  if (s == "src") return OverlapSide::kSource;
  if (s == "tgt") return OverlapSide::kTarget;
  if (s == "both") return OverlapSide::kBoth;
  throw ValidationError(fmt::format("unknown overlap side '{}' (expected src, tgt, both)", s));
}

std::vector<MinedPair> filter_overlap(std::vector<MinedPair> pairs, double max_overlap,
                                      OverlapSide side) {
  if (!(max_overlap >= 0 && max_overlap <= 1))
    throw ValidationError(fmt::format("max_overlap {} outside [0, 1]", max_overlap));
  const bool use_src = side != OverlapSide::kTarget;
  const bool use_tgt = side != OverlapSide::kSource;
  for (const auto& p : pairs) {
    if (use_src && !p.src_segment)
      throw ValidationError(fmt::format("pair ({}, {}) has no source segment", p.src_id, p.tgt_id));
    if (use_tgt && !p.tgt_segment)
      throw ValidationError(fmt::format("pair ({}, {}) has no target segment", p.src_id, p.tgt_id));
  }
  sort_pairs(pairs);

  std::unordered_map<std::string, std::vector<corpus::Segment>> kept_src, kept_tgt;
  auto fits = [&](const auto& kept, const corpus::Segment& seg) {
    auto it = kept.find(seg.audio_id);
    if (it == kept.end()) return true;
    return std::all_of(it->second.begin(), it->second.end(), [&](const corpus::Segment& other) {
      return overlap_ratio(seg, other) <= max_overlap;
    });
  };

  std::vector<MinedPair> out;
  for (auto& p : pairs) {
    if (use_src && !fits(kept_src, *p.src_segment)) continue;
    if (use_tgt && !fits(kept_tgt, *p.tgt_segment)) continue;
    if (use_src) kept_src[p.src_segment->audio_id].push_back(*p.src_segment);
    if (use_tgt) kept_tgt[p.tgt_segment->audio_id].push_back(*p.tgt_segment);
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<SweepPoint> threshold_sweep(std::vector<MinedPair> candidates,
                                        const std::vector<double>& thresholds) {
  sort_pairs(candidates);
  // Running totals over the score-sorted list; each threshold keeps a prefix.
  std::vector<double> src_cum(candidates.size() + 1, 0.0), tgt_cum(candidates.size() + 1, 0.0);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& p = candidates[i];
    src_cum[i + 1] = src_cum[i] + (p.src_segment ? p.src_segment->duration() : 0.0);
    tgt_cum[i + 1] = tgt_cum[i] + (p.tgt_segment ? p.tgt_segment->duration() : 0.0);
  }
  std::vector<SweepPoint> out;
  for (double t : thresholds) {
    if (std::isnan(t)) throw ValidationError("threshold is NaN");
    const auto kept = static_cast<std::size_t>(
        std::find_if(candidates.begin(), candidates.end(),
                     [&](const MinedPair& p) { return p.score < t; }) -
        candidates.begin());
    out.push_back({t, kept, src_cum[kept], tgt_cum[kept]});
  }
  return out;
}

SimSearchReport simsearch_error_rate(const embed::EmbeddingMatrix& audio_emb,
                                     const embed::EmbeddingMatrix& text_emb,
                                     const std::unordered_map<std::string, std::string>& gold,
                                     std::size_t k_nn, MarginKind margin,
                                     const ExecContext& ctx) {
  std::unordered_map<std::string, std::size_t> text_rows;
  for (std::size_t j = 0; j < text_emb.rows(); ++j) text_rows.emplace(text_emb.id_at(j), j);
  for (std::size_t i = 0; i < audio_emb.rows(); ++i) {
    const auto id = audio_emb.id_at(i);
    auto it = gold.find(id);
    if (it == gold.end()) throw ValidationError(fmt::format("no gold text for audio '{}'", id));
    if (!text_rows.count(it->second))
      throw ValidationError(
          fmt::format("gold text '{}' for audio '{}' is not in the text set", it->second, id));
  }

  MineOptions opts;
  opts.k_nn = k_nn;
  opts.margin = margin;
  const auto pairs = mine_pairs(audio_emb, text_emb, opts, ctx);

  SimSearchReport report;
  report.total = audio_emb.rows();
  for (const auto& p : pairs) {
    if (gold.at(p.src_id) != p.tgt_id) {
      ++report.errors;
      report.mismatches.emplace(p.src_id, p.tgt_id);
    }
  }
  if (report.total > 0) {
    const double pct = 100.0 * static_cast<double>(report.errors) /
                       static_cast<double>(report.total);
    report.error_rate_percent = std::round(pct * 100.0) / 100.0;
  }
  return report;
}

std::string serialize_pairs(const std::vector<MinedPair>& pairs) {
  std::string out(kPairHeader);
  out.push_back('\n');
  for (const auto& p : pairs) {
    auto seg_fields = [](const std::optional<corpus::Segment>& s) {
      if (!s) return std::string("\t\t");
      return fmt::format("{}\t{}\t{}", s->audio_id, io::format_double(s->start_s),
                         io::format_double(s->end_s));
    };
    out += fmt::format("{}\t{}\t{}\t{}\t{}\n", io::format_double(p.score), p.src_id, p.tgt_id,
                       seg_fields(p.src_segment), seg_fields(p.tgt_segment));
  }
  return out;
}

std::vector<MinedPair> parse_pairs(std::string_view content, const std::string& source_name) {
  const auto lines = io::split_lines(content);
  std::vector<MinedPair> pairs;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto& line = lines[i];
    if (line.empty() || (i == 0 && line.rfind("score\t", 0) == 0)) continue;
    const auto f = text::split_fields(line, '\t');
    auto fail = [&](const std::string& what) { return ParseError(source_name, i + 1, what); };
    if (f.size() != 9) throw fail(fmt::format("expected 9 columns, found {}", f.size()));
    MinedPair p;
    if (!io::parse_double(f[0], p.score) || !std::isfinite(p.score)) throw fail("invalid score");
    p.src_id = std::string(f[1]);
    p.tgt_id = std::string(f[2]);
    if (p.src_id.empty() || p.tgt_id.empty()) throw fail("empty pair id");
    auto read_seg = [&](std::size_t at) -> std::optional<corpus::Segment> {
      if (f[at].empty() && f[at + 1].empty() && f[at + 2].empty()) return std::nullopt;
      double s = 0, e = 0;
      if (!io::parse_double(f[at + 1], s) || !io::parse_double(f[at + 2], e))
        throw fail("invalid segment time");
      try {
        return corpus::make_segment(std::string(f[at]), s, e);
      } catch (const ValidationError& err) {
        throw fail(err.what());
      }
    };
    p.src_segment = read_seg(3);
    p.tgt_segment = read_seg(6);
    pairs.push_back(std::move(p));
  }
  return pairs;
}

void write_pairs(const std::vector<MinedPair>& pairs, const std::filesystem::path& path) {
  io::write_file_atomic(path, serialize_pairs(pairs));
}

std::vector<MinedPair> read_pairs(const std::filesystem::path& path) {
  return parse_pairs(io::read_file(path), path.string());
}

}  // namespace unitforge::mine
