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

#include "unitforge/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include "unitforge/adapter.hpp"
#include "unitforge/balance.hpp"
#include "unitforge/cascade.hpp"
#include "unitforge/corpus.hpp"
#include "unitforge/embed.hpp"
#include "unitforge/error.hpp"
#include "unitforge/evalbleu.hpp"
#include "unitforge/io.hpp"
#include "unitforge/mine.hpp"
#include "unitforge/quantize.hpp"
#include "unitforge/text.hpp"

namespace unitforge::cli {

namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

struct Globals {
  std::uint64_t seed = 0;
  int threads = 1;
  bool quiet = false;
};

struct Context {
  const Globals& globals;
  std::ostream& out;
  std::ostream& err;

  ExecContext exec() const { return ExecContext{globals.threads}; }

  template <typename... Args>
  void log(fmt::format_string<Args...> f, Args&&... args) const {
    if (globals.quiet) return;
    err << "unitforge: " << fmt::format(f, std::forward<Args>(args)...) << '\n';
  }

  void print_seed() const { err << "unitforge: seed " << globals.seed << '\n'; }
};

std::optional<std::unique_ptr<adapter::Cache>> cache_from_env(const Context& ctx) {
  const char* dir = std::getenv("UNITFORGE_CACHE_DIR");
  if (!dir || !*dir) return std::nullopt;
  ctx.log("adapter cache at {}", dir);
  return std::make_unique<adapter::Cache>(fs::path(dir));
}

// Reports go to --out, or to stdout when --stdout is given.
struct ReportSink {
  std::string path;
  bool to_stdout = false;

  void add_options(CLI::App* app, const std::string& what) {
    app->add_option("--out", path, what + " (JSON)");
    app->add_flag("--stdout", to_stdout, "Print the JSON report to standard output");
  }

  void check() const {
    if (path.empty() && !to_stdout) throw ValidationError("one of --out or --stdout is required");
  }

  void write(const Context& ctx, const std::string& json) const {
    if (!path.empty()) io::write_file_atomic(path, json);
    if (to_stdout) ctx.out << json;
  }
};

std::string dump(const ojson& j) { return j.dump(2) + "\n"; }

embed::EmbeddingMatrix maybe_normalize(const Context& ctx, embed::EmbeddingMatrix m,
                                       bool normalize, std::string_view what) {
  if (!normalize) return m;
  auto r = embed::l2_normalize(m);
  if (r.zero_rows) ctx.log("warning: {} has {} zero row(s)", what, r.zero_rows);
  return std::move(r.matrix);
}

// ---------------------------------------------------------------- quantize

struct QuantizeFit {
  std::string in, out;
  std::size_t k = 2500;
  int max_iters = 100;
  double tol = 1e-6;
};

void run_quantize_fit(const Context& ctx, const QuantizeFit& o) {
  ctx.print_seed();
  const auto feats = embed::read_emb1(o.in);
  quantize::KMeansOptions opts;
  opts.k = o.k;
  opts.seed = ctx.globals.seed;
  opts.max_iters = o.max_iters;
  opts.tol = o.tol;
  const auto cb = quantize::kmeans_fit(feats, opts, ctx.exec());
  quantize::write_codebook(cb, o.out);
  ctx.log("k-means: {} rows, k={}, {} iteration(s), inertia {}", feats.rows(), o.k, cb.iters_run,
          cb.final_inertia);
}

struct QuantizeAssign {
  std::string codebook, in, manifest, out, features_field = "audio";
  bool dedup = false;
};

void run_quantize_assign(const Context& ctx, const QuantizeAssign& o) {
  if (o.in.empty() == o.manifest.empty())
    throw ValidationError("exactly one of --in or --manifest is required");
  const auto cb = quantize::read_codebook(o.codebook);
  auto assign = [&](const embed::EmbeddingMatrix& feats) {
    auto units = quantize::assign_units(cb, feats, ctx.exec());
    return o.dedup ? quantize::dedup_units(units) : units;
  };
  if (!o.in.empty()) {
    const auto units = assign(embed::read_emb1(o.in));
    io::write_file_atomic(o.out, corpus::format_units(units.units) + "\n");
    return;
  }
  const auto src = corpus::read_manifest(o.manifest);
  const auto base = fs::path(o.manifest).parent_path();
  corpus::Manifest out;
  out.meta() = src.meta();
  for (auto u : src.records()) {
    const auto ref = corpus::get_field(u, o.features_field);
    if (!ref)
      throw ValidationError(fmt::format("record '{}' has no '{}' field", u.id, o.features_field));
    fs::path p(*ref);
    if (p.is_relative()) p = base / p;
    u.units = assign(embed::read_emb1(p)).units;
    out.add(std::move(u));
  }
  corpus::write_manifest(out, o.out);
}

// ------------------------------------------------------------------- units

struct UnitsOp {
  std::string in, out;
  std::optional<std::size_t> vocab_size;
  std::optional<std::int32_t> blank;
};

bool is_manifest_path(const fs::path& p) {
  return p.extension() == ".tsv" || p.extension() == ".jsonl";
}

quantize::UnitSequence to_sequence(const std::vector<std::int32_t>& units,
                                   const UnitsOp& o) {
  std::size_t vocab = 1;
  for (auto u : units) vocab = std::max<std::size_t>(vocab, static_cast<std::size_t>(u) + 1);
  if (o.blank) vocab = std::max<std::size_t>(vocab, static_cast<std::size_t>(*o.blank) + 1);
  return quantize::make_unit_sequence(o.vocab_size.value_or(vocab), units);
}

void run_units(const Context&, const UnitsOp& o, bool collapse) {
  auto apply = [&](const std::vector<std::int32_t>& units) {
    const auto seq = to_sequence(units, o);
    return collapse ? quantize::ctc_collapse(seq, *o.blank).units
                    : quantize::dedup_units(seq).units;
  };
  if (is_manifest_path(o.in)) {
    const auto src = corpus::read_manifest(o.in);
    corpus::Manifest out;
    out.meta() = src.meta();
    for (auto u : src.records()) {
      if (u.units) u.units = apply(*u.units);
      out.add(std::move(u));
    }
    corpus::write_manifest(out, o.out);
    return;
  }
  const auto lines = io::read_lines(o.in);
  std::string content;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      content += corpus::format_units(apply(corpus::parse_units(lines[i])));
    } catch (const ValidationError& e) {
      throw ParseError(o.in, i + 1, e.what());
    }
    content.push_back('\n');
  }
  io::write_file_atomic(o.out, content);
}

// ------------------------------------------------------------------- embed

struct EmbedPool {
  std::vector<std::string> in;
  std::string out;
};

void run_embed_pool(const Context&, const EmbedPool& o) {
  std::vector<float> data;
  std::vector<std::string> ids;
  std::size_t dim = 0;
  for (const auto& path : o.in) {
    const auto frames = embed::read_emb1(path);
    if (dim != 0 && frames.dim() != dim)
      throw ValidationError(fmt::format("{}: dimension {} differs from {}", path, frames.dim(), dim));
    dim = frames.dim();
    const auto pooled = embed::max_pool(frames);
    data.insert(data.end(), pooled.begin(), pooled.end());
    ids.push_back(fs::path(path).stem().string());
  }
  const std::size_t rows = ids.size();
  embed::write_emb1(embed::EmbeddingMatrix(rows, dim, std::move(data), std::move(ids)), o.out);
}

struct EmbedNormalize {
  std::string in, out;
};

void run_embed_normalize(const Context& ctx, const EmbedNormalize& o) {
  const auto r = embed::l2_normalize(embed::read_emb1(o.in));
  if (r.zero_rows) ctx.log("warning: {} zero row(s) left unnormalized", r.zero_rows);
  embed::write_emb1(r.matrix, o.out);
}

// -------------------------------------------------------------------- mine

struct MineRun {
  std::string src, tgt, out, src_segments, tgt_segments;
  std::size_t knn = 4;
  std::string threshold = "none";
  std::string direction = "forward";
  std::string margin = "ratio";
  bool no_normalize = false;
};

void add_mine_run_options(CLI::App* app, MineRun& o) {
  app->add_option("--src", o.src, "Source embeddings (EMB1)");
  app->add_option("--tgt", o.tgt, "Target embeddings (EMB1)");
  app->add_option("--out", o.out, "Pair file (TSV)");
  app->add_option("--knn", o.knn, "Margin neighborhood size")->check(CLI::PositiveNumber);
  app->add_option("--threshold", o.threshold, "Minimum margin score, or 'none'");
  app->add_option("--direction", o.direction, "forward | backward | intersect");
  app->add_option("--margin", o.margin, "ratio | distance | absolute");
  app->add_option("--src-segments", o.src_segments, "Segment table for source ids");
  app->add_option("--tgt-segments", o.tgt_segments, "Segment table for target ids");
  app->add_flag("--no-normalize", o.no_normalize, "Skip L2 normalization of embeddings");
}

double parse_threshold(const std::string& s) {
  if (s == "none" || s == "-inf") return -std::numeric_limits<double>::infinity();
  double t = 0;
  if (!io::parse_double(s, t) || !std::isfinite(t))
    throw ValidationError(fmt::format("invalid --threshold '{}'", s));
  return t;
}

std::vector<mine::MinedPair> mine_with_segments(const Context& ctx, const MineRun& o,
                                                double threshold) {
  mine::MineOptions opts;
  opts.k_nn = o.knn;
  opts.threshold = threshold;
  opts.direction = mine::parse_direction(o.direction);
  opts.margin = mine::parse_margin_kind(o.margin);
  const auto src = maybe_normalize(ctx, embed::read_emb1(o.src), !o.no_normalize, "source");
  const auto tgt = maybe_normalize(ctx, embed::read_emb1(o.tgt), !o.no_normalize, "target");
  auto pairs = mine::mine_pairs(src, tgt, opts, ctx.exec());
  std::optional<std::unordered_map<std::string, corpus::Segment>> ss, ts;
  if (!o.src_segments.empty()) ss = corpus::read_segments(o.src_segments);
  if (!o.tgt_segments.empty()) ts = corpus::read_segments(o.tgt_segments);
  mine::attach_segments(pairs, ss ? &*ss : nullptr, ts ? &*ts : nullptr);
  return pairs;
}

void run_mine(const Context& ctx, const MineRun& o) {
  if (o.src.empty()) throw ValidationError("--src is required");
  if (o.tgt.empty()) throw ValidationError("--tgt is required");
  if (o.out.empty()) throw ValidationError("--out is required");
  const auto pairs = mine_with_segments(ctx, o, parse_threshold(o.threshold));
  mine::write_pairs(pairs, o.out);
  ctx.log("mined {} pair(s)", pairs.size());
}

struct MineSweep {
  MineRun run;
  std::vector<double> thresholds;
  ReportSink report;
};

void run_mine_sweep(const Context& ctx, const MineSweep& o) {
  if (o.run.src.empty()) throw ValidationError("--src is required");
  if (o.run.tgt.empty()) throw ValidationError("--tgt is required");
  o.report.check();
  const auto pairs = mine_with_segments(ctx, o.run, -std::numeric_limits<double>::infinity());
  ojson j;
  j["knn"] = o.run.knn;
  j["direction"] = o.run.direction;
  j["margin"] = o.run.margin;
  j["candidates"] = pairs.size();
  j["sweep"] = ojson::array();
  for (const auto& p : mine::threshold_sweep(pairs, o.thresholds)) {
    ojson e;
    e["threshold"] = p.threshold;
    e["pairs"] = p.pairs;
    e["src_hours"] = p.src_duration_s / 3600.0;
    e["tgt_hours"] = p.tgt_duration_s / 3600.0;
    j["sweep"].push_back(std::move(e));
  }
  o.report.write(ctx, dump(j));
}

struct MineFilterOverlap {
  std::string in, out, side = "src";
  double max_overlap = 0.2;
};

void run_mine_filter_overlap(const Context& ctx, const MineFilterOverlap& o) {
  auto pairs = mine::read_pairs(o.in);
  const auto before = pairs.size();
  const auto kept = mine::filter_overlap(std::move(pairs), o.max_overlap,
                                         mine::parse_overlap_side(o.side));
  mine::write_pairs(kept, o.out);
  ctx.log("kept {} of {} pair(s)", kept.size(), before);
}

struct MineSimsearch {
  std::string audio, text, gold, margin = "ratio";
  std::size_t knn = 4;
  bool no_normalize = false;
  ReportSink report;
};

void run_mine_simsearch(const Context& ctx, const MineSimsearch& o) {
  o.report.check();
  std::unordered_map<std::string, std::string> gold;
  const auto lines = io::read_lines(o.gold);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = text::split_fields(lines[i], '\t');
    if (f.size() != 2) throw ParseError(o.gold, i + 1, "expected 'audio_id<TAB>text_id'");
    if (!gold.emplace(std::string(f[0]), std::string(f[1])).second)
      throw ParseError(o.gold, i + 1, fmt::format("duplicate audio id '{}'", f[0]));
  }
  const auto audio = maybe_normalize(ctx, embed::read_emb1(o.audio), !o.no_normalize, "audio");
  const auto textm = maybe_normalize(ctx, embed::read_emb1(o.text), !o.no_normalize, "text");
  const auto r = mine::simsearch_error_rate(audio, textm, gold, o.knn,
                                            mine::parse_margin_kind(o.margin), ctx.exec());
  ojson j;
  j["total"] = r.total;
  j["errors"] = r.errors;
  j["error_rate_percent"] = r.error_rate_percent;
  j["error_rate"] = fmt::format("{:.2f}%", r.error_rate_percent);
  j["knn"] = o.knn;
  j["margin"] = o.margin;
  j["mismatches"] = ojson::object();
  for (const auto& [a, t] : r.mismatches) j["mismatches"][a] = t;
  o.report.write(ctx, dump(j));
}

// ----------------------------------------------------------------- balance

struct Balance {
  std::string counts, from_manifest, by = "duration", out = "dist.json", pools, schedule;
  double temperature = 20;
  std::size_t total = 0;
};

void run_balance(const Context& ctx, const Balance& o) {
  if (o.counts.empty() == o.from_manifest.empty())
    throw ValidationError("exactly one of --counts or --from-manifest is required");
  if (o.out.empty()) throw ValidationError("--out is required");
  balance::LanguageCounts counts;
  if (!o.counts.empty()) {
    counts = balance::read_counts(o.counts);
  } else {
    if (o.by != "duration" && o.by != "count")
      throw ValidationError(fmt::format("--by must be duration or count, got '{}'", o.by));
    for (const auto& [lang, s] : corpus::manifest_stats(corpus::read_manifest(o.from_manifest)))
      counts.entries.emplace_back(
          lang, o.by == "duration" ? s.total_duration_s : static_cast<double>(s.count));
  }
  const auto dist = balance::temperature_distribution(counts, o.temperature);

  ojson j;
  j["temperature"] = dist.temperature;
  j["probs"] = ojson::array();
  for (std::size_t i = 0; i < dist.probs.size(); ++i) {
    ojson e;
    e["lang"] = dist.probs[i].first;
    e["amount"] = counts.entries[i].second;
    e["p"] = dist.probs[i].second;
    j["probs"].push_back(std::move(e));
  }
  io::write_file_atomic(o.out, dump(j));

  if (o.schedule.empty()) return;
  if (o.pools.empty()) throw ValidationError("--schedule needs --pools");
  std::map<std::string, std::vector<std::string>> pools;
  const auto lines = io::read_lines(o.pools);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = text::split_fields(lines[i], '\t');
    if (f.size() != 2) throw ParseError(o.pools, i + 1, "expected 'lang<TAB>id'");
    pools[std::string(f[0])].emplace_back(f[1]);
  }
  ctx.print_seed();
  std::string content;
  for (const auto& id : balance::sample_schedule(dist, pools, o.total, ctx.globals.seed)) {
    content += id;
    content.push_back('\n');
  }
  io::write_file_atomic(o.schedule, content);
}

// -------------------------------------------------------------------- bleu

struct Bleu {
  std::string hyp, ref, tokenizer = "word13a", smooth = "none";
  ReportSink report;
};

void run_bleu(const Context& ctx, const Bleu& o) {
  o.report.check();
  const auto scheme = evalbleu::parse_tokenizer(o.tokenizer);
  const auto r = evalbleu::corpus_bleu(evalbleu::tokenize_corpus(io::read_lines(o.hyp), scheme),
                                       evalbleu::tokenize_corpus(io::read_lines(o.ref), scheme), 4,
                                       evalbleu::parse_smoothing(o.smooth));
  o.report.write(ctx, evalbleu::report_to_json(r));
}

struct AsrBleu {
  std::string manifest, ref, asr, tokenizer = "tailo_syllable", smooth = "none";
  ReportSink report;
};

void run_asr_bleu(const Context& ctx, const AsrBleu& o) {
  o.report.check();
  const auto gen = corpus::read_manifest(o.manifest);
  const auto ref = corpus::read_manifest(o.ref);
  const auto asr = adapter::make_adapter(adapter::Kind::kAsr, "asr", o.asr);
  const auto cache = cache_from_env(ctx);
  const auto r = evalbleu::asr_bleu(gen, ref, *asr, evalbleu::parse_tokenizer(o.tokenizer),
                                    cache ? cache->get() : nullptr, ctx.exec(),
                                    evalbleu::parse_smoothing(o.smooth));
  o.report.write(ctx, evalbleu::report_to_json(r));
}

// ----------------------------------------------------------------- cascade

struct CascadeRun {
  std::string spec, in, out, report;
};

void run_cascade(const Context& ctx, const CascadeRun& o) {
  const auto spec = cascade::read_pipeline_spec(o.spec);
  const auto src = corpus::read_manifest(o.in);
  const auto registry = cascade::make_registry(spec);
  const auto cache = cache_from_env(ctx);
  const auto result =
      cascade::run_cascade(src, spec, registry, cache ? cache->get() : nullptr, ctx.exec());
  corpus::write_manifest(result.output, o.out);
  if (!o.report.empty()) io::write_file_atomic(o.report, cascade::report_to_json(result.report));
  for (const auto& st : result.report.stages)
    ctx.log("stage {} -> {}: {} invoked, {} cached, {} failed", st.in, st.out, st.invoked,
            st.cache_hits, st.failed);
  ctx.log("cascade kept {} of {} record(s)", result.report.output_records,
          result.report.input_records);
}

// ---------------------------------------------------------------- manifest

struct ManifestStats {
  std::string in;
  ReportSink report;
};

void run_manifest_stats(const Context& ctx, const ManifestStats& o) {
  o.report.check();
  ojson j;
  j["languages"] = ojson::object();
  for (const auto& [lang, s] : corpus::manifest_stats(corpus::read_manifest(o.in))) {
    ojson e;
    e["count"] = s.count;
    e["total_duration_s"] = s.total_duration_s;
    e["total_hours"] = s.total_hours();
    e["speaker_count"] = s.speaker_count;
    e["missing_duration"] = s.missing_duration;
    j["languages"][lang] = std::move(e);
  }
  o.report.write(ctx, dump(j));
}

struct ManifestConvert {
  std::string in, out;
};

void run_manifest_convert(const Context&, const ManifestConvert& o) {
  corpus::write_manifest(corpus::read_manifest(o.in), o.out);
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"unitforge: data pipeline toolkit for textless speech-to-speech translation",
               "unitforge"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "Seed for randomized subcommands");
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--quiet", g.quiet, "Suppress log output");

  std::function<void(const Context&)> action;
  auto on = [&](CLI::App* sub, std::function<void(const Context&)> fn) {
    sub->fallthrough();
    sub->callback([&action, fn = std::move(fn)] { action = fn; });
  };

  // quantize
  auto* quantize_cmd = app.add_subcommand("quantize", "k-means unit quantizer");
  quantize_cmd->require_subcommand(1);
  QuantizeFit qfit;
  auto* qfit_cmd = quantize_cmd->add_subcommand("fit", "Train a codebook");
  qfit_cmd->add_option("--in", qfit.in, "Frame features (EMB1)")->required();
  qfit_cmd->add_option("--out", qfit.out, "Codebook path (EMB1 + .meta.jsonl)")->required();
  qfit_cmd->add_option("--k", qfit.k, "Number of units")->check(CLI::PositiveNumber);
  qfit_cmd->add_option("--max-iters", qfit.max_iters, "Lloyd iteration cap")->check(CLI::PositiveNumber);
  qfit_cmd->add_option("--tol", qfit.tol, "Centroid movement tolerance")->check(CLI::NonNegativeNumber);
  on(qfit_cmd, [&](const Context& c) { run_quantize_fit(c, qfit); });

  QuantizeAssign qassign;
  auto* qassign_cmd = quantize_cmd->add_subcommand("assign", "Map features to units");
  qassign_cmd->add_option("--codebook", qassign.codebook, "Codebook path")->required();
  qassign_cmd->add_option("--in", qassign.in, "Frame features (EMB1); writes one unit line");
  qassign_cmd->add_option("--manifest", qassign.manifest,
                          "Manifest whose records point at feature files");
  qassign_cmd->add_option("--features-field", qassign.features_field,
                          "Manifest field holding the feature path");
  qassign_cmd->add_option("--out", qassign.out, "Output path")->required();
  qassign_cmd->add_flag("--dedup", qassign.dedup, "Remove consecutive duplicate units");
  on(qassign_cmd, [&](const Context& c) { run_quantize_assign(c, qassign); });

  // units
  auto* units_cmd = app.add_subcommand("units", "Unit sequence post-processing");
  units_cmd->require_subcommand(1);
  UnitsOp udedup, ucollapse;
  auto add_units_io = [](CLI::App* sub, UnitsOp& o) {
    sub->add_option("--in", o.in, "Unit lines, or a .tsv/.jsonl manifest")->required();
    sub->add_option("--out", o.out, "Output path")->required();
    sub->add_option("--vocab-size", o.vocab_size, "Vocabulary size (default: max unit + 1)")
        ->check(CLI::PositiveNumber);
  };
  auto* udedup_cmd = units_cmd->add_subcommand("dedup", "Remove consecutive duplicate units");
  add_units_io(udedup_cmd, udedup);
  on(udedup_cmd, [&](const Context& c) { run_units(c, udedup, false); });
  auto* ucollapse_cmd = units_cmd->add_subcommand("ctc-collapse", "Greedy CTC collapse");
  add_units_io(ucollapse_cmd, ucollapse);
  ucollapse_cmd->add_option("--blank", ucollapse.blank, "Blank unit id")->required();
  on(ucollapse_cmd, [&](const Context& c) { run_units(c, ucollapse, true); });

  // embed
  auto* embed_cmd = app.add_subcommand("embed", "Embedding utilities");
  embed_cmd->require_subcommand(1);
  EmbedPool epool;
  auto* epool_cmd = embed_cmd->add_subcommand("pool", "Max-pool frame matrices, one row per file");
  epool_cmd->add_option("--in", epool.in, "Frame matrices (EMB1)")->required();
  epool_cmd->add_option("--out", epool.out, "Pooled matrix (EMB1, ids = file stems)")->required();
  on(epool_cmd, [&](const Context& c) { run_embed_pool(c, epool); });
  EmbedNormalize enorm;
  auto* enorm_cmd = embed_cmd->add_subcommand("normalize", "L2-normalize rows");
  enorm_cmd->add_option("--in", enorm.in, "Input matrix (EMB1)")->required();
  enorm_cmd->add_option("--out", enorm.out, "Output matrix (EMB1)")->required();
  on(enorm_cmd, [&](const Context& c) { run_embed_normalize(c, enorm); });

  // mine
  auto* mine_cmd = app.add_subcommand("mine", "Margin-based mining");
  mine_cmd->require_subcommand(0, 1);
  MineRun mrun_direct, mrun;
  add_mine_run_options(mine_cmd, mrun_direct);
  auto* mrun_cmd = mine_cmd->add_subcommand("run", "Mine pairs (same as plain 'mine')");
  add_mine_run_options(mrun_cmd, mrun);
  on(mrun_cmd, [&](const Context& c) { run_mine(c, mrun); });

  MineSweep msweep;
  auto* msweep_cmd = mine_cmd->add_subcommand("sweep", "Pair counts over a threshold sweep");
  add_mine_run_options(msweep_cmd, msweep.run);
  msweep_cmd->remove_option(msweep_cmd->get_option("--out"));
  msweep_cmd->remove_option(msweep_cmd->get_option("--threshold"));
  msweep_cmd->add_option("--thresholds", msweep.thresholds, "Thresholds to evaluate")
      ->required()
      ->delimiter(',');
  msweep.report.add_options(msweep_cmd, "Sweep report");
  on(msweep_cmd, [&](const Context& c) { run_mine_sweep(c, msweep); });

  MineFilterOverlap mfilter;
  auto* mfilter_cmd = mine_cmd->add_subcommand("filter-overlap", "Greedy segment-overlap filter");
  mfilter_cmd->add_option("--in", mfilter.in, "Pair file (TSV)")->required();
  mfilter_cmd->add_option("--out", mfilter.out, "Filtered pair file (TSV)")->required();
  mfilter_cmd->add_option("--max-overlap", mfilter.max_overlap, "Maximum overlap ratio")
      ->check(CLI::Range(0.0, 1.0));
  mfilter_cmd->add_option("--side", mfilter.side, "src | tgt | both");
  on(mfilter_cmd, [&](const Context& c) { run_mine_filter_overlap(c, mfilter); });

  MineSimsearch msim;
  auto* msim_cmd = mine_cmd->add_subcommand("simsearch-eval", "Similarity-search error rate");
  msim_cmd->add_option("--audio", msim.audio, "Audio embeddings (EMB1 with ids)")->required();
  msim_cmd->add_option("--text", msim.text, "Text embeddings (EMB1 with ids)")->required();
  msim_cmd->add_option("--gold", msim.gold, "Gold table 'audio_id<TAB>text_id'")->required();
  msim_cmd->add_option("--knn", msim.knn, "Margin neighborhood size")->check(CLI::PositiveNumber);
  msim_cmd->add_option("--margin", msim.margin, "ratio | distance | absolute");
  msim_cmd->add_flag("--no-normalize", msim.no_normalize, "Skip L2 normalization");
  msim.report.add_options(msim_cmd, "Error-rate report");
  on(msim_cmd, [&](const Context& c) { run_mine_simsearch(c, msim); });

  mine_cmd->fallthrough();
  mine_cmd->callback([&] {
    if (mine_cmd->get_subcommands().empty())
      action = [&](const Context& c) { run_mine(c, mrun_direct); };
  });

  // balance
  Balance bal;
  auto* bal_cmd = app.add_subcommand("balance", "Temperature sampling across languages");
  bal_cmd->add_option("--counts", bal.counts, "Table 'lang<TAB>amount'");
  bal_cmd->add_option("--from-manifest", bal.from_manifest, "Derive amounts from a manifest");
  bal_cmd->add_option("--by", bal.by, "duration | count (with --from-manifest)");
  bal_cmd->add_option("--temperature", bal.temperature, "Temperature T")
      ->check(CLI::PositiveNumber);
  bal_cmd->add_option("--out", bal.out, "Distribution (JSON)")->capture_default_str();
  bal_cmd->add_option("--pools", bal.pools, "Id pools 'lang<TAB>id' for --schedule");
  bal_cmd->add_option("--total", bal.total, "Number of scheduled draws");
  bal_cmd->add_option("--schedule", bal.schedule, "Write a sampled id schedule here");
  on(bal_cmd, [&](const Context& c) { run_balance(c, bal); });

  // bleu
  Bleu bleu;
  auto* bleu_cmd = app.add_subcommand("bleu", "Corpus BLEU");
  bleu_cmd->add_option("--hyp", bleu.hyp, "Hypotheses, one per line")->required();
  bleu_cmd->add_option("--ref", bleu.ref, "References, one per line")->required();
  bleu_cmd->add_option("--tokenizer", bleu.tokenizer,
                       "word13a | char | tailo_syllable | tailo_initial_final");
  bleu_cmd->add_option("--smooth", bleu.smooth, "none | exp");
  bleu.report.add_options(bleu_cmd, "BLEU report");
  on(bleu_cmd, [&](const Context& c) { run_bleu(c, bleu); });

  AsrBleu ableu;
  auto* ableu_cmd = app.add_subcommand("asr-bleu", "BLEU of ASR transcripts of generated audio");
  ableu_cmd->add_option("--manifest", ableu.manifest, "Generated audio manifest")->required();
  ableu_cmd->add_option("--ref", ableu.ref, "Reference text manifest")->required();
  ableu_cmd->add_option("--asr", ableu.asr, "ASR adapter endpoint (mock:..., exec:...)")
      ->required();
  ableu_cmd->add_option("--tokenizer", ableu.tokenizer,
                        "word13a | char | tailo_syllable | tailo_initial_final");
  ableu_cmd->add_option("--smooth", ableu.smooth, "none | exp");
  ableu.report.add_options(ableu_cmd, "BLEU report");
  on(ableu_cmd, [&](const Context& c) { run_asr_bleu(c, ableu); });

  // cascade
  auto* cascade_cmd = app.add_subcommand("cascade", "Pseudo-labeling cascades");
  cascade_cmd->require_subcommand(1);
  CascadeRun crun;
  auto* crun_cmd = cascade_cmd->add_subcommand("run", "Run a pipeline spec over a manifest");
  crun_cmd->add_option("--spec", crun.spec, "Pipeline spec (JSON)")->required();
  crun_cmd->add_option("--in", crun.in, "Source manifest")->required();
  crun_cmd->add_option("--out", crun.out, "Output manifest")->required();
  crun_cmd->add_option("--report", crun.report, "Drop report (JSON)");
  on(crun_cmd, [&](const Context& c) { run_cascade(c, crun); });

  // manifest
  auto* manifest_cmd = app.add_subcommand("manifest", "Manifest utilities");
  manifest_cmd->require_subcommand(1);
  ManifestStats mstats;
  auto* mstats_cmd = manifest_cmd->add_subcommand("stats", "Per-language statistics");
  mstats_cmd->add_option("--in", mstats.in, "Manifest")->required();
  mstats.report.add_options(mstats_cmd, "Statistics report");
  on(mstats_cmd, [&](const Context& c) { run_manifest_stats(c, mstats); });
  ManifestConvert mconv;
  auto* mconv_cmd = manifest_cmd->add_subcommand("convert", "Convert between TSV and JSONL");
  mconv_cmd->add_option("--in", mconv.in, "Input manifest")->required();
  mconv_cmd->add_option("--out", mconv.out, "Output manifest")->required();
  on(mconv_cmd, [&](const Context& c) { run_manifest_convert(c, mconv); });

  try {
    app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::ParseError& e) {
    // Unknown arguments are reported before missing requirements.
    const auto extras = app.remaining(true);
    if (!extras.empty() && e.get_exit_code() != 0) {
      app.exit(CLI::ExtrasError("unitforge", {extras.rbegin(), extras.rend()}), out, err);
      return kExitValidation;
    }
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  const Context ctx{g, out, err};
  try {
    if (!action) throw ValidationError("no command given");
    action(ctx);
  } catch (const ValidationError& e) {
    err << "unitforge: error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "unitforge: failure: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dispatch(args, std::cout, std::cerr);
}

}  // namespace unitforge::cli
