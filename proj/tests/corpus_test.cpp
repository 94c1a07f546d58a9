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

#include <numeric>

#include "unitforge/corpus.hpp"
#include "unitforge/error.hpp"
#include "support.hpp"

namespace unitforge::corpus {
namespace {

using testing::ScratchDir;

const char* kTsv =
    "id\tlang\taudio\tduration_s\tspeaker\ttext\tunits\n"
    "u1\ten\ta/u1.wav\t1.62\tspk1\thello world\t5 2 9\n"
    "u2\tnan\ta/u2.wav\t3\t\tlí hó\t\n";

TEST(Corpus, ReadsTsvInFileOrder) {
  const auto m = parse_manifest(kTsv, ManifestFormat::kTsv);
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m.records()[0].id, "u1");
  EXPECT_EQ(m.records()[1].id, "u2");
  EXPECT_EQ(m.records()[0].units, (std::vector<std::int32_t>{5, 2, 9}));
  EXPECT_FALSE(m.records()[1].speaker.has_value());
  EXPECT_FALSE(m.records()[1].units.has_value());
  EXPECT_DOUBLE_EQ(*m.records()[0].duration_s, 1.62);
}

TEST(Corpus, DuplicateIdCitesLine) {
  const std::string tsv = "id\tlang\nu0\ten\nu1\ten\nu1\ten\n";
  try {
    parse_manifest(tsv, ManifestFormat::kTsv, "dup.tsv");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4u);
    EXPECT_NE(std::string(e.what()).find("u1"), std::string::npos);
  }
  const std::string tsv2 = "id\tlang\nu1\ten\nu1\ten\n";
  try {
    parse_manifest(tsv2, ManifestFormat::kTsv, "dup.tsv");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Corpus, MalformedLines) {
  EXPECT_THROW(parse_manifest("id\tlang\nu1\ten\textra\n", ManifestFormat::kTsv), ParseError);
  EXPECT_THROW(parse_manifest("id\tduration_s\nu1\tabc\n", ManifestFormat::kTsv), ParseError);
  EXPECT_THROW(parse_manifest("id\tduration_s\nu1\t-1\n", ManifestFormat::kTsv), ParseError);
  EXPECT_THROW(parse_manifest("lang\nen\n", ManifestFormat::kTsv), ParseError);
  EXPECT_THROW(parse_manifest("{\"id\": 3}\n", ManifestFormat::kJsonl), ParseError);
  EXPECT_THROW(parse_manifest("not json\n", ManifestFormat::kJsonl), ParseError);
}

TEST(Corpus, JsonlDuration) {
  const auto m = parse_manifest("{\"id\":\"a\",\"duration_s\":1.62}\n", ManifestFormat::kJsonl);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_DOUBLE_EQ(*m.records()[0].duration_s, 1.62);
}

TEST(Corpus, UnknownColumnsPreserved) {
  const auto m = parse_manifest("id\tsplit\tlang\nu1\tdev\ten\n", ManifestFormat::kTsv);
  ASSERT_NE(m.records()[0].find_extra("split"), nullptr);
  EXPECT_EQ(*m.records()[0].find_extra("split"), "dev");
  const auto back = parse_manifest(serialize_manifest(m, ManifestFormat::kTsv), ManifestFormat::kTsv);
  EXPECT_EQ(back, m);
}

Manifest random_manifest(Rng& rng, std::size_t n, bool tsv_safe) {
  static const std::vector<std::string> langs = {"en", "zh", "nan"};
  static const std::vector<std::string> words = {"hello", "你好", "tâi-lô", "x", "a b"};
  Manifest m;
  m.meta()["corpus"] = "synthetic";
  for (std::size_t i = 0; i < n; ++i) {
    Utterance u;
    u.id = "utt" + std::to_string(i);
    u.lang = langs[rng.uniform_index(langs.size())];
    if (rng.uniform01() < 0.8) u.audio_ref = "audio/" + u.id + ".wav";
    if (rng.uniform01() < 0.8) u.duration_s = rng.uniform01() * 20;
    if (rng.uniform01() < 0.5) u.speaker = "spk" + std::to_string(rng.uniform_index(5));
    if (rng.uniform01() < 0.7) u.text = words[rng.uniform_index(words.size())];
    if (!tsv_safe && rng.uniform01() < 0.2) u.text = "";
    if (rng.uniform01() < 0.5) {
      std::vector<std::int32_t> units(1 + rng.uniform_index(10));
      for (auto& x : units) x = static_cast<std::int32_t>(rng.uniform_index(2500));
      u.units = units;
    }
    if (rng.uniform01() < 0.3) u.set_extra("split", "dev");
    m.add(std::move(u));
  }
  return m;
}

TEST(Corpus, RoundTripBothFormats) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto tsv = random_manifest(rng, 1 + rng.uniform_index(30), true);
    EXPECT_EQ(parse_manifest(serialize_manifest(tsv, ManifestFormat::kTsv), ManifestFormat::kTsv), tsv);
    const auto js = random_manifest(rng, 1 + rng.uniform_index(30), false);
    EXPECT_EQ(parse_manifest(serialize_manifest(js, ManifestFormat::kJsonl), ManifestFormat::kJsonl), js);
  }
}

TEST(Corpus, FileRoundTripByExtension) {
  ScratchDir dir("corpus");
  Rng rng(3);
  const auto m = random_manifest(rng, 20, true);
  write_manifest(m, dir / "m.tsv");
  write_manifest(m, dir / "m.jsonl");
  EXPECT_EQ(read_manifest(dir / "m.tsv"), m);
  EXPECT_EQ(read_manifest(dir / "m.jsonl"), m);
  EXPECT_NE(testing::slurp(dir / "m.jsonl").find("\"_meta\""), std::string::npos);
}

TEST(Corpus, TsvRejectsTabsInFields) {
  Manifest m;
  Utterance u;
  u.id = "a";
  u.text = "x\ty";
  m.add(u);
  EXPECT_THROW(serialize_manifest(m, ManifestFormat::kTsv), ValidationError);
  EXPECT_NO_THROW(serialize_manifest(m, ManifestFormat::kJsonl));
}

TEST(Corpus, StatsTableRow) {
  // 722 records averaging 8.078 s, as in an English dev split.
  Manifest m;
  for (int i = 0; i < 722; ++i) {
    Utterance u;
    u.id = "en" + std::to_string(i);
    u.lang = "en";
    u.duration_s = (i % 2 == 0) ? 8.078 - 0.5 : 8.078 + 0.5;
    u.speaker = "s" + std::to_string(i % 10);
    m.add(u);
  }
  const auto stats = manifest_stats(m);
  ASSERT_EQ(stats.count("en"), 1u);
  EXPECT_EQ(stats.at("en").count, 722u);
  EXPECT_EQ(stats.at("en").speaker_count, 10u);
  EXPECT_EQ(std::round(stats.at("en").total_hours() * 100) / 100, 1.62);
}

TEST(Corpus, StatsEmptyAndMissing) {
  EXPECT_TRUE(manifest_stats(Manifest{}).empty());
  Manifest m;
  for (int i = 0; i < 3; ++i) {
    Utterance u;
    u.id = std::to_string(i);
    u.lang = "zh";
    if (i != 1) u.duration_s = 2.5;
    m.add(u);
  }
  const auto s = manifest_stats(m).at("zh");
  EXPECT_EQ(s.count, 3u);
  EXPECT_DOUBLE_EQ(s.total_duration_s, 5.0);
  EXPECT_EQ(s.missing_duration, 1u);
}

TEST(Corpus, StatsPermutationInvariant) {
  Rng rng(99);
  auto m = random_manifest(rng, 200, true);
  const auto base = manifest_stats(m);
  std::vector<Utterance> recs = m.records();
  for (int trial = 0; trial < 20; ++trial) {
    for (std::size_t i = recs.size(); i > 1; --i) std::swap(recs[i - 1], recs[rng.uniform_index(i)]);
    Manifest p;
    for (const auto& u : recs) p.add(u);
    const auto s = manifest_stats(p);
    for (const auto& [lang, st] : base) EXPECT_EQ(s.at(lang).total_duration_s, st.total_duration_s);
  }
}

TEST(Corpus, Segments) {
  EXPECT_NO_THROW(make_segment("a", 0, 1));
  EXPECT_THROW(make_segment("a", 1, 1), ValidationError);
  EXPECT_THROW(make_segment("a", -1, 1), ValidationError);
  EXPECT_THROW(make_segment("", 0, 1), ValidationError);
  EXPECT_THROW(make_segment("a", 0, std::numeric_limits<double>::infinity()), ValidationError);
  ScratchDir dir("seg");
  testing::spit(dir / "s.tsv", "id\taudio\tstart\tend\nx\tA\t0\t10\ny\tA\t8\t18\n");
  const auto segs = read_segments(dir / "s.tsv");
  EXPECT_EQ(segs.at("y"), (Segment{"A", 8, 18}));
}

TEST(Corpus, ManifestRejectsBadRecords) {
  Manifest m;
  Utterance u;
  EXPECT_THROW(m.add(u), ValidationError);
  u.id = "a";
  u.duration_s = std::nan("");
  EXPECT_THROW(m.add(u), ValidationError);
  u.duration_s = 1;
  m.add(u);
  EXPECT_THROW(m.add(u), ValidationError);
}

}  // namespace
}  // namespace unitforge::corpus
