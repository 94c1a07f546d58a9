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

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace unitforge::corpus {

// One corpus record. Optional fields are absent rather than empty; the TSV
// format cannot tell the two apart (an empty cell reads back as absent).
struct Utterance {
  std::string id;
  std::string lang;
  std::optional<std::string> audio_ref;
  std::optional<double> duration_s;
  std::optional<std::string> speaker;
  std::optional<std::string> text;
  std::optional<std::vector<std::int32_t>> units;
  // Columns/keys outside the fixed schema, in first-seen order.
  std::vector<std::pair<std::string, std::string>> extra;

  const std::string* find_extra(std::string_view key) const;
  void set_extra(std::string key, std::string value);

  bool operator==(const Utterance&) const = default;
};

// Names of the fixed fields, in TSV column order.
inline constexpr std::string_view kIdField = "id";
inline constexpr std::string_view kLangField = "lang";
inline constexpr std::string_view kAudioField = "audio";
inline constexpr std::string_view kDurationField = "duration_s";
inline constexpr std::string_view kSpeakerField = "speaker";
inline constexpr std::string_view kTextField = "text";
inline constexpr std::string_view kUnitsField = "units";

// Reads any field by name (fixed or extra) as its serialized string form.
std::optional<std::string> get_field(const Utterance& u, std::string_view name);
// Parses `value` into the named field. Throws ValidationError if the value
// is not valid for a typed field (duration_s, units) or the field is `id`.
void set_field(Utterance& u, std::string_view name, std::string value);

std::string format_units(const std::vector<std::int32_t>& units);
// Space-separated nonnegative integers. Throws ValidationError.
std::vector<std::int32_t> parse_units(std::string_view s);

class Manifest {
 public:
  Manifest() = default;

  // Throws ValidationError on an empty or duplicate id, or a negative or
  // non-finite duration.
  void add(Utterance u);

  const std::vector<Utterance>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const Utterance* find(std::string_view id) const;

  std::map<std::string, std::string>& meta() { return meta_; }
  const std::map<std::string, std::string>& meta() const { return meta_; }

  // Extra field names across all records, in first-seen order.
  std::vector<std::string> extra_fields() const;
  // True if any record carries a value for the field.
  bool has_field(std::string_view name) const;

  bool operator==(const Manifest& o) const {
    return records_ == o.records_ && meta_ == o.meta_;
  }

 private:
  std::vector<Utterance> records_;
  std::unordered_map<std::string, std::size_t> index_;
  std::map<std::string, std::string> meta_;
};

enum class ManifestFormat { kTsv, kJsonl };

// .jsonl selects JSONL; anything else is TSV.
ManifestFormat format_for_path(const std::filesystem::path& path);

// Parse errors are ParseError carrying the 1-based line number.
Manifest parse_manifest(std::string_view content, ManifestFormat format,
                        const std::string& source_name = {});
std::string serialize_manifest(const Manifest& m, ManifestFormat format);

Manifest read_manifest(const std::filesystem::path& path, ManifestFormat format);
Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const Manifest& m, const std::filesystem::path& path,
                    ManifestFormat format);
void write_manifest(const Manifest& m, const std::filesystem::path& path);

// A time span within one audio file, [start_s, end_s).
struct Segment {
  std::string audio_id;
  double start_s = 0;
  double end_s = 0;

  double duration() const { return end_s - start_s; }
  bool operator==(const Segment&) const = default;
};

// Throws ValidationError unless 0 <= start < end, both finite, and the
// audio id is nonempty.
Segment make_segment(std::string audio_id, double start_s, double end_s);

// Segment table: `id<TAB>audio<TAB>start<TAB>end`, optional header row
// starting with "id". Keyed by id.
std::unordered_map<std::string, Segment> read_segments(const std::filesystem::path& path);

struct LanguageStats {
  std::size_t count = 0;
  double total_duration_s = 0;
  std::size_t speaker_count = 0;
  std::size_t missing_duration = 0;

  double total_hours() const { return total_duration_s / 3600.0; }
};

// Keyed by language code. Durations are summed in ascending order so the
// totals do not depend on record order.
std::map<std::string, LanguageStats> manifest_stats(const Manifest& m);

}  // namespace unitforge::corpus
