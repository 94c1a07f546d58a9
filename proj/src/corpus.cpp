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

#include "unitforge/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>
#include <json.hpp>

#include "unitforge/error.hpp"
#include "unitforge/io.hpp"
#include "unitforge/text.hpp"

namespace unitforge::corpus {

namespace {

using nlohmann::json;

constexpr std::string_view kFixedColumns[] = {kIdField,      kLangField, kAudioField,
                                              kDurationField, kSpeakerField, kTextField,
                                              kUnitsField};

double parse_duration(std::string_view s) {
  double d = 0;
  if (!io::parse_double(s, d) || !std::isfinite(d) || d < 0)
    throw ValidationError(fmt::format("invalid duration '{}'", s));
  return d;
}

void check_tsv_safe(std::string_view field, std::string_view value) {
  if (value.find_first_of("\t\n\r") != std::string_view::npos)
    throw ValidationError(
        fmt::format("field '{}' contains a tab or newline, not representable in TSV", field));
}

Utterance utterance_from_json(const json& obj) {
  if (!obj.is_object()) throw ValidationError("record is not a JSON object");
  Utterance u;
  for (const auto& [key, value] : obj.items()) {
    if (key == kIdField) {
      if (!value.is_string()) throw ValidationError("id must be a string");
      u.id = value.get<std::string>();
    } else if (key == kLangField) {
      if (!value.is_string()) throw ValidationError("lang must be a string");
      u.lang = value.get<std::string>();
    } else if (key == kDurationField) {
      if (value.is_null()) continue;
      if (!value.is_number()) throw ValidationError("duration_s must be a number");
      const double d = value.get<double>();
      if (!std::isfinite(d) || d < 0)
        throw ValidationError(fmt::format("invalid duration {}", d));
      u.duration_s = d;
    } else if (key == kUnitsField) {
      if (value.is_null()) continue;
      if (value.is_string()) {
        u.units = parse_units(value.get<std::string>());
      } else if (value.is_array()) {
        std::vector<std::int32_t> units;
        for (const auto& x : value) {
          if (!x.is_number_integer() || x.get<long long>() < 0 ||
              x.get<long long>() > INT32_MAX)
            throw ValidationError("units must be nonnegative integers");
          units.push_back(x.get<std::int32_t>());
        }
        u.units = std::move(units);
      } else {
        throw ValidationError("units must be an array or a string");
      }
    } else if (key == kAudioField || key == kSpeakerField || key == kTextField) {
      if (value.is_null()) continue;
      if (!value.is_string()) throw ValidationError(fmt::format("{} must be a string", key));
      set_field(u, key, value.get<std::string>());
    } else {
      u.set_extra(key, value.is_string() ? value.get<std::string>() : value.dump());
    }
  }
  return u;
}

}  // namespace

const std::string* Utterance::find_extra(std::string_view key) const {
  for (const auto& [k, v] : extra)
    if (k == key) return &v;
  return nullptr;
}

void Utterance::set_extra(std::string key, std::string value) {
  for (auto& [k, v] : extra) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  extra.emplace_back(std::move(key), std::move(value));
}

std::optional<std::string> get_field(const Utterance& u, std::string_view name) {
  if (name == kIdField) return u.id;
  if (name == kLangField) return u.lang;
  if (name == kAudioField) return u.audio_ref;
  if (name == kDurationField) {
    if (!u.duration_s) return std::nullopt;
    return io::format_double(*u.duration_s);
  }
  if (name == kSpeakerField) return u.speaker;
  if (name == kTextField) return u.text;
  if (name == kUnitsField) {
    if (!u.units) return std::nullopt;
    return format_units(*u.units);
  }
  if (const auto* v = u.find_extra(name)) return *v;
  return std::nullopt;
}

void set_field(Utterance& u, std::string_view name, std::string value) {
  if (name == kIdField) throw ValidationError("the id field cannot be overwritten");
  if (name == kLangField) {
    u.lang = std::move(value);
  } else if (name == kAudioField) {
    u.audio_ref = std::move(value);
  } else if (name == kDurationField) {
    u.duration_s = parse_duration(value);
  } else if (name == kSpeakerField) {
    u.speaker = std::move(value);
  } else if (name == kTextField) {
    u.text = std::move(value);
  } else if (name == kUnitsField) {
    u.units = parse_units(value);
  } else {
    u.set_extra(std::string(name), std::move(value));
  }
}

std::string format_units(const std::vector<std::int32_t>& units) {
  std::string out;
  for (std::size_t i = 0; i < units.size(); ++i) {
    if (i) out.push_back(' ');
    out += std::to_string(units[i]);
  }
  return out;
}

std::vector<std::int32_t> parse_units(std::string_view s) {
  std::vector<std::int32_t> units;
  for (const auto& tok : text::split_whitespace(s)) {
    long long v = 0;
    if (!io::parse_int64(tok, v) || v < 0 || v > INT32_MAX)
      throw ValidationError(fmt::format("invalid unit id '{}'", tok));
    units.push_back(static_cast<std::int32_t>(v));
  }
  return units;
}

void Manifest::add(Utterance u) {
  if (u.id.empty()) throw ValidationError("record id is empty");
  if (u.duration_s && (!std::isfinite(*u.duration_s) || *u.duration_s < 0))
    throw ValidationError(fmt::format("record '{}' has invalid duration", u.id));
  if (index_.count(u.id)) throw ValidationError(fmt::format("duplicate id '{}'", u.id));
  index_.emplace(u.id, records_.size());
  records_.push_back(std::move(u));
}

const Utterance* Manifest::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &records_[it->second];
}

std::vector<std::string> Manifest::extra_fields() const {
  std::vector<std::string> names;
  std::set<std::string, std::less<>> seen;
  for (const auto& r : records_)
    for (const auto& [k, v] : r.extra)
      if (seen.insert(k).second) names.push_back(k);
  return names;
}

bool Manifest::has_field(std::string_view name) const {
  return std::any_of(records_.begin(), records_.end(),
                     [&](const Utterance& u) { return get_field(u, name).has_value(); });
}

ManifestFormat format_for_path(const std::filesystem::path& path) {
  return path.extension() == ".jsonl" ? ManifestFormat::kJsonl : ManifestFormat::kTsv;
}

Manifest parse_manifest(std::string_view content, ManifestFormat format,
                        const std::string& source_name) {
  const auto lines = io::split_lines(content);
  Manifest m;
  std::size_t lineno = 0;

  auto fail = [&](const std::string& what) -> ParseError {
    return ParseError(source_name, lineno, what);
  };

  if (format == ManifestFormat::kJsonl) {
    for (const auto& line : lines) {
      ++lineno;
      if (line.empty()) continue;
      json obj;
      try {
        obj = json::parse(line);
      } catch (const json::parse_error& e) {
        throw fail(fmt::format("malformed JSON: {}", e.what()));
      }
      if (obj.is_object() && obj.contains("_meta")) {
        if (!obj["_meta"].is_object()) throw fail("_meta must be an object");
        for (const auto& [k, v] : obj["_meta"].items())
          m.meta()[k] = v.is_string() ? v.get<std::string>() : v.dump();
        continue;
      }
      try {
        m.add(utterance_from_json(obj));
      } catch (const ValidationError& e) {
        throw fail(e.what());
      }
    }
    return m;
  }

  // TSV: optional "#key=value" meta lines, then the header row.
  std::vector<std::string> header;
  std::size_t i = 0;
  for (; i < lines.size(); ++i) {
    lineno = i + 1;
    const auto& line = lines[i];
    if (!line.empty() && line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw fail("meta line must be '#key=value'");
      m.meta()[line.substr(1, eq - 1)] = line.substr(eq + 1);
      continue;
    }
    for (auto f : text::split_fields(line, '\t')) header.emplace_back(f);
    ++i;
    break;
  }
  if (header.empty()) {
    lineno = 0;
    throw fail("missing header row");
  }
  int id_col = -1;
  {
    std::set<std::string> seen;
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (!seen.insert(header[c]).second) throw fail(fmt::format("duplicate column '{}'", header[c]));
      if (header[c] == kIdField) id_col = static_cast<int>(c);
    }
  }
  if (id_col < 0) throw fail("header has no 'id' column");

  for (; i < lines.size(); ++i) {
    lineno = i + 1;
    const auto& line = lines[i];
    if (line.empty()) continue;
    const auto cells = text::split_fields(line, '\t');
    if (cells.size() != header.size())
      throw fail(fmt::format("expected {} columns, found {}", header.size(), cells.size()));
    Utterance u;
    try {
      for (std::size_t c = 0; c < header.size(); ++c) {
        const auto& name = header[c];
        const auto cell = cells[c];
        if (name == kIdField) {
          u.id = std::string(cell);
        } else if (name == kLangField) {
          u.lang = std::string(cell);
        } else if (cell.empty()) {
          continue;
        } else {
          set_field(u, name, std::string(cell));
        }
      }
      m.add(std::move(u));
    } catch (const ParseError&) {
      throw;
    } catch (const ValidationError& e) {
      throw fail(e.what());
    }
  }
  return m;
}

std::string serialize_manifest(const Manifest& m, ManifestFormat format) {
  std::string out;
  if (format == ManifestFormat::kJsonl) {
    if (!m.meta().empty()) {
      json meta = json::object();
      for (const auto& [k, v] : m.meta()) meta[k] = v;
      out += json{{"_meta", meta}}.dump() + "\n";
    }
    for (const auto& r : m.records()) {
      nlohmann::ordered_json obj;
      obj[std::string(kIdField)] = r.id;
      obj[std::string(kLangField)] = r.lang;
      if (r.audio_ref) obj[std::string(kAudioField)] = *r.audio_ref;
      if (r.duration_s) obj[std::string(kDurationField)] = *r.duration_s;
      if (r.speaker) obj[std::string(kSpeakerField)] = *r.speaker;
      if (r.text) obj[std::string(kTextField)] = *r.text;
      if (r.units) obj[std::string(kUnitsField)] = *r.units;
      for (const auto& [k, v] : r.extra) obj[k] = v;
      out += obj.dump() + "\n";
    }
    return out;
  }

  for (const auto& [k, v] : m.meta()) {
    if (k.find('=') != std::string::npos) throw ValidationError("meta key contains '='");
    check_tsv_safe(k, v);
    out += "#" + k + "=" + v + "\n";
  }
  const auto extras = m.extra_fields();
  std::vector<std::string> columns(std::begin(kFixedColumns), std::end(kFixedColumns));
  columns.insert(columns.end(), extras.begin(), extras.end());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (c) out.push_back('\t');
    out += columns[c];
  }
  out.push_back('\n');
  for (const auto& r : m.records()) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c) out.push_back('\t');
      const auto value = get_field(r, columns[c]);
      if (value) {
        check_tsv_safe(columns[c], *value);
        out += *value;
      }
    }
    out.push_back('\n');
  }
  return out;
}

Manifest read_manifest(const std::filesystem::path& path, ManifestFormat format) {
  return parse_manifest(io::read_file(path), format, path.string());
}

Manifest read_manifest(const std::filesystem::path& path) {
  return read_manifest(path, format_for_path(path));
}

void write_manifest(const Manifest& m, const std::filesystem::path& path,
                    ManifestFormat format) {
  io::write_file_atomic(path, serialize_manifest(m, format));
}

void write_manifest(const Manifest& m, const std::filesystem::path& path) {
  write_manifest(m, path, format_for_path(path));
}

Segment make_segment(std::string audio_id, double start_s, double end_s) {
  if (audio_id.empty()) throw ValidationError("segment audio id is empty");
  if (!std::isfinite(start_s) || !std::isfinite(end_s) || start_s < 0 || start_s >= end_s)
    throw ValidationError(
        fmt::format("invalid segment [{}, {}) on '{}'", start_s, end_s, audio_id));
  return Segment{std::move(audio_id), start_s, end_s};
}

std::unordered_map<std::string, Segment> read_segments(const std::filesystem::path& path) {
  const auto lines = io::read_lines(path);
  std::unordered_map<std::string, Segment> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto& line = lines[i];
    if (line.empty()) continue;
    const auto cells = text::split_fields(line, '\t');
    if (i == 0 && !cells.empty() && cells[0] == "id") continue;
    if (cells.size() != 4)
      throw ParseError(path.string(), i + 1,
                       fmt::format("expected 4 columns, found {}", cells.size()));
    double start = 0, end = 0;
    if (!io::parse_double(cells[2], start) || !io::parse_double(cells[3], end))
      throw ParseError(path.string(), i + 1, "unparsable segment time");
    try {
      auto seg = make_segment(std::string(cells[1]), start, end);
      if (!out.emplace(std::string(cells[0]), std::move(seg)).second)
        throw ValidationError(fmt::format("duplicate id '{}'", cells[0]));
    } catch (const ParseError&) {
      throw;
    } catch (const ValidationError& e) {
      throw ParseError(path.string(), i + 1, e.what());
    }
  }
  return out;
}

std::map<std::string, LanguageStats> manifest_stats(const Manifest& m) {
  std::map<std::string, LanguageStats> stats;
  std::map<std::string, std::vector<double>> durations;
  std::map<std::string, std::set<std::string>> speakers;
  for (const auto& r : m.records()) {
    auto& s = stats[r.lang];
    ++s.count;
    if (r.duration_s) {
      durations[r.lang].push_back(*r.duration_s);
    } else {
      ++s.missing_duration;
    }
    if (r.speaker) speakers[r.lang].insert(*r.speaker);
  }
  for (auto& [lang, s] : stats) {
    auto& d = durations[lang];
    std::sort(d.begin(), d.end());
    for (double x : d) s.total_duration_s += x;
    s.speaker_count = speakers[lang].size();
  }
  return stats;
}

}  // namespace unitforge::corpus
