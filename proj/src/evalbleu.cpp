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

#include "unitforge/evalbleu.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

#include <fmt/format.h>
#include <json.hpp>

#include "unitforge/error.hpp"
#include "unitforge/text.hpp"

namespace unitforge::evalbleu {

namespace {

bool is_digit(char32_t c) { return c >= U'0' && c <= U'9'; }

bool in_13a_punct(char32_t c) {
  return (c >= U'{' && c <= U'~') || (c >= U'[' && c <= U'`') || (c >= U' ' && c <= U'&') ||
         (c >= U'(' && c <= U'+') || (c >= U':' && c <= U'@') || c == U'/';
}

bool is_period_or_comma(char32_t c) { return c == U'.' || c == U','; }

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

// Applies a two-character regex rule the way re.sub does: leftmost match
// first, then scanning resumes after the match.
template <typename First, typename Second, typename Emit>
std::u32string sub_pairs(const std::u32string& s, First first, Second second, Emit emit) {
  std::u32string out;
  out.reserve(s.size() + s.size() / 4);
  std::size_t i = 0;
  while (i < s.size()) {
    if (i + 1 < s.size() && first(s[i]) && second(s[i + 1])) {
      emit(out, s[i], s[i + 1]);
      i += 2;
    } else {
      out.push_back(s[i]);
      ++i;
    }
  }
  return out;
}

int tone_of_combining(char32_t c) {
  switch (c) {
    case 0x0301: return 2;
    case 0x0300: return 3;
    case 0x0302: return 5;
    case 0x030C: return 6;
    case 0x0304: return 7;
    case 0x030D: return 8;
    case 0x030B: return 9;
    case 0x0306: return 9;
    default: return 0;
  }
}

// Precomposed lowercase vowel/nasal with a tone mark -> (base, tone).
std::pair<char32_t, int> decompose_toned(char32_t c) {
  struct Entry {
    char32_t cp;
    char32_t base;
    int tone;
  };
  static constexpr Entry kTable[] = {
      {0xE1, U'a', 2},   {0xE9, U'e', 2},   {0xED, U'i', 2},   {0xF3, U'o', 2},
      {0xFA, U'u', 2},   {0x144, U'n', 2},  {0x1E3F, U'm', 2}, {0xE0, U'a', 3},
      {0xE8, U'e', 3},   {0xEC, U'i', 3},   {0xF2, U'o', 3},   {0xF9, U'u', 3},
      {0x1F9, U'n', 3},  {0xE2, U'a', 5},   {0xEA, U'e', 5},   {0xEE, U'i', 5},
      {0xF4, U'o', 5},   {0xFB, U'u', 5},   {0x1CE, U'a', 6},  {0x11B, U'e', 6},
      {0x1D0, U'i', 6},  {0x1D2, U'o', 6},  {0x1D4, U'u', 6},  {0x148, U'n', 6},
      {0x101, U'a', 7},  {0x113, U'e', 7},  {0x12B, U'i', 7},  {0x14D, U'o', 7},
      {0x16B, U'u', 7},  {0x151, U'o', 9},  {0x171, U'u', 9},  {0x103, U'a', 9},
      {0x115, U'e', 9},  {0x12D, U'i', 9},  {0x14F, U'o', 9},  {0x16D, U'u', 9},
  };
  for (const auto& e : kTable)
    if (e.cp == c) return {e.base, e.tone};
  return {c, 0};
}

bool is_punct(char32_t c) {
  if (c < 0x80) return c != '-' && std::ispunct(static_cast<int>(c));
  return (c >= 0x2000 && c <= 0x206F) || (c >= 0x3000 && c <= 0x303F) ||
         (c >= 0xFF01 && c <= 0xFF0F) || (c >= 0xFF1A && c <= 0xFF20) ||
         (c >= 0xFF3B && c <= 0xFF40) || (c >= 0xFF5B && c <= 0xFF65);
}

std::vector<std::string> tailo_syllables(std::string_view line) {
  std::vector<std::string> out;
  std::u32string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(tailo_to_digits(text::encode_utf8(cur)));
    cur.clear();
  };
  for (char32_t c : text::decode_utf8(line)) {
    if (text::is_space(c) || c == U'-' || is_punct(c)) {
      flush();
    } else {
      cur.push_back(c);
    }
  }
  flush();
  return out;
}

// Counts of every n-gram of order n in `tokens`.
std::map<std::vector<std::string_view>, std::size_t> ngram_counts(
    const std::vector<std::string>& tokens, std::size_t n) {
  std::map<std::vector<std::string_view>, std::size_t> counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::vector<std::string_view> key(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                      tokens.begin() + static_cast<std::ptrdiff_t>(i + n));
    ++counts[key];
  }
  return counts;
}

}  // namespace

Tokenizer parse_tokenizer(std::string_view tag) {
  if (tag == "word13a" || tag == "13a") return Tokenizer::kWord13a;
  if (tag == "char") return Tokenizer::kChar;
  if (tag == "tailo_syllable") return Tokenizer::kTailoSyllable;
  if (tag == "tailo_initial_final") return Tokenizer::kTailoInitialFinal;
  throw ValidationError(fmt::format(
      "unknown tokenizer '{}' (expected word13a, char, tailo_syllable, tailo_initial_final)", tag));
}

std::string_view to_string(Tokenizer t) {
  switch (t) {
    case Tokenizer::kWord13a: return "word13a";
    case Tokenizer::kChar: return "char";
    case Tokenizer::kTailoSyllable: return "tailo_syllable";
    case Tokenizer::kTailoInitialFinal: return "tailo_initial_final";
  }
  return "word13a";
}

std::string tokenize_13a(std::string_view raw) {
  // rstrip, then the language-independent replacements.
  auto cps = text::decode_utf8(raw);
  while (!cps.empty() && text::is_space(cps.back())) cps.pop_back();
  std::string line = text::encode_utf8(cps);
  replace_all(line, "<skipped>", "");
  replace_all(line, "-\n", "");
  replace_all(line, "\n", " ");
  if (line.find('&') != std::string::npos) {
    replace_all(line, "&quot;", "\"");
    replace_all(line, "&amp;", "&");
    replace_all(line, "&lt;", "<");
    replace_all(line, "&gt;", ">");
  }

  std::u32string s = U" " + text::decode_utf8(line) + U" ";
  {
    std::u32string out;
    out.reserve(s.size() * 2);
    for (char32_t c : s) {
      if (in_13a_punct(c)) {
        out.push_back(U' ');
        out.push_back(c);
        out.push_back(U' ');
      } else {
        out.push_back(c);
      }
    }
    s = std::move(out);
  }
  // period/comma unless preceded by a digit
  s = sub_pairs(s, [](char32_t c) { return !is_digit(c); }, is_period_or_comma,
                [](std::u32string& o, char32_t a, char32_t b) {
                  o.push_back(a);
                  o.push_back(U' ');
                  o.push_back(b);
                  o.push_back(U' ');
                });
  // period/comma unless followed by a digit
  s = sub_pairs(s, is_period_or_comma, [](char32_t c) { return !is_digit(c); },
                [](std::u32string& o, char32_t a, char32_t b) {
                  o.push_back(U' ');
                  o.push_back(a);
                  o.push_back(U' ');
                  o.push_back(b);
                });
  // dash preceded by a digit
  s = sub_pairs(s, is_digit, [](char32_t c) { return c == U'-'; },
                [](std::u32string& o, char32_t a, char32_t b) {
                  o.push_back(a);
                  o.push_back(U' ');
                  o.push_back(b);
                  o.push_back(U' ');
                });

  std::string joined;
  for (const auto& tok : text::split_whitespace(text::encode_utf8(s))) {
    if (!joined.empty()) joined.push_back(' ');
    joined += tok;
  }
  return joined;
}

std::string tailo_to_digits(std::string_view syllable) {
  std::u32string base;
  int tone = 0;
  for (char32_t c : text::decode_utf8(syllable)) {
    c = text::to_lower(c);
    if (int t = tone_of_combining(c)) {
      tone = t;
      continue;
    }
    if (c == 0x0358) {  // o͘ -> oo
      base.push_back(U'o');
      continue;
    }
    auto [b, t] = decompose_toned(c);
    if (t) tone = t;
    base.push_back(b);
  }
  if (tone && (base.empty() || !is_digit(base.back()))) base.push_back(U'0' + tone);
  return text::encode_utf8(base);
}

const std::vector<std::string>& tailo_initials() {
  static const std::vector<std::string> kInitials = {
      "tsh", "ph", "th", "kh", "ng", "ts", "p", "m", "b",
      "t",   "n",  "l",  "k",  "g",  "h",  "s", "j"};
  return kInitials;
}

namespace {

// A final carries a vowel, or is a syllabic nasal (m, ng) with optional glottal stop.
bool is_final(std::string_view rest) {
  std::string_view letters = rest;
  while (!letters.empty() && letters.back() >= '0' && letters.back() <= '9')
    letters.remove_suffix(1);
  if (letters.find_first_of("aeiou") != std::string_view::npos) return true;
  return letters == "m" || letters == "mh" || letters == "ng" || letters == "ngh";
}

}  // namespace

std::pair<std::string, std::string> tailo_split_syllable(std::string_view syllable) {
  if (syllable.empty()) throw ValidationError("empty Tâi-lô syllable");
  for (const auto& ini : tailo_initials()) {
    if (syllable.substr(0, ini.size()) != ini) continue;
    const auto rest = syllable.substr(ini.size());
    if (is_final(rest)) return {ini, std::string(rest)};
  }
  return {std::string(), std::string(syllable)};
}

std::vector<std::string> tokenize(std::string_view line, Tokenizer scheme) {
  switch (scheme) {
    case Tokenizer::kWord13a:
      return text::split_whitespace(tokenize_13a(line));
    case Tokenizer::kChar: {
      std::vector<std::string> out;
      for (char32_t c : text::decode_utf8(line)) {
        if (text::is_space(c)) continue;
        out.emplace_back();
        text::append_utf8(out.back(), c);
      }
      return out;
    }
    case Tokenizer::kTailoSyllable:
      return tailo_syllables(line);
    case Tokenizer::kTailoInitialFinal: {
      std::vector<std::string> out;
      for (const auto& syl : tailo_syllables(line)) {
        auto [ini, fin] = tailo_split_syllable(syl);
        if (!ini.empty()) out.push_back(std::move(ini));
        out.push_back(std::move(fin));
      }
      return out;
    }
  }
  return {};
}

TokenizedCorpus tokenize_corpus(const std::vector<std::string>& lines, Tokenizer scheme) {
  TokenizedCorpus c;
  c.tokenizer = scheme;
  c.segments.reserve(lines.size());
  for (const auto& l : lines) c.segments.push_back(tokenize(l, scheme));
  return c;
}

Smoothing parse_smoothing(std::string_view s) {
  if (s == "none") return Smoothing::kNone;
  if (s == "exp") return Smoothing::kExp;
  throw ValidationError(fmt::format("unknown smoothing '{}' (expected none, exp)", s));
}

BleuReport corpus_bleu(const TokenizedCorpus& hyps, const TokenizedCorpus& refs,
                       std::size_t max_n, Smoothing smoothing) {
  if (hyps.segments.size() != refs.segments.size())
    throw ValidationError(fmt::format("{} hypotheses but {} references", hyps.segments.size(),
                                      refs.segments.size()));
  if (hyps.tokenizer != refs.tokenizer)
    throw ValidationError("hypotheses and references use different tokenizers");
  if (hyps.segments.empty()) throw ValidationError("empty corpus");
  if (max_n == 0) throw ValidationError("max_n must be at least 1");

  BleuReport r;
  r.tokenizer = hyps.tokenizer;
  r.matches.assign(max_n, 0);
  r.totals.assign(max_n, 0);
  r.precisions.assign(max_n, 0.0);
  for (std::size_t s = 0; s < hyps.segments.size(); ++s) {
    const auto& h = hyps.segments[s];
    const auto& ref = refs.segments[s];
    r.hyp_len += h.size();
    r.ref_len += ref.size();
    for (std::size_t n = 1; n <= max_n; ++n) {
      const auto hc = ngram_counts(h, n);
      const auto rc = ngram_counts(ref, n);
      for (const auto& [gram, count] : hc) {
        r.totals[n - 1] += count;
        auto it = rc.find(gram);
        if (it != rc.end()) r.matches[n - 1] += std::min(count, it->second);
      }
    }
  }

  if (r.hyp_len < r.ref_len)
    r.brevity_penalty = r.hyp_len > 0 ? std::exp(1.0 - static_cast<double>(r.ref_len) /
                                                           static_cast<double>(r.hyp_len))
                                      : 0.0;

  if (std::all_of(r.matches.begin(), r.matches.end(), [](std::size_t m) { return m == 0; }))
    return r;

  double smooth = 1;
  bool zero = false;
  double log_sum = 0;
  for (std::size_t n = 0; n < max_n; ++n) {
    if (r.totals[n] == 0) {
      zero = true;
      break;
    }
    const auto total = static_cast<double>(r.totals[n]);
    if (r.matches[n] == 0) {
      if (smoothing == Smoothing::kExp) {
        smooth *= 2;
        r.precisions[n] = 1.0 / (smooth * total);
      } else {
        zero = true;
        continue;
      }
    } else {
      r.precisions[n] = static_cast<double>(r.matches[n]) / total;
    }
    log_sum += std::log(r.precisions[n]);
  }
  if (!zero) r.bleu = 100.0 * r.brevity_penalty * std::exp(log_sum / static_cast<double>(max_n));
  return r;
}

BleuReport asr_bleu(const corpus::Manifest& generated, const corpus::Manifest& reference,
                    const adapter::Adapter& asr, Tokenizer scheme, const adapter::Cache* cache,
                    const ExecContext& ctx, Smoothing smoothing) {
  if (generated.size() != reference.size())
    throw ValidationError(fmt::format("generated manifest has {} records, reference has {}",
                                      generated.size(), reference.size()));
  std::vector<const corpus::Utterance*> gen;
  for (const auto& u : generated.records()) gen.push_back(&u);
  std::sort(gen.begin(), gen.end(),
            [](const corpus::Utterance* a, const corpus::Utterance* b) { return a->id < b->id; });

  std::vector<std::string> audio;
  std::vector<std::string> ref_text;
  for (const auto* u : gen) {
    const auto* ref = reference.find(u->id);
    if (!ref) throw ValidationError(fmt::format("id '{}' has no reference record", u->id));
    if (!ref->text) throw ValidationError(fmt::format("reference '{}' has no text", u->id));
    if (!u->audio_ref) throw ValidationError(fmt::format("generated '{}' has no audio", u->id));
    audio.push_back(*u->audio_ref);
    ref_text.push_back(*ref->text);
  }

  const auto results = adapter::invoke_all(asr, audio, cache, ctx);
  std::vector<std::string> failures;
  std::vector<std::string> transcripts;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (!results[i].ok()) {
      failures.push_back(fmt::format("{}: {}", gen[i]->id, results[i].error));
    } else {
      transcripts.push_back(*results[i].output);
    }
  }
  if (!failures.empty())
    throw adapter::AdapterError(fmt::format("ASR failed for {} record(s): {}", failures.size(),
                                            fmt::join(failures, "; ")));

  return corpus_bleu(tokenize_corpus(transcripts, scheme), tokenize_corpus(ref_text, scheme), 4,
                     smoothing);
}

std::string report_to_json(const BleuReport& r) {
  nlohmann::ordered_json j;
  j["bleu"] = r.bleu;
  j["precisions"] = r.precisions;
  j["matches"] = r.matches;
  j["totals"] = r.totals;
  j["brevity_penalty"] = r.brevity_penalty;
  j["hyp_len"] = r.hyp_len;
  j["ref_len"] = r.ref_len;
  j["tokenizer"] = std::string(to_string(r.tokenizer));
  return j.dump(2) + "\n";
}

}  // namespace unitforge::evalbleu
