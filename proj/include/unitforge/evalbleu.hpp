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
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "unitforge/adapter.hpp"
#include "unitforge/corpus.hpp"
#include "unitforge/parallel.hpp"

namespace unitforge::evalbleu {

enum class Tokenizer { kWord13a, kChar, kTailoSyllable, kTailoInitialFinal };

Tokenizer parse_tokenizer(std::string_view tag);
std::string_view to_string(Tokenizer t);

// word13a   mteval-v13a rules as implemented by SacreBLEU's default tokenizer
// char      one token per non-whitespace character
// tailo_*   lowercased, tone diacritics rewritten as digits, split on hyphens
//           and whitespace; tailo_initial_final further splits each syllable
//           into its initial (when present) and final-with-tone
std::vector<std::string> tokenize(std::string_view text, Tokenizer scheme);

// The 13a tokenized line, tokens joined by single spaces.
std::string tokenize_13a(std::string_view line);

// Lowercases and rewrites a tone diacritic (acute 2, grave 3, circumflex 5,
// caron 6, macron 7, vertical line 8, double acute 9) as a trailing digit.
// Syllables without a tone mark are returned lowercased only.
std::string tailo_to_digits(std::string_view syllable);

// Splits a lowercase Tâi-lô syllable into (initial, final_with_tone) by the
// longest matching initial. When nothing but a tone digit would remain (m5,
// ng7) the syllable is a syllabic nasal with an empty initial.
// initial + final == syllable. Throws ValidationError on an empty syllable.
std::pair<std::string, std::string> tailo_split_syllable(std::string_view syllable);

// Initial consonants, longest first.
const std::vector<std::string>& tailo_initials();

struct TokenizedCorpus {
  std::vector<std::vector<std::string>> segments;
  Tokenizer tokenizer = Tokenizer::kWord13a;
};

TokenizedCorpus tokenize_corpus(const std::vector<std::string>& lines, Tokenizer scheme);

enum class Smoothing { kNone, kExp };

Smoothing parse_smoothing(std::string_view s);

struct BleuReport {
  double bleu = 0;                   // [0, 100]
  std::vector<double> precisions;    // modified n-gram precisions, as fractions
  std::vector<std::size_t> matches;  // clipped n-gram matches per order
  std::vector<std::size_t> totals;   // hypothesis n-grams per order
  double brevity_penalty = 1;
  std::size_t hyp_len = 0;
  std::size_t ref_len = 0;
  Tokenizer tokenizer = Tokenizer::kWord13a;
};

// Corpus BLEU with a single reference per segment, following SacreBLEU's
// sufficient-statistics arithmetic. Throws ValidationError when the corpora
// differ in size or tokenizer, or are empty.
BleuReport corpus_bleu(const TokenizedCorpus& hyps, const TokenizedCorpus& refs,
                       std::size_t max_n = 4, Smoothing smoothing = Smoothing::kNone);

// Transcribes every generated record's audio with `asr` and scores the
// transcripts against the reference manifest's text, pairing records by id
// (processed in id order). Throws ValidationError if the id sets differ or a
// field is missing, and adapter::AdapterError listing every failed id.
BleuReport asr_bleu(const corpus::Manifest& generated, const corpus::Manifest& reference,
                    const adapter::Adapter& asr, Tokenizer scheme,
                    const adapter::Cache* cache = nullptr, const ExecContext& ctx = {},
                    Smoothing smoothing = Smoothing::kNone);

std::string report_to_json(const BleuReport& r);

}  // namespace unitforge::evalbleu
