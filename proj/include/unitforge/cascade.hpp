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

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "unitforge/adapter.hpp"
#include "unitforge/corpus.hpp"
#include "unitforge/evalbleu.hpp"
#include "unitforge/parallel.hpp"

namespace unitforge::cascade {

// Unit-cost edit distance (insert, delete, substitute).
template <typename T>
std::size_t levenshtein(std::span<const T> a, std::span<const T> b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

inline std::size_t levenshtein(const std::vector<std::string>& a,
                               const std::vector<std::string>& b) {
  return levenshtein<std::string>(std::span(a), std::span(b));
}

// Keep iff edit distance / max(1, |subtitle tokens|) <= max_norm_dist.
bool filter_code_switch(std::string_view asr_text, std::string_view subtitle,
                        evalbleu::Tokenizer tokenizer, double max_norm_dist);

// Keep iff the text has at least `min_chars` non-whitespace scalar values.
bool filter_min_length(std::string_view text, std::size_t min_chars);

struct StageSpec {
  std::string adapter;
  std::string in;
  std::string out;
};

struct MinLengthFilter {
  std::string field = "text";
  std::size_t min_chars = 3;
};

struct CodeSwitchFilter {
  std::string asr_field;
  std::string ref_field = "text";
  evalbleu::Tokenizer tokenizer = evalbleu::Tokenizer::kChar;
  double max_norm_dist = 0.5;
};

using FilterSpec = std::variant<MinLengthFilter, CodeSwitchFilter>;

std::string_view filter_kind(const FilterSpec& f);

struct AdapterSpec {
  adapter::Kind kind = adapter::Kind::kMt;
  std::string endpoint;
};

struct PipelineSpec {
  // Adapters declared in the spec file; run_cascade also accepts adapters
  // registered in code.
  std::map<std::string, AdapterSpec> adapters;
  std::vector<StageSpec> stages;
  std::vector<FilterSpec> filters;
};

// JSON layout:
//   {"adapters": {"<name>": {"kind": "mt", "endpoint": "mock:upper"}},
//    "stages":   [{"adapter": "<name>", "in": "text", "out": "zh"}],
//    "filters":  [{"kind": "min_length", "params": {"field": "text", "min_chars": 3}},
//                 {"kind": "code_switch", "params": {"asr_field": "asr",
//                  "ref_field": "text", "tokenizer": "char", "max_norm_dist": 0.5}}]}
// Throws ValidationError on unknown keys, kinds or ill-typed values.
PipelineSpec parse_pipeline_spec(std::string_view json_text);
PipelineSpec read_pipeline_spec(const std::filesystem::path& path);

using AdapterRegistry = std::map<std::string, std::shared_ptr<const adapter::Adapter>>;

// Instantiates every adapter declared in `spec`.
AdapterRegistry make_registry(const PipelineSpec& spec);

// Checks that every stage names a registered adapter and reads a field that
// the source manifest or an earlier stage provides, and that filters only read
// available fields. Throws ValidationError ("cyclic field dependency" when a
// stage reads a field only it or a later stage writes).
void validate_pipeline(const PipelineSpec& spec, const corpus::Manifest& src,
                       const AdapterRegistry& adapters);

inline constexpr std::string_view kAdapterErrorReason = "adapter_error";

struct StageReport {
  std::string adapter;
  std::string in;
  std::string out;
  std::size_t invoked = 0;
  std::size_t cache_hits = 0;
  std::size_t failed = 0;
};

struct FilterReport {
  std::string kind;
  std::size_t seen = 0;
  std::size_t dropped = 0;
};

struct DroppedRecord {
  std::string id;
  std::string reason;  // "adapter_error" or "filter:<index>:<kind>"
  std::string detail;
};

struct CascadeReport {
  std::size_t input_records = 0;
  std::size_t output_records = 0;
  std::size_t adapter_error_drops = 0;
  std::vector<StageReport> stages;
  std::vector<FilterReport> filters;
  std::vector<DroppedRecord> dropped;  // input order
};

struct CascadeResult {
  corpus::Manifest output;
  CascadeReport report;
};

// Runs the stages in order, writing each adapter output into the record's
// `out` field, then the filters in order. Records whose input field is
// missing, whose adapter call fails, or whose output does not parse into a
// typed field are dropped with reason adapter_error. Output keeps input
// order and meta. Always:
//   output_records + sum(filter drops) + adapter_error_drops == input_records
CascadeResult run_cascade(const corpus::Manifest& src, const PipelineSpec& spec,
                          const AdapterRegistry& adapters, const adapter::Cache* cache = nullptr,
                          const ExecContext& ctx = {});

std::string report_to_json(const CascadeReport& r);

}  // namespace unitforge::cascade
