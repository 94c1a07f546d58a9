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

#include "unitforge/cascade.hpp"

#include <cmath>
#include <set>

#include <fmt/format.h>
#include <json.hpp>

#include "unitforge/error.hpp"
#include "unitforge/io.hpp"
#include "unitforge/text.hpp"

namespace unitforge::cascade {

namespace {

using nlohmann::json;

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                std::string_view where) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ValidationError(fmt::format("{}: unknown key '{}'", where, key));
  }
}

std::string get_string(const json& obj, const char* key, std::string_view where) {
  if (!obj.contains(key) || !obj[key].is_string())
    throw ValidationError(fmt::format("{}: '{}' must be a string", where, key));
  return obj[key].get<std::string>();
}

FilterSpec parse_filter(const json& f, std::size_t index) {
  const auto where = fmt::format("filters[{}]", index);
  if (!f.is_object()) throw ValidationError(fmt::format("{} must be an object", where));
  check_keys(f, {"kind", "params"}, where);
  const auto kind = get_string(f, "kind", where);
  const json params = f.value("params", json::object());
  if (!params.is_object()) throw ValidationError(fmt::format("{}: params must be an object", where));

  if (kind == "min_length") {
    check_keys(params, {"field", "min_chars"}, where);
    MinLengthFilter m;
    if (params.contains("field")) m.field = get_string(params, "field", where);
    if (params.contains("min_chars")) {
      if (!params["min_chars"].is_number_integer() || params["min_chars"].get<long long>() < 0)
        throw ValidationError(fmt::format("{}: min_chars must be a nonnegative integer", where));
      m.min_chars = params["min_chars"].get<std::size_t>();
    }
    return m;
  }
  if (kind == "code_switch") {
    check_keys(params, {"asr_field", "ref_field", "tokenizer", "max_norm_dist"}, where);
    CodeSwitchFilter c;
    c.asr_field = get_string(params, "asr_field", where);
    if (params.contains("ref_field")) c.ref_field = get_string(params, "ref_field", where);
    if (params.contains("tokenizer"))
      c.tokenizer = evalbleu::parse_tokenizer(get_string(params, "tokenizer", where));
    if (params.contains("max_norm_dist")) {
      if (!params["max_norm_dist"].is_number())
        throw ValidationError(fmt::format("{}: max_norm_dist must be a number", where));
      c.max_norm_dist = params["max_norm_dist"].get<double>();
    }
    if (!(c.max_norm_dist >= 0 && c.max_norm_dist <= 1))
      throw ValidationError(fmt::format("{}: max_norm_dist must be in [0, 1]", where));
    return c;
  }
  throw ValidationError(
      fmt::format("{}: unknown filter kind '{}' (expected min_length, code_switch)", where, kind));
}

std::vector<std::string> filter_fields(const FilterSpec& f) {
  if (const auto* m = std::get_if<MinLengthFilter>(&f)) return {m->field};
  const auto& c = std::get<CodeSwitchFilter>(f);
  return {c.asr_field, c.ref_field};
}

bool keep(const FilterSpec& f, const corpus::Utterance& u) {
  auto field = [&](const std::string& name) { return corpus::get_field(u, name).value_or(""); };
  if (const auto* m = std::get_if<MinLengthFilter>(&f))
    return filter_min_length(field(m->field), m->min_chars);
  const auto& c = std::get<CodeSwitchFilter>(f);
  return filter_code_switch(field(c.asr_field), field(c.ref_field), c.tokenizer, c.max_norm_dist);
}

}  // namespace

bool filter_code_switch(std::string_view asr_text, std::string_view subtitle,
                        evalbleu::Tokenizer tokenizer, double max_norm_dist) {
  const auto hyp = evalbleu::tokenize(asr_text, tokenizer);
  const auto ref = evalbleu::tokenize(subtitle, tokenizer);
  const auto dist = static_cast<double>(levenshtein(hyp, ref));
  return dist / static_cast<double>(std::max<std::size_t>(1, ref.size())) <= max_norm_dist;
}

bool filter_min_length(std::string_view text, std::size_t min_chars) {
  return text::count_non_space(text) >= min_chars;
}

std::string_view filter_kind(const FilterSpec& f) {
  return std::holds_alternative<MinLengthFilter>(f) ? "min_length" : "code_switch";
}

PipelineSpec parse_pipeline_spec(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(fmt::format("pipeline spec is not valid JSON: {}", e.what()));
  }
  if (!doc.is_object()) throw ValidationError("pipeline spec must be a JSON object");
  check_keys(doc, {"adapters", "stages", "filters"}, "pipeline spec");

  PipelineSpec spec;
  if (doc.contains("adapters")) {
    if (!doc["adapters"].is_object()) throw ValidationError("'adapters' must be an object");
    for (const auto& [name, a] : doc["adapters"].items()) {
      const auto where = fmt::format("adapters.{}", name);
      if (!a.is_object()) throw ValidationError(fmt::format("{} must be an object", where));
      check_keys(a, {"kind", "endpoint"}, where);
      spec.adapters[name] = {adapter::parse_kind(get_string(a, "kind", where)),
                             get_string(a, "endpoint", where)};
    }
  }
  if (doc.contains("stages")) {
    if (!doc["stages"].is_array()) throw ValidationError("'stages' must be an array");
    std::size_t i = 0;
    for (const auto& s : doc["stages"]) {
      const auto where = fmt::format("stages[{}]", i++);
      if (!s.is_object()) throw ValidationError(fmt::format("{} must be an object", where));
      check_keys(s, {"adapter", "in", "out"}, where);
      spec.stages.push_back(
          {get_string(s, "adapter", where), get_string(s, "in", where), get_string(s, "out", where)});
    }
  }
  if (doc.contains("filters")) {
    if (!doc["filters"].is_array()) throw ValidationError("'filters' must be an array");
    std::size_t i = 0;
    for (const auto& f : doc["filters"]) spec.filters.push_back(parse_filter(f, i++));
  }
  return spec;
}

PipelineSpec read_pipeline_spec(const std::filesystem::path& path) {
  try {
    return parse_pipeline_spec(io::read_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

AdapterRegistry make_registry(const PipelineSpec& spec) {
  AdapterRegistry reg;
  for (const auto& [name, a] : spec.adapters)
    reg[name] = adapter::make_adapter(a.kind, name, a.endpoint);
  return reg;
}

void validate_pipeline(const PipelineSpec& spec, const corpus::Manifest& src,
                       const AdapterRegistry& adapters) {
  std::set<std::string, std::less<>> available{std::string(corpus::kIdField),
                                               std::string(corpus::kLangField)};
  auto is_available = [&](const std::string& f) {
    return available.count(f) > 0 || src.has_field(f);
  };

  for (std::size_t i = 0; i < spec.stages.size(); ++i) {
    const auto& st = spec.stages[i];
    if (!adapters.count(st.adapter))
      throw ValidationError(fmt::format("stages[{}]: unknown adapter '{}'", i, st.adapter));
    if (st.out == corpus::kIdField)
      throw ValidationError(fmt::format("stages[{}]: cannot write the id field", i));
    if (!is_available(st.in)) {
      for (std::size_t j = i; j < spec.stages.size(); ++j)
        if (spec.stages[j].out == st.in)
          throw ValidationError(fmt::format(
              "stages[{}]: cyclic field dependency: '{}' is produced by stages[{}]", i, st.in, j));
      throw ValidationError(fmt::format("stages[{}]: unknown input field '{}'", i, st.in));
    }
    available.insert(st.out);
  }
  for (std::size_t i = 0; i < spec.filters.size(); ++i)
    for (const auto& f : filter_fields(spec.filters[i]))
      if (!is_available(f))
        throw ValidationError(fmt::format("filters[{}]: unknown field '{}'", i, f));
}

CascadeResult run_cascade(const corpus::Manifest& src, const PipelineSpec& spec,
                          const AdapterRegistry& adapters, const adapter::Cache* cache,
                          const ExecContext& ctx) {
  validate_pipeline(spec, src, adapters);

  std::vector<corpus::Utterance> records = src.records();
  std::vector<bool> alive(records.size(), true);
  std::vector<std::pair<std::string, std::string>> why(records.size());  // reason, detail

  CascadeReport report;
  report.input_records = records.size();

  for (const auto& st : spec.stages) {
    StageReport sr{st.adapter, st.in, st.out, 0, 0, 0};
    std::vector<std::size_t> rows;
    std::vector<std::string> inputs;
    for (std::size_t r = 0; r < records.size(); ++r) {
      if (!alive[r]) continue;
      auto value = corpus::get_field(records[r], st.in);
      if (!value) {
        alive[r] = false;
        why[r] = {std::string(kAdapterErrorReason),
                  fmt::format("{}: missing input field '{}'", st.adapter, st.in)};
        ++sr.failed;
        continue;
      }
      rows.push_back(r);
      inputs.push_back(std::move(*value));
    }

    adapter::InvokeStats stats;
    const auto results = adapter::invoke_all(*adapters.at(st.adapter), inputs, cache, ctx, &stats);
    sr.invoked = stats.invoked;
    sr.cache_hits = stats.cache_hits;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const std::size_t r = rows[k];
      std::string error = results[k].error;
      if (results[k].ok()) {
        try {
          corpus::set_field(records[r], st.out, *results[k].output);
          continue;
        } catch (const ValidationError& e) {
          error = fmt::format("output for '{}': {}", st.out, e.what());
        }
      }
      alive[r] = false;
      why[r] = {std::string(kAdapterErrorReason), fmt::format("{}: {}", st.adapter, error)};
      ++sr.failed;
    }
    report.adapter_error_drops += sr.failed;
    report.stages.push_back(std::move(sr));
  }

  for (std::size_t fi = 0; fi < spec.filters.size(); ++fi) {
    const auto& f = spec.filters[fi];
    FilterReport fr{std::string(filter_kind(f)), 0, 0};
    for (std::size_t r = 0; r < records.size(); ++r) {
      if (!alive[r]) continue;
      ++fr.seen;
      if (keep(f, records[r])) continue;
      alive[r] = false;
      why[r] = {fmt::format("filter:{}:{}", fi, fr.kind), ""};
      ++fr.dropped;
    }
    report.filters.push_back(std::move(fr));
  }

  CascadeResult result;
  result.output.meta() = src.meta();
  for (std::size_t r = 0; r < records.size(); ++r) {
    if (alive[r]) {
      result.output.add(std::move(records[r]));
    } else {
      report.dropped.push_back({records[r].id, why[r].first, why[r].second});
    }
  }
  report.output_records = result.output.size();
  result.report = std::move(report);
  return result;
}

std::string report_to_json(const CascadeReport& r) {
  nlohmann::ordered_json j;
  j["input_records"] = r.input_records;
  j["output_records"] = r.output_records;
  j["adapter_error_drops"] = r.adapter_error_drops;
  j["stages"] = nlohmann::ordered_json::array();
  for (const auto& s : r.stages) {
    nlohmann::ordered_json o;
    o["adapter"] = s.adapter;
    o["in"] = s.in;
    o["out"] = s.out;
    o["records"] = s.invoked + s.cache_hits;
    o["failed"] = s.failed;
    j["stages"].push_back(std::move(o));
  }
  j["filters"] = nlohmann::ordered_json::array();
  for (const auto& f : r.filters) {
    nlohmann::ordered_json o;
    o["kind"] = f.kind;
    o["seen"] = f.seen;
    o["dropped"] = f.dropped;
    o["drop_rate"] =
        f.seen ? static_cast<double>(f.dropped) / static_cast<double>(f.seen) : 0.0;
    j["filters"].push_back(std::move(o));
  }
  j["dropped"] = nlohmann::ordered_json::array();
  for (const auto& d : r.dropped) {
    nlohmann::ordered_json o;
    o["id"] = d.id;
    o["reason"] = d.reason;
    if (!d.detail.empty()) o["detail"] = d.detail;
    j["dropped"].push_back(std::move(o));
  }
  return j.dump(2) + "\n";
}

}  // namespace unitforge::cascade
