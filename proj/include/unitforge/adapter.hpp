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

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "unitforge/error.hpp"
#include "unitforge/parallel.hpp"

namespace unitforge::adapter {

// Model invocation failed (process error, missing table entry, ...).
class AdapterError : public RuntimeFailure {
 public:
  using RuntimeFailure::RuntimeFailure;
};

enum class Kind { kAsr, kMt, kT2u, kT2ut, kS2t, kVocoder };

Kind parse_kind(std::string_view s);
std::string_view to_string(Kind k);

// Output for one input; `output` is empty when the call failed.
struct Result {
  std::optional<std::string> output;
  std::string error;

  bool ok() const { return output.has_value(); }
};

// A text-in/text-out model endpoint. Implementations must be deterministic
// per input and safe to call from several threads at once.
class Adapter {
 public:
  Adapter(Kind kind, std::string name, std::string endpoint)
      : kind_(kind), name_(std::move(name)), endpoint_(std::move(endpoint)) {}
  virtual ~Adapter() = default;

  Kind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  const std::string& endpoint() const { return endpoint_; }

  // One result per input, same order.
  virtual std::vector<Result> invoke_batch(std::span<const std::string> inputs) const = 0;

  // Whether results may be stored in the on-disk cache. In-process mocks
  // are cheaper to recompute than to cache.
  virtual bool cacheable() const { return false; }

  // Identifies the adapter in cache keys.
  std::string descriptor() const;

 private:
  Kind kind_;
  std::string name_;
  std::string endpoint_;
};

// Wraps a function; an exception from `fn` becomes a failed Result.
class FunctionAdapter : public Adapter {
 public:
  using Fn = std::function<std::string(const std::string&)>;
  FunctionAdapter(Kind kind, std::string name, Fn fn, std::string endpoint = "mock:function")
      : Adapter(kind, std::move(name), std::move(endpoint)), fn_(std::move(fn)) {}

  std::vector<Result> invoke_batch(std::span<const std::string> inputs) const override;

 private:
  Fn fn_;
};

// Looks the input up in a fixed table; a missing key is a failure.
class TableAdapter : public Adapter {
 public:
  TableAdapter(Kind kind, std::string name, std::map<std::string, std::string> table,
               std::string endpoint = "mock:table")
      : Adapter(kind, std::move(name), std::move(endpoint)), table_(std::move(table)) {}

  std::vector<Result> invoke_batch(std::span<const std::string> inputs) const override;

 private:
  std::map<std::string, std::string> table_;
};

// Runs `command` through /bin/sh once per batch: inputs are written one per
// line to stdin, outputs are read one per line from stdout. A non-zero exit
// status or a line-count mismatch fails the whole batch; inputs containing a
// newline fail individually and are not sent.
class ExecAdapter : public Adapter {
 public:
  ExecAdapter(Kind kind, std::string name, std::string command);

  std::vector<Result> invoke_batch(std::span<const std::string> inputs) const override;
  bool cacheable() const override { return true; }

 private:
  std::string command_;
};

// Builds an adapter from an endpoint URI:
//   mock:identity | mock:upper | mock:lower | mock:empty | mock:reverse
//   mock:char-units   each character -> its code point, space-separated
//   mock:fail         every call fails
//   mock:<path>       two-column TSV table `input<TAB>output`
//   exec:<command>    ExecAdapter
// Throws ValidationError for other schemes.
std::unique_ptr<Adapter> make_adapter(Kind kind, std::string name, std::string_view uri);

// Content-addressed store of adapter outputs under `root`, keyed by
// SHA-256 of (adapter descriptor, input). Entries are written with
// write-then-rename, so concurrent writers of one key are harmless.
class Cache {
 public:
  explicit Cache(std::filesystem::path root);

  std::optional<std::string> get(const Adapter& a, const std::string& input) const;
  void put(const Adapter& a, const std::string& input, const std::string& output) const;
  std::filesystem::path entry_path(const Adapter& a, const std::string& input) const;
  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
};

std::string sha256_hex(std::string_view data);

struct InvokeStats {
  std::size_t cache_hits = 0;
  std::size_t invoked = 0;
};

// Invokes `a` on every input, consulting `cache` (may be null) first.
// Cache misses are sent in fixed-size batches, possibly in parallel; the
// result order always matches `inputs`.
std::vector<Result> invoke_all(const Adapter& a, std::span<const std::string> inputs,
                               const Cache* cache, const ExecContext& ctx,
                               InvokeStats* stats = nullptr);

}  // namespace unitforge::adapter
