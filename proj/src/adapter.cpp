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

#include "unitforge/adapter.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "unitforge/io.hpp"
#include "unitforge/text.hpp"

namespace unitforge::adapter {

namespace {

constexpr std::size_t kBatchSize = 256;

std::string run_command(const std::string& command, const std::string& stdin_data) {
  auto tmpl = (std::filesystem::temp_directory_path() / "unitforge-in-XXXXXX").string();
  const int fd = ::mkstemp(tmpl.data());
  if (fd < 0) throw AdapterError("cannot create temporary input file");
  const std::filesystem::path tmp_path(tmpl);
  struct Cleanup {
    std::filesystem::path p;
    ~Cleanup() {
      std::error_code ec;
      std::filesystem::remove(p, ec);
    }
  } cleanup{tmp_path};

  std::size_t written = 0;
  while (written < stdin_data.size()) {
    const auto n = ::write(fd, stdin_data.data() + written, stdin_data.size() - written);
    if (n <= 0) {
      ::close(fd);
      throw AdapterError("cannot write temporary input file");
    }
    written += static_cast<std::size_t>(n);
  }
  ::close(fd);

  const std::string shell = fmt::format("( {} ) < '{}'", command, tmpl);
  FILE* pipe = ::popen(shell.c_str(), "r");
  if (!pipe) throw AdapterError(fmt::format("cannot start '{}'", command));
  std::string out;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
  const int status = ::pclose(pipe);
  if (status == -1 || !WIFEXITED(status) || WEXITSTATUS(status) != 0)
    throw AdapterError(fmt::format("'{}' exited with status {}", command,
                                   WIFEXITED(status) ? WEXITSTATUS(status) : -1));
  return out;
}

std::string char_units(const std::string& s) {
  std::string out;
  for (char32_t c : text::decode_utf8(s)) {
    if (!out.empty()) out.push_back(' ');
    out += std::to_string(static_cast<std::uint32_t>(c));
  }
  return out;
}

std::string ascii_case(std::string s, bool upper) {
  for (auto& c : s) {
    if (upper && c >= 'a' && c <= 'z') c = static_cast<char>(c - 32);
    if (!upper && c >= 'A' && c <= 'Z') c = static_cast<char>(c + 32);
  }
  return s;
}

}  // namespace

Kind parse_kind(std::string_view s) {
  if (s == "asr") return Kind::kAsr;
  if (s == "mt") return Kind::kMt;
  if (s == "t2u") return Kind::kT2u;
  if (s == "t2ut") return Kind::kT2ut;
  if (s == "s2t") return Kind::kS2t;
  if (s == "vocoder") return Kind::kVocoder;
  throw ValidationError(fmt::format("unknown adapter kind '{}'", s));
}

std::string_view to_string(Kind k) {
  switch (k) {
    case Kind::kAsr: return "asr";
    case Kind::kMt: return "mt";
    case Kind::kT2u: return "t2u";
    case Kind::kT2ut: return "t2ut";
    case Kind::kS2t: return "s2t";
    case Kind::kVocoder: return "vocoder";
  }
  return "asr";
}

std::string Adapter::descriptor() const {
  return fmt::format("{}\x1f{}\x1f{}", to_string(kind_), name_, endpoint_);
}

std::vector<Result> FunctionAdapter::invoke_batch(std::span<const std::string> inputs) const {
  std::vector<Result> out(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    try {
      out[i].output = fn_(inputs[i]);
    } catch (const std::exception& e) {
      out[i].error = e.what();
    }
  }
  return out;
}

std::vector<Result> TableAdapter::invoke_batch(std::span<const std::string> inputs) const {
  std::vector<Result> out(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    auto it = table_.find(inputs[i]);
    if (it == table_.end()) {
      out[i].error = fmt::format("no table entry for '{}'", inputs[i]);
    } else {
      out[i].output = it->second;
    }
  }
  return out;
}

ExecAdapter::ExecAdapter(Kind kind, std::string name, std::string command)
    : Adapter(kind, std::move(name), "exec:" + command), command_(std::move(command)) {
  if (command_.empty()) throw ValidationError("exec adapter has an empty command");
}

std::vector<Result> ExecAdapter::invoke_batch(std::span<const std::string> inputs) const {
  std::vector<Result> out(inputs.size());
  std::vector<std::size_t> sent;
  std::string payload;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].find_first_of("\r\n") != std::string::npos) {
      out[i].error = "input contains a newline";
      continue;
    }
    payload += inputs[i];
    payload.push_back('\n');
    sent.push_back(i);
  }
  if (sent.empty()) return out;

  std::string error;
  std::vector<std::string> lines;
  try {
    lines = io::split_lines(run_command(command_, payload));
    if (lines.size() != sent.size())
      error = fmt::format("'{}' returned {} lines for {} inputs", command_, lines.size(),
                          sent.size());
  } catch (const AdapterError& e) {
    error = e.what();
  }
  for (std::size_t s = 0; s < sent.size(); ++s) {
    if (error.empty()) {
      out[sent[s]].output = std::move(lines[s]);
    } else {
      out[sent[s]].error = error;
    }
  }
  return out;
}

std::unique_ptr<Adapter> make_adapter(Kind kind, std::string name, std::string_view uri) {
  const std::string endpoint(uri);
  if (uri.rfind("exec:", 0) == 0)
    return std::make_unique<ExecAdapter>(kind, std::move(name), std::string(uri.substr(5)));
  if (uri.rfind("mock:", 0) != 0)
    throw ValidationError(fmt::format("adapter '{}': unsupported endpoint '{}'", name, uri));

  const std::string_view what = uri.substr(5);
  FunctionAdapter::Fn fn;
  if (what == "identity") {
    fn = [](const std::string& s) { return s; };
  } else if (what == "upper") {
    fn = [](const std::string& s) { return ascii_case(s, true); };
  } else if (what == "lower") {
    fn = [](const std::string& s) { return ascii_case(s, false); };
  } else if (what == "empty") {
    fn = [](const std::string&) { return std::string(); };
  } else if (what == "reverse") {
    fn = [](const std::string& s) {
      auto cps = text::decode_utf8(s);
      std::reverse(cps.begin(), cps.end());
      return text::encode_utf8(cps);
    };
  } else if (what == "char-units") {
    fn = char_units;
  } else if (what == "fail") {
    fn = [](const std::string&) -> std::string { throw AdapterError("mock failure"); };
  }
  if (fn) return std::make_unique<FunctionAdapter>(kind, std::move(name), std::move(fn), endpoint);

  if (what.empty()) throw ValidationError(fmt::format("adapter '{}': empty mock name", name));
  const std::filesystem::path table_path{std::string(what)};
  std::map<std::string, std::string> table;
  const auto lines = io::read_lines(table_path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto tab = lines[i].find('\t');
    if (tab == std::string::npos)
      throw ParseError(table_path.string(), i + 1, "expected 'input<TAB>output'");
    table[lines[i].substr(0, tab)] = lines[i].substr(tab + 1);
  }
  return std::make_unique<TableAdapter>(kind, std::move(name), std::move(table), endpoint);
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw RuntimeFailure("SHA-256 failed");
  std::string hex;
  hex.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

Cache::Cache(std::filesystem::path root) : root_(std::move(root)) {
  std::error_code ec;
  std::filesystem::create_directories(root_, ec);
  if (ec) throw RuntimeFailure(fmt::format("cannot create cache directory '{}'", root_.string()));
}

std::filesystem::path Cache::entry_path(const Adapter& a, const std::string& input) const {
  std::string key = a.descriptor();
  key.push_back('\0');
  key += input;
  const auto hash = sha256_hex(key);
  return root_ / hash.substr(0, 2) / hash;
}

std::optional<std::string> Cache::get(const Adapter& a, const std::string& input) const {
  const auto path = entry_path(a, input);
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return std::nullopt;
  return io::read_file(path);
}

void Cache::put(const Adapter& a, const std::string& input, const std::string& output) const {
  const auto path = entry_path(a, input);
  std::filesystem::create_directories(path.parent_path());
  io::write_file_atomic(path, output);
}

std::vector<Result> invoke_all(const Adapter& a, std::span<const std::string> inputs,
                               const Cache* cache, const ExecContext& ctx, InvokeStats* stats) {
  std::vector<Result> results(inputs.size());
  const bool use_cache = cache && a.cacheable();
  std::vector<std::size_t> misses;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (use_cache) {
      if (auto hit = cache->get(a, inputs[i])) {
        results[i].output = std::move(*hit);
        if (stats) ++stats->cache_hits;
        continue;
      }
    }
    misses.push_back(i);
  }
  if (stats) stats->invoked += misses.size();

  parallel_for_chunks(ctx, misses.size(), kBatchSize, [&](std::size_t begin, std::size_t end) {
    std::vector<std::string> batch;
    batch.reserve(end - begin);
    for (std::size_t m = begin; m < end; ++m) batch.push_back(inputs[misses[m]]);
    auto out = a.invoke_batch(batch);
    if (out.size() != batch.size())
      throw AdapterError(fmt::format("adapter '{}' returned {} results for {} inputs", a.name(),
                                     out.size(), batch.size()));
    for (std::size_t m = begin; m < end; ++m) {
      auto& r = out[m - begin];
      if (use_cache && r.ok()) cache->put(a, inputs[misses[m]], *r.output);
      results[misses[m]] = std::move(r);
    }
  });
  return results;
}

}  // namespace unitforge::adapter
