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

#include "unitforge/balance.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "unitforge/error.hpp"
#include "unitforge/io.hpp"
#include "unitforge/random.hpp"
#include "unitforge/text.hpp"

namespace unitforge::balance {

void validate(const LanguageCounts& counts) {
  std::set<std::string> seen;
  bool any_positive = false;
  for (const auto& [lang, n] : counts.entries) {
    if (lang.empty()) throw ValidationError("empty language code");
    if (!seen.insert(lang).second) throw ValidationError(fmt::format("duplicate language '{}'", lang));
    if (!std::isfinite(n) || n < 0)
      throw ValidationError(fmt::format("invalid amount {} for language '{}'", n, lang));
    any_positive |= n > 0;
  }
  if (!any_positive) throw ValidationError("all language amounts are zero");
}

double SamplingDistribution::prob(const std::string& lang) const {
  for (const auto& [l, p] : probs)
    if (l == lang) return p;
  return 0;
}

SamplingDistribution temperature_distribution(const LanguageCounts& counts, double temperature) {
  if (!(temperature > 0) || !std::isfinite(temperature))
    throw ValidationError(fmt::format("temperature must be positive and finite, got {}", temperature));
  validate(counts);

  double total = 0;
  for (const auto& [lang, n] : counts.entries) total += n;

  SamplingDistribution dist;
  dist.temperature = temperature;
  if (temperature == 1) {
    for (const auto& [lang, n] : counts.entries) dist.probs.emplace_back(lang, n / total);
    return dist;
  }

  // log q_l = log(p_l)/T - logsumexp_i(log(p_i)/T)
  std::vector<double> scaled(counts.entries.size(), -INFINITY);
  double max_scaled = -INFINITY;
  for (std::size_t i = 0; i < counts.entries.size(); ++i) {
    const double n = counts.entries[i].second;
    if (n <= 0) continue;
    scaled[i] = (std::log(n) - std::log(total)) / temperature;
    max_scaled = std::max(max_scaled, scaled[i]);
  }
  double sum = 0;
  for (double s : scaled)
    if (s != -INFINITY) sum += std::exp(s - max_scaled);
  const double log_norm = max_scaled + std::log(sum);

  for (std::size_t i = 0; i < counts.entries.size(); ++i) {
    const double p = scaled[i] == -INFINITY ? 0.0 : std::exp(scaled[i] - log_norm);
    dist.probs.emplace_back(counts.entries[i].first, p);
  }
  return dist;
}

std::vector<std::string> sample_schedule(
    const SamplingDistribution& dist,
    const std::map<std::string, std::vector<std::string>>& per_lang_pools, std::size_t total,
    std::uint64_t seed) {
  std::vector<const std::vector<std::string>*> pools;
  std::vector<double> cdf;
  double acc = 0;
  for (const auto& [lang, p] : dist.probs) {
    const std::vector<std::string>* pool = nullptr;
    if (p > 0) {
      auto it = per_lang_pools.find(lang);
      if (it == per_lang_pools.end() || it->second.empty())
        throw ValidationError(
            fmt::format("language '{}' has probability {} but an empty pool", lang, p));
      pool = &it->second;
    }
    acc += p;
    pools.push_back(pool);
    cdf.push_back(acc);
  }

  Rng rng(seed);
  std::vector<std::string> schedule;
  schedule.reserve(total);
  for (std::size_t d = 0; d < total; ++d) {
    const double u = rng.uniform01() * acc;
    auto pos = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    pos = std::min(pos, cdf.size() - 1);
    // Skip zero-probability entries that share a CDF value with a neighbor.
    while (!pools[pos]) --pos;
    const auto& pool = *pools[pos];
    schedule.push_back(pool[rng.uniform_index(pool.size())]);
  }
  return schedule;
}

LanguageCounts read_counts(const std::filesystem::path& path) {
  const auto lines = io::read_lines(path);
  LanguageCounts counts;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = text::split_fields(lines[i], '\t');
    if (f.size() != 2)
      throw ParseError(path.string(), i + 1, fmt::format("expected 2 columns, found {}", f.size()));
    double n = 0;
    if (!io::parse_double(f[1], n)) {
      if (counts.entries.empty() && i == 0) continue;
      throw ParseError(path.string(), i + 1, fmt::format("unparsable amount '{}'", f[1]));
    }
    counts.entries.emplace_back(std::string(f[0]), n);
  }
  return counts;
}

}  // namespace unitforge::balance
