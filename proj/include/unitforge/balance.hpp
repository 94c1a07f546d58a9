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
#include <string>
#include <utility>
#include <vector>

namespace unitforge::balance {

// Per-language amount of data: sample counts or durations, caller's choice.
struct LanguageCounts {
  std::vector<std::pair<std::string, double>> entries;
};

// Throws ValidationError on duplicate or empty languages, negative or
// non-finite amounts, or when no amount is positive.
void validate(const LanguageCounts& counts);

struct SamplingDistribution {
  double temperature = 1;
  // Same order as the input counts.
  std::vector<std::pair<std::string, double>> probs;

  double prob(const std::string& lang) const;
};

// p_l = n_l / sum n, then q_l = p_l^(1/T) / sum_i p_i^(1/T).
// Evaluated in log space. Languages with n = 0 get probability 0 and are
// left out of the normalizer. Throws ValidationError when T <= 0.
SamplingDistribution temperature_distribution(const LanguageCounts& counts, double temperature);

// `total` draws: language i.i.d. from dist (inverse CDF over the listed
// order), then an id uniformly with replacement from that language's pool.
// Uses unitforge::Rng, so the schedule is a pure function of the seed.
// Throws ValidationError when a language with positive probability has no
// pool or an empty one.
std::vector<std::string> sample_schedule(
    const SamplingDistribution& dist,
    const std::map<std::string, std::vector<std::string>>& per_lang_pools, std::size_t total,
    std::uint64_t seed);

// `lang<TAB>amount` lines; a first line whose amount does not parse is
// treated as a header.
LanguageCounts read_counts(const std::filesystem::path& path);

}  // namespace unitforge::balance
