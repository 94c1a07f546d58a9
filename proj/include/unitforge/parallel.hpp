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
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace unitforge {

// Worker budget handed from the CLI down to the modules. Every parallel
// kernel in the library splits its work into chunks whose boundaries do not
// depend on `threads`, so results are identical for any worker count.
struct ExecContext {
  int threads = 1;
};

// Calls fn(begin, end) over fixed-size chunks of [0, n). Chunks are claimed
// dynamically; fn must only write state owned by its chunk. If any chunk
// throws, the exception from the lowest-numbered failing chunk is rethrown.
template <typename Fn>
void parallel_for_chunks(const ExecContext& ctx, std::size_t n,
                         std::size_t chunk, Fn&& fn) {
  if (n == 0) return;
  chunk = std::max<std::size_t>(chunk, 1);
  const std::size_t num_chunks = (n + chunk - 1) / chunk;
  const auto workers = static_cast<std::size_t>(
      std::clamp<std::size_t>(static_cast<std::size_t>(std::max(ctx.threads, 1)),
                              1, num_chunks));

  std::vector<std::exception_ptr> errors(num_chunks);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= num_chunks) return;
      const std::size_t begin = c * chunk;
      try {
        fn(begin, std::min(n, begin + chunk));
      } catch (...) {
        errors[c] = std::current_exception();
      }
    }
  };

  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t i = 0; i + 1 < workers; ++i) pool.emplace_back(work);
    work();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace unitforge
