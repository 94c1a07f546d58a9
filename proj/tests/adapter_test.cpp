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

#include <gtest/gtest.h>

#include "unitforge/adapter.hpp"
#include "support.hpp"

namespace unitforge::adapter {
namespace {

std::vector<std::string> outputs(const std::vector<Result>& rs) {
  std::vector<std::string> out;
  for (const auto& r : rs) out.push_back(r.output.value_or("<error>"));
  return out;
}

TEST(Adapter, Mocks) {
  const std::vector<std::string> in = {"Hello", "ab"};
  EXPECT_EQ(outputs(make_adapter(Kind::kMt, "m", "mock:identity")->invoke_batch(in)), in);
  EXPECT_EQ(outputs(make_adapter(Kind::kMt, "m", "mock:upper")->invoke_batch(in)),
            (std::vector<std::string>{"HELLO", "AB"}));
  EXPECT_EQ(outputs(make_adapter(Kind::kMt, "m", "mock:reverse")->invoke_batch(in)),
            (std::vector<std::string>{"olleH", "ba"}));
  EXPECT_EQ(outputs(make_adapter(Kind::kT2u, "m", "mock:char-units")->invoke_batch(in)),
            (std::vector<std::string>{"72 101 108 108 111", "97 98"}));
  const auto failing = make_adapter(Kind::kAsr, "m", "mock:fail")->invoke_batch(in);
  EXPECT_FALSE(failing[0].ok());
  EXPECT_FALSE(failing[0].error.empty());
}

TEST(Adapter, TableFile) {
  testing::ScratchDir dir("adapter");
  testing::spit(dir / "t.tsv", "a.wav\thello there\nb.wav\t\n");
  const auto a = make_adapter(Kind::kAsr, "asr", "mock:" + (dir / "t.tsv"));
  const auto r = a->invoke_batch(std::vector<std::string>{"a.wav", "b.wav", "c.wav"});
  EXPECT_EQ(*r[0].output, "hello there");
  EXPECT_EQ(*r[1].output, "");
  EXPECT_FALSE(r[2].ok());
}

TEST(Adapter, BadUris) {
  EXPECT_THROW(make_adapter(Kind::kMt, "m", "http://x"), ValidationError);
  EXPECT_THROW(make_adapter(Kind::kMt, "m", "mock:"), ValidationError);
  EXPECT_THROW(parse_kind("tts"), ValidationError);
}

TEST(Adapter, ExecLineAligned) {
  const auto a = make_adapter(Kind::kMt, "tr", "exec:tr a-z A-Z");
  EXPECT_TRUE(a->cacheable());
  EXPECT_EQ(outputs(a->invoke_batch(std::vector<std::string>{"ab", "", "cd"})),
            (std::vector<std::string>{"AB", "", "CD"}));
  const auto bad = make_adapter(Kind::kMt, "x", "exec:exit 3")->invoke_batch(std::vector<std::string>{"a"});
  EXPECT_FALSE(bad[0].ok());
  const auto short_out = make_adapter(Kind::kMt, "x", "exec:head -n 1")->invoke_batch(std::vector<std::string>{"a", "b"});
  EXPECT_FALSE(short_out[0].ok());
}

TEST(Cache, HitsAfterFirstRun) {
  testing::ScratchDir dir("cache");
  const Cache cache(dir.path());
  const auto a = make_adapter(Kind::kMt, "tr", "exec:tr a-z A-Z");
  std::vector<std::string> in;
  for (int i = 0; i < 600; ++i) in.push_back("item" + std::to_string(i % 400));
  InvokeStats s1, s2;
  const auto r1 = invoke_all(*a, in, &cache, ExecContext{4}, &s1);
  const auto r2 = invoke_all(*a, in, &cache, ExecContext{1}, &s2);
  EXPECT_EQ(outputs(r1), outputs(r2));
  EXPECT_EQ(s2.cache_hits, in.size());
  EXPECT_EQ(s2.invoked, 0u);
  EXPECT_EQ(*cache.get(*a, "item7"), "ITEM7");
  EXPECT_FALSE(cache.get(*make_adapter(Kind::kMt, "other", "exec:tr a-z A-Z"), "item7").has_value());
}

TEST(Cache, MocksBypassCache) {
  testing::ScratchDir dir("cache");
  const Cache cache(dir.path());
  const auto a = make_adapter(Kind::kMt, "m", "mock:upper");
  InvokeStats s;
  invoke_all(*a, std::vector<std::string>{"x"}, &cache, {}, &s);
  EXPECT_EQ(s.invoked, 1u);
  EXPECT_TRUE(std::filesystem::is_empty(dir.path()));
}

TEST(Sha256, KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

}  // namespace
}  // namespace unitforge::adapter
