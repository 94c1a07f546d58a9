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

#include <string>
#include <string_view>
#include <vector>

namespace unitforge::text {

// Decodes UTF-8 into Unicode scalar values. Invalid bytes decode to U+FFFD.
std::u32string decode_utf8(std::string_view s);
std::string encode_utf8(std::u32string_view s);
void append_utf8(std::string& out, char32_t c);

// Same set of code points as Python's str.isspace().
bool is_space(char32_t c);

// Lowercases ASCII, Latin-1 and Latin Extended-A letters. Other code points
// pass through unchanged.
char32_t to_lower(char32_t c);
std::string to_lower(std::string_view s);

// Splits on runs of is_space(); no empty tokens.
std::vector<std::string> split_whitespace(std::string_view s);

// Splits on a single byte delimiter; keeps empty fields.
std::vector<std::string_view> split_fields(std::string_view s, char delim);

// Number of scalar values that are not is_space().
std::size_t count_non_space(std::string_view s);

}  // namespace unitforge::text
