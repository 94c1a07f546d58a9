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
#include <string>
#include <string_view>
#include <vector>

namespace unitforge::io {

// Whole-file read. Throws RuntimeFailure when the file cannot be opened.
std::string read_file(const std::filesystem::path& path);

// Lines without terminators; a trailing "\r" is dropped. A final newline
// does not produce an empty last line.
std::vector<std::string> read_lines(const std::filesystem::path& path);
std::vector<std::string> split_lines(std::string_view content);

// Writes to a sibling temporary file and renames it over `path`, so readers
// never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// Shortest decimal string that parses back to the same double.
std::string format_double(double v);

// Strict number parsing: the whole field must be consumed.
bool parse_double(std::string_view s, double& out);
bool parse_int64(std::string_view s, long long& out);

}  // namespace unitforge::io
