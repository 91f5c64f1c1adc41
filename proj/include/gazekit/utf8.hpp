// Copyright 2026 The gazekit Authors
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

namespace gazekit::utf8 {

/// Decodes UTF-8 into code points. Invalid bytes decode to U+FFFD.
std::u32string decode(std::string_view s);
std::string encode(std::u32string_view s);

/// Number of code points in s.
std::size_t length(std::string_view s);

/// Lowercases ASCII, Latin-1, Latin Extended-A pairs and Cyrillic.
char32_t to_lower(char32_t c);
std::u32string to_lower(std::u32string_view s);

bool is_letter(char32_t c);

}  // namespace gazekit::utf8
