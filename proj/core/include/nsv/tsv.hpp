// Copyright (c) 2026 The nsvsynth Authors
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

namespace nsv::tsv {

std::vector<std::string> split(std::string_view line, char sep = '\t');
std::string join(const std::vector<std::string>& fields, char sep = '\t');

/// Splits text into lines, dropping a trailing CR on each.
std::vector<std::string> lines(std::string_view text);

/// Shortest round-trippable decimal form of a double.
std::string format_double(double v);

}  // namespace nsv::tsv
