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

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "nsv/units.hpp"

namespace nsv {

/// Run-length form of a unit sequence: no two consecutive units are equal
/// and every duration is at least one frame.
struct PseudoPhonemeSequence {
  std::vector<int> units;
  std::vector<int> durations;
  int frame_rate_hz = 100;

  std::size_t size() const { return units.size(); }
  long long total_frames() const;
  /// Throws kValidation describing the first violated invariant.
  void validate() const;

  bool operator==(const PseudoPhonemeSequence&) const = default;
};

PseudoPhonemeSequence rle_encode(const UnitSequence& seq);
UnitSequence rle_decode(const PseudoPhonemeSequence& pp);

/// First code point of the pseudo-phoneme alphabet; unit i is U+0100 + i.
inline constexpr char32_t kAlphabetBase = 0x0100;

/// UTF-8 text, one character per pseudo-phoneme. Durations are not encoded.
std::string to_text(const PseudoPhonemeSequence& pp);
std::string units_to_text(const std::vector<int>& units);
/// Throws kParse naming the character position of the first invalid char.
std::vector<int> from_text(std::string_view text);

struct PseudoPhonemeRecord {
  std::string utterance_id;
  std::string speaker_id;
  PseudoPhonemeSequence pp;
};

/// "utterance_id<TAB>speaker_id<TAB>text<TAB>durations<TAB>frame_rate_hz".
std::string format_pp_tsv(const std::vector<PseudoPhonemeRecord>& records);
std::vector<PseudoPhonemeRecord> parse_pp_tsv(std::string_view text,
                                              std::string_view context = "pp");
void write_pp_tsv(const std::filesystem::path& path,
                  const std::vector<PseudoPhonemeRecord>& records);
std::vector<PseudoPhonemeRecord> read_pp_tsv(const std::filesystem::path& path);

std::vector<int> parse_int_list(std::string_view csv, std::string_view where);
std::string format_int_list(const std::vector<int>& values);

}  // namespace nsv
