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
#include "nsv/ppcodec.hpp"

#include <charconv>
#include <numeric>

#include "nsv/binio.hpp"
#include "nsv/error.hpp"
#include "nsv/tsv.hpp"

namespace nsv {
namespace {

void append_utf8(std::string& out, char32_t cp) {
  // Alphabet code points are all in the two-byte range.
  out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
  out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
}

}  // namespace

long long PseudoPhonemeSequence::total_frames() const {
  return std::accumulate(durations.begin(), durations.end(), 0LL);
}

void PseudoPhonemeSequence::validate() const {
  if (units.size() != durations.size()) {
    fail(ErrorCode::kValidation, "pseudo-phonemes: " + std::to_string(units.size()) +
                                     " units but " + std::to_string(durations.size()) +
                                     " durations");
  }
  for (std::size_t i = 0; i < units.size(); ++i) {
    if (units[i] < 0 || units[i] >= kNumUnits) {
      fail(ErrorCode::kValidation, "pseudo-phonemes: unit " + std::to_string(units[i]) +
                                       " at position " + std::to_string(i) +
                                       " out of range");
    }
    if (durations[i] < 1) {
      fail(ErrorCode::kValidation, "pseudo-phonemes: duration " +
                                       std::to_string(durations[i]) + " at position " +
                                       std::to_string(i) + " is not positive");
    }
    if (i + 1 < units.size() && units[i] == units[i + 1]) {
      fail(ErrorCode::kValidation, "pseudo-phonemes: repeated unit " +
                                       std::to_string(units[i]) + " at position " +
                                       std::to_string(i + 1));
    }
  }
}

PseudoPhonemeSequence rle_encode(const UnitSequence& seq) {
  PseudoPhonemeSequence pp;
  pp.frame_rate_hz = seq.frame_rate_hz;
  for (int u : seq.indices) {
    if (!pp.units.empty() && pp.units.back() == u) {
      ++pp.durations.back();
    } else {
      pp.units.push_back(u);
      pp.durations.push_back(1);
    }
  }
  return pp;
}

UnitSequence rle_decode(const PseudoPhonemeSequence& pp) {
  pp.validate();
  UnitSequence seq;
  seq.frame_rate_hz = pp.frame_rate_hz;
  seq.indices.reserve(static_cast<std::size_t>(pp.total_frames()));
  for (std::size_t i = 0; i < pp.units.size(); ++i) {
    seq.indices.insert(seq.indices.end(), static_cast<std::size_t>(pp.durations[i]),
                       pp.units[i]);
  }
  return seq;
}

std::string units_to_text(const std::vector<int>& units) {
  std::string out;
  out.reserve(units.size() * 2);
  for (std::size_t i = 0; i < units.size(); ++i) {
    if (units[i] < 0 || units[i] >= kNumUnits) {
      fail(ErrorCode::kRange, "to_text: unit " + std::to_string(units[i]) +
                                  " at position " + std::to_string(i) +
                                  " has no character");
    }
    append_utf8(out, kAlphabetBase + static_cast<char32_t>(units[i]));
  }
  return out;
}

std::string to_text(const PseudoPhonemeSequence& pp) { return units_to_text(pp.units); }

std::vector<int> from_text(std::string_view text) {
  std::vector<int> out;
  std::size_t pos = 0;  // character position
  std::size_t i = 0;
  while (i < text.size()) {
    const auto b0 = static_cast<unsigned char>(text[i]);
    char32_t cp = 0;
    bool ok = false;
    if ((b0 & 0xE0) == 0xC0 && i + 1 < text.size()) {
      const auto b1 = static_cast<unsigned char>(text[i + 1]);
      if ((b1 & 0xC0) == 0x80) {
        cp = (static_cast<char32_t>(b0 & 0x1F) << 6) | (b1 & 0x3F);
        ok = true;
        i += 2;
      }
    }
    if (!ok || cp < kAlphabetBase || cp >= kAlphabetBase + kNumUnits) {
      fail(ErrorCode::kParse, "from_text: character at position " +
                                  std::to_string(pos) +
                                  " is outside the pseudo-phoneme alphabet");
    }
    out.push_back(static_cast<int>(cp - kAlphabetBase));
    ++pos;
  }
  return out;
}

std::vector<int> parse_int_list(std::string_view csv, std::string_view where) {
  std::vector<int> out;
  if (csv.empty()) return out;
  for (const auto& tok : tsv::split(csv, ',')) {
    int v = 0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
      fail(ErrorCode::kParse, std::string(where) + ": bad integer '" + tok + "'");
    }
    out.push_back(v);
  }
  return out;
}

std::string format_int_list(const std::vector<int>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(values[i]);
  }
  return out;
}

std::string format_pp_tsv(const std::vector<PseudoPhonemeRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += tsv::join({r.utterance_id, r.speaker_id, to_text(r.pp),
                      format_int_list(r.pp.durations),
                      std::to_string(r.pp.frame_rate_hz)}) +
           "\n";
  }
  return out;
}

std::vector<PseudoPhonemeRecord> parse_pp_tsv(std::string_view text,
                                              std::string_view context) {
  std::vector<PseudoPhonemeRecord> out;
  std::size_t line_no = 0;
  for (const auto& line : tsv::lines(text)) {
    ++line_no;
    if (line.empty() || line.starts_with('#')) continue;
    const std::string where = std::string(context) + ":" + std::to_string(line_no);
    auto f = tsv::split(line);
    if (f.size() != 5) fail(ErrorCode::kParse, where + ": expected 5 columns");
    PseudoPhonemeRecord r;
    r.utterance_id = f[0];
    r.speaker_id = f[1];
    r.pp.units = from_text(f[2]);
    r.pp.durations = parse_int_list(f[3], where);
    const auto rate = parse_int_list(f[4], where);
    if (rate.size() != 1 || rate[0] <= 0) {
      fail(ErrorCode::kParse, where + ": bad frame rate '" + f[4] + "'");
    }
    r.pp.frame_rate_hz = rate[0];
    r.pp.validate();
    out.push_back(std::move(r));
  }
  return out;
}

void write_pp_tsv(const std::filesystem::path& path,
                  const std::vector<PseudoPhonemeRecord>& records) {
  binio::write_file(path, format_pp_tsv(records));
}

std::vector<PseudoPhonemeRecord> read_pp_tsv(const std::filesystem::path& path) {
  return parse_pp_tsv(binio::read_file(path), path.string());
}

}  // namespace nsv
