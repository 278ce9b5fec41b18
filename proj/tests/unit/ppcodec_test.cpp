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
#include <gtest/gtest.h>

#include "nsv/ppcodec.hpp"
#include "nsv/random.hpp"
#include "test_support.hpp"

namespace nsv {
namespace {

using testing::code_of;

UnitSequence seq_of(std::vector<int> v) { return {std::move(v), 100, "u"}; }

// Hand-written UTF-8 for code point 0x100 + u (always two bytes here).
std::string utf8_of(int u) {
  const unsigned cp = 0x100u + static_cast<unsigned>(u);
  return {static_cast<char>(0xC0 | (cp >> 6)), static_cast<char>(0x80 | (cp & 0x3F))};
}

TEST(Rle, Example) {
  const auto pp = rle_encode(seq_of({5, 5, 5, 2, 2, 9}));
  EXPECT_EQ(pp.units, (std::vector<int>{5, 2, 9}));
  EXPECT_EQ(pp.durations, (std::vector<int>{3, 2, 1}));
  EXPECT_EQ(pp.frame_rate_hz, 100);
  EXPECT_EQ(pp.total_frames(), 6);
}

TEST(Rle, EmptyAndSingleton) {
  const auto empty = rle_encode(seq_of({}));
  EXPECT_TRUE(empty.units.empty());
  EXPECT_TRUE(empty.durations.empty());
  EXPECT_TRUE(rle_decode(empty).indices.empty());
  const auto one = rle_encode(seq_of({42}));
  EXPECT_EQ(one.units, std::vector<int>{42});
  EXPECT_EQ(one.durations, std::vector<int>{1});
}

TEST(Rle, DecodeRejectsMalformed) {
  PseudoPhonemeSequence pp;
  pp.units = {1, 2};
  pp.durations = {1};
  EXPECT_EQ(code_of([&] { rle_decode(pp); }), ErrorCode::kValidation);
  pp.durations = {1, 0};
  EXPECT_EQ(code_of([&] { rle_decode(pp); }), ErrorCode::kValidation);
  pp.units = {3, 3};
  pp.durations = {1, 1};
  EXPECT_EQ(code_of([&] { rle_decode(pp); }), ErrorCode::kValidation);
  pp.units = {3, 100};
  EXPECT_EQ(code_of([&] { rle_decode(pp); }), ErrorCode::kValidation);
}

TEST(Rle, RandomRoundTripAndCompression) {
  Rng rng(77);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<int> v(rng.below(200));
    // Small alphabets give long runs, large ones mostly singletons.
    const int alphabet = 1 + static_cast<int>(rng.below(100));
    for (auto& x : v) x = static_cast<int>(rng.below(static_cast<std::uint64_t>(alphabet)));
    const auto pp = rle_encode(seq_of(v));
    ASSERT_NO_THROW(pp.validate());
    EXPECT_LE(pp.size(), v.size());
    EXPECT_EQ(pp.total_frames(), static_cast<long long>(v.size()));
    std::size_t boundaries = v.empty() ? 0 : 1;
    for (std::size_t i = 1; i < v.size(); ++i) boundaries += v[i] != v[i - 1] ? 1 : 0;
    EXPECT_EQ(pp.size(), boundaries);
    EXPECT_EQ(rle_decode(pp).indices, v);
    EXPECT_EQ(rle_encode(rle_decode(pp)), pp);
  }
}

TEST(Text, Examples) {
  EXPECT_EQ(units_to_text({0}), "\xC4\x80");
  EXPECT_EQ(units_to_text({0, 1, 0}), "\xC4\x80\xC4\x81\xC4\x80");
  EXPECT_EQ(units_to_text({99}), "\xC5\xA3");
  EXPECT_EQ(units_to_text({}), "");
  EXPECT_EQ(from_text("\xC4\x80\xC4\x81\xC4\x80"), (std::vector<int>{0, 1, 0}));
}

TEST(Text, RejectsOutsideAlphabet) {
  try {
    from_text("A");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
    EXPECT_NE(std::string(e.what()).find("position 0"), std::string::npos);
  }
  try {
    from_text(utf8_of(4) + utf8_of(100));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
    EXPECT_NE(std::string(e.what()).find("position 1"), std::string::npos);
  }
  EXPECT_EQ(code_of([] { from_text("\xC4"); }), ErrorCode::kParse);
  EXPECT_EQ(code_of([] { units_to_text({100}); }), ErrorCode::kRange);
  EXPECT_EQ(code_of([] { units_to_text({-1}); }), ErrorCode::kRange);
}

TEST(Text, RandomRoundTripMatchesHandEncoding) {
  Rng rng(12);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<int> v(rng.below(64));
    std::string expected;
    for (auto& x : v) {
      x = static_cast<int>(rng.below(100));
      expected += utf8_of(x);
    }
    EXPECT_EQ(units_to_text(v), expected);
    EXPECT_EQ(from_text(expected), v);
  }
}

TEST(Text, FuzzNeverCrashes) {
  Rng rng(13);
  for (int trial = 0; trial < 2000; ++trial) {
    std::string s(rng.below(12), '\0');
    for (auto& c : s) c = static_cast<char>(rng.below(256));
    try {
      const auto v = from_text(s);
      EXPECT_EQ(units_to_text(v), s);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kParse);
    }
  }
}

TEST(PpTsv, RoundTrip) {
  std::vector<PseudoPhonemeRecord> recs;
  recs.push_back({"a", "spk1", rle_encode(seq_of({5, 5, 5, 2, 2, 9}))});
  recs.push_back({"b", "spk2", rle_encode(seq_of({0}))});
  const std::string text = format_pp_tsv(recs);
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "a\tspk1\t" + utf8_of(5) + utf8_of(2) + utf8_of(9) + "\t3,2,1\t100");
  const auto back = parse_pp_tsv(text);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].pp, recs[0].pp);
  EXPECT_EQ(back[1].speaker_id, "spk2");
  EXPECT_EQ(code_of([] { parse_pp_tsv("a\tb\t" + utf8_of(1) + "\t1,2\t100\n"); }),
            ErrorCode::kValidation);
  EXPECT_EQ(code_of([] { parse_pp_tsv("a\tb\n"); }), ErrorCode::kParse);
}

}  // namespace
}  // namespace nsv
