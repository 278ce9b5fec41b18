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

#include <cmath>

#include "nsv/audio.hpp"
#include "nsv/error.hpp"
#include "test_support.hpp"

namespace nsv {
namespace {

using testing::code_of;
using testing::make_wav;
using testing::pcm16_data;
using testing::sine;

TEST(Wav, OneSecondPcm16) {
  std::vector<std::int16_t> pcm(32000, 1000);
  const AudioClip clip = decode_wav(make_wav(1, 1, 32000, 16, pcm16_data(pcm)));
  EXPECT_EQ(clip.samples.size(), 32000u);
  EXPECT_EQ(clip.sample_rate_hz, 32000);
  EXPECT_NEAR(clip.samples[100], 1000.0 / 32768.0, 1e-4);
}

TEST(Wav, ZeroSamplesIsEmptyClip) {
  EXPECT_EQ(code_of([] { decode_wav(make_wav(1, 1, 32000, 16, "")); }), ErrorCode::kEmptyClip);
}

TEST(Wav, StereoOppositeChannelsAverageToZero) {
  std::vector<std::int16_t> pcm;
  for (int i = 0; i < 500; ++i) {
    const auto v = static_cast<std::int16_t>((i * 97) % 20000 - 10000);
    pcm.push_back(v);
    pcm.push_back(static_cast<std::int16_t>(-v));
  }
  const AudioClip clip = decode_wav(make_wav(1, 2, 32000, 16, pcm16_data(pcm)));
  ASSERT_EQ(clip.samples.size(), 500u);
  for (double s : clip.samples) EXPECT_EQ(s, 0.0);
}

TEST(Wav, Float32RoundTripIsExactForFloatValues) {
  AudioClip clip;
  clip.samples = {0.0, 0.5, -0.25, 0.125, -1.0, 1.0};
  const AudioClip back = decode_wav(encode_wav(clip, SampleFormat::kFloat32));
  EXPECT_EQ(back.samples, clip.samples);
}

TEST(Wav, Pcm16RoundTripWithinQuantization) {
  AudioClip clip;
  clip.sample_rate_hz = 48000;
  clip.samples = sine(440.0, 0.8, 48000, 4800);
  const AudioClip back = decode_wav(encode_wav(clip));
  ASSERT_EQ(back.samples.size(), clip.samples.size());
  EXPECT_EQ(back.sample_rate_hz, 48000);
  for (std::size_t i = 0; i < clip.samples.size(); ++i) {
    EXPECT_NEAR(back.samples[i], clip.samples[i], 1.0 / 32767.0);
  }
}

TEST(Wav, TruncatedHeaderNamesOffset) {
  const std::string bytes = make_wav(1, 1, 32000, 16, pcm16_data({1, 2, 3})).substr(0, 30);
  try {
    decode_wav(bytes);
    FAIL() << "expected decode error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDecode);
    EXPECT_NE(std::string(e.what()).find("offset"), std::string::npos) << e.what();
  }
}

TEST(Wav, BadMagicIsDecodeError) {
  std::string bytes = make_wav(1, 1, 32000, 16, pcm16_data({1, 2, 3}));
  bytes[0] = 'X';
  EXPECT_EQ(code_of([&] { decode_wav(bytes); }), ErrorCode::kDecode);
}

TEST(Wav, AdpcmIsUnsupported) {
  EXPECT_EQ(code_of([] { decode_wav(make_wav(2, 1, 32000, 4, std::string(64, '\0'))); }),
            ErrorCode::kUnsupportedFormat);
}

TEST(Wav, NonFiniteFloatIsRejected) {
  std::string data;
  const float nan = std::nanf("");
  std::uint32_t bits;
  std::memcpy(&bits, &nan, 4);
  testing::put_le(data, 0, 4);
  testing::put_le(data, bits, 4);
  EXPECT_EQ(code_of([&] { decode_wav(make_wav(3, 1, 32000, 32, data)); }), ErrorCode::kDecode);
}

TEST(Wav, FileRoundTripSetsUtteranceIdFromStem) {
  testing::TempDir dir;
  AudioClip clip;
  clip.samples = sine(100.0, 0.5, 32000, 320);
  write_wav(dir / "abc_001.wav", clip);
  const AudioClip back = read_wav(dir / "abc_001.wav");
  EXPECT_EQ(back.utterance_id, "abc_001");
  EXPECT_EQ(back.samples.size(), 320u);
}

TEST(Resample, LengthFollowsRatio) {
  AudioClip clip;
  clip.sample_rate_hz = 48000;
  clip.samples.assign(48000, 0.1);
  EXPECT_EQ(resample(clip, 32000).samples.size(), 32000u);
  clip.samples.assign(1001, 0.1);
  EXPECT_EQ(resample(clip, 32000).samples.size(), 667u);  // round(667.33)
  clip.samples.assign(1000, 0.1);
  EXPECT_EQ(resample(clip, 16000).samples.size(), 333u);  // round(333.33)
  clip.sample_rate_hz = 16000;
  EXPECT_EQ(resample(clip, 32000).samples.size(), 2000u);
}

TEST(Resample, IdentityIsBitExact) {
  AudioClip clip;
  clip.samples = sine(1234.5, 0.7, 32000, 5000);
  const AudioClip out = resample(clip, 32000);
  EXPECT_EQ(out.samples, clip.samples);
}

TEST(Resample, RejectsNonPositiveRates) {
  AudioClip clip;
  clip.samples.assign(10, 0.0);
  EXPECT_EQ(code_of([&] { resample(clip, 0); }), ErrorCode::kInvalidArgument);
  clip.sample_rate_hz = -5;
  EXPECT_EQ(code_of([&] { resample(clip, 32000); }), ErrorCode::kInvalidArgument);
}

// 3200 samples from the middle of a 32 kHz signal: 10 Hz bins, 1 kHz = bin 100.
std::vector<double> middle(const std::vector<double>& x, std::size_t n) {
  const std::size_t start = (x.size() - n) / 2;
  return {x.begin() + static_cast<std::ptrdiff_t>(start),
          x.begin() + static_cast<std::ptrdiff_t>(start + n)};
}

TEST(Resample, SinePeakAndAmplitudePreserved) {
  AudioClip clip;
  clip.sample_rate_hz = 48000;
  clip.samples = sine(1000.0, 0.5, 48000, 48000);
  const AudioClip out = resample(clip, 32000);
  const auto peak = testing::dft_peak(middle(out.samples, 3200));
  EXPECT_NEAR(static_cast<double>(peak.bin), 100.0, 1.0);
  EXPECT_NEAR(peak.amplitude, 0.5, 0.005);
}

TEST(Resample, DownUpRoundTrip) {
  AudioClip clip;
  clip.sample_rate_hz = 48000;
  clip.samples = sine(1000.0, 0.5, 48000, 48000);
  const AudioClip back = resample(resample(clip, 32000), 48000);
  ASSERT_EQ(back.samples.size(), 48000u);
  // 4800 samples at 48 kHz: 10 Hz bins.
  const auto peak = testing::dft_peak(middle(back.samples, 4800));
  EXPECT_NEAR(static_cast<double>(peak.bin), 100.0, 1.0);
  EXPECT_NEAR(peak.amplitude, 0.5, 0.01);
}

TEST(Resample, AttenuatesContentAboveTargetNyquist) {
  for (double hz : {16500.0, 18000.0, 20000.0, 23000.0}) {
    AudioClip clip;
    clip.sample_rate_hz = 48000;
    clip.samples = sine(hz, 0.9, 48000, 24000);
    const AudioClip out = resample(clip, 32000);
    const double level = rms(middle(out.samples, 8000));
    const double ref = 0.9 / std::sqrt(2.0);
    EXPECT_LT(20.0 * std::log10(level / ref), -60.0) << hz << " Hz";
  }
}

TEST(Level, RmsOfFullScaleSine) {
  EXPECT_NEAR(rms_dbfs(sine(1000.0, 1.0, 32000, 32000)), -3.0103, 1e-3);
  EXPECT_TRUE(std::isinf(rms_dbfs(std::vector<double>(10, 0.0))));
}

}  // namespace
}  // namespace nsv
