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

namespace nsv {

inline constexpr int kPipelineRateHz = 32000;

struct AudioClip {
  std::vector<double> samples;
  int sample_rate_hz = kPipelineRateHz;
  std::string utterance_id;
  std::string speaker_id;
  std::string emotion = "synthetic";

  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
};

enum class SampleFormat { kPcm16, kFloat32 };

/// Decodes a RIFF/WAVE buffer (PCM16 or IEEE float32, any channel count;
/// channels are averaged to mono). `context` is used in error messages.
AudioClip decode_wav(std::string_view bytes, std::string_view context = "wav");

/// Reads a WAV file. The utterance id is the file stem; speaker and emotion
/// are left for the caller (normally filled from the corpus manifest).
AudioClip read_wav(const std::filesystem::path& path);

std::string encode_wav(const AudioClip& clip,
                       SampleFormat format = SampleFormat::kPcm16);
void write_wav(const std::filesystem::path& path, const AudioClip& clip,
               SampleFormat format = SampleFormat::kPcm16);

/// Rational-ratio windowed-sinc resampler (Kaiser window, polyphase table).
/// Output length is round(n * target / source). Content above the lower of
/// the two Nyquist rates is attenuated by at least 60 dB.
AudioClip resample(const AudioClip& clip, int target_rate_hz);

double rms(const std::vector<double>& samples);
/// RMS level relative to full scale; -inf for an all-zero buffer.
double rms_dbfs(const std::vector<double>& samples);

}  // namespace nsv
