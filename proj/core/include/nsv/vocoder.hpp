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

#include <cstdint>
#include <vector>

#include "nsv/audio.hpp"
#include "nsv/features.hpp"

namespace nsv {

struct HnmConfig {
  FrameConfig frame;
  int max_harmonics = 60;
  double harmonic_gain = 1.0;
  double noise_gain = 1.0;
  /// Noise attenuation applied in voiced frames.
  double voiced_noise_db = -12.0;
  /// Linear fade of the harmonic branch at voicing boundaries.
  double voicing_fade_ms = 5.0;
  /// Voiced runs are extended by this many frames on each side.
  int voicing_reach_frames = 2;
  double peak_limit = 0.99;

  void validate() const;
};

/// Mel -> linear-frequency magnitude envelope (frames x n_bins) through the
/// filterbank pseudo-inverse, clamped at zero.
RowMatrix mel_to_linear_envelope(const MelSpectrogram& mel);

/// Phase-continuous oscillator bank: harmonic k has amplitude read from the
/// mel envelope at k*f0 and is dropped where k*f0 reaches Nyquist.
std::vector<double> harmonic_component(const PitchContour& pitch,
                                       const MelSpectrogram& mel,
                                       const HnmConfig& cfg = {});

/// Random-phase noise with the mel envelope's magnitude per frame,
/// Hann-windowed overlap-add.
std::vector<double> noise_component(const MelSpectrogram& mel,
                                    const PitchContour& pitch,
                                    const HnmConfig& cfg, std::uint64_t noise_seed);

/// harmonic + noise, scaled down only if the peak exceeds cfg.peak_limit.
/// Output length is frames * hop.
AudioClip synthesize_hnm(const MelSpectrogram& mel, const PitchContour& pitch,
                         const HnmConfig& cfg, std::uint64_t noise_seed);

}  // namespace nsv
