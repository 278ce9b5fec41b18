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

#include <complex>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace nsv {

/// 10 ms hop, 25 ms window at 32 kHz.
struct FrameConfig {
  int sample_rate_hz = 32000;
  int hop_samples = 320;
  int win_samples = 800;
  int fft_size = 1024;

  void validate() const;
  int n_bins() const { return fft_size / 2 + 1; }
  /// Frames under center padding: ceil(n / hop), at least 1.
  std::size_t frame_count(std::size_t n_samples) const;

  bool operator==(const FrameConfig&) const = default;
};

inline constexpr int kMelBins = 256;
inline constexpr double kMelFloor = 1e-5;
inline constexpr double kPitchMinHz = 60.0;
inline constexpr double kPitchMaxHz = 600.0;
inline constexpr double kYinThreshold = 0.15;

using ComplexMatrix = Eigen::Matrix<std::complex<double>, Eigen::Dynamic,
                                    Eigen::Dynamic, Eigen::RowMajor>;
using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Spectrogram {
  ComplexMatrix bins;  // frames x (fft_size/2 + 1)
  FrameConfig frame_config;
};

struct MelSpectrogram {
  RowMatrix values;  // frames x n_mels, natural-log magnitude
  FrameConfig frame_config;

  Eigen::Index frames() const { return values.rows(); }
  Eigen::Index bands() const { return values.cols(); }
};

struct PitchContour {
  std::vector<double> f0_hz;  // 0 = unvoiced
  std::vector<bool> voiced;
  FrameConfig frame_config;

  std::size_t size() const { return f0_hz.size(); }
  static PitchContour from_f0(std::vector<double> f0, FrameConfig cfg = {});
};

/// Hann-windowed STFT, frame i centred on sample i*hop (reflect padding).
Spectrogram stft(std::span<const double> samples, const FrameConfig& cfg = {});

/// Triangular HTK-mel filterbank, n_mels x (n_fft/2 + 1).
RowMatrix mel_filterbank(int n_mels, int n_fft, int sample_rate_hz,
                         double f_lo_hz, double f_hi_hz);

/// Magnitude -> mel -> clamp at 1e-5 -> natural log. A negative f_hi means
/// Nyquist.
MelSpectrogram log_mel(const Spectrogram& spec, int n_mels = kMelBins,
                       double f_lo_hz = 0.0, double f_hi_hz = -1.0);

MelSpectrogram compute_log_mel(std::span<const double> samples,
                               const FrameConfig& cfg = {});

/// YIN (cumulative-mean-normalized difference, absolute threshold, parabolic
/// refinement). Frames without a dip below the threshold are unvoiced.
PitchContour estimate_pitch(std::span<const double> samples,
                            const FrameConfig& cfg = {},
                            double f_min_hz = kPitchMinHz,
                            double f_max_hz = kPitchMaxHz);

/// Voiced frames -> (f0 - f_min) / (f_max - f_min) clamped to [0,1];
/// unvoiced frames -> 0.
std::vector<double> scale_pitch(const PitchContour& contour,
                                double f_min_hz = kPitchMinHz,
                                double f_max_hz = kPitchMaxHz);

double unscale_pitch_value(double scaled, double f_min_hz = kPitchMinHz,
                           double f_max_hz = kPitchMaxHz);

/// Frames with scaled value below `voicing_threshold` become unvoiced.
PitchContour unscale_pitch(std::span<const double> scaled,
                           double voicing_threshold,
                           double f_min_hz = kPitchMinHz,
                           double f_max_hz = kPitchMaxHz,
                           const FrameConfig& cfg = {});

// MELF: "MELF", u32 rows, u32 cols, f32 row-major payload (all LE).
std::string encode_melf(const RowMatrix& values);
RowMatrix decode_melf(std::string_view bytes, std::string_view context = "melf");
void write_melf(const std::filesystem::path& path, const RowMatrix& values);
RowMatrix read_melf(const std::filesystem::path& path);

// PITF: "PITF", u32 frames, f32 f0 per frame (0 = unvoiced).
std::string encode_pitf(const PitchContour& contour);
PitchContour decode_pitf(std::string_view bytes, std::string_view context = "pitf");
void write_pitf(const std::filesystem::path& path, const PitchContour& contour);
PitchContour read_pitf(const std::filesystem::path& path);

}  // namespace nsv
