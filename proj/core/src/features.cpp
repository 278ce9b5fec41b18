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
#include "nsv/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nsv/binio.hpp"
#include "nsv/error.hpp"
#include "nsv/fft.hpp"

namespace nsv {
namespace {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

// Folds an out-of-range index back into [0, n) by mirror reflection
// (edge sample not repeated).
std::int64_t reflect_index(std::int64_t i, std::int64_t n) {
  if (n == 1) return 0;
  const std::int64_t period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

std::vector<double> hann(int length) {
  // Periodic Hann, the usual choice for analysis windows.
  std::vector<double> w(static_cast<std::size_t>(length));
  for (int n = 0; n < length; ++n) {
    w[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / length);
  }
  return w;
}

}  // namespace

void FrameConfig::validate() const {
  require(sample_rate_hz > 0, "frame config: sample rate must be positive");
  require(hop_samples > 0 && hop_samples <= win_samples,
          "frame config: need 0 < hop <= win");
  require(win_samples <= fft_size, "frame config: need win <= fft_size");
  require(is_power_of_two(static_cast<std::size_t>(fft_size)),
          "frame config: fft_size must be a power of two");
}

std::size_t FrameConfig::frame_count(std::size_t n_samples) const {
  const auto hop = static_cast<std::size_t>(hop_samples);
  return std::max<std::size_t>(1, (n_samples + hop - 1) / hop);
}

PitchContour PitchContour::from_f0(std::vector<double> f0, FrameConfig cfg) {
  PitchContour c;
  c.voiced.resize(f0.size());
  for (std::size_t i = 0; i < f0.size(); ++i) {
    if (!(f0[i] > 0.0)) f0[i] = 0.0;
    c.voiced[i] = f0[i] > 0.0;
  }
  c.f0_hz = std::move(f0);
  c.frame_config = cfg;
  return c;
}

Spectrogram stft(std::span<const double> samples, const FrameConfig& cfg) {
  cfg.validate();
  require(!samples.empty(), "stft: signal must contain at least one sample");

  const auto n = static_cast<std::int64_t>(samples.size());
  const auto frames = cfg.frame_count(samples.size());
  const int nfft = cfg.fft_size;
  const int offset = (nfft - cfg.win_samples) / 2;
  const auto window = hann(cfg.win_samples);

  Spectrogram out;
  out.frame_config = cfg;
  out.bins.resize(static_cast<Eigen::Index>(frames), cfg.n_bins());

  std::vector<Complex> buf(static_cast<std::size_t>(nfft));
  for (std::size_t f = 0; f < frames; ++f) {
    const std::int64_t start =
        static_cast<std::int64_t>(f) * cfg.hop_samples - cfg.win_samples / 2;
    std::fill(buf.begin(), buf.end(), Complex{});
    for (int j = 0; j < cfg.win_samples; ++j) {
      const auto idx = reflect_index(start + j, n);
      buf[static_cast<std::size_t>(offset + j)] =
          samples[static_cast<std::size_t>(idx)] * window[static_cast<std::size_t>(j)];
    }
    fft_inplace(buf);
    for (int k = 0; k < cfg.n_bins(); ++k) {
      out.bins(static_cast<Eigen::Index>(f), k) = buf[static_cast<std::size_t>(k)];
    }
  }
  return out;
}

RowMatrix mel_filterbank(int n_mels, int n_fft, int sample_rate_hz,
                         double f_lo_hz, double f_hi_hz) {
  const int n_bins = n_fft / 2 + 1;
  require(n_mels > 0, "mel filterbank: n_mels must be positive");
  require(n_mels <= n_bins, "mel filterbank: n_mels exceeds the FFT bin count");
  require(f_lo_hz >= 0.0 && f_lo_hz < f_hi_hz &&
              f_hi_hz <= 0.5 * sample_rate_hz + 1e-9,
          "mel filterbank: need 0 <= f_lo < f_hi <= nyquist");

  const double mel_lo = hz_to_mel(f_lo_hz);
  const double mel_hi = hz_to_mel(f_hi_hz);
  std::vector<double> edges(static_cast<std::size_t>(n_mels + 2));
  for (int i = 0; i < n_mels + 2; ++i) {
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (n_mels + 1));
  }

  RowMatrix fb = RowMatrix::Zero(n_mels, n_bins);
  for (int m = 0; m < n_mels; ++m) {
    const double lo = edges[m], centre = edges[m + 1], hi = edges[m + 2];
    for (int k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate_hz / n_fft;
      const double up = (f - lo) / (centre - lo);
      const double down = (hi - f) / (hi - centre);
      fb(m, k) = std::max(0.0, std::min(up, down));
    }
  }
  return fb;
}

MelSpectrogram log_mel(const Spectrogram& spec, int n_mels, double f_lo_hz,
                       double f_hi_hz) {
  const auto& cfg = spec.frame_config;
  require(n_mels <= cfg.n_bins(), "log_mel: n_mels exceeds the FFT bin count");
  if (f_hi_hz < 0.0) f_hi_hz = 0.5 * cfg.sample_rate_hz;
  const RowMatrix fb =
      mel_filterbank(n_mels, cfg.fft_size, cfg.sample_rate_hz, f_lo_hz, f_hi_hz);
  const RowMatrix mag = spec.bins.cwiseAbs();

  MelSpectrogram out;
  out.frame_config = cfg;
  out.values = (mag * fb.transpose()).cwiseMax(kMelFloor).array().log().matrix();
  return out;
}

MelSpectrogram compute_log_mel(std::span<const double> samples,
                               const FrameConfig& cfg) {
  return log_mel(stft(samples, cfg));
}

PitchContour estimate_pitch(std::span<const double> samples,
                            const FrameConfig& cfg, double f_min_hz,
                            double f_max_hz) {
  cfg.validate();
  require(f_min_hz > 0.0 && f_min_hz < f_max_hz,
          "estimate_pitch: need 0 < f_min < f_max");

  const auto n = static_cast<std::int64_t>(samples.size());
  const auto frames = cfg.frame_count(samples.size());
  const int fs = cfg.sample_rate_hz;
  const int w = cfg.win_samples;
  const int tau_max = static_cast<int>(std::floor(fs / f_min_hz)) + 1;
  const int tau_min = std::max(2, static_cast<int>(std::floor(fs / f_max_hz)));
  const int span_len = w + tau_max + 1;

  std::size_t nfft = 1;
  while (nfft < static_cast<std::size_t>(w + span_len)) nfft <<= 1;

  std::vector<double> f0(frames, 0.0);
  std::vector<double> x(static_cast<std::size_t>(span_len));
  std::vector<double> prefix(static_cast<std::size_t>(span_len) + 1);
  std::vector<Complex> a(nfft), b(nfft);
  std::vector<double> d(static_cast<std::size_t>(tau_max) + 2);
  std::vector<double> dn(static_cast<std::size_t>(tau_max) + 2);

  for (std::size_t f = 0; f < frames; ++f) {
    const std::int64_t start =
        static_cast<std::int64_t>(f) * cfg.hop_samples - span_len / 2;
    for (int j = 0; j < span_len; ++j) {
      const auto idx = start + j;
      x[j] = (idx >= 0 && idx < n) ? samples[static_cast<std::size_t>(idx)] : 0.0;
    }
    prefix[0] = 0.0;
    for (int j = 0; j < span_len; ++j) prefix[j + 1] = prefix[j] + x[j] * x[j];

    const double energy = prefix[w];
    if (energy < 1e-10 * w) continue;

    // r(tau) = sum_{j<w} x[j] x[j+tau] via FFT cross-correlation.
    std::fill(a.begin(), a.end(), Complex{});
    std::fill(b.begin(), b.end(), Complex{});
    for (int j = 0; j < w; ++j) a[j] = x[j];
    for (int j = 0; j < span_len; ++j) b[j] = x[j];
    fft_inplace(a);
    fft_inplace(b);
    for (std::size_t k = 0; k < nfft; ++k) a[k] = std::conj(a[k]) * b[k];
    fft_inplace(a, /*inverse=*/true);

    d[0] = 0.0;
    dn[0] = 1.0;
    double running = 0.0;
    for (int tau = 1; tau <= tau_max; ++tau) {
      const double shifted = prefix[tau + w] - prefix[tau];
      d[tau] = std::max(0.0, energy + shifted - 2.0 * a[tau].real());
      running += d[tau];
      dn[tau] = running > 0.0 ? d[tau] * tau / running : 1.0;
    }

    int best = -1;
    for (int tau = tau_min; tau < tau_max; ++tau) {
      if (dn[tau] < kYinThreshold) {
        while (tau + 1 < tau_max && dn[tau + 1] < dn[tau]) ++tau;
        best = tau;
        break;
      }
    }
    if (best < 0) continue;

    double refined = best;
    if (best > 1 && best < tau_max) {
      const double s0 = dn[best - 1], s1 = dn[best], s2 = dn[best + 1];
      const double denom = s0 - 2.0 * s1 + s2;
      if (std::abs(denom) > 1e-12) refined = best + 0.5 * (s0 - s2) / denom;
    }
    const double hz = fs / refined;
    if (hz >= f_min_hz && hz <= f_max_hz) f0[f] = hz;
  }
  return PitchContour::from_f0(std::move(f0), cfg);
}

std::vector<double> scale_pitch(const PitchContour& contour, double f_min_hz,
                                double f_max_hz) {
  require(f_min_hz < f_max_hz, "scale_pitch: inverted range");
  std::vector<double> out(contour.size(), 0.0);
  for (std::size_t i = 0; i < contour.size(); ++i) {
    if (!contour.voiced[i]) continue;
    out[i] = std::clamp((contour.f0_hz[i] - f_min_hz) / (f_max_hz - f_min_hz),
                        0.0, 1.0);
  }
  return out;
}

double unscale_pitch_value(double scaled, double f_min_hz, double f_max_hz) {
  return f_min_hz + scaled * (f_max_hz - f_min_hz);
}

PitchContour unscale_pitch(std::span<const double> scaled,
                           double voicing_threshold, double f_min_hz,
                           double f_max_hz, const FrameConfig& cfg) {
  require(f_min_hz < f_max_hz, "unscale_pitch: inverted range");
  std::vector<double> f0(scaled.size(), 0.0);
  for (std::size_t i = 0; i < scaled.size(); ++i) {
    if (scaled[i] >= voicing_threshold) {
      f0[i] = unscale_pitch_value(std::clamp(scaled[i], 0.0, 1.0), f_min_hz,
                                  f_max_hz);
    }
  }
  return PitchContour::from_f0(std::move(f0), cfg);
}

std::string encode_melf(const RowMatrix& values) {
  binio::Writer w;
  w.bytes("MELF");
  w.u32(static_cast<std::uint32_t>(values.rows()));
  w.u32(static_cast<std::uint32_t>(values.cols()));
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      w.f32(static_cast<float>(values(r, c)));
    }
  }
  return w.data();
}

RowMatrix decode_melf(std::string_view bytes, std::string_view context) {
  binio::Reader r(bytes, std::string(context));
  r.expect_magic("MELF");
  const auto rows = r.u32();
  const auto cols = r.u32();
  if (static_cast<std::uint64_t>(rows) * cols * 4 != r.remaining()) {
    fail(ErrorCode::kDecode, std::string(context) + ": payload size at offset " +
                                 std::to_string(r.offset()) +
                                 " does not match header dimensions");
  }
  RowMatrix m(rows, cols);
  for (std::uint32_t i = 0; i < rows; ++i) {
    for (std::uint32_t j = 0; j < cols; ++j) m(i, j) = r.f32();
  }
  return m;
}

void write_melf(const std::filesystem::path& path, const RowMatrix& values) {
  binio::write_file(path, encode_melf(values));
}

RowMatrix read_melf(const std::filesystem::path& path) {
  return decode_melf(binio::read_file(path), path.string());
}

std::string encode_pitf(const PitchContour& contour) {
  binio::Writer w;
  w.bytes("PITF");
  w.u32(static_cast<std::uint32_t>(contour.size()));
  for (std::size_t i = 0; i < contour.size(); ++i) {
    w.f32(contour.voiced[i] ? static_cast<float>(contour.f0_hz[i]) : 0.0f);
  }
  return w.data();
}

PitchContour decode_pitf(std::string_view bytes, std::string_view context) {
  binio::Reader r(bytes, std::string(context));
  r.expect_magic("PITF");
  const auto frames = r.u32();
  if (static_cast<std::uint64_t>(frames) * 4 != r.remaining()) {
    fail(ErrorCode::kDecode, std::string(context) + ": payload size at offset " +
                                 std::to_string(r.offset()) +
                                 " does not match frame count");
  }
  std::vector<double> f0(frames);
  for (auto& v : f0) v = r.f32();
  return PitchContour::from_f0(std::move(f0));
}

void write_pitf(const std::filesystem::path& path, const PitchContour& contour) {
  binio::write_file(path, encode_pitf(contour));
}

PitchContour read_pitf(const std::filesystem::path& path) {
  return decode_pitf(binio::read_file(path), path.string());
}

}  // namespace nsv
