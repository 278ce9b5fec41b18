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
#include "nsv/vocoder.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

#include "nsv/error.hpp"
#include "nsv/fft.hpp"
#include "nsv/random.hpp"

namespace nsv {
namespace {

const RowMatrix& filterbank_pinv(const FrameConfig& frame, int n_mels) {
  using Key = std::tuple<int, int, int>;
  static std::mutex mu;
  static std::map<Key, RowMatrix> cache;
  std::lock_guard lock(mu);
  const Key key{n_mels, frame.fft_size, frame.sample_rate_hz};
  auto it = cache.find(key);
  if (it == cache.end()) {
    const RowMatrix fb = mel_filterbank(n_mels, frame.fft_size, frame.sample_rate_hz,
                                        0.0, 0.5 * frame.sample_rate_hz);
    Eigen::MatrixXd dense = fb;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(dense);
    it = cache.emplace(key, RowMatrix(cod.pseudoInverse())).first;
  }
  return it->second;
}

// Sum of window-spectrum magnitudes over all DFT bins for a unit sinusoid.
double sinusoid_lobe_sum(const FrameConfig& frame) {
  std::vector<double> buf(static_cast<std::size_t>(frame.fft_size), 0.0);
  const int offset = (frame.fft_size - frame.win_samples) / 2;
  const double bin = 64.0;  // centred on an exact bin
  for (int n = 0; n < frame.win_samples; ++n) {
    const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / frame.win_samples);
    buf[static_cast<std::size_t>(offset + n)] =
        w * std::sin(2.0 * std::numbers::pi * bin * (offset + n) / frame.fft_size);
  }
  double sum = 0.0;
  for (const auto& c : rfft(buf)) sum += std::abs(c);
  return sum;
}

// Envelope mass in the harmonic's cell [hz - f0/2, hz + f0/2). Divided by the
// lobe sum this gives the amplitude whether or not the mel bands resolve
// individual harmonics.
double harmonic_mass(const RowMatrix& env, Eigen::Index frame, double hz, double f0,
                     double bin_hz) {
  const Eigen::Index last = env.cols() - 1;
  const auto lo = std::max<Eigen::Index>(
      0, static_cast<Eigen::Index>(std::ceil((hz - 0.5 * f0) / bin_hz)));
  const auto hi = std::min<Eigen::Index>(
      last, static_cast<Eigen::Index>(std::ceil((hz + 0.5 * f0) / bin_hz)) - 1);
  double sum = 0.0;
  for (Eigen::Index k = lo; k <= hi; ++k) sum += env(frame, k);
  return sum;
}

// Per frame, the nearest voiced frame within `reach` frames (earlier wins a
// tie), or -1.
std::vector<std::int64_t> reach_sources(const std::vector<bool>& voiced, int reach) {
  const auto frames = static_cast<std::int64_t>(voiced.size());
  std::vector<std::int64_t> out(voiced.size(), -1);
  for (std::int64_t f = 0; f < frames; ++f) {
    for (std::int64_t d = 0; d <= reach; ++d) {
      if (f - d >= 0 && voiced[f - d]) {
        out[f] = f - d;
        break;
      }
      if (f + d < frames && voiced[f + d]) {
        out[f] = f + d;
        break;
      }
    }
  }
  return out;
}

void check_inputs(const MelSpectrogram& mel, const PitchContour& pitch,
                  const HnmConfig& cfg) {
  cfg.validate();
  if (static_cast<std::size_t>(mel.frames()) != pitch.size()) {
    fail(ErrorCode::kInvalidArgument,
         "vocoder: mel has " + std::to_string(mel.frames()) + " frames, pitch has " +
             std::to_string(pitch.size()));
  }
  require(mel.frames() > 0, "vocoder: no frames");
  require(mel.frame_config == cfg.frame, "vocoder: mel frame config differs from vocoder's");
  require(pitch.voiced.size() == pitch.f0_hz.size(), "vocoder: malformed pitch contour");
}

}  // namespace

void HnmConfig::validate() const {
  frame.validate();
  require(max_harmonics > 0, "hnm: max_harmonics must be positive");
  require(voicing_fade_ms >= 0.0, "hnm: fade must be non-negative");
  require(voicing_reach_frames >= 0, "hnm: voicing reach must be non-negative");
  require(peak_limit > 0.0, "hnm: peak limit must be positive");
}

RowMatrix mel_to_linear_envelope(const MelSpectrogram& mel) {
  const auto& pinv = filterbank_pinv(mel.frame_config, static_cast<int>(mel.bands()));
  const RowMatrix energies = mel.values.array().exp().matrix();
  return (energies * pinv.transpose()).cwiseMax(0.0);
}

std::vector<double> harmonic_component(const PitchContour& pitch, const MelSpectrogram& mel,
                                       const HnmConfig& cfg) {
  check_inputs(mel, pitch, cfg);
  const auto& fr = cfg.frame;
  const auto frames = static_cast<std::int64_t>(pitch.size());
  const std::int64_t hop = fr.hop_samples;
  const std::int64_t n = frames * hop;
  const double fs = fr.sample_rate_hz;
  const double nyquist = 0.5 * fs;
  const double bin_hz = fs / fr.fft_size;

  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  bool any_voiced = std::any_of(pitch.voiced.begin(), pitch.voiced.end(),
                                [](bool v) { return v; });
  if (!any_voiced) return out;

  const RowMatrix env = mel_to_linear_envelope(mel);
  const double lobe = sinusoid_lobe_sum(fr);

  // Per-frame harmonic amplitudes at the frame's own f0.
  const int kmax = cfg.max_harmonics;
  RowMatrix amp = RowMatrix::Zero(frames, kmax);
  for (std::int64_t f = 0; f < frames; ++f) {
    if (!pitch.voiced[f]) continue;
    const double f0 = pitch.f0_hz[f];
    for (int k = 1; k <= kmax && k * f0 < nyquist; ++k) {
      amp(f, k - 1) = harmonic_mass(env, f, k * f0, f0, bin_hz) / lobe;
    }
  }

  // Voiced runs reach `voicing_reach_frames` hops past their outer frame
  // centres (the pitch tracker's analysis span delays voicing decisions by
  // about that much). Reached frames borrow f0 and amplitudes from the
  // nearest voiced frame.
  const std::vector<std::int64_t> source = reach_sources(pitch.voiced, cfg.voicing_reach_frames);
  std::vector<std::uint8_t> voiced(static_cast<std::size_t>(n));
  for (std::int64_t t = 0; t < n; ++t) {
    const auto f_lo = std::min(frames - 1, t / hop);
    const auto f_hi = std::min(frames - 1, f_lo + 1);
    voiced[t] = (source[f_lo] >= 0 && source[f_hi] >= 0) ? 1 : 0;
  }
  const double fade = cfg.voicing_fade_ms * 1e-3 * fs;
  const double big = static_cast<double>(n) + fade + 1.0;
  std::vector<double> dist(static_cast<std::size_t>(n), big);
  double run = big;
  for (std::int64_t t = 0; t < n; ++t) {
    run = voiced[t] ? run + 1.0 : 0.0;
    dist[t] = run;
  }
  run = big;
  for (std::int64_t t = n - 1; t >= 0; --t) {
    run = voiced[t] ? run + 1.0 : 0.0;
    dist[t] = std::min(dist[t], run);
  }

  double phase = 0.0;
  for (std::int64_t t = 0; t < n; ++t) {
    if (!voiced[t]) continue;
    const std::int64_t f_lo = std::min(frames - 1, t / hop);
    const std::int64_t f_hi = std::min(frames - 1, f_lo + 1);
    const double frac = f_hi == f_lo ? 0.0 : static_cast<double>(t - f_lo * hop) / hop;
    const std::int64_t s_lo = source[f_lo], s_hi = source[f_hi];

    const double f0 = (1.0 - frac) * pitch.f0_hz[s_lo] + frac * pitch.f0_hz[s_hi];
    phase += 2.0 * std::numbers::pi * f0 / fs;
    if (phase > 2.0 * std::numbers::pi) phase -= 2.0 * std::numbers::pi;

    const double gain = fade > 0.0 ? std::min(1.0, dist[t] / fade) : 1.0;
    double s = 0.0;
    for (int k = 1; k <= kmax && k * f0 < nyquist; ++k) {
      s += ((1.0 - frac) * amp(s_lo, k - 1) + frac * amp(s_hi, k - 1)) * std::sin(k * phase);
    }
    out[t] = cfg.harmonic_gain * gain * s;
  }
  return out;
}

std::vector<double> noise_component(const MelSpectrogram& mel, const PitchContour& pitch,
                                    const HnmConfig& cfg, std::uint64_t noise_seed) {
  check_inputs(mel, pitch, cfg);
  const auto& fr = cfg.frame;
  const auto frames = static_cast<std::int64_t>(pitch.size());
  const std::int64_t hop = fr.hop_samples;
  const std::int64_t n = frames * hop;
  const int nfft = fr.fft_size;
  const int win = fr.win_samples;
  const int offset = (nfft - win) / 2;

  std::vector<double> window(static_cast<std::size_t>(win));
  double window_energy = 0.0;
  for (int i = 0; i < win; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / win);
    window_energy += window[i] * window[i];
  }
  // Expected analysis magnitude of the output matches the envelope: the
  // sqrt(N / sum w^2) term fixes power, 2/sqrt(pi) converts Rayleigh mean
  // magnitude to RMS magnitude.
  const double gain = cfg.noise_gain * std::sqrt(nfft / window_energy) *
                      2.0 / std::sqrt(std::numbers::pi);
  const double voiced_atten = std::pow(10.0, cfg.voiced_noise_db / 20.0);

  const RowMatrix env = mel_to_linear_envelope(mel);
  const std::vector<std::int64_t> source = reach_sources(pitch.voiced, cfg.voicing_reach_frames);
  Rng rng(noise_seed);

  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  std::vector<double> norm(static_cast<std::size_t>(n), 0.0);
  std::vector<Complex> spec(static_cast<std::size_t>(fr.n_bins()));
  for (std::int64_t f = 0; f < frames; ++f) {
    const double g = gain * (source[f] >= 0 ? voiced_atten : 1.0);
    for (int k = 0; k < fr.n_bins(); ++k) {
      const double theta = 2.0 * std::numbers::pi * rng.uniform();
      const double mag = g * env(f, k);
      spec[k] = (k == 0 || k == fr.n_bins() - 1)
                    ? Complex(mag * (theta < std::numbers::pi ? 1.0 : -1.0), 0.0)
                    : std::polar(mag, theta);
    }
    const auto frame = irfft(spec, static_cast<std::size_t>(nfft));
    const std::int64_t start = f * hop - win / 2;
    for (int i = 0; i < win; ++i) {
      const std::int64_t t = start + i;
      if (t < 0 || t >= n) continue;
      out[t] += window[i] * frame[static_cast<std::size_t>(offset + i)];
      norm[t] += window[i] * window[i];
    }
  }
  for (std::int64_t t = 0; t < n; ++t) {
    if (norm[t] > 1e-3) out[t] /= std::sqrt(norm[t]);
  }
  return out;
}

AudioClip synthesize_hnm(const MelSpectrogram& mel, const PitchContour& pitch,
                         const HnmConfig& cfg, std::uint64_t noise_seed) {
  const auto harmonic = harmonic_component(pitch, mel, cfg);
  const auto noise = noise_component(mel, pitch, cfg, noise_seed);
  AudioClip clip;
  clip.sample_rate_hz = cfg.frame.sample_rate_hz;
  clip.samples.resize(harmonic.size());
  double peak = 0.0;
  for (std::size_t i = 0; i < harmonic.size(); ++i) {
    clip.samples[i] = harmonic[i] + noise[i];
    if (!std::isfinite(clip.samples[i])) {
      fail(ErrorCode::kValidation, "vocoder: non-finite output sample");
    }
    peak = std::max(peak, std::abs(clip.samples[i]));
  }
  if (peak > cfg.peak_limit) {
    const double s = cfg.peak_limit / peak;
    for (auto& v : clip.samples) v *= s;
  }
  return clip;
}

}  // namespace nsv
