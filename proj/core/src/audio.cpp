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
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>

#include "nsv/audio.hpp"
#include "nsv/error.hpp"

namespace nsv {
namespace {

// Kaiser design targets: 80 dB stopband, transition band occupying the top
// 15% below the lower Nyquist rate so the stopband starts exactly there.
constexpr double kStopbandDb = 80.0;
constexpr double kTransitionFraction = 0.15;

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

double kaiser(double x, double beta) {
  // x in [-1, 1]
  if (std::abs(x) > 1.0) return 0.0;
  return std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - x * x)) /
         std::cyl_bessel_i(0.0, beta);
}

}  // namespace

AudioClip resample(const AudioClip& clip, int target_rate_hz) {
  require(clip.sample_rate_hz > 0, "resample: source rate must be positive");
  require(target_rate_hz > 0, "resample: target rate must be positive");

  AudioClip out = clip;
  if (target_rate_hz == clip.sample_rate_hz) return out;

  const std::int64_t src = clip.sample_rate_hz;
  const std::int64_t tgt = target_rate_hz;
  const std::int64_t g = std::gcd(src, tgt);
  const std::int64_t up = tgt / g;
  const std::int64_t down = src / g;

  const auto n_in = static_cast<std::int64_t>(clip.samples.size());
  const std::int64_t n_out = (n_in * tgt + src / 2) / src;

  // Filter expressed in source-sample time units.
  const double nyquist = 0.5 * static_cast<double>(std::min(src, tgt)) /
                         static_cast<double>(src);
  const double transition = kTransitionFraction * nyquist;
  const double cutoff = nyquist - 0.5 * transition;
  const double beta = 0.1102 * (kStopbandDb - 8.7);
  const double taps_total =
      (kStopbandDb - 7.95) / (2.285 * 2.0 * std::numbers::pi * transition);
  const double half_width = std::ceil(0.5 * taps_total);
  const auto half = static_cast<std::int64_t>(half_width);

  // phase p covers fractional offsets p/up; taps indexed m in [-half, half].
  const std::int64_t width = 2 * half + 1;
  std::vector<double> table(static_cast<std::size_t>(up * width));
  for (std::int64_t p = 0; p < up; ++p) {
    const double frac = static_cast<double>(p) / static_cast<double>(up);
    double sum = 0.0;
    for (std::int64_t m = -half; m <= half; ++m) {
      const double tau = frac - static_cast<double>(m);
      const double h = 2.0 * cutoff * sinc(2.0 * cutoff * tau) *
                       kaiser(tau / (half_width + 1.0), beta);
      table[static_cast<std::size_t>(p * width + m + half)] = h;
      sum += h;
    }
    for (std::int64_t m = 0; m < width; ++m) {
      table[static_cast<std::size_t>(p * width + m)] /= sum;
    }
  }

  out.sample_rate_hz = target_rate_hz;
  out.samples.assign(static_cast<std::size_t>(n_out), 0.0);
  for (std::int64_t j = 0; j < n_out; ++j) {
    const std::int64_t num = j * down;
    const std::int64_t base = num / up;
    const std::int64_t phase = num % up;
    const double* taps = &table[static_cast<std::size_t>(phase * width)];
    double acc = 0.0;
    for (std::int64_t m = -half; m <= half; ++m) {
      const std::int64_t n = base + m;
      if (n < 0 || n >= n_in) continue;
      acc += taps[m + half] * clip.samples[static_cast<std::size_t>(n)];
    }
    out.samples[static_cast<std::size_t>(j)] = acc;
  }
  return out;
}

double rms(const std::vector<double>& samples) {
  if (samples.empty()) return 0.0;
  double acc = 0.0;
  for (double s : samples) acc += s * s;
  return std::sqrt(acc / static_cast<double>(samples.size()));
}

double rms_dbfs(const std::vector<double>& samples) {
  const double r = rms(samples);
  if (r <= 0.0) return -std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(r);
}

}  // namespace nsv
