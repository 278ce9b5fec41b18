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
#include "nsv/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <set>

#include "nsv/binio.hpp"
#include "nsv/error.hpp"
#include "nsv/random.hpp"
#include "nsv/tsv.hpp"

namespace nsv {
namespace {

constexpr const char* kManifestHeader =
    "utterance_id\tspeaker_id\temotion\tpath\tduration_s";

double parse_double(const std::string& field, const std::string& where) {
  double v = 0.0;
  auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    fail(ErrorCode::kParse, where + ": not a number: '" + field + "'");
  }
  return v;
}

std::vector<double> lowpass(const std::vector<double>& x, double cutoff_hz,
                            int fs) {
  constexpr int kHalf = 127;
  const double fc = cutoff_hz / fs;
  const double beta = 8.0;
  std::vector<double> h(2 * kHalf + 1);
  double sum = 0.0;
  for (int m = -kHalf; m <= kHalf; ++m) {
    const double t = static_cast<double>(m);
    const double s = m == 0 ? 2.0 * fc
                            : std::sin(2.0 * std::numbers::pi * fc * t) /
                                  (std::numbers::pi * t);
    const double r = t / (kHalf + 1.0);
    const double w = std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - r * r)) /
                     std::cyl_bessel_i(0.0, beta);
    h[m + kHalf] = s * w;
    sum += h[m + kHalf];
  }
  for (auto& v : h) v /= sum;

  const auto n = static_cast<int>(x.size());
  std::vector<double> y(x.size(), 0.0);
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    const int lo = std::max(-kHalf, i - n + 1);
    const int hi = std::min(kHalf, i);
    for (int m = lo; m <= hi; ++m) acc += h[m + kHalf] * x[i - m];
    y[i] = acc;
  }
  return y;
}

SpeakerTimbre make_speaker(const SynthCorpusConfig& cfg, int s, Rng& rng) {
  SpeakerTimbre t;
  char id[32];
  std::snprintf(id, sizeof id, "spk%02d", s);
  t.speaker_id = id;
  // Stratified so base pitches are distinct across speakers.
  t.base_f0_hz =
      150.0 + 200.0 * (s + rng.uniform(0.2, 0.8)) / std::max(1, cfg.n_speakers);
  t.formants_hz = {rng.uniform(550, 850), rng.uniform(1200, 2000),
                   rng.uniform(2500, 3300)};
  t.bandwidths_hz = {80.0 * rng.uniform(0.8, 1.2), 120.0 * rng.uniform(0.8, 1.2),
                     180.0 * rng.uniform(0.8, 1.2)};
  t.breath_level = rng.uniform(0.008, 0.015);
  t.gain = rng.uniform(0.6, 0.9);
  if (cfg.condition_groups) {
    t.condition_group = s % 2;
    t.bandlimit_hz = t.condition_group == 1 ? cfg.bandlimit_hz : 0.0;
  }
  return t;
}

double harmonic_amplitude(const SpeakerTimbre& t, double freq) {
  static constexpr std::array<double, 3> kGains = {1.0, 0.6, 0.35};
  double a = 0.02;
  for (std::size_t i = 0; i < 3; ++i) {
    const double d = (freq - t.formants_hz[i]) / t.bandwidths_hz[i];
    a += kGains[i] / (1.0 + d * d);
  }
  return a;
}

// Adds one "ha": an aspirated onset followed by a voiced syllable.
void add_syllable(std::vector<double>& x, int fs, const SpeakerTimbre& t,
                  double start_s, double aspiration_s, double voiced_s,
                  Rng& rng) {
  const auto n = static_cast<std::int64_t>(x.size());
  const auto a0 = static_cast<std::int64_t>(start_s * fs);
  const auto a1 = static_cast<std::int64_t>((start_s + aspiration_s) * fs);
  const auto v1 = static_cast<std::int64_t>((start_s + aspiration_s + voiced_s) * fs);

  for (auto i = a0; i < a1 && i < n; ++i) {
    const double env = std::sin(std::numbers::pi * (i - a0) / std::max<std::int64_t>(1, a1 - a0));
    x[i] += 0.06 * env * rng.normal();
  }

  const double f_start = t.base_f0_hz * (1.0 + rng.uniform(-0.05, 0.1));
  const double f_end = 0.96 * f_start;
  const double nyquist = 0.5 * fs;
  const auto len = std::max<std::int64_t>(1, v1 - a1);
  const auto attack = std::max<std::int64_t>(1, fs / 100);
  double phase = 0.0;
  for (auto i = a1; i < v1 && i < n; ++i) {
    const double u = static_cast<double>(i - a1) / len;
    const double f0 = f_start + (f_end - f_start) * u;
    phase += 2.0 * std::numbers::pi * f0 / fs;
    if (phase > 2.0 * std::numbers::pi) phase -= 2.0 * std::numbers::pi;
    double env = std::min(1.0, static_cast<double>(i - a1) / attack);
    env *= 1.0 - 0.3 * u;
    env *= std::min(1.0, static_cast<double>(v1 - i) / attack);
    double s = 0.0;
    for (int k = 1; k * f0 < nyquist; ++k) {
      s += harmonic_amplitude(t, k * f0) * std::sin(k * phase);
    }
    x[i] += 0.25 * env * s + t.breath_level * env * rng.normal();
  }
}

void add_inhale(std::vector<double>& x, int fs, double start_s, double len_s,
                Rng& rng) {
  const auto n = static_cast<std::int64_t>(x.size());
  const auto i0 = static_cast<std::int64_t>(start_s * fs);
  const auto i1 = static_cast<std::int64_t>((start_s + len_s) * fs);
  double lp = 0.0;
  for (auto i = i0; i < i1 && i < n; ++i) {
    const double env =
        std::sin(std::numbers::pi * (i - i0) / std::max<std::int64_t>(1, i1 - i0));
    lp = 0.7 * lp + 0.3 * rng.normal();
    x[i] += 0.05 * env * lp;
  }
}

AudioClip synthesize_clip(const SynthCorpusConfig& cfg,
                          const SpeakerTimbre& t, double duration_s, Rng& rng) {
  const int fs = cfg.sample_rate_hz;
  AudioClip clip;
  clip.sample_rate_hz = fs;
  clip.samples.assign(static_cast<std::size_t>(std::lround(duration_s * fs)), 0.0);

  double cursor = rng.uniform(0.01, 0.05);
  int voiced = 0;
  while (true) {
    const int syllables = 2 + static_cast<int>(rng.below(3));
    bool stop = false;
    for (int k = 0; k < syllables; ++k) {
      if (voiced >= 2 && cursor > duration_s - 0.1) {
        stop = true;
        break;
      }
      const double h = rng.uniform(0.015, 0.035);
      const double v = rng.uniform(0.07, 0.13);
      add_syllable(clip.samples, fs, t, cursor, h, v, rng);
      ++voiced;
      cursor += h + v + rng.uniform(0.04, 0.09);
    }
    if (stop || cursor > duration_s - 0.1) break;
    if (cursor < duration_s - 0.3) {
      const double len = rng.uniform(0.15, 0.25);
      add_inhale(clip.samples, fs, cursor, len, rng);
      cursor += len + 0.05;
    }
  }

  if (t.bandlimit_hz > 0.0) clip.samples = lowpass(clip.samples, t.bandlimit_hz, fs);

  double peak = 0.0;
  for (double s : clip.samples) peak = std::max(peak, std::abs(s));
  if (peak > 0.0) {
    for (auto& s : clip.samples) s *= t.gain / peak;
  }
  return clip;
}

}  // namespace

bool is_known_emotion(const std::string& label) {
  return std::find(kEmotionLabels.begin(), kEmotionLabels.end(), label) !=
         kEmotionLabels.end();
}

CorpusManifest read_manifest(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    fail(ErrorCode::kNotFound, "manifest not found: " + path.string());
  }
  const auto text = binio::read_file(path);
  const auto base = path.parent_path();
  CorpusManifest m;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  for (const auto& line : tsv::lines(text)) {
    ++line_no;
    if (line.empty() || line.starts_with('#')) continue;
    if (line.starts_with("utterance_id\t")) continue;
    auto f = tsv::split(line);
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (f.size() != 5) fail(ErrorCode::kParse, where + ": expected 5 columns");
    if (!seen.insert(f[0]).second) {
      fail(ErrorCode::kParse, where + ": duplicate utterance_id '" + f[0] + "'");
    }
    ManifestEntry e;
    e.utterance_id = f[0];
    e.speaker_id = f[1];
    e.emotion = f[2];
    e.path = f[3];
    if (e.path.is_relative()) e.path = base / e.path;
    e.duration_s = parse_double(f[4], where);
    m.entries.push_back(std::move(e));
  }
  return m;
}

void write_manifest(const std::filesystem::path& path,
                    const CorpusManifest& manifest) {
  std::string out = std::string(kManifestHeader) + "\n";
  const auto base = path.parent_path();
  for (const auto& e : manifest.entries) {
    auto p = e.path;
    if (!base.empty() && p.is_absolute()) {
      auto rel = p.lexically_relative(base);
      if (!rel.empty() && !rel.string().starts_with("..")) p = rel;
    }
    out += tsv::join({e.utterance_id, e.speaker_id, e.emotion, p.generic_string(),
                      tsv::format_double(e.duration_s)}) +
           "\n";
  }
  binio::write_file(path, out);
}

void write_prune_log(const std::filesystem::path& path,
                     const CorpusManifest& manifest) {
  std::string out = "utterance_id\treason\n";
  for (const auto& p : manifest.prune_log) {
    out += p.utterance_id + "\t" + p.reason + "\n";
  }
  binio::write_file(path, out);
}

AudioClip load_clip(const ManifestEntry& entry) {
  auto clip = read_wav(entry.path);
  clip.utterance_id = entry.utterance_id;
  clip.speaker_id = entry.speaker_id;
  clip.emotion = entry.emotion;
  return clip;
}

CorpusManifest prune_corpus(const CorpusManifest& manifest,
                            const PruneConfig& rules,
                            const LevelFn& level_dbfs) {
  require(rules.silence_dbfs <= rules.low_volume_speaker_dbfs,
          "prune: silence threshold must not exceed the low-volume-speaker "
          "threshold");
  LevelFn level = level_dbfs;
  if (!level) {
    level = [](const ManifestEntry& e) { return rms_dbfs(load_clip(e).samples); };
  }

  CorpusManifest out;
  out.prune_log = manifest.prune_log;

  std::vector<const ManifestEntry*> kept;
  for (const auto& e : manifest.entries) {
    const bool excluded =
        std::find(rules.excluded_emotions.begin(), rules.excluded_emotions.end(),
                  e.emotion) != rules.excluded_emotions.end();
    if (excluded) out.prune_log.push_back({e.utterance_id, kReasonExcludedEmotion});
    else kept.push_back(&e);
  }

  std::vector<double> levels;
  levels.reserve(kept.size());
  for (const auto* e : kept) levels.push_back(level(*e));

  std::map<std::string, bool> speaker_all_low;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const bool low = levels[i] < rules.low_volume_speaker_dbfs;
    auto [it, inserted] = speaker_all_low.try_emplace(kept[i]->speaker_id, low);
    if (!inserted) it->second = it->second && low;
  }

  for (std::size_t i = 0; i < kept.size(); ++i) {
    const auto& e = *kept[i];
    if (speaker_all_low[e.speaker_id]) {
      out.prune_log.push_back({e.utterance_id, kReasonLowVolumeSpeaker});
    } else if (levels[i] < rules.silence_dbfs) {
      out.prune_log.push_back({e.utterance_id, kReasonSilent});
    } else {
      out.entries.push_back(e);
    }
  }

  if (out.entries.empty()) {
    fail(ErrorCode::kEmptyCorpus, "prune: no clips survive the pruning rules");
  }
  return out;
}

SyntheticCorpus generate_synthetic_corpus(const SynthCorpusConfig& cfg,
                                          std::uint64_t seed) {
  require(cfg.min_duration_s <= cfg.max_duration_s,
          "synthetic corpus: duration range is inverted");
  require(cfg.min_duration_s >= 0.6,
          "synthetic corpus: minimum duration must be at least 0.6 s");
  require(cfg.sample_rate_hz > 0, "synthetic corpus: sample rate must be positive");
  require(!cfg.emotions.empty(), "synthetic corpus: emotion list is empty");
  require(cfg.n_quiet_speakers >= 0 && cfg.n_silent_clips >= 0,
          "synthetic corpus: counts must be non-negative");
  if (cfg.n_speakers <= 0 || cfg.clips_per_speaker <= 0) {
    fail(ErrorCode::kEmptyCorpus, "synthetic corpus: no speakers or no clips");
  }

  SyntheticCorpus corpus;
  Rng speaker_rng(derive_seed(seed, 0));
  for (int s = 0; s < cfg.n_speakers; ++s) {
    corpus.speakers.push_back(make_speaker(cfg, s, speaker_rng));
  }

  auto emit = [&](AudioClip clip, const SpeakerTimbre& t, const std::string& emotion,
                  int index) {
    char id[48];
    std::snprintf(id, sizeof id, "%s_%03d", t.speaker_id.c_str(), index);
    clip.utterance_id = id;
    clip.speaker_id = t.speaker_id;
    clip.emotion = emotion;
    ManifestEntry e{clip.utterance_id, clip.speaker_id, emotion,
                    clip.utterance_id + ".wav", clip.duration_s()};
    corpus.manifest.entries.push_back(std::move(e));
    corpus.clips.push_back(std::move(clip));
  };

  const double quiet_rms = std::pow(10.0, -50.0 / 20.0);
  for (int s = 0; s < cfg.n_speakers; ++s) {
    const auto& t = corpus.speakers[static_cast<std::size_t>(s)];
    const bool quiet = s >= cfg.n_speakers - cfg.n_quiet_speakers;
    for (int c = 0; c < cfg.clips_per_speaker; ++c) {
      Rng rng(derive_seed(seed, 1000u + static_cast<std::uint64_t>(s) * 10007u +
                                    static_cast<std::uint64_t>(c)));
      const double dur = rng.uniform(cfg.min_duration_s, cfg.max_duration_s);
      auto clip = synthesize_clip(cfg, t, dur, rng);
      if (quiet) {
        const double r = rms(clip.samples);
        if (r > 0.0) {
          for (auto& v : clip.samples) v *= quiet_rms / r;
        }
      }
      emit(std::move(clip), t,
           cfg.emotions[static_cast<std::size_t>(c) % cfg.emotions.size()], c);
    }
  }

  for (int k = 0; k < cfg.n_silent_clips; ++k) {
    const auto& t = corpus.speakers[static_cast<std::size_t>(k % cfg.n_speakers)];
    Rng rng(derive_seed(seed, 900000u + static_cast<std::uint64_t>(k)));
    AudioClip clip;
    clip.sample_rate_hz = cfg.sample_rate_hz;
    const double dur = rng.uniform(cfg.min_duration_s, cfg.max_duration_s);
    clip.samples.assign(static_cast<std::size_t>(std::lround(dur * cfg.sample_rate_hz)),
                        0.0);
    emit(std::move(clip), t, cfg.emotions.front(),
         cfg.clips_per_speaker + k / cfg.n_speakers);
  }
  return corpus;
}

std::filesystem::path write_corpus(const std::filesystem::path& dir,
                                   const SyntheticCorpus& corpus) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < corpus.clips.size(); ++i) {
    write_wav(dir / corpus.manifest.entries[i].path, corpus.clips[i]);
  }
  const auto manifest_path = dir / "manifest.tsv";
  write_manifest(manifest_path, corpus.manifest);
  // Group file in the shape analyze-speakers reads.
  std::string groups = "speaker_id\tgroup\n";
  for (const auto& s : corpus.speakers) {
    groups += s.speaker_id + "\t" + std::to_string(s.condition_group) + "\n";
  }
  binio::write_file(dir / "speakers.tsv", groups);
  return manifest_path;
}

}  // namespace nsv
