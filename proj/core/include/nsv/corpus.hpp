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

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "nsv/audio.hpp"

namespace nsv {

/// The ten ExVo emotion labels.
inline constexpr std::array<const char*, 10> kEmotionLabels = {
    "Amusement", "Awe",      "Awkwardness", "Distress", "Excitement",
    "Fear",      "Horror",   "Sadness",     "Surprise", "Triumph"};

bool is_known_emotion(const std::string& label);

struct ManifestEntry {
  std::string utterance_id;
  std::string speaker_id;
  std::string emotion;
  std::filesystem::path path;
  double duration_s = 0.0;

  bool operator==(const ManifestEntry&) const = default;
};

struct PruneLogEntry {
  std::string utterance_id;
  std::string reason;

  bool operator==(const PruneLogEntry&) const = default;
};

struct CorpusManifest {
  std::vector<ManifestEntry> entries;
  std::vector<PruneLogEntry> prune_log;

  bool operator==(const CorpusManifest&) const = default;
};

/// Reads the manifest TSV. Relative paths are resolved against the
/// manifest's directory. Rejects duplicate utterance ids.
CorpusManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path,
                    const CorpusManifest& manifest);
void write_prune_log(const std::filesystem::path& path,
                     const CorpusManifest& manifest);

/// Loads one entry's audio and stamps the manifest metadata onto it.
AudioClip load_clip(const ManifestEntry& entry);

struct PruneConfig {
  double silence_dbfs = -40.0;
  /// A speaker is dropped when every one of their clips is below this level.
  /// Must not be below silence_dbfs, otherwise pruning is not idempotent.
  double low_volume_speaker_dbfs = -35.0;
  std::vector<std::string> excluded_emotions = {"Triumph", "Horror"};
};

inline constexpr const char* kReasonExcludedEmotion = "excluded-emotion";
inline constexpr const char* kReasonLowVolumeSpeaker = "low-volume-speaker";
inline constexpr const char* kReasonSilent = "silent";

using LevelFn = std::function<double(const ManifestEntry&)>;

/// Applies, in order: emotion exclusion, the low-volume-speaker rule (over
/// clips that survived exclusion), and the per-clip silence rule. Removals
/// are appended to the returned manifest's prune_log. `level_dbfs` defaults
/// to decoding each file and measuring its RMS.
CorpusManifest prune_corpus(const CorpusManifest& manifest,
                            const PruneConfig& rules,
                            const LevelFn& level_dbfs = {});

struct SynthCorpusConfig {
  int n_speakers = 5;
  int clips_per_speaker = 4;
  double min_duration_s = 1.0;
  double max_duration_s = 2.0;
  int sample_rate_hz = kPipelineRateHz;
  /// Emotion labels are assigned to a speaker's clips round-robin.
  std::vector<std::string> emotions = {"Amusement"};
  /// When set, odd-indexed speakers are recorded through an 8 kHz low-pass,
  /// giving two recording-condition groups.
  bool condition_groups = false;
  double bandlimit_hz = 8000.0;
  /// Extra all-silent clips, assigned to speakers round-robin.
  int n_silent_clips = 0;
  /// The last n speakers are attenuated to about -50 dBFS.
  int n_quiet_speakers = 0;
};

struct SpeakerTimbre {
  std::string speaker_id;
  double base_f0_hz = 0.0;
  std::array<double, 3> formants_hz{};
  std::array<double, 3> bandwidths_hz{};
  double breath_level = 0.0;
  double gain = 1.0;
  /// 0 means fullband.
  double bandlimit_hz = 0.0;
  int condition_group = 0;
};

struct SyntheticCorpus {
  CorpusManifest manifest;
  std::vector<AudioClip> clips;
  std::vector<SpeakerTimbre> speakers;
};

/// Laughter-like burst trains ("ha ha ha", inhale, "ha ha") per speaker.
/// Pure function of (config, seed). Manifest paths are bare file names.
SyntheticCorpus generate_synthetic_corpus(const SynthCorpusConfig& config,
                                          std::uint64_t seed);

/// Writes every clip as PCM16 WAV plus manifest.tsv into `dir`.
std::filesystem::path write_corpus(const std::filesystem::path& dir,
                                   const SyntheticCorpus& corpus);

}  // namespace nsv
