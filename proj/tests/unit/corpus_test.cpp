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

#include <map>
#include <set>

#include "nsv/binio.hpp"
#include "nsv/corpus.hpp"
#include "nsv/features.hpp"
#include "nsv/random.hpp"
#include "test_support.hpp"

namespace nsv {
namespace {

using testing::code_of;

CorpusManifest fake_manifest(int n, const std::string& speaker_prefix = "s") {
  CorpusManifest m;
  for (int i = 0; i < n; ++i) {
    m.entries.push_back({"u" + std::to_string(i), speaker_prefix + std::to_string(i % 10),
                         "Amusement", "u" + std::to_string(i) + ".wav", 1.0});
  }
  return m;
}

LevelFn levels_from(std::map<std::string, double> by_id) {
  return [by_id = std::move(by_id)](const ManifestEntry& e) {
    auto it = by_id.find(e.utterance_id);
    return it == by_id.end() ? -20.0 : it->second;
  };
}

TEST(Prune, SixSilentOfHundred) {
  const CorpusManifest m = fake_manifest(100);
  std::map<std::string, double> levels;
  for (int i : {3, 17, 29, 41, 66, 98}) levels["u" + std::to_string(i)] = -70.0;
  const CorpusManifest out = prune_corpus(m, {}, levels_from(levels));
  EXPECT_EQ(out.entries.size(), 94u);
  ASSERT_EQ(out.prune_log.size(), 6u);
  for (const auto& p : out.prune_log) EXPECT_EQ(p.reason, kReasonSilent);
}

TEST(Prune, TriumphAndHorrorAreExcluded) {
  CorpusManifest m = fake_manifest(4);
  m.entries[1].emotion = "Triumph";
  m.entries[2].emotion = "Horror";
  const CorpusManifest out = prune_corpus(m, {}, levels_from({}));
  ASSERT_EQ(out.entries.size(), 2u);
  ASSERT_EQ(out.prune_log.size(), 2u);
  EXPECT_EQ(out.prune_log[0], (PruneLogEntry{"u1", kReasonExcludedEmotion}));
  EXPECT_EQ(out.prune_log[1], (PruneLogEntry{"u2", kReasonExcludedEmotion}));
}

TEST(Prune, QuietSpeakerRemovedEntirely) {
  CorpusManifest m;
  for (int i = 0; i < 3; ++i) m.entries.push_back({"q" + std::to_string(i), "quiet", "Awe", "x", 1});
  m.entries.push_back({"l0", "loud", "Awe", "x", 1});
  const CorpusManifest out =
      prune_corpus(m, {}, levels_from({{"q0", -50}, {"q1", -50}, {"q2", -50}}));
  ASSERT_EQ(out.entries.size(), 1u);
  EXPECT_EQ(out.entries[0].utterance_id, "l0");
  ASSERT_EQ(out.prune_log.size(), 3u);
  for (const auto& p : out.prune_log) EXPECT_EQ(p.reason, kReasonLowVolumeSpeaker);
}

TEST(Prune, SpeakerWithOneAudibleClipKeepsIt) {
  CorpusManifest m;
  for (int i = 0; i < 3; ++i) m.entries.push_back({"q" + std::to_string(i), "spk", "Awe", "x", 1});
  const CorpusManifest out =
      prune_corpus(m, {}, levels_from({{"q0", -50}, {"q1", -38}, {"q2", -20}}));
  // q0 is below the silence threshold, q1 is only below the speaker threshold.
  ASSERT_EQ(out.entries.size(), 2u);
  ASSERT_EQ(out.prune_log.size(), 1u);
  EXPECT_EQ(out.prune_log[0], (PruneLogEntry{"q0", kReasonSilent}));
}

TEST(Prune, EmptyResultIsError) {
  const CorpusManifest m = fake_manifest(3);
  EXPECT_EQ(code_of([&] {
              prune_corpus(m, {}, levels_from({{"u0", -90}, {"u1", -90}, {"u2", -90}}));
            }),
            ErrorCode::kEmptyCorpus);
}

TEST(Prune, RejectsInconsistentThresholds) {
  PruneConfig rules;
  rules.silence_dbfs = -30;
  rules.low_volume_speaker_dbfs = -35;
  EXPECT_EQ(code_of([&] { prune_corpus(fake_manifest(2), rules, levels_from({})); }),
            ErrorCode::kInvalidArgument);
}

// Property: prune(prune(m)) == prune(m) over random manifests and levels.
TEST(Prune, IdempotentOnRandomManifests) {
  Rng rng(2024);
  const std::vector<std::string> emotions = {"Amusement", "Triumph", "Horror", "Fear", "Awe"};
  for (int trial = 0; trial < 300; ++trial) {
    CorpusManifest m;
    std::map<std::string, double> levels;
    const int n = 1 + static_cast<int>(rng.below(30));
    const int speakers = 1 + static_cast<int>(rng.below(6));
    for (int i = 0; i < n; ++i) {
      const std::string id = "c" + std::to_string(i);
      m.entries.push_back({id, "s" + std::to_string(rng.below(speakers)),
                           emotions[rng.below(emotions.size())], id + ".wav", 1.0});
      levels[id] = rng.uniform(-80.0, -10.0);
    }
    const auto level = levels_from(levels);
    CorpusManifest once;
    try {
      once = prune_corpus(m, {}, level);
    } catch (const Error& e) {
      ASSERT_EQ(e.code(), ErrorCode::kEmptyCorpus);
      continue;
    }
    EXPECT_EQ(prune_corpus(once, {}, level), once) << "trial " << trial;
    EXPECT_EQ(once.entries.size() + once.prune_log.size(), m.entries.size());
  }
}

TEST(Manifest, RoundTripAndRelativePaths) {
  testing::TempDir dir;
  CorpusManifest m;
  m.entries.push_back({"a", "s1", "Awe", dir.path() / "a.wav", 1.5});
  m.entries.push_back({"b", "s2", "Fear", dir.path() / "sub" / "b.wav", 0.25});
  write_manifest(dir / "manifest.tsv", m);
  const std::string text = binio::read_file(dir / "manifest.tsv");
  EXPECT_NE(text.find("a\ts1\tAwe\ta.wav\t1.5\n"), std::string::npos) << text;
  EXPECT_NE(text.find("sub/b.wav"), std::string::npos);
  EXPECT_EQ(read_manifest(dir / "manifest.tsv"), m);
}

TEST(Manifest, DuplicateIdIsParseError) {
  testing::TempDir dir;
  binio::write_file(dir / "m.tsv", "a\ts\tAwe\ta.wav\t1\na\ts\tAwe\tb.wav\t1\n");
  EXPECT_EQ(code_of([&] { read_manifest(dir / "m.tsv"); }), ErrorCode::kParse);
}

TEST(Manifest, MissingFileIsNotFound) {
  EXPECT_EQ(code_of([] { read_manifest("/nonexistent/dir/manifest.tsv"); }),
            ErrorCode::kNotFound);
}

SynthCorpusConfig small_config() {
  SynthCorpusConfig cfg;
  cfg.n_speakers = 5;
  cfg.clips_per_speaker = 4;
  return cfg;
}

TEST(SyntheticCorpus, SeedSevenIsReproducible) {
  const auto a = generate_synthetic_corpus(small_config(), 7);
  const auto b = generate_synthetic_corpus(small_config(), 7);
  ASSERT_EQ(a.manifest.entries.size(), 20u);
  ASSERT_EQ(a.clips.size(), 20u);
  for (std::size_t i = 0; i < a.clips.size(); ++i) {
    EXPECT_EQ(encode_wav(a.clips[i]), encode_wav(b.clips[i]));
  }
  EXPECT_EQ(a.manifest, b.manifest);
}

TEST(SyntheticCorpus, DifferentSeedsDiffer) {
  const auto a = generate_synthetic_corpus(small_config(), 7);
  const auto b = generate_synthetic_corpus(small_config(), 8);
  int differing = 0;
  for (std::size_t i = 0; i < a.clips.size(); ++i) {
    if (a.clips[i].samples != b.clips[i].samples) ++differing;
  }
  EXPECT_EQ(differing, 20);
}

TEST(SyntheticCorpus, DegenerateConfigs) {
  auto cfg = small_config();
  cfg.clips_per_speaker = 0;
  EXPECT_EQ(code_of([&] { generate_synthetic_corpus(cfg, 1); }), ErrorCode::kEmptyCorpus);
  cfg = small_config();
  cfg.min_duration_s = 2.0;
  cfg.max_duration_s = 1.0;
  EXPECT_EQ(code_of([&] { generate_synthetic_corpus(cfg, 1); }), ErrorCode::kInvalidArgument);
}

TEST(SyntheticCorpus, ClipsHaveSeveralVoicedSegmentsAndDistinctSpeakers) {
  const auto c = generate_synthetic_corpus(small_config(), 11);
  std::set<double> f0s;
  for (const auto& t : c.speakers) f0s.insert(t.base_f0_hz);
  EXPECT_EQ(f0s.size(), c.speakers.size());

  for (const auto& clip : c.clips) {
    ASSERT_EQ(clip.sample_rate_hz, 32000);
    for (double s : clip.samples) ASSERT_LE(std::abs(s), 1.0);
    const PitchContour p = estimate_pitch(clip.samples);
    int segments = 0;
    bool prev = false;
    for (bool v : p.voiced) {
      if (v && !prev) ++segments;
      prev = v;
    }
    EXPECT_GE(segments, 2) << clip.utterance_id;
  }
}

TEST(SyntheticCorpus, ConditionGroupsBandLimitOddSpeakers) {
  auto cfg = small_config();
  cfg.condition_groups = true;
  const auto c = generate_synthetic_corpus(cfg, 3);
  for (std::size_t i = 0; i < c.clips.size(); ++i) {
    const auto& clip = c.clips[i];
    const MelSpectrogram mel = compute_log_mel(clip.samples);
    // Mean log-mel of the top 40 bands (well above 8 kHz).
    const double top = mel.values.rightCols(40).mean();
    const int group = c.speakers[i / 4].condition_group;
    if (group == 1) EXPECT_LT(top, std::log(1e-3)) << clip.utterance_id;
    EXPECT_EQ(group, static_cast<int>((i / 4) % 2));
  }
}

TEST(SyntheticCorpus, PruneDetectsSilentAndQuiet) {
  testing::TempDir dir;
  auto cfg = small_config();
  cfg.n_silent_clips = 2;
  cfg.n_quiet_speakers = 1;
  const auto path = write_corpus(dir.path(), generate_synthetic_corpus(cfg, 5));
  const CorpusManifest m = read_manifest(path);
  ASSERT_EQ(m.entries.size(), 22u);
  const CorpusManifest out = prune_corpus(m, {});
  std::map<std::string, int> reasons;
  for (const auto& p : out.prune_log) ++reasons[p.reason];
  EXPECT_EQ(reasons[kReasonSilent], 2);
  EXPECT_EQ(reasons[kReasonLowVolumeSpeaker], 4);
  EXPECT_EQ(out.entries.size(), 16u);
}

}  // namespace
}  // namespace nsv
