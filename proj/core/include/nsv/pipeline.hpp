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
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nsv/acoustic.hpp"
#include "nsv/audio.hpp"
#include "nsv/config.hpp"
#include "nsv/eval.hpp"

namespace nsv {

// Workdir layout.
std::filesystem::path dataset_dir(const PipelineConfig& config);
std::filesystem::path checkpoint_path(const PipelineConfig& config);

struct DatasetReport {
  int clips_in = 0;
  int clips_kept = 0;
  std::map<std::string, int> pruned_by_reason;
  double total_duration_s = 0.0;
  std::map<std::string, int> clips_per_speaker;

  int clips_pruned() const { return clips_in - clips_kept; }
};

std::string format_dataset_report(const DatasetReport& report);

/// prune -> resample -> features -> units -> run-length encode, writing
/// dataset/{manifest,prune_log,units,pp,report}.tsv plus mel/*.melf and
/// pitch/*.pitf under the workdir.
DatasetReport prepare(const PipelineConfig& config);

struct PreparedUtterance {
  std::string utterance_id;
  std::string speaker_id;
  std::string emotion;
  /// Durations at the mel frame rate; they sum to the mel row count.
  PseudoPhonemeSequence pp;
  RowMatrix mel;
  PitchContour pitch;
};

struct Dataset {
  std::vector<PreparedUtterance> items;
  /// Sorted, unique.
  std::vector<std::string> speaker_ids;
};

Dataset load_dataset(const PipelineConfig& config);

/// Training examples; speaker indices follow `speaker_ids`.
std::vector<Example> make_examples(const Dataset& dataset,
                                   const std::vector<std::string>& speaker_ids);

struct TrainSummary {
  std::filesystem::path checkpoint;
  LossBreakdown initial;
  LossBreakdown final;
  double duration_mae = 0.0;
  int steps = 0;
};

using ProgressFn = std::function<void(int step, const LossBreakdown&)>;

/// Trains on the prepared dataset, writes the checkpoint and model/loss.tsv.
TrainSummary train_model(const PipelineConfig& config, const ProgressFn& progress = {});

struct SynthesisResult {
  AudioClip clip;
  std::string pp_text;
  std::vector<int> durations;
  std::string speaker_id;
  long long frames = 0;
};

/// durations given -> used as-is; otherwise the duration predictor decides.
SynthesisResult synthesize_utterance(const AcousticModel& model, const std::vector<int>& units,
                                     const std::optional<std::vector<int>>& durations,
                                     const std::string& speaker_id, const HnmConfig& hnm,
                                     std::uint64_t noise_seed);

struct SynthesisRequest {
  /// Either a prepared utterance id or pseudo-phoneme text.
  std::string utterance_id;
  std::string text;
  /// With text: optional durations. With utterance_id: ground-truth
  /// durations are used when config.ground_truth_durations is set.
  std::optional<std::vector<int>> durations;
  std::string speaker_id;
  std::optional<std::uint64_t> noise_seed;
  /// Defaults to <workdir>/synth/<source>__<speaker>.wav.
  std::filesystem::path output;
  std::filesystem::path checkpoint;
};

struct SynthesisFiles {
  SynthesisResult result;
  std::filesystem::path wav;
  /// TSV "pp_text  durations  speaker_id  frames  noise_seed".
  std::filesystem::path sidecar;
};

SynthesisFiles synthesize(const PipelineConfig& config, const SynthesisRequest& request);

struct EvalRow {
  std::string emotion;
  /// "synthetic" or "train".
  std::string kind;
  std::size_t n = 0;
  int repeats = 0;
  RepeatedFid fid;
};

struct EvalReport {
  std::vector<EvalRow> rows;
};

std::string format_eval_report(const EvalReport& report);

/// FID of synthesized utterances against the reference set, per emotion and
/// for "all", for each n in config.eval_sizes; plus one train-set baseline row
/// per group. Writes eval/report.tsv and eval/reference.fids.
EvalReport evaluate(const PipelineConfig& config,
                    const std::filesystem::path& checkpoint = {});

struct SpeakerAnalysis {
  SpeakerProjection projection;
  std::optional<double> silhouette;
  std::filesystem::path output;
};

/// PCA projection of the learned speaker table, written to
/// analysis/projection.tsv. With a "speaker_id<TAB>group" file the
/// silhouette score of the groups in the projected plane is computed.
SpeakerAnalysis analyze_speakers(const PipelineConfig& config,
                                 const std::filesystem::path& groups = {},
                                 const std::filesystem::path& checkpoint = {});

/// Writes the configured synthetic corpus into `out_dir` and returns the
/// manifest path.
std::filesystem::path gen_corpus(const PipelineConfig& config,
                                 const std::filesystem::path& out_dir);

}  // namespace nsv
