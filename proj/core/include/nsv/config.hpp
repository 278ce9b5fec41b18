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
#include <string>
#include <string_view>
#include <vector>

#include "nsv/acoustic.hpp"
#include "nsv/corpus.hpp"
#include "nsv/features.hpp"
#include "nsv/vocoder.hpp"

namespace nsv {

enum class UnitsSource { kKMeans, kImport };

struct PipelineConfig {
  std::filesystem::path corpus_manifest;
  std::filesystem::path workdir = "work";
  std::uint64_t seed = 0;

  FrameConfig frame;
  ModelConfig model;
  HnmConfig hnm;
  PruneConfig prune;
  /// Used by gen-corpus only.
  SynthCorpusConfig corpus;

  UnitsSource units_source = UnitsSource::kKMeans;
  std::filesystem::path units_path;
  int kmeans_max_iterations = 300;

  bool ground_truth_durations = false;
  std::uint64_t noise_seed = 0;

  std::vector<int> eval_sizes = {100, 1000};
  int eval_repeats = 10;
  /// Reference manifest for FID; empty means the prepared training set.
  std::filesystem::path eval_reference;
  /// Compute eval features from vocoded audio rather than the predicted mel.
  bool eval_through_vocoder = true;

  void validate() const;
};

/// One `key = value` per line; `#` starts a comment. Unknown keys are
/// rejected. Relative paths resolve against `base_dir`.
PipelineConfig parse_pipeline_config(std::string_view text, std::string_view context,
                                     const std::filesystem::path& base_dir = {});
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
std::string format_pipeline_config(const PipelineConfig& config);

}  // namespace nsv
