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
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nsv/layers.hpp"
#include "nsv/ppcodec.hpp"

namespace nsv {

struct ModelConfig {
  int embed_dim = 128;
  int conv_channels = 128;
  int kernel_size = 3;
  /// Dilations of one residual stack (encoder and decoder each get one).
  std::vector<int> dilations = {1, 2, 4, 1, 2, 4};
  int n_speakers = 1;
  int n_units = kNumUnits;
  int mel_bins = kMelBins;
  double dropout = 0.1;
  double learning_rate = 1e-3;
  int batch_size = 8;
  int max_steps = 2000;
  /// Scaled pitch below this is synthesized as unvoiced.
  double voicing_threshold = 0.05;

  void validate() const;
  /// key=value lines, one per field.
  std::string to_kv() const;
  static ModelConfig from_kv(const std::map<std::string, std::string>& kv);

  bool operator==(const ModelConfig&) const = default;
};

/// One utterance. Durations are at the mel frame rate.
struct Example {
  std::string utterance_id;
  std::vector<int> units;
  std::vector<int> durations;
  int speaker = 0;
  RowMatrix mel;                    // frames x mel_bins
  std::vector<double> pitch;        // scaled to [0,1]
  std::vector<bool> voiced;
};

/// Utterances are kept ragged; reductions run over each item's own length,
/// which is equivalent to masking padded positions.
struct Batch {
  std::vector<const Example*> items;
};

enum class Mode { kTrain, kInfer };

struct AcousticOutput {
  RowMatrix mel;                         // frames x mel_bins
  std::vector<double> pitch;             // in [0,1]
  std::vector<double> log_duration;      // log(1 + d) per pseudo-phoneme
  std::vector<int> durations_used;       // durations fed to the length regulator
};

struct LossBreakdown {
  double total = 0.0;
  double mel_l1 = 0.0;
  double pitch_mse = 0.0;
  double dur_mse = 0.0;
};

/// Repeats row i of `rows` durations[i] times.
RowMatrix length_regulate(const RowMatrix& rows, const std::vector<int>& durations);

/// Rescales durations from the pseudo-phoneme frame rate to the mel rate and
/// pads or trims the tail so they sum to `mel_frames`. Trimming may drop
/// trailing pseudo-phonemes whose duration reaches zero.
PseudoPhonemeSequence align_durations(const PseudoPhonemeSequence& pp,
                                      long long mel_frames, int mel_rate_hz = 100);

/// max(1, round(exp(x) - 1)) per entry.
std::vector<int> durations_from_log(const std::vector<double>& log_duration);

class AcousticModel {
 public:
  AcousticModel(ModelConfig config, std::vector<std::string> speaker_ids,
                std::uint64_t seed);

  AcousticModel(AcousticModel&&) noexcept = default;
  AcousticModel& operator=(AcousticModel&&) noexcept = default;

  const ModelConfig& config() const { return config_; }
  const std::vector<std::string>& speaker_ids() const { return speaker_ids_; }
  int speaker_index(const std::string& speaker_id) const;  // -1 if unknown

  nn::ParamStore& params() { return *params_; }
  const nn::ParamStore& params() const { return *params_; }

  /// kTrain regulates with the example's ground-truth durations, kInfer with
  /// predicted ones. Dropout applies only when `dropout_rng` is given.
  AcousticOutput forward(const Example& ex, Mode mode,
                         Rng* dropout_rng = nullptr) const;

  /// Inference from pseudo-phonemes alone; `durations` overrides the
  /// duration predictor when provided.
  AcousticOutput infer(const std::vector<int>& units, int speaker,
                       const std::optional<std::vector<int>>& durations = std::nullopt) const;

  LossBreakdown loss(const Batch& batch, Mode mode = Mode::kTrain) const;

  /// Loss over the batch with ground-truth durations; accumulates gradients
  /// into params() (which are not cleared first).
  LossBreakdown loss_and_gradients(const Batch& batch, Rng* dropout_rng = nullptr);

  /// Speaker table (n_speakers x embed_dim).
  const RowMatrix& speaker_table() const;

 private:
  struct Cache;

  AcousticOutput run(const Example& ex, const std::vector<int>* durations,
                     Rng* dropout_rng, Cache* cache) const;
  void backward(const Example& ex, const Cache& cache, const RowMatrix& dmel,
                const Eigen::VectorXd& dpitch, const Eigen::VectorXd& dlogdur);
  void build();
  void init(std::uint64_t seed);

  ModelConfig config_;
  std::vector<std::string> speaker_ids_;
  std::unique_ptr<nn::ParamStore> params_;

  nn::Embedding unit_embedding_;
  nn::Embedding speaker_embedding_;
  std::optional<nn::Linear> input_projection_;
  std::vector<nn::ResidualConvBlock> encoder_;
  nn::Conv1d duration_conv_;
  nn::LayerNorm duration_norm_;
  nn::Linear duration_out_;
  std::vector<nn::ResidualConvBlock> decoder_;
  nn::Linear mel_head_;
  nn::Linear pitch_head_;
};

/// Per-item loss terms, mean-reduced over the batch's unpadded positions;
/// pitch error only counts voiced frames.
LossBreakdown compute_loss(const std::vector<AcousticOutput>& outputs,
                           const Batch& batch);

}  // namespace nsv
