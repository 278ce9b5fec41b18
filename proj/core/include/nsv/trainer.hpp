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
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "nsv/acoustic.hpp"

namespace nsv {

class Adam {
 public:
  Adam(nn::ParamStore& params, double learning_rate, double beta1 = 0.9,
       double beta2 = 0.98, double epsilon = 1e-9);

  void step();
  long long steps() const { return t_; }

 private:
  nn::ParamStore& params_;
  double lr_, beta1_, beta2_, eps_;
  long long t_ = 0;
  std::vector<RowMatrix> m_, v_;
};

struct TrainOptions {
  std::uint64_t seed = 0;
  /// Called after each optimizer step with the batch loss of that step.
  std::function<void(int step, const LossBreakdown&)> on_step;
};

struct TrainResult {
  AcousticModel model;
  /// Batch loss at each step, measured before that step's update.
  std::vector<LossBreakdown> loss_curve;
  /// Full-dataset loss without dropout, before and after training.
  LossBreakdown initial;
  LossBreakdown final;
};

/// Adam over randomly shuffled mini-batches for config.max_steps steps.
/// Throws kDivergence naming the step when the loss becomes non-finite.
TrainResult train(const std::vector<Example>& data, const ModelConfig& config,
                  const std::vector<std::string>& speaker_ids,
                  const TrainOptions& options);

/// Mean absolute difference between predicted (rounded) and reference
/// durations over every pseudo-phoneme of `data`.
double duration_mae(const AcousticModel& model, const std::vector<Example>& data);

struct GradientCheckOptions {
  double epsilon = 1e-3;
  int samples_per_group = 200;
  std::uint64_t seed = 0;
  /// Coordinates whose analytic gradient is below this are skipped (the L1
  /// mel loss has a kink where prediction equals target).
  double skip_below = 1e-12;
  /// Fault injection: analytic gradients of tensors whose name starts with
  /// this prefix are multiplied by `corrupt_scale`.
  std::string corrupt_prefix;
  double corrupt_scale = 1.0;
};

struct GroupCheck {
  int checked = 0;
  int skipped = 0;
  double max_relative_error = 0.0;
};

struct GradientCheckReport {
  std::map<std::string, GroupCheck> groups;
  double max_relative_error = 0.0;
};

/// Parameter group used by the gradient check: embedding,
/// speaker_embedding, dilated_conv, layer_norm, linear_heads,
/// duration_head, input_projection.
std::string layer_type(const std::string& tensor_name);

/// Central finite differences (five-point stencil, step epsilon) against the
/// analytic gradient of the total loss (ground-truth durations, dropout
/// off). Leaves parameters unchanged.
GradientCheckReport gradient_check(AcousticModel& model, const Batch& batch,
                                   const GradientCheckOptions& options = {});

}  // namespace nsv
