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
#include "nsv/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nsv/error.hpp"

namespace nsv {

Adam::Adam(nn::ParamStore& params, double learning_rate, double beta1, double beta2,
           double epsilon)
    : params_(params), lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {
  for (const auto& t : params_.tensors()) {
    m_.push_back(RowMatrix::Zero(t.value.rows(), t.value.cols()));
    v_.push_back(RowMatrix::Zero(t.value.rows(), t.value.cols()));
  }
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  std::size_t i = 0;
  for (auto& t : params_.tensors()) {
    auto& m = m_[i];
    auto& v = v_[i];
    m = beta1_ * m + (1.0 - beta1_) * t.grad;
    v = beta2_ * v + (1.0 - beta2_) * t.grad.cwiseAbs2();
    t.value.array() -= lr_ * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps_);
    ++i;
  }
}

namespace {

Batch whole(const std::vector<Example>& data) {
  Batch b;
  for (const auto& ex : data) b.items.push_back(&ex);
  return b;
}

}  // namespace

TrainResult train(const std::vector<Example>& data, const ModelConfig& config,
                  const std::vector<std::string>& speaker_ids,
                  const TrainOptions& options) {
  if (data.empty()) fail(ErrorCode::kEmptyCorpus, "train: no training examples");
  config.validate();

  TrainResult result{AcousticModel(config, speaker_ids, derive_seed(options.seed, 1)),
                     {}, {}, {}};
  auto& model = result.model;
  const Batch all = whole(data);
  result.initial = model.loss(all);

  Adam adam(model.params(), config.learning_rate);
  Rng order_rng(derive_seed(options.seed, 2));
  Rng dropout_rng(derive_seed(options.seed, 3));

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();
  const auto batch_size = std::min<std::size_t>(static_cast<std::size_t>(config.batch_size),
                                                data.size());

  for (int step = 0; step < config.max_steps; ++step) {
    Batch batch;
    while (batch.items.size() < batch_size) {
      if (cursor == order.size()) {
        for (std::size_t i = order.size(); i > 1; --i) {
          std::swap(order[i - 1], order[order_rng.below(i)]);
        }
        cursor = 0;
      }
      batch.items.push_back(&data[order[cursor++]]);
    }

    model.params().zero_grad();
    const auto loss = model.loss_and_gradients(
        batch, config.dropout > 0.0 ? &dropout_rng : nullptr);
    if (!std::isfinite(loss.total)) {
      fail(ErrorCode::kDivergence,
           "train: loss became non-finite at step " + std::to_string(step));
    }
    adam.step();
    result.loss_curve.push_back(loss);
    if (options.on_step) options.on_step(step, loss);
  }

  result.final = model.loss(all);
  return result;
}

double duration_mae(const AcousticModel& model, const std::vector<Example>& data) {
  double err = 0.0;
  double n = 0.0;
  for (const auto& ex : data) {
    const auto out = model.forward(ex, Mode::kTrain);
    const auto predicted = durations_from_log(out.log_duration);
    for (std::size_t i = 0; i < predicted.size(); ++i) {
      err += std::abs(predicted[i] - ex.durations[i]);
      n += 1.0;
    }
  }
  return n > 0.0 ? err / n : 0.0;
}

std::string layer_type(const std::string& name) {
  if (name.starts_with("unit_embedding")) return "embedding";
  if (name.starts_with("speaker_embedding")) return "speaker_embedding";
  if (name.starts_with("input_projection")) return "input_projection";
  if (name.starts_with("duration.")) return "duration_head";
  if (name.starts_with("mel_head") || name.starts_with("pitch_head")) return "linear_heads";
  if (name.find(".norm.") != std::string::npos) return "layer_norm";
  if (name.find(".conv.") != std::string::npos) return "dilated_conv";
  return "other";
}

GradientCheckReport gradient_check(AcousticModel& model, const Batch& batch,
                                   const GradientCheckOptions& options) {
  require(options.epsilon > 0.0, "gradient_check: epsilon must be positive");
  auto& params = model.params();
  params.zero_grad();
  model.loss_and_gradients(batch, nullptr);

  if (!options.corrupt_prefix.empty()) {
    for (auto& t : params.tensors()) {
      if (t.name.starts_with(options.corrupt_prefix)) t.grad *= options.corrupt_scale;
    }
  }

  struct Coord {
    nn::Tensor* tensor;
    Eigen::Index index;
  };
  std::map<std::string, std::vector<Coord>> groups;
  for (auto& t : params.tensors()) {
    auto& g = groups[layer_type(t.name)];
    for (Eigen::Index i = 0; i < t.value.size(); ++i) g.push_back({&t, i});
  }

  GradientCheckReport report;
  Rng rng(options.seed);
  for (auto& [group, coords] : groups) {
    for (std::size_t i = coords.size(); i > 1; --i) {
      std::swap(coords[i - 1], coords[rng.below(i)]);
    }
    GroupCheck gc;
    for (const auto& c : coords) {
      if (gc.checked >= options.samples_per_group) break;
      const double analytic = c.tensor->grad.data()[c.index];
      if (std::abs(analytic) < options.skip_below) {
        ++gc.skipped;
        continue;
      }
      double& w = c.tensor->value.data()[c.index];
      const double saved = w;
      const double h = options.epsilon;
      auto loss_at = [&](double x) {
        w = x;
        return model.loss(batch).total;
      };
      // Fourth-order central stencil; the plain two-point difference leaves
      // an O(h^2) truncation error near 1e-4 on low-magnitude coordinates.
      const double numeric = (8.0 * (loss_at(saved + h) - loss_at(saved - h)) -
                              (loss_at(saved + 2.0 * h) - loss_at(saved - 2.0 * h))) /
                             (12.0 * h);
      w = saved;
      const double denom = std::max(std::abs(analytic), std::abs(numeric));
      const double rel = std::abs(analytic - numeric) / denom;
      gc.max_relative_error = std::max(gc.max_relative_error, rel);
      ++gc.checked;
    }
    report.max_relative_error = std::max(report.max_relative_error, gc.max_relative_error);
    report.groups[group] = gc;
  }
  return report;
}

}  // namespace nsv
