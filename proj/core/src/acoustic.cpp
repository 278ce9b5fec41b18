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
#include "nsv/acoustic.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "nsv/error.hpp"
#include "nsv/tsv.hpp"

namespace nsv {
namespace {

constexpr double kUnitEmbeddingStd = 1.0;
// Small relative to the unit table so learned speaker structure dominates
// the random starting point.
constexpr double kSpeakerEmbeddingStd = 0.1;
constexpr double kMaxLogDuration = 12.0;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

int parse_int(const std::string& v, const std::string& key) {
  int out = 0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    fail(ErrorCode::kParse, "model config: bad integer for " + key + ": '" + v + "'");
  }
  return out;
}

double parse_real(const std::string& v, const std::string& key) {
  double out = 0.0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    fail(ErrorCode::kParse, "model config: bad number for " + key + ": '" + v + "'");
  }
  return out;
}

}  // namespace

// --- ModelConfig ------------------------------------------------------------

void ModelConfig::validate() const {
  require(embed_dim > 0 && conv_channels > 0, "model config: dims must be positive");
  require(kernel_size > 0 && kernel_size % 2 == 1,
          "model config: kernel_size must be odd and positive");
  require(!dilations.empty(), "model config: dilations must not be empty");
  for (int d : dilations) require(d > 0, "model config: dilations must be positive");
  require(n_speakers > 0, "model config: n_speakers must be positive");
  require(n_units == kNumUnits, "model config: n_units must be 100");
  require(mel_bins > 0, "model config: mel_bins must be positive");
  require(dropout >= 0.0 && dropout < 1.0, "model config: dropout must be in [0,1)");
  require(learning_rate >= 0.0, "model config: learning_rate must be non-negative");
  require(batch_size > 0, "model config: batch_size must be positive");
  require(max_steps >= 0, "model config: max_steps must be non-negative");
  require(voicing_threshold >= 0.0 && voicing_threshold < 1.0,
          "model config: voicing_threshold must be in [0,1)");
}

std::string ModelConfig::to_kv() const {
  std::ostringstream os;
  os << "embed_dim=" << embed_dim << "\n"
     << "conv_channels=" << conv_channels << "\n"
     << "kernel_size=" << kernel_size << "\n"
     << "dilations=" << format_int_list(dilations) << "\n"
     << "n_speakers=" << n_speakers << "\n"
     << "n_units=" << n_units << "\n"
     << "mel_bins=" << mel_bins << "\n"
     << "dropout=" << tsv::format_double(dropout) << "\n"
     << "learning_rate=" << tsv::format_double(learning_rate) << "\n"
     << "batch_size=" << batch_size << "\n"
     << "max_steps=" << max_steps << "\n"
     << "voicing_threshold=" << tsv::format_double(voicing_threshold) << "\n";
  return os.str();
}

ModelConfig ModelConfig::from_kv(const std::map<std::string, std::string>& kv) {
  ModelConfig c;
  for (const auto& [k, v] : kv) {
    if (k == "embed_dim") c.embed_dim = parse_int(v, k);
    else if (k == "conv_channels") c.conv_channels = parse_int(v, k);
    else if (k == "kernel_size") c.kernel_size = parse_int(v, k);
    else if (k == "dilations") c.dilations = parse_int_list(v, k);
    else if (k == "n_speakers") c.n_speakers = parse_int(v, k);
    else if (k == "n_units") c.n_units = parse_int(v, k);
    else if (k == "mel_bins") c.mel_bins = parse_int(v, k);
    else if (k == "dropout") c.dropout = parse_real(v, k);
    else if (k == "learning_rate") c.learning_rate = parse_real(v, k);
    else if (k == "batch_size") c.batch_size = parse_int(v, k);
    else if (k == "max_steps") c.max_steps = parse_int(v, k);
    else if (k == "voicing_threshold") c.voicing_threshold = parse_real(v, k);
    else fail(ErrorCode::kParse, "model config: unknown key '" + k + "'");
  }
  return c;
}

// --- free functions ---------------------------------------------------------

RowMatrix length_regulate(const RowMatrix& rows, const std::vector<int>& durations) {
  if (static_cast<std::size_t>(rows.rows()) != durations.size()) {
    fail(ErrorCode::kInvalidArgument,
         "length_regulate: " + std::to_string(rows.rows()) + " rows but " +
             std::to_string(durations.size()) + " durations");
  }
  long long total = 0;
  for (std::size_t i = 0; i < durations.size(); ++i) {
    if (durations[i] < 1) {
      fail(ErrorCode::kValidation, "length_regulate: duration at position " +
                                       std::to_string(i) + " is not positive");
    }
    total += durations[i];
  }
  RowMatrix out(total, rows.cols());
  Eigen::Index r = 0;
  for (std::size_t i = 0; i < durations.size(); ++i) {
    for (int k = 0; k < durations[i]; ++k) out.row(r++) = rows.row(static_cast<Eigen::Index>(i));
  }
  return out;
}

PseudoPhonemeSequence align_durations(const PseudoPhonemeSequence& pp,
                                      long long mel_frames, int mel_rate_hz) {
  require(pp.frame_rate_hz > 0 && mel_rate_hz > 0,
          "align_durations: rates must be positive");
  if (mel_rate_hz % pp.frame_rate_hz != 0) {
    fail(ErrorCode::kUnsupported,
         "align_durations: unit rate " + std::to_string(pp.frame_rate_hz) +
             " Hz does not divide mel rate " + std::to_string(mel_rate_hz) + " Hz");
  }
  require(mel_frames >= 1, "align_durations: mel frame count must be positive");
  require(!pp.units.empty(), "align_durations: empty pseudo-phoneme sequence");

  const int factor = mel_rate_hz / pp.frame_rate_hz;
  PseudoPhonemeSequence out = pp;
  out.frame_rate_hz = mel_rate_hz;
  for (auto& d : out.durations) d *= factor;

  long long diff = mel_frames - out.total_frames();
  if (diff > 0) {
    out.durations.back() += static_cast<int>(diff);
  }
  while (diff < 0) {
    auto& last = out.durations.back();
    if (last + diff >= 1) {
      last += static_cast<int>(diff);
      diff = 0;
    } else {
      diff += last;
      out.durations.pop_back();
      out.units.pop_back();
      if (out.units.empty()) {
        fail(ErrorCode::kValidation, "align_durations: trimming removed every unit");
      }
    }
  }
  return out;
}

std::vector<int> durations_from_log(const std::vector<double>& log_duration) {
  std::vector<int> out(log_duration.size());
  for (std::size_t i = 0; i < log_duration.size(); ++i) {
    const double x = std::min(log_duration[i], kMaxLogDuration);
    out[i] = std::max(1, static_cast<int>(std::lround(std::exp(x) - 1.0)));
  }
  return out;
}

LossBreakdown compute_loss(const std::vector<AcousticOutput>& outputs,
                           const Batch& batch) {
  require(outputs.size() == batch.items.size(), "loss: output/batch size mismatch");
  double mel_sum = 0.0, pitch_sum = 0.0, dur_sum = 0.0;
  double mel_n = 0.0, pitch_n = 0.0, dur_n = 0.0;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const auto& out = outputs[i];
    const auto& ex = *batch.items[i];
    if (out.mel.rows() != ex.mel.rows() || out.mel.cols() != ex.mel.cols() ||
        out.pitch.size() != ex.pitch.size() || ex.voiced.size() != ex.pitch.size() ||
        out.log_duration.size() != ex.durations.size()) {
      fail(ErrorCode::kInvalidArgument,
           "loss: prediction and target shapes differ for '" + ex.utterance_id + "'");
    }
    mel_sum += (out.mel - ex.mel).cwiseAbs().sum();
    mel_n += static_cast<double>(ex.mel.size());
    for (std::size_t t = 0; t < ex.pitch.size(); ++t) {
      if (!ex.voiced[t]) continue;
      const double d = out.pitch[t] - ex.pitch[t];
      pitch_sum += d * d;
      pitch_n += 1.0;
    }
    for (std::size_t k = 0; k < ex.durations.size(); ++k) {
      const double d = out.log_duration[k] - std::log1p(ex.durations[k]);
      dur_sum += d * d;
      dur_n += 1.0;
    }
  }
  LossBreakdown l;
  l.mel_l1 = mel_n > 0 ? mel_sum / mel_n : 0.0;
  l.pitch_mse = pitch_n > 0 ? pitch_sum / pitch_n : 0.0;
  l.dur_mse = dur_n > 0 ? dur_sum / dur_n : 0.0;
  l.total = l.mel_l1 + l.pitch_mse + l.dur_mse;
  return l;
}

// --- AcousticModel ----------------------------------------------------------

struct AcousticModel::Cache {
  RowMatrix embedded;
  RowMatrix encoder_in;
  std::vector<nn::ResidualConvBlock::Cache> encoder;
  RowMatrix encoded;
  RowMatrix duration_conv;
  nn::LayerNorm::Cache duration_norm;
  RowMatrix duration_norm_out;
  RowMatrix duration_act;
  std::vector<int> durations;
  std::vector<nn::ResidualConvBlock::Cache> decoder;
  RowMatrix decoded;
  Eigen::VectorXd pitch;
};

AcousticModel::AcousticModel(ModelConfig config, std::vector<std::string> speaker_ids,
                             std::uint64_t seed)
    : config_(std::move(config)),
      speaker_ids_(std::move(speaker_ids)),
      params_(std::make_unique<nn::ParamStore>()) {
  if (speaker_ids_.empty()) {
    for (int i = 0; i < config_.n_speakers; ++i) {
      speaker_ids_.push_back("spk" + std::to_string(i));
    }
  }
  config_.n_speakers = static_cast<int>(speaker_ids_.size());
  config_.validate();
  build();
  init(seed);
}

void AcousticModel::build() {
  auto& s = *params_;
  const int c = config_.conv_channels;
  unit_embedding_ = nn::Embedding(s, "unit_embedding", config_.n_units, config_.embed_dim);
  speaker_embedding_ =
      nn::Embedding(s, "speaker_embedding", config_.n_speakers, config_.embed_dim);
  if (config_.embed_dim != c) {
    input_projection_.emplace(s, "input_projection", config_.embed_dim, c);
  }
  for (std::size_t i = 0; i < config_.dilations.size(); ++i) {
    encoder_.emplace_back(s, "encoder." + std::to_string(i), c, config_.kernel_size,
                          config_.dilations[i]);
  }
  duration_conv_ = nn::Conv1d(s, "duration.conv", c, c, config_.kernel_size, 1);
  duration_norm_ = nn::LayerNorm(s, "duration.norm", c);
  duration_out_ = nn::Linear(s, "duration.out", c, 1);
  for (std::size_t i = 0; i < config_.dilations.size(); ++i) {
    decoder_.emplace_back(s, "decoder." + std::to_string(i), c, config_.kernel_size,
                          config_.dilations[i]);
  }
  mel_head_ = nn::Linear(s, "mel_head", c, config_.mel_bins);
  pitch_head_ = nn::Linear(s, "pitch_head", c, 1);
}

void AcousticModel::init(std::uint64_t seed) {
  Rng rng(seed);
  unit_embedding_.init(kUnitEmbeddingStd, rng);
  speaker_embedding_.init(kSpeakerEmbeddingStd, rng);
  if (input_projection_) input_projection_->init(rng);
  for (auto& b : encoder_) b.init(rng);
  duration_conv_.init(rng);
  duration_norm_.init();
  duration_out_.init(rng);
  for (auto& b : decoder_) b.init(rng);
  mel_head_.init(rng);
  pitch_head_.init(rng);
}

int AcousticModel::speaker_index(const std::string& speaker_id) const {
  auto it = std::find(speaker_ids_.begin(), speaker_ids_.end(), speaker_id);
  return it == speaker_ids_.end() ? -1 : static_cast<int>(it - speaker_ids_.begin());
}

const RowMatrix& AcousticModel::speaker_table() const {
  return speaker_embedding_.table().value;
}

AcousticOutput AcousticModel::run(const Example& ex, const std::vector<int>* durations,
                                  Rng* dropout_rng, Cache* cache) const {
  require(!ex.units.empty(), "forward: empty pseudo-phoneme sequence");
  if (ex.speaker < 0 || ex.speaker >= config_.n_speakers) {
    fail(ErrorCode::kInvalidArgument,
         "forward: unknown speaker index " + std::to_string(ex.speaker));
  }
  Cache local;
  Cache& c = cache ? *cache : local;
  const double p = dropout_rng ? config_.dropout : 0.0;

  c.embedded = unit_embedding_.forward(ex.units);
  c.embedded.rowwise() += speaker_table().row(ex.speaker);
  c.encoder_in = input_projection_ ? input_projection_->forward(c.embedded) : c.embedded;

  RowMatrix h = c.encoder_in;
  c.encoder.resize(encoder_.size());
  for (std::size_t i = 0; i < encoder_.size(); ++i) {
    h = encoder_[i].forward(h, p, dropout_rng, c.encoder[i]);
  }
  c.encoded = std::move(h);

  c.duration_conv = duration_conv_.forward(c.encoded);
  c.duration_norm_out = duration_norm_.forward(c.duration_conv, c.duration_norm);
  c.duration_act = nn::gelu(c.duration_norm_out);
  const RowMatrix log_dur = duration_out_.forward(c.duration_act);

  AcousticOutput out;
  out.log_duration.assign(log_dur.data(), log_dur.data() + log_dur.size());
  if (durations) {
    if (durations->size() != ex.units.size()) {
      fail(ErrorCode::kInvalidArgument, "forward: duration count differs from unit count");
    }
    c.durations = *durations;
  } else {
    c.durations = durations_from_log(out.log_duration);
  }
  out.durations_used = c.durations;

  h = length_regulate(c.encoded, c.durations);
  c.decoder.resize(decoder_.size());
  for (std::size_t i = 0; i < decoder_.size(); ++i) {
    h = decoder_[i].forward(h, p, dropout_rng, c.decoder[i]);
  }
  c.decoded = std::move(h);

  out.mel = mel_head_.forward(c.decoded);
  const RowMatrix logit = pitch_head_.forward(c.decoded);
  c.pitch.resize(logit.rows());
  out.pitch.resize(static_cast<std::size_t>(logit.rows()));
  for (Eigen::Index t = 0; t < logit.rows(); ++t) {
    c.pitch(t) = sigmoid(logit(t, 0));
    out.pitch[static_cast<std::size_t>(t)] = c.pitch(t);
  }
  return out;
}

void AcousticModel::backward(const Example& ex, const Cache& c, const RowMatrix& dmel,
                             const Eigen::VectorXd& dpitch,
                             const Eigen::VectorXd& dlogdur) {
  const RowMatrix dlogit =
      (dpitch.array() * c.pitch.array() * (1.0 - c.pitch.array())).matrix();
  RowMatrix d = mel_head_.backward(c.decoded, dmel);
  d += pitch_head_.backward(c.decoded, dlogit);
  for (std::size_t i = decoder_.size(); i-- > 0;) d = decoder_[i].backward(c.decoder[i], d);

  // Length regulator: each pseudo-phoneme collects the gradient of its frames.
  RowMatrix denc = RowMatrix::Zero(c.encoded.rows(), c.encoded.cols());
  Eigen::Index r = 0;
  for (std::size_t i = 0; i < c.durations.size(); ++i) {
    const int dur = c.durations[i];
    denc.row(static_cast<Eigen::Index>(i)) = d.middleRows(r, dur).colwise().sum();
    r += dur;
  }

  RowMatrix dd = duration_out_.backward(c.duration_act, RowMatrix(dlogdur));
  dd = nn::gelu_backward(c.duration_norm_out, dd);
  dd = duration_norm_.backward(c.duration_norm, dd);
  denc += duration_conv_.backward(c.encoded, dd);

  for (std::size_t i = encoder_.size(); i-- > 0;) denc = encoder_[i].backward(c.encoder[i], denc);
  if (input_projection_) denc = input_projection_->backward(c.embedded, denc);

  unit_embedding_.backward(ex.units, denc);
  speaker_embedding_.backward({ex.speaker}, denc.colwise().sum());
}

AcousticOutput AcousticModel::forward(const Example& ex, Mode mode, Rng* dropout_rng) const {
  if (mode == Mode::kTrain) return run(ex, &ex.durations, dropout_rng, nullptr);
  return run(ex, nullptr, dropout_rng, nullptr);
}

AcousticOutput AcousticModel::infer(const std::vector<int>& units, int speaker,
                                    const std::optional<std::vector<int>>& durations) const {
  Example ex;
  ex.units = units;
  ex.speaker = speaker;
  return run(ex, durations ? &*durations : nullptr, nullptr, nullptr);
}

LossBreakdown AcousticModel::loss(const Batch& batch, Mode mode) const {
  std::vector<AcousticOutput> outs;
  outs.reserve(batch.items.size());
  for (const auto* ex : batch.items) outs.push_back(forward(*ex, mode));
  return compute_loss(outs, batch);
}

LossBreakdown AcousticModel::loss_and_gradients(const Batch& batch, Rng* dropout_rng) {
  double mel_n = 0.0, pitch_n = 0.0, dur_n = 0.0;
  for (const auto* ex : batch.items) {
    mel_n += static_cast<double>(ex->mel.size());
    pitch_n += static_cast<double>(std::count(ex->voiced.begin(), ex->voiced.end(), true));
    dur_n += static_cast<double>(ex->durations.size());
  }

  std::vector<AcousticOutput> outs;
  outs.reserve(batch.items.size());
  Cache cache;
  for (const auto* ex : batch.items) {
    auto out = run(*ex, &ex->durations, dropout_rng, &cache);
    if (out.mel.rows() != ex->mel.rows() || out.mel.cols() != ex->mel.cols() ||
        ex->pitch.size() != out.pitch.size() || ex->voiced.size() != out.pitch.size()) {
      fail(ErrorCode::kInvalidArgument,
           "loss: prediction and target shapes differ for '" + ex->utterance_id + "'");
    }

    const RowMatrix dmel =
        (out.mel - ex->mel).unaryExpr([](double v) {
          return static_cast<double>((v > 0.0) - (v < 0.0));
        }) / mel_n;
    Eigen::VectorXd dpitch = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(out.pitch.size()));
    for (std::size_t t = 0; t < out.pitch.size(); ++t) {
      if (ex->voiced[t]) dpitch(static_cast<Eigen::Index>(t)) = 2.0 * (out.pitch[t] - ex->pitch[t]) / pitch_n;
    }
    Eigen::VectorXd dlog(static_cast<Eigen::Index>(ex->durations.size()));
    for (std::size_t k = 0; k < ex->durations.size(); ++k) {
      dlog(static_cast<Eigen::Index>(k)) =
          2.0 * (out.log_duration[k] - std::log1p(ex->durations[k])) / dur_n;
    }
    backward(*ex, cache, dmel, dpitch, dlog);
    outs.push_back(std::move(out));
  }
  return compute_loss(outs, batch);
}

}  // namespace nsv
