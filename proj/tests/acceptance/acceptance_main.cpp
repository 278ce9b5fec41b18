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
// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include "nsv/acoustic.hpp"
#include "nsv/audio.hpp"
#include "nsv/binio.hpp"
#include "nsv/checkpoint.hpp"
#include "nsv/config.hpp"
#include "nsv/corpus.hpp"
#include "nsv/eval.hpp"
#include "nsv/features.hpp"
#include "nsv/pipeline.hpp"
#include "nsv/ppcodec.hpp"
#include "nsv/random.hpp"
#include "nsv/trainer.hpp"
#include "nsv/tsv.hpp"
#include "nsv/vocoder.hpp"

namespace fs = std::filesystem;
using namespace nsv;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Detail {
 public:
  template <typename T>
  Detail& operator()(const std::string& key, const T& value) {
    if (!os_.str().empty()) os_ << ' ';
    os_ << key << '=' << value;
    return *this;
  }
  std::string str() const { return os_.str(); }

 private:
  std::ostringstream os_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// 1. Codec round trip

Outcome codec_round_trip() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(derive_seed(1, 1));
  int failures = 0;
  std::size_t total_frames = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    UnitSequence seq;
    const auto len = static_cast<std::size_t>(rng.below(10001));
    seq.indices.reserve(len);
    // Mix of run-heavy and run-free sequences.
    const double p_repeat = rng.uniform(0.0, 0.95);
    while (seq.indices.size() < len) {
      if (!seq.indices.empty() && rng.uniform() < p_repeat) {
        seq.indices.push_back(seq.indices.back());
      } else {
        seq.indices.push_back(static_cast<int>(rng.below(kNumUnits)));
      }
    }
    total_frames += len;
    const auto pp = rle_encode(seq);
    if (rle_decode(pp).indices != seq.indices) ++failures;
    if (from_text(to_text(pp)) != pp.units) ++failures;
    if (from_text(units_to_text(seq.indices)) != seq.indices) ++failures;
  }
  const double secs = seconds_since(t0);
  return {failures == 0 && secs < 10.0,
          Detail()("sequences", 10000)("frames", total_frames)("failures", failures)(
              "seconds", secs).str()};
}

// ---------------------------------------------------------------------------
// 2. FID closed forms

GaussianStats stats_of(Eigen::VectorXd mean, Eigen::MatrixXd cov) {
  GaussianStats s;
  s.mean = std::move(mean);
  s.cov = std::move(cov);
  s.n = 2;
  return s;
}

Outcome fid_closed_forms() {
  const Eigen::MatrixXd i2 = Eigen::MatrixXd::Identity(2, 2);
  const auto a = stats_of(Eigen::Vector2d(0.5, -0.25), i2);
  const double self = fid(a, a);
  const double shift = fid(stats_of(Eigen::Vector2d(1, 0), i2), stats_of(Eigen::Vector2d(0, 0), i2));
  const double commuting =
      fid(stats_of(Eigen::Vector2d::Zero(), 4.0 * i2), stats_of(Eigen::Vector2d::Zero(), i2));

  Rng rng(derive_seed(2, 1));
  double worst_sym = 0.0, worst_trans = 0.0;
  for (int pair = 0; pair < 100; ++pair) {
    const int d = 2 + static_cast<int>(rng.below(31));
    auto random_stats = [&] {
      Eigen::MatrixXd m(d, d);
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
      Eigen::VectorXd mu(d);
      for (auto& v : mu) v = rng.normal();
      return stats_of(mu, m * m.transpose() / d);
    };
    auto x = random_stats();
    auto y = random_stats();
    const double xy = fid(x, y);
    worst_sym = std::max(worst_sym, std::abs(xy - fid(y, x)));
    Eigen::VectorXd t(d);
    for (auto& v : t) v = rng.normal(0.0, 10.0);
    x.mean += t;
    y.mean += t;
    worst_trans = std::max(worst_trans, std::abs(fid(x, y) - xy));
  }
  const bool pass = std::abs(self) <= 1e-9 && std::abs(shift - 1.0) <= 1e-9 &&
                    std::abs(commuting - 2.0) <= 1e-9 && worst_sym <= 1e-8 &&
                    worst_trans <= 1e-8;
  return {pass, Detail()("self", self)("unit_shift", shift)("commuting", commuting)(
                    "max_asymmetry", worst_sym)("max_translation_change", worst_trans)
                    .str()};
}

// ---------------------------------------------------------------------------
// 3. Small-sample bias at 512 dims

Outcome fid_small_sample_bias() {
  const auto t0 = std::chrono::steady_clock::now();
  const int d = kUtteranceFeatureDim;
  Rng setup(derive_seed(3, 1));
  Eigen::VectorXd mu(d);
  for (auto& v : mu) v = setup.normal();
  Eigen::VectorXd scale(d);
  for (auto& v : scale) v = setup.uniform(0.5, 1.5);
  GaussianStats truth;
  truth.mean = mu;
  truth.cov = scale.array().square().matrix().asDiagonal();
  truth.n = 0;
  const FeatureSampler source = [&](std::size_t n, Rng& rng) {
    RowMatrix x(static_cast<Eigen::Index>(n), d);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (int j = 0; j < d; ++j) x(i, j) = mu(j) + scale(j) * rng.normal();
    }
    return x;
  };
  const auto small = repeated_fid(source, truth, 100, 10, derive_seed(3, 100));
  const auto large = repeated_fid(source, truth, 1000, 10, derive_seed(3, 1000));
  const double secs = seconds_since(t0);
  return {small.mean > large.mean && secs < 120.0,
          Detail()("fid100_mean", small.mean)("fid100_std", small.std)("fid1000_mean",
                                                                       large.mean)(
              "fid1000_std", large.std)("seconds", secs)
              .str()};
}

// ---------------------------------------------------------------------------
// 4. Gradient check per layer type with fault injection

Outcome gradient_check_criterion() {
  const auto t0 = std::chrono::steady_clock::now();
  ModelConfig cfg;
  cfg.embed_dim = 16;
  cfg.conv_channels = 12;
  cfg.mel_bins = 16;
  cfg.dropout = 0.0;
  const int n_speakers = 14;
  std::vector<std::string> ids;
  for (int s = 0; s < n_speakers; ++s) ids.push_back("s" + std::to_string(s));

  // Targets sit far below the initial predictions so no central difference
  // straddles an L1 kink.
  Rng rng(derive_seed(4, 1));
  std::vector<Example> data;
  for (int i = 0; i < n_speakers; ++i) {
    Example ex;
    ex.utterance_id = "g" + std::to_string(i);
    ex.speaker = i;
    for (int k = 0; k < 4; ++k) {
      ex.units.push_back((i * 4 + k) % kNumUnits);
      ex.durations.push_back(1 + static_cast<int>(rng.below(3)));
    }
    int frames = 0;
    for (int dd : ex.durations) frames += dd;
    ex.mel.resize(frames, cfg.mel_bins);
    for (Eigen::Index j = 0; j < ex.mel.size(); ++j) ex.mel.data()[j] = rng.normal(-30.0, 0.5);
    for (int t = 0; t < frames; ++t) {
      const bool v = rng.uniform() < 0.7;
      ex.voiced.push_back(v);
      ex.pitch.push_back(v ? rng.uniform(0.1, 0.9) : 0.0);
    }
    data.push_back(std::move(ex));
  }
  Batch batch;
  for (const auto& ex : data) batch.items.push_back(&ex);

  AcousticModel model(cfg, ids, derive_seed(4, 2));
  GradientCheckOptions opts;
  opts.seed = derive_seed(4, 3);
  const auto clean = gradient_check(model, batch, opts);

  const std::map<std::string, std::string> fault_target = {
      {"embedding", "unit_embedding"},     {"speaker_embedding", "speaker_embedding"},
      {"input_projection", "input_projection"}, {"dilated_conv", "decoder.2.conv"},
      {"layer_norm", "encoder.1.norm"},    {"duration_head", "duration."},
      {"linear_heads", "mel_head"}};
  bool pass = true;
  Detail detail;
  for (const auto& [group, prefix] : fault_target) {
    const auto it = clean.groups.find(group);
    if (it == clean.groups.end()) {
      pass = false;
      detail(group, "missing");
      continue;
    }
    GradientCheckOptions faulty = opts;
    faulty.corrupt_prefix = prefix;
    faulty.corrupt_scale = 1.1;
    const auto broken = gradient_check(model, batch, faulty);
    const double fault_err = broken.groups.at(group).max_relative_error;
    const bool ok = it->second.checked >= 200 && it->second.max_relative_error < 1e-4 &&
                    fault_err > 1e-4;
    pass = pass && ok;
    detail(group, std::to_string(it->second.checked) + "/" +
                      tsv::format_double(it->second.max_relative_error) + "/fault:" +
                      tsv::format_double(fault_err));
  }
  const double secs = seconds_since(t0);
  pass = pass && secs < 60.0;
  detail("max_rel_error", clean.max_relative_error)("seconds", secs);
  return {pass, detail.str()};
}

// ---------------------------------------------------------------------------
// Shared 20-utterance run for criteria 5, 6 and 8.

struct ToyRun {
  PipelineConfig cfg;
  DatasetReport report;
  TrainSummary summary;
  double prepare_seconds = 0.0;
  double train_seconds = 0.0;
};

ToyRun& toy_run(const fs::path& root) {
  static std::optional<ToyRun> run;
  if (run) return *run;
  run.emplace();
  auto& r = *run;
  r.cfg.seed = 20;
  r.cfg.workdir = root / "toy20";
  fs::remove_all(r.cfg.workdir);
  r.cfg.corpus.n_speakers = 5;
  r.cfg.corpus.clips_per_speaker = 4;
  r.cfg.model.max_steps = 2000;
  r.cfg.corpus_manifest = gen_corpus(r.cfg, r.cfg.workdir / "corpus");
  auto t0 = std::chrono::steady_clock::now();
  r.report = prepare(r.cfg);
  r.prepare_seconds = seconds_since(t0);
  t0 = std::chrono::steady_clock::now();
  r.summary = train_model(r.cfg, [](int step, const LossBreakdown& l) {
    if ((step + 1) % 250 == 0) {
      std::cerr << "  [toy20] step " << step + 1 << " mel_l1=" << l.mel_l1 << "\n";
    }
  });
  r.train_seconds = seconds_since(t0);
  return r;
}

// 5. Overfit convergence

Outcome overfit(const fs::path& root) {
  auto& r = toy_run(root);
  const double ratio = r.summary.final.mel_l1 / r.summary.initial.mel_l1;
  const double minutes = (r.prepare_seconds + r.train_seconds) / 60.0;
  const bool pass = r.report.clips_kept == 20 && r.summary.steps == 2000 && ratio <= 0.2 &&
                    r.summary.duration_mae < 1.0 && minutes < 15.0;
  return {pass, Detail()("utterances", r.report.clips_kept)("steps", r.summary.steps)(
                    "mel_l1_initial", r.summary.initial.mel_l1)("mel_l1_final",
                                                                r.summary.final.mel_l1)(
                    "ratio", ratio)("duration_mae", r.summary.duration_mae)("minutes", minutes)
                    .str()};
}

// 6. Content-preserving speaker swap

Outcome speaker_swap(const fs::path& root) {
  auto& r = toy_run(root);
  const Dataset ds = load_dataset(r.cfg);
  const auto& src = ds.items.front();
  std::vector<std::string> speakers;
  for (const auto& s : ds.speaker_ids) {
    if (speakers.size() < 3) speakers.push_back(s);
  }
  std::vector<std::string> texts;
  std::vector<std::vector<double>> audio;
  bool lengths_ok = true;
  for (const auto& spk : speakers) {
    SynthesisRequest req;
    req.utterance_id = src.utterance_id;
    req.speaker_id = spk;
    req.noise_seed = 77;
    const auto files = synthesize(r.cfg, req);
    const auto side = tsv::lines(binio::read_file(files.sidecar));
    const auto fields = tsv::split(side.at(1));
    texts.push_back(fields.at(0));
    long long sum = 0;
    for (int d : parse_int_list(fields.at(1), "sidecar")) sum += d;
    const AudioClip wav = read_wav(files.wav);
    lengths_ok = lengths_ok && std::stoll(fields.at(3)) == sum &&
                 wav.samples.size() == static_cast<std::size_t>(sum) * r.cfg.frame.hop_samples;
    audio.push_back(wav.samples);
  }
  const bool same_text = std::all_of(texts.begin(), texts.end(),
                                     [&](const std::string& t) { return t == texts[0]; });
  double min_diff = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < audio.size(); ++i) {
    for (std::size_t j = i + 1; j < audio.size(); ++j) {
      const std::size_t n = std::min(audio[i].size(), audio[j].size());
      double diff = 0.0;
      for (std::size_t t = 0; t < n; ++t) diff = std::max(diff, std::abs(audio[i][t] - audio[j][t]));
      if (audio[i].size() != audio[j].size()) diff = std::max(diff, 1.0);
      min_diff = std::min(min_diff, diff);
    }
  }
  const bool pass = speakers.size() == 3 && same_text && lengths_ok && min_diff > 1e-3;
  return {pass, Detail()("speakers", speakers.size())("pp_text_identical", same_text)(
                    "lengths_match_durations", lengths_ok)("min_pairwise_max_abs_diff", min_diff)
                    .str()};
}

// ---------------------------------------------------------------------------
// 7. Vocoder spectral fidelity

Outcome vocoder_fidelity() {
  HnmConfig hnm;
  SynthCorpusConfig cc;
  cc.n_speakers = 3;
  cc.clips_per_speaker = 2;
  const auto corpus = generate_synthetic_corpus(cc, derive_seed(7, 1));
  int voiced = 0, within = 0;
  for (const auto& clip : corpus.clips) {
    const auto mel = compute_log_mel(clip.samples);
    const auto pitch = estimate_pitch(clip.samples);
    const auto out = synthesize_hnm(mel, pitch, hnm, derive_seed(7, 2));
    const auto again = estimate_pitch(out.samples);
    for (std::size_t i = 0; i < pitch.size() && i < again.size(); ++i) {
      if (!pitch.voiced[i]) continue;
      ++voiced;
      if (again.voiced[i] && std::abs(again.f0_hz[i] - pitch.f0_hz[i]) <= 3.0) ++within;
    }
  }
  const double copy_fraction = voiced > 0 ? static_cast<double>(within) / voiced : 0.0;

  // Constant 200 Hz: mel analysed from a 200 Hz tone, 8000-sample segment.
  std::vector<double> tone(32000);
  for (std::size_t i = 0; i < tone.size(); ++i) {
    tone[i] = 0.5 * std::sin(2.0 * std::numbers::pi * 200.0 * static_cast<double>(i) / 32000.0);
  }
  const auto mel200 = compute_log_mel(tone);
  const auto pitch200 =
      PitchContour::from_f0(std::vector<double>(static_cast<std::size_t>(mel200.frames()), 200.0));
  const auto out200 = synthesize_hnm(mel200, pitch200, hnm, derive_seed(7, 3));
  const std::size_t seg = 8000;
  double best = -1.0;
  std::size_t best_bin = 0;
  for (std::size_t k = 1; k <= seg / 2; ++k) {
    std::complex<double> acc{};
    for (std::size_t t = 0; t < seg; ++t) {
      acc += out200.samples[8000 + t] *
             std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * t % seg) / seg);
    }
    if (std::abs(acc) > best) {
      best = std::abs(acc);
      best_bin = k;
    }
  }
  const double bin_hz = 32000.0 / seg;
  const double peak_hz = static_cast<double>(best_bin) * bin_hz;

  const auto unvoiced =
      PitchContour::from_f0(std::vector<double>(static_cast<std::size_t>(mel200.frames()), 0.0));
  auto noise = noise_component(mel200, unvoiced, hnm, derive_seed(7, 4));
  const auto full = synthesize_hnm(mel200, unvoiced, hnm, derive_seed(7, 4));
  // The output peak limit applies to both sides alike.
  double peak = 0.0;
  for (double v : noise) peak = std::max(peak, std::abs(v));
  if (peak > hnm.peak_limit) {
    const double s = hnm.peak_limit / peak;
    for (auto& v : noise) v *= s;
  }
  const bool identical = full.samples == noise;

  const bool pass = copy_fraction >= 0.9 && std::abs(peak_hz - 200.0) <= bin_hz && identical;
  return {pass, Detail()("copy_voiced_frames", voiced)("copy_within_3hz", copy_fraction)(
                    "peak_hz", peak_hz)("bin_hz", bin_hz)("unvoiced_equals_noise", identical)
                    .str()};
}

// ---------------------------------------------------------------------------
// 8. Corpus-wide frame alignment, read back from the written artifacts

Outcome frame_alignment(const fs::path& root) {
  auto& r = toy_run(root);
  const auto dd = dataset_dir(r.cfg);
  const auto records = read_pp_tsv(dd / "pp.tsv");
  int violations = 0;
  for (const auto& rec : records) {
    const RowMatrix mel = read_melf(dd / "mel" / (rec.utterance_id + ".melf"));
    const PitchContour pitch = read_pitf(dd / "pitch" / (rec.utterance_id + ".pitf"));
    if (rec.pp.total_frames() != mel.rows() ||
        static_cast<std::size_t>(mel.rows()) != pitch.size()) {
      ++violations;
    }
  }
  const bool pass = !records.empty() && violations == 0 &&
                    static_cast<int>(records.size()) == r.report.clips_kept;
  return {pass, Detail()("utterances", records.size())("violations", violations).str()};
}

// ---------------------------------------------------------------------------
// 9. Speaker-space analysis over two recording-condition groups

Outcome speaker_space(const fs::path& root) {
  const auto t0 = std::chrono::steady_clock::now();
  PipelineConfig cfg;
  cfg.seed = 90;
  cfg.workdir = root / "groups";
  fs::remove_all(cfg.workdir);
  cfg.corpus.n_speakers = 10;
  cfg.corpus.clips_per_speaker = 3;
  cfg.corpus.condition_groups = true;
  cfg.model.max_steps = 2000;
  cfg.corpus_manifest = gen_corpus(cfg, cfg.workdir / "corpus");
  prepare(cfg);
  const auto summary = train_model(cfg, [](int step, const LossBreakdown& l) {
    if ((step + 1) % 250 == 0) {
      std::cerr << "  [groups] step " << step + 1 << " mel_l1=" << l.mel_l1 << "\n";
    }
  });
  const auto analysis = analyze_speakers(cfg, cfg.workdir / "corpus" / "speakers.tsv");
  const double s = analysis.silhouette.value_or(-1.0);
  const bool pass = analysis.projection.points.size() == 10 && !analysis.projection.degenerate &&
                    s > 0.3;
  return {pass, Detail()("speakers", analysis.projection.points.size())("silhouette", s)(
                    "mel_l1_final", summary.final.mel_l1)("minutes", seconds_since(t0) / 60.0)
                    .str()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria 1-9"};
  std::string workdir = "acceptance_work";
  std::vector<int> only;
  app.add_option("--workdir", workdir, "scratch directory");
  app.add_option("--only", only, "run only these criteria");
  CLI11_PARSE(app, argc, argv);

  const fs::path root = fs::absolute(workdir);
  fs::create_directories(root);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"codec round trip", codec_round_trip},
      {"FID closed forms", fid_closed_forms},
      {"FID small-sample bias", fid_small_sample_bias},
      {"gradient check", gradient_check_criterion},
      {"overfit convergence", [&] { return overfit(root); }},
      {"content-preserving speaker swap", [&] { return speaker_swap(root); }},
      {"vocoder spectral fidelity", vocoder_fidelity},
      {"frame alignment", [&] { return frame_alignment(root); }},
      {"speaker-space analysis", [&] { return speaker_space(root); }},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << "criterion " << id << " [" << criteria[i].first << "]: "
              << (o.pass ? "PASS" : "FAIL") << " " << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
