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
#include "nsv/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "nsv/binio.hpp"
#include "nsv/checkpoint.hpp"
#include "nsv/corpus.hpp"
#include "nsv/error.hpp"
#include "nsv/ppcodec.hpp"
#include "nsv/trainer.hpp"
#include "nsv/tsv.hpp"
#include "nsv/units.hpp"
#include "nsv/vocoder.hpp"

namespace nsv {
namespace {

namespace fs = std::filesystem;

// Seed streams derived from config.seed.
constexpr std::uint64_t kStreamKMeans = 10;
constexpr std::uint64_t kStreamTrain = 20;
constexpr std::uint64_t kStreamEval = 30;

constexpr int kMelRateHz = 100;
// Predicted log-mel is clamped before vocoding so an untrained model cannot
// overflow exp().
constexpr double kMaxLogMel = 12.0;

fs::path mel_path(const fs::path& dir, const std::string& id) {
  return dir / "mel" / (id + ".melf");
}
fs::path pitch_path(const fs::path& dir, const std::string& id) {
  return dir / "pitch" / (id + ".pitf");
}

template <typename F>
auto with_context(const std::string& where, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), where + ": " + e.what());
  }
}

AudioClip load_pipeline_clip(const ManifestEntry& entry) {
  AudioClip clip = load_clip(entry);
  const int rate = clip.sample_rate_hz;
  if (rate != 48000 && rate != 32000 && rate != 16000) {
    fail(ErrorCode::kUnsupportedFormat,
         "sample rate " + std::to_string(rate) + " Hz (expected 48000, 32000 or 16000)");
  }
  return rate == kPipelineRateHz ? clip : resample(clip, kPipelineRateHz);
}

std::vector<std::string> sorted_unique(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

std::string unknown_speaker_message(const std::string& id, const AcousticModel& model) {
  return "unknown speaker '" + id + "'; valid ids: " + tsv::join(model.speaker_ids(), ',');
}

fs::path resolve_checkpoint(const PipelineConfig& config, const fs::path& given) {
  return given.empty() ? checkpoint_path(config) : given;
}

}  // namespace

fs::path dataset_dir(const PipelineConfig& config) { return config.workdir / "dataset"; }
fs::path checkpoint_path(const PipelineConfig& config) {
  return config.workdir / "model" / "checkpoint.nsvm";
}

std::string format_dataset_report(const DatasetReport& r) {
  std::string out = "key\tvalue\n";
  out += "clips_in\t" + std::to_string(r.clips_in) + "\n";
  out += "clips_kept\t" + std::to_string(r.clips_kept) + "\n";
  out += "clips_pruned\t" + std::to_string(r.clips_pruned()) + "\n";
  for (const auto& [reason, n] : r.pruned_by_reason) {
    out += "pruned." + reason + "\t" + std::to_string(n) + "\n";
  }
  out += "total_duration_s\t" + tsv::format_double(r.total_duration_s) + "\n";
  out += "speakers\t" + std::to_string(r.clips_per_speaker.size()) + "\n";
  for (const auto& [speaker, n] : r.clips_per_speaker) {
    out += "speaker." + speaker + "\t" + std::to_string(n) + "\n";
  }
  return out;
}

DatasetReport prepare(const PipelineConfig& config) {
  config.validate();
  if (config.corpus_manifest.empty()) {
    fail(ErrorCode::kInvalidArgument, "prepare: no corpus manifest configured");
  }
  const CorpusManifest input = read_manifest(config.corpus_manifest);
  const CorpusManifest kept = prune_corpus(input, config.prune);
  const fs::path dir = dataset_dir(config);

  DatasetReport report;
  report.clips_in = static_cast<int>(input.entries.size());
  report.clips_kept = static_cast<int>(kept.entries.size());
  for (const auto& p : kept.prune_log) ++report.pruned_by_reason[p.reason];

  struct Analyzed {
    RowMatrix mel;
    PitchContour pitch;
  };
  std::vector<Analyzed> analyzed;
  analyzed.reserve(kept.entries.size());
  for (const auto& e : kept.entries) {
    analyzed.push_back(with_context(e.utterance_id, [&] {
      const AudioClip clip = load_pipeline_clip(e);
      Analyzed a{compute_log_mel(clip.samples, config.frame).values,
                 estimate_pitch(clip.samples, config.frame)};
      report.total_duration_s += clip.duration_s();
      return a;
    }));
    ++report.clips_per_speaker[e.speaker_id];
  }

  std::map<std::string, UnitSequence> units;
  int units_rate = kMelRateHz;
  if (config.units_source == UnitsSource::kImport) {
    const auto imported = import_units(config.units_path);
    for (const auto& e : kept.entries) {
      auto it = imported.find(e.utterance_id);
      if (it == imported.end()) {
        fail(ErrorCode::kNotFound, e.utterance_id + ": no row in units file " +
                                       config.units_path.string());
      }
      units.emplace(e.utterance_id, it->second);
      units_rate = it->second.frame_rate_hz;
    }
  } else {
    Eigen::Index total = 0;
    for (const auto& a : analyzed) total += a.mel.rows();
    RowMatrix stacked(total, kMelBins);
    Eigen::Index row = 0;
    for (const auto& a : analyzed) {
      stacked.middleRows(row, a.mel.rows()) = a.mel;
      row += a.mel.rows();
    }
    KMeansOptions opts;
    opts.seed = derive_seed(config.seed, kStreamKMeans);
    opts.max_iterations = config.kmeans_max_iterations;
    const KMeansResult km = train_kmeans(stacked, opts);
    write_melf(dir / "codebook.melf", km.codebook.centroids);
    for (std::size_t i = 0; i < kept.entries.size(); ++i) {
      UnitSequence seq = quantize(analyzed[i].mel, km.codebook);
      seq.utterance_id = kept.entries[i].utterance_id;
      units.emplace(seq.utterance_id, std::move(seq));
    }
  }

  std::vector<PseudoPhonemeRecord> records;
  for (std::size_t i = 0; i < kept.entries.size(); ++i) {
    const auto& e = kept.entries[i];
    with_context(e.utterance_id, [&] {
      const auto& a = analyzed[i];
      const PseudoPhonemeSequence pp =
          align_durations(rle_encode(units.at(e.utterance_id)), a.mel.rows(), kMelRateHz);
      records.push_back({e.utterance_id, e.speaker_id, pp});
      write_melf(mel_path(dir, e.utterance_id), a.mel);
      write_pitf(pitch_path(dir, e.utterance_id), a.pitch);
    });
  }

  // The dataset manifest lives elsewhere than the corpus one, so its entry
  // paths must not stay relative to the caller's working directory.
  CorpusManifest written = kept;
  for (auto& e : written.entries) e.path = fs::absolute(e.path).lexically_normal();
  write_manifest(dir / "manifest.tsv", written);
  write_prune_log(dir / "prune_log.tsv", kept);
  write_units(dir / "units.tsv", units, units_rate);
  write_pp_tsv(dir / "pp.tsv", records);
  binio::write_file(dir / "report.tsv", format_dataset_report(report));
  return report;
}

Dataset load_dataset(const PipelineConfig& config) {
  const fs::path dir = dataset_dir(config);
  const CorpusManifest manifest = read_manifest(dir / "manifest.tsv");
  std::map<std::string, std::string> emotion;
  for (const auto& e : manifest.entries) emotion[e.utterance_id] = e.emotion;

  Dataset ds;
  std::vector<std::string> speakers;
  for (auto& r : read_pp_tsv(dir / "pp.tsv")) {
    PreparedUtterance u;
    u.utterance_id = r.utterance_id;
    u.speaker_id = r.speaker_id;
    auto it = emotion.find(r.utterance_id);
    u.emotion = it == emotion.end() ? "synthetic" : it->second;
    u.pp = std::move(r.pp);
    u.mel = read_melf(mel_path(dir, u.utterance_id));
    u.pitch = read_pitf(pitch_path(dir, u.utterance_id));
    u.pitch.frame_config = config.frame;
    if (u.pp.total_frames() != u.mel.rows() ||
        static_cast<std::size_t>(u.mel.rows()) != u.pitch.size()) {
      fail(ErrorCode::kValidation,
           u.utterance_id + ": durations sum to " + std::to_string(u.pp.total_frames()) +
               ", mel has " + std::to_string(u.mel.rows()) + " rows, pitch has " +
               std::to_string(u.pitch.size()) + " frames");
    }
    speakers.push_back(u.speaker_id);
    ds.items.push_back(std::move(u));
  }
  if (ds.items.empty()) fail(ErrorCode::kEmptyCorpus, "dataset at " + dir.string() + " is empty");
  ds.speaker_ids = sorted_unique(std::move(speakers));
  return ds;
}

std::vector<Example> make_examples(const Dataset& dataset,
                                   const std::vector<std::string>& speaker_ids) {
  std::vector<Example> out;
  out.reserve(dataset.items.size());
  for (const auto& u : dataset.items) {
    const auto it = std::find(speaker_ids.begin(), speaker_ids.end(), u.speaker_id);
    if (it == speaker_ids.end()) {
      fail(ErrorCode::kInvalidArgument, u.utterance_id + ": unknown speaker " + u.speaker_id);
    }
    Example ex;
    ex.utterance_id = u.utterance_id;
    ex.units = u.pp.units;
    ex.durations = u.pp.durations;
    ex.speaker = static_cast<int>(it - speaker_ids.begin());
    ex.mel = u.mel;
    ex.pitch = scale_pitch(u.pitch);
    ex.voiced = u.pitch.voiced;
    out.push_back(std::move(ex));
  }
  return out;
}

TrainSummary train_model(const PipelineConfig& config, const ProgressFn& progress) {
  config.validate();
  const Dataset ds = load_dataset(config);
  const auto examples = make_examples(ds, ds.speaker_ids);

  TrainOptions opts;
  opts.seed = derive_seed(config.seed, kStreamTrain);
  opts.on_step = progress;
  TrainResult result = train(examples, config.model, ds.speaker_ids, opts);

  TrainSummary s;
  s.checkpoint = checkpoint_path(config);
  s.initial = result.initial;
  s.final = result.final;
  s.steps = static_cast<int>(result.loss_curve.size());
  s.duration_mae = duration_mae(result.model, examples);
  save_checkpoint(s.checkpoint, result.model, config.seed);

  std::string curve = "step\ttotal\tmel_l1\tpitch_mse\tdur_mse\n";
  for (std::size_t i = 0; i < result.loss_curve.size(); ++i) {
    const auto& l = result.loss_curve[i];
    curve += tsv::join({std::to_string(i + 1), tsv::format_double(l.total),
                        tsv::format_double(l.mel_l1), tsv::format_double(l.pitch_mse),
                        tsv::format_double(l.dur_mse)}) +
             "\n";
  }
  binio::write_file(s.checkpoint.parent_path() / "loss.tsv", curve);
  return s;
}

SynthesisResult synthesize_utterance(const AcousticModel& model, const std::vector<int>& units,
                                     const std::optional<std::vector<int>>& durations,
                                     const std::string& speaker_id, const HnmConfig& hnm,
                                     std::uint64_t noise_seed) {
  const int speaker = model.speaker_index(speaker_id);
  if (speaker < 0) fail(ErrorCode::kInvalidArgument, unknown_speaker_message(speaker_id, model));
  require(!units.empty(), "synthesize: empty pseudo-phoneme sequence");

  const AcousticOutput out = model.infer(units, speaker, durations);
  MelSpectrogram mel{out.mel.cwiseMax(std::log(kMelFloor)).cwiseMin(kMaxLogMel), hnm.frame};
  const PitchContour pitch =
      unscale_pitch(out.pitch, model.config().voicing_threshold, kPitchMinHz, kPitchMaxHz,
                    hnm.frame);

  SynthesisResult r;
  r.clip = synthesize_hnm(mel, pitch, hnm, noise_seed);
  r.clip.speaker_id = speaker_id;
  r.pp_text = units_to_text(units);
  r.durations = out.durations_used;
  r.speaker_id = speaker_id;
  r.frames = mel.frames();
  return r;
}

SynthesisFiles synthesize(const PipelineConfig& config, const SynthesisRequest& req) {
  config.validate();
  const AcousticModel model = load_checkpoint(resolve_checkpoint(config, req.checkpoint));

  std::vector<int> units;
  std::optional<std::vector<int>> durations = req.durations;
  std::string source;
  if (!req.utterance_id.empty()) {
    if (!req.text.empty()) {
      fail(ErrorCode::kInvalidArgument, "synthesize: give either an utterance id or text");
    }
    const auto records = read_pp_tsv(dataset_dir(config) / "pp.tsv");
    const auto it = std::find_if(records.begin(), records.end(), [&](const auto& r) {
      return r.utterance_id == req.utterance_id;
    });
    if (it == records.end()) {
      fail(ErrorCode::kNotFound, "synthesize: utterance '" + req.utterance_id +
                                     "' is not in the prepared dataset");
    }
    units = it->pp.units;
    if (!durations && config.ground_truth_durations) durations = it->pp.durations;
    source = req.utterance_id;
  } else {
    require(!req.text.empty(), "synthesize: need an utterance id or text");
    units = from_text(req.text);
    source = "text";
  }
  if (durations && durations->size() != units.size()) {
    fail(ErrorCode::kInvalidArgument,
         "synthesize: " + std::to_string(durations->size()) + " durations for " +
             std::to_string(units.size()) + " pseudo-phonemes");
  }

  const std::uint64_t seed = req.noise_seed.value_or(config.noise_seed);
  SynthesisFiles files;
  files.result = synthesize_utterance(model, units, durations, req.speaker_id, config.hnm, seed);
  files.result.clip.utterance_id = source + "__" + req.speaker_id;
  files.wav = req.output.empty()
                  ? config.workdir / "synth" / (files.result.clip.utterance_id + ".wav")
                  : req.output;
  files.sidecar = fs::path(files.wav).replace_extension(".tsv");
  write_wav(files.wav, files.result.clip);

  std::string sidecar = "pp_text\tdurations\tspeaker_id\tframes\tnoise_seed\n";
  sidecar += tsv::join({files.result.pp_text, format_int_list(files.result.durations),
                        req.speaker_id, std::to_string(files.result.frames),
                        std::to_string(seed)}) +
             "\n";
  binio::write_file(files.sidecar, sidecar);
  return files;
}

std::string format_eval_report(const EvalReport& report) {
  std::string out = "emotion\tkind\tn\trepeats\tfid_mean\tfid_std\tstd_defined\n";
  for (const auto& r : report.rows) {
    out += tsv::join({r.emotion, r.kind, std::to_string(r.n), std::to_string(r.repeats),
                      tsv::format_double(r.fid.mean), tsv::format_double(r.fid.std),
                      r.fid.std_defined ? "true" : "false"}) +
           "\n";
  }
  return out;
}

EvalReport evaluate(const PipelineConfig& config, const fs::path& checkpoint) {
  config.validate();
  const AcousticModel model = load_checkpoint(resolve_checkpoint(config, checkpoint));
  const Dataset ds = load_dataset(config);

  struct Labeled {
    std::string emotion;
    Eigen::VectorXd feature;
  };
  std::vector<Labeled> reference;
  if (config.eval_reference.empty()) {
    for (const auto& u : ds.items) reference.push_back({u.emotion, utterance_feature(u.mel)});
  } else {
    for (const auto& e : read_manifest(config.eval_reference).entries) {
      with_context(e.utterance_id, [&] {
        const AudioClip clip = load_pipeline_clip(e);
        reference.push_back(
            {e.emotion, utterance_feature(compute_log_mel(clip.samples, config.frame).values)});
      });
    }
  }

  std::vector<std::string> groups{"all"};
  {
    std::vector<std::string> emotions;
    for (const auto& u : ds.items) emotions.push_back(u.emotion);
    for (auto& e : sorted_unique(std::move(emotions))) groups.push_back(std::move(e));
  }

  const auto stack = [](const std::vector<Eigen::VectorXd>& rows) {
    RowMatrix m(static_cast<Eigen::Index>(rows.size()), kUtteranceFeatureDim);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      m.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    }
    return m;
  };

  EvalReport report;
  const std::uint64_t eval_seed = derive_seed(config.seed, kStreamEval);
  for (const auto& group : groups) {
    const auto in_group = [&](const std::string& e) { return group == "all" || e == group; };
    std::vector<Eigen::VectorXd> ref_rows, train_rows;
    std::vector<const PreparedUtterance*> sources;
    for (const auto& r : reference) {
      if (in_group(r.emotion)) ref_rows.push_back(r.feature);
    }
    for (const auto& u : ds.items) {
      if (!in_group(u.emotion)) continue;
      sources.push_back(&u);
      train_rows.push_back(utterance_feature(u.mel));
    }
    if (ref_rows.size() < 2 || sources.empty()) continue;

    const GaussianStats ref = gaussian_stats(stack(ref_rows));
    if (group == "all") write_fids(config.workdir / "eval" / "reference.fids", ref);

    if (train_rows.size() >= 2) {
      EvalRow row{group, "train", train_rows.size(), 1, {}};
      row.fid.mean = fid(gaussian_stats(stack(train_rows)), ref);
      row.fid.values = {row.fid.mean};
      report.rows.push_back(std::move(row));
    }

    // Pseudo-phonemes drawn with replacement from the group; speaker swapped
    // to a different, uniformly drawn one.
    const FeatureSampler sampler = [&](std::size_t n, Rng& rng) {
      std::vector<Eigen::VectorXd> rows;
      rows.reserve(n);
      for (std::size_t i = 0; i < n; ++i) {
        const PreparedUtterance& src = *sources[rng.below(sources.size())];
        std::vector<std::string> others;
        for (const auto& s : ds.speaker_ids) {
          if (s != src.speaker_id && model.speaker_index(s) >= 0) others.push_back(s);
        }
        const std::string speaker =
            others.empty() ? src.speaker_id : others[rng.below(others.size())];
        const std::uint64_t noise = rng.next_u64();
        std::optional<std::vector<int>> durations;
        if (config.ground_truth_durations) durations = src.pp.durations;
        if (config.eval_through_vocoder) {
          const auto r = synthesize_utterance(model, src.pp.units, durations, speaker,
                                              config.hnm, noise);
          rows.push_back(utterance_feature(compute_log_mel(r.clip.samples, config.frame).values));
        } else {
          const auto out = model.infer(src.pp.units, model.speaker_index(speaker), durations);
          rows.push_back(utterance_feature(out.mel));
        }
      }
      return stack(rows);
    };
    for (int n : config.eval_sizes) {
      EvalRow row{group, "synthetic", static_cast<std::size_t>(n), config.eval_repeats, {}};
      row.fid = repeated_fid(sampler, ref, row.n, config.eval_repeats,
                             derive_seed(eval_seed, static_cast<std::uint64_t>(n)));
      report.rows.push_back(std::move(row));
    }
  }
  if (report.rows.empty()) {
    fail(ErrorCode::kInsufficientData, "evaluate: no group has at least 2 reference utterances");
  }
  binio::write_file(config.workdir / "eval" / "report.tsv", format_eval_report(report));
  return report;
}

SpeakerAnalysis analyze_speakers(const PipelineConfig& config, const fs::path& groups,
                                 const fs::path& checkpoint) {
  const AcousticModel model = load_checkpoint(resolve_checkpoint(config, checkpoint));
  SpeakerAnalysis a;
  a.projection = project_speakers(model.speaker_table(), model.speaker_ids());
  a.output = config.workdir / "analysis" / "projection.tsv";
  write_projection(a.output, a.projection);

  if (!groups.empty()) {
    std::map<std::string, std::string> group_of;
    std::size_t line_no = 0;
    const std::string text = binio::read_file(groups);
    for (const auto& line : tsv::lines(text)) {
      ++line_no;
      if (line.empty() || line.starts_with('#') || line == "speaker_id\tgroup") continue;
      const auto f = tsv::split(line);
      if (f.size() != 2) {
        fail(ErrorCode::kParse,
             groups.string() + ":" + std::to_string(line_no) + ": expected 2 columns");
      }
      group_of[f[0]] = f[1];
    }
    std::map<std::string, int> label_ids;
    std::vector<int> labels;
    RowMatrix points(static_cast<Eigen::Index>(a.projection.points.size()), 2);
    for (std::size_t i = 0; i < a.projection.points.size(); ++i) {
      const auto& p = a.projection.points[i];
      const auto it = group_of.find(p.speaker_id);
      if (it == group_of.end()) {
        fail(ErrorCode::kNotFound, groups.string() + ": no group for speaker " + p.speaker_id);
      }
      labels.push_back(label_ids.emplace(it->second, static_cast<int>(label_ids.size()))
                           .first->second);
      points(static_cast<Eigen::Index>(i), 0) = p.x;
      points(static_cast<Eigen::Index>(i), 1) = p.y;
    }
    a.silhouette = silhouette_score(points, labels);
  }
  return a;
}

fs::path gen_corpus(const PipelineConfig& config, const fs::path& out_dir) {
  return write_corpus(out_dir, generate_synthetic_corpus(config.corpus, config.seed));
}

}  // namespace nsv
