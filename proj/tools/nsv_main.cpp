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
// nsv: command line front end for the synthesis pipeline.
#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "nsv/config.hpp"
#include "nsv/error.hpp"
#include "nsv/pipeline.hpp"
#include "nsv/ppcodec.hpp"
#include "nsv/tsv.hpp"

namespace {

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out + "\"";
}

int report_error(const std::string& code, const std::string& message) {
  std::cerr << "error: code=" << code << " message=" << quote(message) << "\n";
  return code == "usage" ? 2 : 1;
}

void print(const std::string& key, const std::string& value) {
  std::cout << key << "=" << value << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nsv: non-speech vocalization synthesis pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string workdir;
  app.add_option("--config", config_path, "key = value pipeline config file");
  app.add_option("--seed", seed, "overrides the config seed");
  app.add_option("--workdir", workdir, "overrides the config workdir");

  auto* prepare = app.add_subcommand("prepare", "prune, analyze and transcribe a corpus");
  std::string corpus;
  std::string units_file;
  prepare->add_option("--corpus", corpus, "corpus manifest TSV");
  prepare->add_option("--units", units_file, "import units from this Units TSV");

  auto* train = app.add_subcommand("train", "train the acoustic model");
  int progress_every = 0;
  std::optional<int> max_steps;
  train->add_option("--progress-every", progress_every, "print the batch loss every N steps");
  train->add_option("--steps", max_steps, "overrides model.max_steps");

  auto* synth = app.add_subcommand("synthesize", "synthesize one utterance");
  std::string utterance, text, durations, speaker, out, checkpoint;
  std::optional<std::uint64_t> noise_seed;
  bool ground_truth = false;
  auto* utt_opt = synth->add_option("--utterance", utterance, "prepared utterance id");
  auto* text_opt = synth->add_option("--text", text, "pseudo-phoneme text");
  utt_opt->excludes(text_opt);
  synth->add_option("--durations", durations, "comma-separated durations for --text")
      ->needs(text_opt);
  synth->add_option("--speaker", speaker, "target speaker id")->required();
  synth->add_option("--noise-seed", noise_seed, "vocoder noise seed");
  synth->add_option("--out", out, "output WAV path");
  synth->add_option("--checkpoint", checkpoint, "model checkpoint");
  synth->add_flag("--ground-truth-durations", ground_truth,
                  "use the prepared durations instead of predicted ones");

  auto* evaluate = app.add_subcommand("evaluate", "FID of synthesized utterances");
  std::string eval_checkpoint, sizes;
  std::optional<int> repeats;
  evaluate->add_option("--checkpoint", eval_checkpoint, "model checkpoint");
  evaluate->add_option("--sizes", sizes, "comma-separated sample sizes");
  evaluate->add_option("--repeats", repeats, "draws per sample size");

  auto* analyze = app.add_subcommand("analyze-speakers", "2-D projection of the speaker table");
  std::string analyze_checkpoint, groups;
  analyze->add_option("--checkpoint", analyze_checkpoint, "model checkpoint");
  analyze->add_option("--groups", groups, "speaker_id<TAB>group file for the silhouette score");

  auto* gen = app.add_subcommand("gen-corpus", "write a synthetic corpus");
  std::string gen_out;
  std::optional<int> n_speakers, clips;
  bool condition_groups = false;
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--speakers", n_speakers, "number of speakers");
  gen->add_option("--clips", clips, "clips per speaker");
  gen->add_flag("--condition-groups", condition_groups,
                "band-limit odd-indexed speakers");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("usage", e.what());
  }

  try {
    nsv::PipelineConfig cfg;
    if (!config_path.empty()) cfg = nsv::load_pipeline_config(config_path);
    if (seed) cfg.seed = *seed;
    if (!workdir.empty()) cfg.workdir = workdir;

    if (*prepare) {
      if (!corpus.empty()) cfg.corpus_manifest = corpus;
      if (!units_file.empty()) {
        cfg.units_source = nsv::UnitsSource::kImport;
        cfg.units_path = units_file;
      }
      const auto r = nsv::prepare(cfg);
      print("clips_in", std::to_string(r.clips_in));
      print("clips_kept", std::to_string(r.clips_kept));
      print("clips_pruned", std::to_string(r.clips_pruned()));
      print("total_duration_s", nsv::tsv::format_double(r.total_duration_s));
      print("dataset", nsv::dataset_dir(cfg).string());
    } else if (*train) {
      if (max_steps) cfg.model.max_steps = *max_steps;
      nsv::ProgressFn progress;
      if (progress_every > 0) {
        progress = [&](int step, const nsv::LossBreakdown& l) {
          if (step % progress_every == 0) {
            std::cerr << "step=" << step << " loss=" << l.total << " mel_l1=" << l.mel_l1
                      << "\n";
          }
        };
      }
      const auto s = nsv::train_model(cfg, progress);
      print("steps", std::to_string(s.steps));
      print("initial_mel_l1", nsv::tsv::format_double(s.initial.mel_l1));
      print("final_mel_l1", nsv::tsv::format_double(s.final.mel_l1));
      print("duration_mae", nsv::tsv::format_double(s.duration_mae));
      print("checkpoint", s.checkpoint.string());
    } else if (*synth) {
      nsv::SynthesisRequest req;
      req.utterance_id = utterance;
      req.text = text;
      if (!durations.empty()) req.durations = nsv::parse_int_list(durations, "--durations");
      req.speaker_id = speaker;
      req.noise_seed = noise_seed;
      req.output = out;
      req.checkpoint = checkpoint;
      if (ground_truth) cfg.ground_truth_durations = true;
      const auto f = nsv::synthesize(cfg, req);
      print("wav", f.wav.string());
      print("sidecar", f.sidecar.string());
      print("frames", std::to_string(f.result.frames));
      print("samples", std::to_string(f.result.clip.samples.size()));
    } else if (*evaluate) {
      if (!sizes.empty()) cfg.eval_sizes = nsv::parse_int_list(sizes, "--sizes");
      if (repeats) cfg.eval_repeats = *repeats;
      const auto report = nsv::evaluate(cfg, eval_checkpoint);
      std::cout << nsv::format_eval_report(report);
    } else if (*analyze) {
      const auto a = nsv::analyze_speakers(cfg, groups, analyze_checkpoint);
      if (a.projection.degenerate) {
        std::cerr << "warning: code=degenerate-projection message="
                  << quote("all speaker embeddings are identical") << "\n";
      }
      print("projection", a.output.string());
      if (a.silhouette) print("silhouette", nsv::tsv::format_double(*a.silhouette));
    } else if (*gen) {
      if (n_speakers) cfg.corpus.n_speakers = *n_speakers;
      if (clips) cfg.corpus.clips_per_speaker = *clips;
      if (condition_groups) cfg.corpus.condition_groups = true;
      print("manifest", nsv::gen_corpus(cfg, gen_out).string());
      print("groups", (std::filesystem::path(gen_out) / "speakers.tsv").string());
    }
  } catch (const nsv::Error& e) {
    return report_error(std::string(nsv::error_code_name(e.code())), e.what());
  } catch (const std::exception& e) {
    return report_error("internal", e.what());
  }
  return 0;
}
