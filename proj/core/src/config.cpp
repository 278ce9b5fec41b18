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
#include "nsv/config.hpp"

#include <charconv>
#include <map>

#include "nsv/binio.hpp"
#include "nsv/error.hpp"
#include "nsv/tsv.hpp"

namespace nsv {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& v, const std::string& where) {
  T out{};
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || v.empty()) {
    fail(ErrorCode::kParse, where + ": invalid number '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& v, const std::string& where) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  fail(ErrorCode::kParse, where + ": expected true or false, got '" + v + "'");
}

std::vector<std::string> parse_list(const std::string& v) {
  std::vector<std::string> out;
  if (v.empty()) return out;
  for (const auto& item : tsv::split(v, ',')) out.push_back(trim(item));
  return out;
}

std::string join_list(const std::vector<std::string>& items) {
  return tsv::join(items, ',');
}

std::string format_bool(bool b) { return b ? "true" : "false"; }

}  // namespace

void PipelineConfig::validate() const {
  frame.validate();
  if (frame.sample_rate_hz != kPipelineRateHz) {
    fail(ErrorCode::kInvalidArgument,
         "config: frame.sample_rate_hz must be " + std::to_string(kPipelineRateHz));
  }
  if (!(hnm.frame == frame)) fail(ErrorCode::kInvalidArgument, "config: hnm frame differs");
  model.validate();
  hnm.validate();
  require(kmeans_max_iterations > 0, "config: units.kmeans_max_iterations must be positive");
  require(eval_repeats >= 1, "config: eval.repeats must be at least 1");
  for (int n : eval_sizes) require(n >= 2, "config: eval.sizes entries must be at least 2");
  if (units_source == UnitsSource::kImport && units_path.empty()) {
    fail(ErrorCode::kInvalidArgument, "config: units.source = import needs units.path");
  }
}

PipelineConfig parse_pipeline_config(std::string_view text, std::string_view context,
                                     const std::filesystem::path& base_dir) {
  PipelineConfig c;
  std::map<std::string, std::string> model_kv;
  const auto path_of = [&](const std::string& v) {
    std::filesystem::path p(v);
    return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  };

  std::size_t line_no = 0;
  for (const auto& raw : tsv::lines(text)) {
    ++line_no;
    const std::string where = std::string(context) + ":" + std::to_string(line_no);
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorCode::kParse, where + ": expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string v = trim(std::string_view(line).substr(eq + 1));
    const std::string at = where + ": " + key;

    if (key == "corpus") c.corpus_manifest = path_of(v);
    else if (key == "workdir") c.workdir = path_of(v);
    else if (key == "seed") c.seed = parse_number<std::uint64_t>(v, at);
    else if (key == "frame.sample_rate_hz") c.frame.sample_rate_hz = parse_number<int>(v, at);
    else if (key == "frame.hop_samples") c.frame.hop_samples = parse_number<int>(v, at);
    else if (key == "frame.win_samples") c.frame.win_samples = parse_number<int>(v, at);
    else if (key == "frame.fft_size") c.frame.fft_size = parse_number<int>(v, at);
    else if (key.starts_with("model.")) model_kv[key.substr(6)] = v;
    else if (key == "hnm.max_harmonics") c.hnm.max_harmonics = parse_number<int>(v, at);
    else if (key == "hnm.harmonic_gain") c.hnm.harmonic_gain = parse_number<double>(v, at);
    else if (key == "hnm.noise_gain") c.hnm.noise_gain = parse_number<double>(v, at);
    else if (key == "hnm.voiced_noise_db") c.hnm.voiced_noise_db = parse_number<double>(v, at);
    else if (key == "hnm.voicing_fade_ms") c.hnm.voicing_fade_ms = parse_number<double>(v, at);
    else if (key == "hnm.voicing_reach_frames")
      c.hnm.voicing_reach_frames = parse_number<int>(v, at);
    else if (key == "prune.silence_dbfs") c.prune.silence_dbfs = parse_number<double>(v, at);
    else if (key == "prune.low_volume_speaker_dbfs")
      c.prune.low_volume_speaker_dbfs = parse_number<double>(v, at);
    else if (key == "prune.excluded_emotions") c.prune.excluded_emotions = parse_list(v);
    else if (key == "corpus.n_speakers") c.corpus.n_speakers = parse_number<int>(v, at);
    else if (key == "corpus.clips_per_speaker")
      c.corpus.clips_per_speaker = parse_number<int>(v, at);
    else if (key == "corpus.min_duration_s") c.corpus.min_duration_s = parse_number<double>(v, at);
    else if (key == "corpus.max_duration_s") c.corpus.max_duration_s = parse_number<double>(v, at);
    else if (key == "corpus.emotions") c.corpus.emotions = parse_list(v);
    else if (key == "corpus.condition_groups") c.corpus.condition_groups = parse_bool(v, at);
    else if (key == "corpus.bandlimit_hz") c.corpus.bandlimit_hz = parse_number<double>(v, at);
    else if (key == "corpus.n_silent_clips") c.corpus.n_silent_clips = parse_number<int>(v, at);
    else if (key == "corpus.n_quiet_speakers") c.corpus.n_quiet_speakers = parse_number<int>(v, at);
    else if (key == "units.source") {
      if (v == "kmeans") c.units_source = UnitsSource::kKMeans;
      else if (v == "import") c.units_source = UnitsSource::kImport;
      else fail(ErrorCode::kParse, at + ": expected kmeans or import, got '" + v + "'");
    } else if (key == "units.path") c.units_path = path_of(v);
    else if (key == "units.kmeans_max_iterations")
      c.kmeans_max_iterations = parse_number<int>(v, at);
    else if (key == "synth.ground_truth_durations") c.ground_truth_durations = parse_bool(v, at);
    else if (key == "synth.noise_seed") c.noise_seed = parse_number<std::uint64_t>(v, at);
    else if (key == "eval.sizes") {
      c.eval_sizes.clear();
      for (const auto& s : parse_list(v)) c.eval_sizes.push_back(parse_number<int>(s, at));
    } else if (key == "eval.repeats") c.eval_repeats = parse_number<int>(v, at);
    else if (key == "eval.reference") c.eval_reference = path_of(v);
    else if (key == "eval.through_vocoder") c.eval_through_vocoder = parse_bool(v, at);
    else fail(ErrorCode::kParse, where + ": unknown key '" + key + "'");
  }
  if (!model_kv.empty()) c.model = ModelConfig::from_kv(model_kv);
  c.hnm.frame = c.frame;
  c.validate();
  return c;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  return parse_pipeline_config(binio::read_file(path), path.string(), path.parent_path());
}

std::string format_pipeline_config(const PipelineConfig& c) {
  std::string out;
  const auto put = [&](const std::string& k, const std::string& v) {
    out += k + " = " + v + "\n";
  };
  put("corpus", c.corpus_manifest.string());
  put("workdir", c.workdir.string());
  put("seed", std::to_string(c.seed));
  put("frame.sample_rate_hz", std::to_string(c.frame.sample_rate_hz));
  put("frame.hop_samples", std::to_string(c.frame.hop_samples));
  put("frame.win_samples", std::to_string(c.frame.win_samples));
  put("frame.fft_size", std::to_string(c.frame.fft_size));
  for (const auto& line : tsv::lines(c.model.to_kv())) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    put("model." + line.substr(0, eq), line.substr(eq + 1));
  }
  put("hnm.max_harmonics", std::to_string(c.hnm.max_harmonics));
  put("hnm.harmonic_gain", tsv::format_double(c.hnm.harmonic_gain));
  put("hnm.noise_gain", tsv::format_double(c.hnm.noise_gain));
  put("hnm.voiced_noise_db", tsv::format_double(c.hnm.voiced_noise_db));
  put("hnm.voicing_fade_ms", tsv::format_double(c.hnm.voicing_fade_ms));
  put("hnm.voicing_reach_frames", std::to_string(c.hnm.voicing_reach_frames));
  put("prune.silence_dbfs", tsv::format_double(c.prune.silence_dbfs));
  put("prune.low_volume_speaker_dbfs", tsv::format_double(c.prune.low_volume_speaker_dbfs));
  put("prune.excluded_emotions", join_list(c.prune.excluded_emotions));
  put("corpus.n_speakers", std::to_string(c.corpus.n_speakers));
  put("corpus.clips_per_speaker", std::to_string(c.corpus.clips_per_speaker));
  put("corpus.min_duration_s", tsv::format_double(c.corpus.min_duration_s));
  put("corpus.max_duration_s", tsv::format_double(c.corpus.max_duration_s));
  put("corpus.emotions", join_list(c.corpus.emotions));
  put("corpus.condition_groups", format_bool(c.corpus.condition_groups));
  put("corpus.bandlimit_hz", tsv::format_double(c.corpus.bandlimit_hz));
  put("corpus.n_silent_clips", std::to_string(c.corpus.n_silent_clips));
  put("corpus.n_quiet_speakers", std::to_string(c.corpus.n_quiet_speakers));
  put("units.source", c.units_source == UnitsSource::kImport ? "import" : "kmeans");
  if (!c.units_path.empty()) put("units.path", c.units_path.string());
  put("units.kmeans_max_iterations", std::to_string(c.kmeans_max_iterations));
  put("synth.ground_truth_durations", format_bool(c.ground_truth_durations));
  put("synth.noise_seed", std::to_string(c.noise_seed));
  std::vector<std::string> sizes;
  for (int n : c.eval_sizes) sizes.push_back(std::to_string(n));
  put("eval.sizes", join_list(sizes));
  put("eval.repeats", std::to_string(c.eval_repeats));
  if (!c.eval_reference.empty()) put("eval.reference", c.eval_reference.string());
  put("eval.through_vocoder", format_bool(c.eval_through_vocoder));
  return out;
}

}  // namespace nsv
