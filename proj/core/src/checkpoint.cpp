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
#include "nsv/checkpoint.hpp"

#include <charconv>
#include <map>
#include <set>

#include "nsv/binio.hpp"
#include "nsv/error.hpp"
#include "nsv/tsv.hpp"

namespace nsv {

std::string encode_checkpoint(const AcousticModel& model, std::uint64_t seed) {
  std::string blob = model.config().to_kv();
  blob += "seed=" + std::to_string(seed) + "\n";
  blob += "speakers=" + tsv::join(model.speaker_ids(), ',') + "\n";

  binio::Writer w;
  w.bytes("NSVM");
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(blob.size()));
  w.bytes(blob);
  const auto& tensors = model.params().tensors();
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    w.u32(static_cast<std::uint32_t>(t.name.size()));
    w.bytes(t.name);
    w.u32(2);
    w.u32(static_cast<std::uint32_t>(t.value.rows()));
    w.u32(static_cast<std::uint32_t>(t.value.cols()));
    for (Eigen::Index i = 0; i < t.value.size(); ++i) {
      w.f32(static_cast<float>(t.value.data()[i]));
    }
  }
  return w.data();
}

AcousticModel decode_checkpoint(std::string_view bytes, std::string_view context,
                                std::uint64_t* seed_out) {
  const std::string ctx(context);
  binio::Reader r(bytes, ctx);
  r.expect_magic("NSVM");
  const auto version = r.u32();
  if (version != kCheckpointVersion) {
    fail(ErrorCode::kUnsupportedFormat,
         ctx + ": unsupported checkpoint version " + std::to_string(version));
  }
  const auto blob_len = r.u32();
  const std::string blob(r.bytes(blob_len));

  std::map<std::string, std::string> kv;
  std::uint64_t seed = 0;
  std::vector<std::string> speakers;
  for (const auto& line : tsv::lines(blob)) {
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::kDecode, ctx + ": malformed config line '" + line + "'");
    }
    auto key = line.substr(0, eq);
    auto value = line.substr(eq + 1);
    if (key == "seed") {
      std::from_chars(value.data(), value.data() + value.size(), seed);
    } else if (key == "speakers") {
      speakers = value.empty() ? std::vector<std::string>{} : tsv::split(value, ',');
    } else {
      kv[key] = value;
    }
  }
  auto config = ModelConfig::from_kv(kv);
  AcousticModel model(config, speakers, seed);

  const auto count = r.u32();
  std::set<std::string> loaded;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_at = r.offset();
    const std::string name(r.bytes(r.u32()));
    const auto rank = r.u32();
    if (rank != 2) {
      fail(ErrorCode::kDecode, ctx + ": tensor '" + name + "' at offset " +
                                   std::to_string(name_at) + " has rank " +
                                   std::to_string(rank));
    }
    const auto rows = r.u32();
    const auto cols = r.u32();
    auto* t = model.params().find(name);
    if (t == nullptr) {
      fail(ErrorCode::kDecode, ctx + ": unexpected tensor '" + name + "'");
    }
    if (t->value.rows() != rows || t->value.cols() != cols) {
      fail(ErrorCode::kDecode, ctx + ": tensor '" + name + "' has shape " +
                                   std::to_string(rows) + "x" + std::to_string(cols) +
                                   ", model expects " + std::to_string(t->value.rows()) +
                                   "x" + std::to_string(t->value.cols()));
    }
    for (Eigen::Index k = 0; k < t->value.size(); ++k) t->value.data()[k] = r.f32();
    loaded.insert(name);
  }
  for (const auto& t : model.params().tensors()) {
    if (!loaded.contains(t.name)) {
      fail(ErrorCode::kDecode, ctx + ": missing tensor '" + t.name + "'");
    }
  }
  if (seed_out) *seed_out = seed;
  return model;
}

void save_checkpoint(const std::filesystem::path& path, const AcousticModel& model,
                     std::uint64_t seed) {
  binio::write_file(path, encode_checkpoint(model, seed));
}

AcousticModel load_checkpoint(const std::filesystem::path& path, std::uint64_t* seed_out) {
  return decode_checkpoint(binio::read_file(path), path.string(), seed_out);
}

}  // namespace nsv
