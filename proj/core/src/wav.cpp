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
#include <algorithm>
#include <cmath>
#include <optional>

#include "nsv/audio.hpp"
#include "nsv/binio.hpp"
#include "nsv/error.hpp"

namespace nsv {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

struct FmtChunk {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits = 0;
};

}  // namespace

AudioClip decode_wav(std::string_view bytes, std::string_view context) {
  const std::string ctx(context);
  binio::Reader r(bytes, ctx);
  r.expect_magic("RIFF");
  r.u32();  // riff size; not trusted
  r.expect_magic("WAVE");

  std::optional<FmtChunk> fmt;
  std::string_view payload;
  bool have_data = false;

  while (r.remaining() >= 8) {
    const auto chunk_at = r.offset();
    auto id = r.bytes(4);
    auto size = r.u32();
    if (size > r.remaining()) {
      // Streaming writers sometimes leave the data size unset; accept the
      // rest of the file for data, reject anything else.
      if (id == "data") size = static_cast<std::uint32_t>(r.remaining());
      else
        fail(ErrorCode::kDecode, ctx + ": chunk '" + std::string(id) +
                                     "' at offset " + std::to_string(chunk_at) +
                                     " overruns file");
    }
    auto body = r.bytes(size);
    if (size % 2 == 1 && r.remaining() > 0) r.bytes(1);

    if (id == "fmt ") {
      if (size < 16) {
        fail(ErrorCode::kDecode, ctx + ": fmt chunk too small at offset " +
                                     std::to_string(chunk_at));
      }
      binio::Reader fr(body, ctx);
      FmtChunk f;
      f.format = fr.u16();
      f.channels = fr.u16();
      f.sample_rate = fr.u32();
      fr.u32();  // byte rate
      fr.u16();  // block align
      f.bits = fr.u16();
      if (f.format == kFormatExtensible) {
        if (size < 40) {
          fail(ErrorCode::kDecode,
               ctx + ": extensible fmt chunk too small at offset " +
                   std::to_string(chunk_at));
        }
        fr.u16();  // cb size
        fr.u16();  // valid bits
        fr.u32();  // channel mask
        f.format = fr.u16();  // first two bytes of the subformat GUID
      }
      fmt = f;
    } else if (id == "data") {
      payload = body;
      have_data = true;
    }
  }

  if (!fmt) fail(ErrorCode::kDecode, ctx + ": missing fmt chunk");
  if (!have_data) fail(ErrorCode::kDecode, ctx + ": missing data chunk");
  if (fmt->channels == 0 || fmt->sample_rate == 0) {
    fail(ErrorCode::kDecode, ctx + ": zero channels or sample rate");
  }

  const bool pcm16 = fmt->format == kFormatPcm && fmt->bits == 16;
  const bool f32 = fmt->format == kFormatFloat && fmt->bits == 32;
  if (!pcm16 && !f32) {
    fail(ErrorCode::kUnsupportedFormat,
         ctx + ": unsupported codec (format tag " + std::to_string(fmt->format) +
             ", " + std::to_string(fmt->bits) + " bits)");
  }

  const std::size_t bytes_per_sample = fmt->bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * fmt->channels;
  const std::size_t n_frames = payload.size() / frame_bytes;
  if (n_frames == 0) fail(ErrorCode::kEmptyClip, ctx + ": clip has no samples");

  AudioClip clip;
  clip.sample_rate_hz = static_cast<int>(fmt->sample_rate);
  clip.samples.resize(n_frames);
  binio::Reader pr(payload, ctx);
  for (std::size_t i = 0; i < n_frames; ++i) {
    double acc = 0.0;
    for (std::uint16_t c = 0; c < fmt->channels; ++c) {
      double v;
      if (pcm16) {
        v = static_cast<std::int16_t>(pr.u16()) / 32768.0;
      } else {
        v = pr.f32();
        if (!std::isfinite(v)) {
          fail(ErrorCode::kDecode, ctx + ": non-finite sample at frame " +
                                       std::to_string(i));
        }
        v = std::clamp(v, -1.0, 1.0);
      }
      acc += v;
    }
    clip.samples[i] = acc / fmt->channels;
  }
  return clip;
}

AudioClip read_wav(const std::filesystem::path& path) {
  auto clip = decode_wav(binio::read_file(path), path.string());
  clip.utterance_id = path.stem().string();
  return clip;
}

std::string encode_wav(const AudioClip& clip, SampleFormat format) {
  const bool pcm16 = format == SampleFormat::kPcm16;
  const std::uint16_t bits = pcm16 ? 16 : 32;
  const std::uint32_t data_bytes =
      static_cast<std::uint32_t>(clip.samples.size() * (bits / 8));

  binio::Writer w;
  w.bytes("RIFF");
  w.u32(36 + data_bytes);
  w.bytes("WAVE");
  w.bytes("fmt ");
  w.u32(16);
  w.u16(pcm16 ? kFormatPcm : kFormatFloat);
  w.u16(1);
  w.u32(static_cast<std::uint32_t>(clip.sample_rate_hz));
  w.u32(static_cast<std::uint32_t>(clip.sample_rate_hz) * (bits / 8));
  w.u16(bits / 8);
  w.u16(bits);
  w.bytes("data");
  w.u32(data_bytes);
  for (double s : clip.samples) {
    const double v = std::clamp(std::isfinite(s) ? s : 0.0, -1.0, 1.0);
    if (pcm16) {
      w.u16(static_cast<std::uint16_t>(
          static_cast<std::int16_t>(std::clamp<long>(std::lround(v * 32768.0), -32768, 32767))));
    } else {
      w.f32(static_cast<float>(v));
    }
  }
  return w.data();
}

void write_wav(const std::filesystem::path& path, const AudioClip& clip,
               SampleFormat format) {
  binio::write_file(path, encode_wav(clip, format));
}

}  // namespace nsv
