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
#include <filesystem>
#include <string>
#include <string_view>

#include "nsv/acoustic.hpp"

namespace nsv {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Layout (little-endian): "NSVM", u32 version, u32 config length, UTF-8
// key=value config (model fields plus seed= and speakers=), u32 tensor
// count, then per tensor: u32 name length, name, u32 rank, u32 dims[rank],
// f32 payload row-major.
std::string encode_checkpoint(const AcousticModel& model, std::uint64_t seed);
AcousticModel decode_checkpoint(std::string_view bytes,
                                std::string_view context = "checkpoint",
                                std::uint64_t* seed_out = nullptr);

void save_checkpoint(const std::filesystem::path& path, const AcousticModel& model,
                     std::uint64_t seed);
AcousticModel load_checkpoint(const std::filesystem::path& path,
                              std::uint64_t* seed_out = nullptr);

}  // namespace nsv
