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
#include "nsv/binio.hpp"

#include <fstream>
#include <sstream>

#include "nsv/error.hpp"

namespace nsv::binio {

std::string_view Reader::bytes(std::size_t n) {
  if (n > remaining()) {
    fail(ErrorCode::kDecode, context_ + ": truncated data at offset " +
                                 std::to_string(pos_) + " (wanted " +
                                 std::to_string(n) + " bytes, have " +
                                 std::to_string(remaining()) + ")");
  }
  auto out = data_.substr(pos_, n);
  pos_ += n;
  return out;
}

void Reader::expect_magic(std::string_view magic) {
  auto at = pos_;
  auto got = bytes(magic.size());
  if (got != magic) {
    fail(ErrorCode::kDecode, context_ + ": bad magic at offset " +
                                 std::to_string(at) + ", expected '" +
                                 std::string(magic) + "'");
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kNotFound, "cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view data) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::kIo, "cannot write file: " + tmp.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) fail(ErrorCode::kIo, "short write: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace nsv::binio
