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

#include "nsv/error.hpp"

namespace nsv {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kDecode: return "decode";
    case ErrorCode::kUnsupportedFormat: return "unsupported-format";
    case ErrorCode::kEmptyClip: return "empty-clip";
    case ErrorCode::kEmptyCorpus: return "empty-corpus";
    case ErrorCode::kInsufficientData: return "insufficient-data";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kValidation: return "validation";
    case ErrorCode::kRange: return "range";
    case ErrorCode::kNotFound: return "not-found";
    case ErrorCode::kDivergence: return "divergence";
    case ErrorCode::kUnsupported: return "unsupported";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

}  // namespace nsv
