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
#include <map>
#include <string>
#include <vector>

#include "nsv/features.hpp"

namespace nsv {

inline constexpr int kNumUnits = 100;

struct Codebook {
  RowMatrix centroids;  // k x feature_dim
  int frame_rate_hz = 100;

  Eigen::Index size() const { return centroids.rows(); }
  Eigen::Index feature_dim() const { return centroids.cols(); }
};

struct UnitSequence {
  std::vector<int> indices;
  int frame_rate_hz = 100;
  std::string utterance_id;
};

struct KMeansOptions {
  int k = kNumUnits;
  std::uint64_t seed = 0;
  int max_iterations = 300;
  double relative_tolerance = 1e-6;
};

struct KMeansResult {
  Codebook codebook;
  /// Inertia after seeding, then after each Lloyd iteration.
  std::vector<double> inertia_history;
  int iterations = 0;
};

/// k-means++ seeding followed by Lloyd iterations. Rows of `features` are
/// points. Throws kInsufficientData with fewer than k distinct rows.
KMeansResult train_kmeans(const RowMatrix& features, const KMeansOptions& options);

/// Nearest centroid per row (squared Euclidean, ties to the lowest index).
UnitSequence quantize(const RowMatrix& features, const Codebook& codebook);

/// Units TSV: "#key=value" header lines (frame_rate_hz required), then
/// "utterance_id<TAB>i,j,k,..." rows.
std::map<std::string, UnitSequence> parse_units(std::string_view text,
                                                std::string_view context = "units");
std::map<std::string, UnitSequence> import_units(const std::filesystem::path& path);

std::string format_units(const std::map<std::string, UnitSequence>& units,
                         int frame_rate_hz);
void write_units(const std::filesystem::path& path,
                 const std::map<std::string, UnitSequence>& units,
                 int frame_rate_hz);

}  // namespace nsv
