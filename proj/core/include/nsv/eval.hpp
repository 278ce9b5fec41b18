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
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "nsv/features.hpp"
#include "nsv/random.hpp"

namespace nsv {

inline constexpr int kUtteranceFeatureDim = 2 * kMelBins;

struct GaussianStats {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  std::uint64_t n = 0;

  Eigen::Index dim() const { return mean.size(); }
};

/// Rows of `features` are samples. Covariance uses the n-1 divisor and is
/// symmetrized.
GaussianStats gaussian_stats(const RowMatrix& features);

/// Fréchet distance between two Gaussians. The cross term is computed as
/// Tr((A^1/2 B A^1/2)^1/2) by eigendecomposition.
double fid(const GaussianStats& a, const GaussianStats& b);

/// Symmetric PSD square root; eigenvalues below 1e-10 are clamped to zero.
Eigen::MatrixXd sqrt_psd(const Eigen::MatrixXd& m);

/// Draws `n` feature rows. May return more; extra rows are ignored.
using FeatureSampler = std::function<RowMatrix(std::size_t n, Rng& rng)>;

/// Samples without replacement from a fixed pool.
FeatureSampler pool_sampler(RowMatrix pool);

struct RepeatedFid {
  double mean = 0.0;
  /// Sample std (n-1). Zero with std_defined = false when repeats == 1.
  double std = 0.0;
  bool std_defined = false;
  std::vector<double> values;
};

/// Repeat r draws from Rng(derive_seed(seed, r)).
RepeatedFid repeated_fid(const FeatureSampler& source, const GaussianStats& reference,
                         std::size_t n_per_eval, int repeats, std::uint64_t seed);

/// time-mean followed by time-std (population) of each mel band.
Eigen::VectorXd utterance_feature(const RowMatrix& log_mel);

std::string encode_fids(const GaussianStats& stats);
GaussianStats decode_fids(std::string_view bytes, std::string_view context = "fids");
void write_fids(const std::filesystem::path& path, const GaussianStats& stats);
GaussianStats read_fids(const std::filesystem::path& path);

struct ProjectedSpeaker {
  std::string speaker_id;
  double x = 0.0;
  double y = 0.0;
};

struct SpeakerProjection {
  std::vector<ProjectedSpeaker> points;
  /// Set when every row was identical; all points are then at the origin.
  bool degenerate = false;
};

/// Mean-centred PCA to two components. Each component's largest-magnitude
/// loading is made positive.
SpeakerProjection project_speakers(const RowMatrix& table,
                                   const std::vector<std::string>& speaker_ids);

/// Mean silhouette over all points (Euclidean). Points in singleton clusters
/// score 0.
double silhouette_score(const RowMatrix& points, const std::vector<int>& labels);

std::string format_projection(const SpeakerProjection& projection);
SpeakerProjection parse_projection(std::string_view text,
                                   std::string_view context = "projection");
void write_projection(const std::filesystem::path& path,
                      const SpeakerProjection& projection);

}  // namespace nsv
