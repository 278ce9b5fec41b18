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
#include "nsv/units.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <set>

#include "nsv/binio.hpp"
#include "nsv/error.hpp"
#include "nsv/random.hpp"
#include "nsv/tsv.hpp"

namespace nsv {
namespace {

std::size_t count_distinct_rows(const RowMatrix& x) {
  std::set<std::vector<double>> rows;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    rows.emplace(x.row(i).data(), x.row(i).data() + x.cols());
  }
  return rows.size();
}

// Index of the nearest centroid and its squared distance. Strict comparison
// keeps the lowest index on ties.
std::pair<int, double> nearest(const double* point, const RowMatrix& centroids) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  const auto dim = centroids.cols();
  for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
    const double* q = centroids.row(c).data();
    double d = 0.0;
    for (Eigen::Index j = 0; j < dim; ++j) {
      const double diff = point[j] - q[j];
      d += diff * diff;
    }
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return {best, best_d};
}

double assign(const RowMatrix& x, const RowMatrix& centroids,
              std::vector<int>& labels) {
  double inertia = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    auto [c, d] = nearest(x.row(i).data(), centroids);
    labels[static_cast<std::size_t>(i)] = c;
    inertia += d;
  }
  return inertia;
}

}  // namespace

KMeansResult train_kmeans(const RowMatrix& features, const KMeansOptions& options) {
  const int k = options.k;
  require(k > 0, "train_kmeans: k must be positive");
  require(options.max_iterations >= 0, "train_kmeans: negative iteration cap");
  const auto n = features.rows();
  if (n < k || count_distinct_rows(features) < static_cast<std::size_t>(k)) {
    fail(ErrorCode::kInsufficientData,
         "train_kmeans: need at least " + std::to_string(k) +
             " distinct points, got " + std::to_string(count_distinct_rows(features)));
  }
  require(features.allFinite(), "train_kmeans: non-finite feature values");

  Rng rng(options.seed);
  RowMatrix centroids(k, features.cols());

  // k-means++ seeding.
  std::vector<double> d2(static_cast<std::size_t>(n));
  const auto first = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
  centroids.row(0) = features.row(first);
  for (Eigen::Index i = 0; i < n; ++i) {
    d2[i] = (features.row(i) - centroids.row(0)).squaredNorm();
  }
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (double v : d2) total += v;
    double target = rng.uniform() * total;
    Eigen::Index pick = -1;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (d2[i] <= 0.0) continue;
      pick = i;
      target -= d2[i];
      if (target < 0.0) break;
    }
    centroids.row(c) = features.row(pick);
    for (Eigen::Index i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], (features.row(i) - centroids.row(c)).squaredNorm());
    }
  }

  KMeansResult result;
  std::vector<int> labels(static_cast<std::size_t>(n));
  double inertia = assign(features, centroids, labels);
  result.inertia_history.push_back(inertia);

  for (int it = 0; it < options.max_iterations; ++it) {
    RowMatrix sums = RowMatrix::Zero(k, features.cols());
    std::vector<std::int64_t> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(labels[i]) += features.row(i);
      ++counts[static_cast<std::size_t>(labels[i])];
    }
    for (int c = 0; c < k; ++c) {
      // Empty clusters keep their previous centroid.
      if (counts[c] > 0) centroids.row(c) = sums.row(c) / static_cast<double>(counts[c]);
    }
    const double next = assign(features, centroids, labels);
    result.inertia_history.push_back(next);
    result.iterations = it + 1;
    const double improvement = inertia - next;
    inertia = next;
    if (improvement <= options.relative_tolerance * std::max(next, 1e-300)) break;
  }

  result.codebook.centroids = std::move(centroids);
  result.codebook.frame_rate_hz = 100;
  return result;
}

UnitSequence quantize(const RowMatrix& features, const Codebook& codebook) {
  require(features.cols() == codebook.feature_dim(),
          "quantize: feature dimension " + std::to_string(features.cols()) +
              " does not match codebook dimension " +
              std::to_string(codebook.feature_dim()));
  UnitSequence out;
  out.frame_rate_hz = codebook.frame_rate_hz;
  out.indices.resize(static_cast<std::size_t>(features.rows()));
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    out.indices[static_cast<std::size_t>(i)] =
        nearest(features.row(i).data(), codebook.centroids).first;
  }
  return out;
}

std::map<std::string, UnitSequence> parse_units(std::string_view text,
                                                std::string_view context) {
  const std::string ctx(context);
  std::map<std::string, UnitSequence> out;
  int frame_rate = -1;
  std::size_t line_no = 0;
  for (const auto& line : tsv::lines(text)) {
    ++line_no;
    const std::string where = ctx + ":" + std::to_string(line_no);
    if (line.empty()) continue;
    if (line.starts_with('#')) {
      auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const auto key = line.substr(1, eq - 1);
      const auto value = line.substr(eq + 1);
      if (key == "frame_rate_hz") {
        auto res = std::from_chars(value.data(), value.data() + value.size(), frame_rate);
        if (res.ec != std::errc() || frame_rate <= 0) {
          fail(ErrorCode::kParse, where + ": invalid frame_rate_hz '" + value + "'");
        }
      }
      continue;
    }
    if (frame_rate < 0) {
      fail(ErrorCode::kParse, where + ": row before the #frame_rate_hz header");
    }
    auto fields = tsv::split(line);
    if (fields.size() != 2 || fields[0].empty()) {
      fail(ErrorCode::kParse, where + ": expected 'utterance_id<TAB>indices'");
    }
    UnitSequence seq;
    seq.utterance_id = fields[0];
    seq.frame_rate_hz = frame_rate;
    if (!fields[1].empty()) {
      for (const auto& tok : tsv::split(fields[1], ',')) {
        int v = -1;
        auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
          fail(ErrorCode::kParse, where + ": bad unit index '" + tok + "'");
        }
        if (v < 0 || v >= kNumUnits) {
          fail(ErrorCode::kParse, where + ": unit index " + tok +
                                      " outside [0," + std::to_string(kNumUnits) + ")");
        }
        seq.indices.push_back(v);
      }
    }
    if (out.contains(seq.utterance_id)) {
      fail(ErrorCode::kParse, where + ": duplicate utterance_id '" +
                                  seq.utterance_id + "'");
    }
    out.emplace(seq.utterance_id, std::move(seq));
  }
  return out;
}

std::map<std::string, UnitSequence> import_units(const std::filesystem::path& path) {
  return parse_units(binio::read_file(path), path.string());
}

std::string format_units(const std::map<std::string, UnitSequence>& units,
                         int frame_rate_hz) {
  std::string out = "#frame_rate_hz=" + std::to_string(frame_rate_hz) + "\n";
  for (const auto& [id, seq] : units) {
    out += id + "\t";
    for (std::size_t i = 0; i < seq.indices.size(); ++i) {
      if (i) out += ",";
      out += std::to_string(seq.indices[i]);
    }
    out += "\n";
  }
  return out;
}

void write_units(const std::filesystem::path& path,
                 const std::map<std::string, UnitSequence>& units,
                 int frame_rate_hz) {
  binio::write_file(path, format_units(units, frame_rate_hz));
}

}  // namespace nsv
