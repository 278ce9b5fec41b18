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
#include "nsv/eval.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "nsv/binio.hpp"
#include "nsv/error.hpp"
#include "nsv/tsv.hpp"

namespace nsv {
namespace {


void require_finite(const GaussianStats& s, const char* which) {
  if (!s.mean.allFinite() || !s.cov.allFinite()) {
    fail(ErrorCode::kInvalidArgument, std::string("fid: non-finite stats in ") + which);
  }
}

}  // namespace

GaussianStats gaussian_stats(const RowMatrix& features) {
  const auto n = features.rows();
  if (n < 2) {
    fail(ErrorCode::kInsufficientData,
         "gaussian_stats: need at least 2 vectors, got " + std::to_string(n));
  }
  GaussianStats s;
  s.n = static_cast<std::uint64_t>(n);
  s.mean = features.colwise().mean().transpose();
  const Eigen::MatrixXd centered = features.rowwise() - s.mean.transpose();
  const Eigen::MatrixXd c = centered.transpose() * centered / static_cast<double>(n - 1);
  s.cov = 0.5 * (c + c.transpose());
  return s;
}

Eigen::MatrixXd sqrt_psd(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success) fail(ErrorCode::kValidation, "sqrt_psd: eigensolver failed");
  Eigen::VectorXd root = es.eigenvalues();
  for (auto& v : root) v = std::sqrt(std::max(v, 0.0));  // negatives are rounding noise
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

double fid(const GaussianStats& a, const GaussianStats& b) {
  if (a.dim() != b.dim() || a.cov.rows() != a.dim() || b.cov.rows() != b.dim() ||
      a.cov.cols() != a.dim() || b.cov.cols() != b.dim()) {
    fail(ErrorCode::kInvalidArgument, "fid: dimension mismatch (" +
                                          std::to_string(a.dim()) + " vs " +
                                          std::to_string(b.dim()) + ")");
  }
  require_finite(a, "a");
  require_finite(b, "b");

  const Eigen::MatrixXd ra = sqrt_psd(a.cov);
  Eigen::MatrixXd inner = ra * b.cov * ra;
  inner = 0.5 * (inner + inner.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(inner, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) fail(ErrorCode::kValidation, "fid: eigensolver failed");
  double cross = 0.0;
  for (double v : es.eigenvalues()) {
    cross += std::sqrt(std::max(v, 0.0));
  }
  const double mean_term = (a.mean - b.mean).squaredNorm();
  const double value = mean_term + a.cov.trace() + b.cov.trace() - 2.0 * cross;
  return std::max(0.0, value);
}

FeatureSampler pool_sampler(RowMatrix pool) {
  return [pool = std::move(pool)](std::size_t n, Rng& rng) {
    const auto available = static_cast<std::size_t>(pool.rows());
    if (n > available) {
      fail(ErrorCode::kInsufficientData, "sampler: need " + std::to_string(n) +
                                             " features, pool has " +
                                             std::to_string(available));
    }
    std::vector<std::size_t> order(available);
    std::iota(order.begin(), order.end(), std::size_t{0});
    RowMatrix out(static_cast<Eigen::Index>(n), pool.cols());
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = i + rng.below(available - i);
      std::swap(order[i], order[j]);
      out.row(static_cast<Eigen::Index>(i)) = pool.row(static_cast<Eigen::Index>(order[i]));
    }
    return out;
  };
}

RepeatedFid repeated_fid(const FeatureSampler& source, const GaussianStats& reference,
                         std::size_t n_per_eval, int repeats, std::uint64_t seed) {
  require(repeats >= 1, "repeated_fid: repeats must be at least 1");
  require(n_per_eval >= 2, "repeated_fid: n_per_eval must be at least 2");
  RepeatedFid out;
  for (int r = 0; r < repeats; ++r) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    RowMatrix draw = source(n_per_eval, rng);
    if (static_cast<std::size_t>(draw.rows()) < n_per_eval) {
      fail(ErrorCode::kInsufficientData,
           "repeated_fid: need " + std::to_string(n_per_eval) + " features, source gave " +
               std::to_string(draw.rows()));
    }
    const RowMatrix used = draw.topRows(static_cast<Eigen::Index>(n_per_eval));
    out.values.push_back(fid(gaussian_stats(used), reference));
  }
  const double n = static_cast<double>(repeats);
  out.mean = std::accumulate(out.values.begin(), out.values.end(), 0.0) / n;
  if (repeats > 1) {
    double ss = 0.0;
    for (double v : out.values) ss += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(ss / (n - 1.0));
    out.std_defined = true;
  }
  return out;
}

Eigen::VectorXd utterance_feature(const RowMatrix& log_mel) {
  if (log_mel.cols() != kMelBins) {
    fail(ErrorCode::kInvalidArgument,
         "utterance_feature: expected " + std::to_string(kMelBins) + " bands, got " +
             std::to_string(log_mel.cols()));
  }
  require(log_mel.rows() > 0, "utterance_feature: empty mel");
  Eigen::VectorXd out(kUtteranceFeatureDim);
  const Eigen::RowVectorXd mean = log_mel.colwise().mean();
  const Eigen::RowVectorXd var =
      (log_mel.rowwise() - mean).array().square().colwise().mean();
  out.head(kMelBins) = mean.transpose();
  out.tail(kMelBins) = var.array().sqrt().transpose();
  if (!out.allFinite()) fail(ErrorCode::kValidation, "utterance_feature: non-finite value");
  return out;
}

std::string encode_fids(const GaussianStats& stats) {
  const auto d = stats.dim();
  require(stats.cov.rows() == d && stats.cov.cols() == d, "fids: covariance shape");
  binio::Writer w;
  w.bytes("FIDS");
  w.u32(static_cast<std::uint32_t>(d));
  for (Eigen::Index i = 0; i < d; ++i) w.f64(stats.mean(i));
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) w.f64(stats.cov(i, j));
  }
  w.u64(stats.n);
  return w.data();
}

GaussianStats decode_fids(std::string_view bytes, std::string_view context) {
  binio::Reader r(bytes, std::string(context));
  r.expect_magic("FIDS");
  const auto d = static_cast<Eigen::Index>(r.u32());
  const std::size_t need = static_cast<std::size_t>(d) * (1 + static_cast<std::size_t>(d)) * 8 + 8;
  if (r.remaining() != need) {
    fail(ErrorCode::kDecode, std::string(context) + ": payload is " +
                                 std::to_string(r.remaining()) + " bytes, expected " +
                                 std::to_string(need) + " for D=" + std::to_string(d));
  }
  GaussianStats s;
  s.mean.resize(d);
  s.cov.resize(d, d);
  for (Eigen::Index i = 0; i < d; ++i) s.mean(i) = r.f64();
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) s.cov(i, j) = r.f64();
  }
  s.n = r.u64();
  return s;
}

void write_fids(const std::filesystem::path& path, const GaussianStats& stats) {
  binio::write_file(path, encode_fids(stats));
}

GaussianStats read_fids(const std::filesystem::path& path) {
  return decode_fids(binio::read_file(path), path.string());
}

SpeakerProjection project_speakers(const RowMatrix& table,
                                   const std::vector<std::string>& speaker_ids) {
  const auto n = table.rows();
  if (static_cast<std::size_t>(n) != speaker_ids.size()) {
    fail(ErrorCode::kInvalidArgument, "project_speakers: " + std::to_string(n) +
                                          " rows but " + std::to_string(speaker_ids.size()) +
                                          " ids");
  }
  if (n < 3) {
    fail(ErrorCode::kInsufficientData,
         "project_speakers: need at least 3 speakers, got " + std::to_string(n));
  }
  SpeakerProjection out;
  out.points.reserve(static_cast<std::size_t>(n));
  const Eigen::MatrixXd centered = table.rowwise() - table.colwise().mean();
  const double scale = std::max(1.0, table.cwiseAbs().maxCoeff());
  if (centered.cwiseAbs().maxCoeff() <= 1e-12 * scale) {
    out.degenerate = true;
    for (const auto& id : speaker_ids) out.points.push_back({id, 0.0, 0.0});
    return out;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(centered.transpose() * centered);
  if (es.info() != Eigen::Success) {
    fail(ErrorCode::kValidation, "project_speakers: eigensolver failed");
  }
  const auto d = centered.cols();
  Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(d, 2);
  // Eigenvalues are ascending.
  for (int c = 0; c < 2 && c < d; ++c) {
    Eigen::VectorXd v = es.eigenvectors().col(d - 1 - c);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    basis.col(c) = v;
  }
  const Eigen::MatrixXd coords = centered * basis;
  for (Eigen::Index i = 0; i < n; ++i) {
    out.points.push_back({speaker_ids[static_cast<std::size_t>(i)], coords(i, 0), coords(i, 1)});
  }
  return out;
}

double silhouette_score(const RowMatrix& points, const std::vector<int>& labels) {
  const auto n = points.rows();
  require(static_cast<std::size_t>(n) == labels.size(), "silhouette: label count mismatch");
  std::vector<int> distinct(labels.begin(), labels.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 2) {
    fail(ErrorCode::kInsufficientData, "silhouette: need at least 2 clusters");
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<double> sum(distinct.size(), 0.0);
    std::vector<int> count(distinct.size(), 0);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const auto c = static_cast<std::size_t>(
          std::lower_bound(distinct.begin(), distinct.end(), labels[j]) - distinct.begin());
      sum[c] += (points.row(i) - points.row(j)).norm();
      ++count[c];
    }
    const auto own = static_cast<std::size_t>(
        std::lower_bound(distinct.begin(), distinct.end(), labels[i]) - distinct.begin());
    if (count[own] == 0) continue;
    const double a = sum[own] / count[own];
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < distinct.size(); ++c) {
      if (c != own && count[c] > 0) b = std::min(b, sum[c] / count[c]);
    }
    const double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / static_cast<double>(n);
}

std::string format_projection(const SpeakerProjection& projection) {
  std::string out = "speaker_id\tx\ty\n";
  for (const auto& p : projection.points) {
    out += tsv::join({p.speaker_id, tsv::format_double(p.x), tsv::format_double(p.y)});
    out += '\n';
  }
  return out;
}

SpeakerProjection parse_projection(std::string_view text, std::string_view context) {
  SpeakerProjection out;
  std::size_t line_no = 0;
  for (const auto& line : tsv::lines(text)) {
    ++line_no;
    if (line.empty() || (line_no == 1 && line == "speaker_id\tx\ty")) continue;
    const auto f = tsv::split(line);
    if (f.size() != 3) {
      fail(ErrorCode::kParse, std::string(context) + ":" + std::to_string(line_no) +
                                  ": expected 3 columns, got " + std::to_string(f.size()));
    }
    try {
      out.points.push_back({f[0], std::stod(f[1]), std::stod(f[2])});
    } catch (const std::logic_error&) {
      fail(ErrorCode::kParse,
           std::string(context) + ":" + std::to_string(line_no) + ": bad coordinate");
    }
  }
  return out;
}

void write_projection(const std::filesystem::path& path,
                      const SpeakerProjection& projection) {
  binio::write_file(path, format_projection(projection));
}

}  // namespace nsv
