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
#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "nsv/ppcodec.hpp"
#include "nsv/random.hpp"
#include "nsv/units.hpp"
#include "test_support.hpp"

namespace nsv {
namespace {

using testing::code_of;

TEST(KMeans, FourPointsTwoClusters) {
  RowMatrix x(4, 2);
  x << 0, 0, 0, 1, 10, 0, 10, 1;
  KMeansOptions opts;
  opts.k = 2;
  opts.seed = 3;
  const auto r = train_kmeans(x, opts);
  RowMatrix c = r.codebook.centroids;
  if (c(0, 0) > c(1, 0)) c.row(0).swap(c.row(1));
  EXPECT_NEAR(c(0, 0), 0.0, 1e-12);
  EXPECT_NEAR(c(0, 1), 0.5, 1e-12);
  EXPECT_NEAR(c(1, 0), 10.0, 1e-12);
  EXPECT_NEAR(c(1, 1), 0.5, 1e-12);
}

TEST(KMeans, TooFewDistinctPoints) {
  Rng rng(1);
  RowMatrix x(50, 3);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  EXPECT_EQ(code_of([&] { train_kmeans(x, {}); }), ErrorCode::kInsufficientData);
  // 200 rows but only 60 distinct.
  RowMatrix y(200, 3);
  for (Eigen::Index i = 0; i < 200; ++i) y.row(i) = x.row(i % 50);
  KMeansOptions opts;
  opts.k = 60;
  EXPECT_EQ(code_of([&] { train_kmeans(y, opts); }), ErrorCode::kInsufficientData);
}

TEST(KMeans, SeparatedGaussiansRecoverLabels) {
  Rng rng(42);
  const Eigen::Index n = 10000;
  RowMatrix x(n, 4);
  std::vector<int> truth(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    truth[i] = static_cast<int>(rng.below(2));
    for (int d = 0; d < 4; ++d) x(i, d) = rng.normal(truth[i] == 0 ? -5.0 : 5.0, 1.0);
  }
  KMeansOptions opts;
  opts.k = 2;
  opts.seed = 11;
  const auto r = train_kmeans(x, opts);
  const auto q = quantize(x, r.codebook);
  int agree = 0;
  for (Eigen::Index i = 0; i < n; ++i) agree += q.indices[i] == truth[i] ? 1 : 0;
  const double accuracy = std::max(agree, static_cast<int>(n) - agree) / static_cast<double>(n);
  EXPECT_GE(accuracy, 0.99);
}

TEST(KMeans, InertiaNonIncreasingAndDeterministic) {
  Rng rng(5);
  RowMatrix x(2000, 8);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  KMeansOptions opts;
  opts.seed = 99;
  const auto a = train_kmeans(x, opts);
  ASSERT_GE(a.inertia_history.size(), 2u);
  for (std::size_t i = 1; i < a.inertia_history.size(); ++i) {
    EXPECT_LE(a.inertia_history[i], a.inertia_history[i - 1] * (1.0 + 1e-12)) << i;
  }
  EXPECT_LE(a.iterations, 300);
  EXPECT_EQ(a.codebook.size(), 100);
  const auto b = train_kmeans(x, opts);
  EXPECT_EQ(a.codebook.centroids, b.codebook.centroids);

  // Self-consistency: each centroid quantizes to itself, centroids distinct.
  const auto q = quantize(a.codebook.centroids, a.codebook);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(q.indices[static_cast<std::size_t>(i)], i);
}

TEST(Quantize, ExactMatchTieBreakAndDimensionCheck) {
  Codebook cb;
  cb.centroids = RowMatrix::Zero(100, 2);
  for (int i = 0; i < 100; ++i) cb.centroids(i, 0) = i;
  RowMatrix f(3, 2);
  f << 37, 0,   // exactly centroid 37
      3.5, 0,   // equidistant from 3 and 4
      -1, 0;
  EXPECT_EQ(quantize(f, cb).indices, (std::vector<int>{37, 3, 0}));

  Codebook two;
  two.centroids = RowMatrix::Zero(6, 1);
  two.centroids(2, 0) = 1.0;
  two.centroids(5, 0) = 3.0;
  for (int i : {0, 1, 3, 4}) two.centroids(i, 0) = 100.0 + i;
  RowMatrix mid(1, 1);
  mid << 2.0;
  EXPECT_EQ(quantize(mid, two).indices, std::vector<int>{2});

  RowMatrix wrong(1, 3);
  wrong.setZero();
  EXPECT_EQ(code_of([&] { quantize(wrong, cb); }), ErrorCode::kInvalidArgument);
}

TEST(UnitsTsv, HeaderAndRow) {
  const auto m = parse_units("#frame_rate_hz=50\nutt1\t3,3,3,9\n");
  ASSERT_EQ(m.size(), 1u);
  const auto& u = m.at("utt1");
  EXPECT_EQ(u.indices, (std::vector<int>{3, 3, 3, 9}));
  EXPECT_EQ(u.frame_rate_hz, 50);
  EXPECT_EQ(u.utterance_id, "utt1");
}

TEST(UnitsTsv, OutOfRangeNamesLine) {
  try {
    parse_units("#frame_rate_hz=50\nutt1\t1,2\nutt2\t3,120,4\n", "units.tsv");
    FAIL() << "expected parse error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
    EXPECT_NE(std::string(e.what()).find("units.tsv:3"), std::string::npos) << e.what();
  }
}

TEST(UnitsTsv, EmptyBodyAndErrors) {
  EXPECT_TRUE(parse_units("#frame_rate_hz=50\n").empty());
  EXPECT_TRUE(parse_units("").empty());
  EXPECT_EQ(code_of([] { parse_units("#frame_rate_hz=50\na\t1\na\t2\n"); }), ErrorCode::kParse);
  EXPECT_EQ(code_of([] { parse_units("a\t1\n"); }), ErrorCode::kParse);
  EXPECT_EQ(code_of([] { parse_units("#frame_rate_hz=50\na\t1,x\n"); }), ErrorCode::kParse);
}

TEST(UnitsTsv, FormatRoundTrip) {
  std::map<std::string, UnitSequence> m;
  m["b"] = {{5, 5, 0, 99}, 100, "b"};
  m["a"] = {{1}, 100, "a"};
  const std::string text = format_units(m, 100);
  EXPECT_EQ(text, "#frame_rate_hz=100\na\t1\nb\t5,5,0,99\n");
  const auto back = parse_units(text);
  EXPECT_EQ(back.at("b").indices, m["b"].indices);
}

// Interchange fixture in the exporter's output format.
TEST(UnitsTsv, ThreeRowFixtureImports) {
  const auto m = import_units(std::filesystem::path(NSV_FIXTURE_DIR) / "units_3.tsv");
  ASSERT_EQ(m.size(), 3u);
  for (const auto& [id, seq] : m) {
    EXPECT_EQ(seq.frame_rate_hz, 50);
    EXPECT_FALSE(seq.indices.empty()) << id;
    for (int v : seq.indices) {
      EXPECT_GE(v, 0);
      EXPECT_LT(v, kNumUnits);
    }
    const auto pp = rle_encode(seq);
    EXPECT_NO_THROW(pp.validate());
    EXPECT_EQ(rle_decode(pp).indices, seq.indices);
  }
  EXPECT_EQ(m.at("clip_b").indices, (std::vector<int>{0, 0, 99, 99, 99, 12, 12, 12, 12, 7}));
}

}  // namespace
}  // namespace nsv
