// Copyright 2026 The dgsnap Authors
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


#include "dgsnap/projection.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "support/generators.hpp"

namespace dgsnap {
namespace {

std::vector<std::vector<double>> Clusters(std::uint64_t seed, int per_cluster, int dim,
                                          std::vector<int>* labels) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<std::vector<double>> out;
  for (int c = 0; c < 3; ++c) {
    for (int i = 0; i < per_cluster; ++i) {
      std::vector<double> p(dim);
      for (int d = 0; d < dim; ++d) p[d] = noise(rng) + (d == c ? 10.0 : 0.0);
      out.push_back(std::move(p));
      if (labels) labels->push_back(c);
    }
  }
  return out;
}

// Fraction of k nearest embedding neighbours sharing the point's label.
double Purity(const std::vector<Vec2>& y, const std::vector<int>& labels, std::size_t k) {
  double agree = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    std::vector<std::pair<double, std::size_t>> d;
    for (std::size_t j = 0; j < y.size(); ++j) {
      if (j != i) d.emplace_back(std::hypot(y[i].x - y[j].x, y[i].y - y[j].y), j);
    }
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
    for (std::size_t m = 0; m < k; ++m) agree += labels[d[m].second] == labels[i];
  }
  return agree / static_cast<double>(y.size() * k);
}

ProjectionConfig Fast() {
  ProjectionConfig cfg;
  cfg.perplexity = 10.0;
  cfg.iterations = 300;
  cfg.exaggeration_iterations = 100;
  cfg.momentum_switch_iteration = 100;
  return cfg;
}

TEST(TsneTest, SeparatesGaussianClusters) {
  std::vector<int> labels;
  const auto data = Clusters(1, 30, 5, &labels);
  const Embedding e = tsne_embed(data, Fast());
  EXPECT_GE(Purity(e.coords, labels, 10), 0.9);
  EXPECT_LE(e.kl_final, e.kl_initial);
  EXPECT_LE(e.kl_final, e.kl_after_exaggeration);
}

TEST(TsneTest, SameSeedIsBitIdentical) {
  const auto data = Clusters(2, 20, 4, nullptr);
  const Embedding a = tsne_embed(data, Fast());
  const Embedding b = tsne_embed(data, Fast());
  ASSERT_EQ(a.coords.size(), b.coords.size());
  for (std::size_t i = 0; i < a.coords.size(); ++i) {
    EXPECT_EQ(a.coords[i].x, b.coords[i].x);
    EXPECT_EQ(a.coords[i].y, b.coords[i].y);
  }
  ProjectionConfig other = Fast();
  other.seed = 7;
  EXPECT_NE(tsne_embed(data, other).coords[0].x, a.coords[0].x);
}

TEST(TsneTest, PermutationEquivariant) {
  const auto data = Clusters(3, 15, 4, nullptr);
  std::vector<std::size_t> perm(data.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(9));
  std::vector<std::vector<double>> shuffled;
  for (auto i : perm) shuffled.push_back(data[i]);
  const Embedding a = tsne_embed(data, Fast());
  const Embedding b = tsne_embed(shuffled, Fast());
  for (std::size_t k = 0; k < perm.size(); ++k) {
    EXPECT_EQ(b.coords[k].x, a.coords[perm[k]].x);
    EXPECT_EQ(b.coords[k].y, a.coords[perm[k]].y);
  }
}

// Neighbourhoods survive across seeds, not just for one lucky start.
TEST(TsneTest, ClusterPurityAcrossSeeds) {
  std::vector<int> labels;
  const auto data = Clusters(11, 25, 6, &labels);
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    ProjectionConfig cfg = Fast();
    cfg.seed = seed;
    EXPECT_GE(Purity(tsne_embed(data, cfg).coords, labels, 10), 0.9) << "seed " << seed;
  }
}

TEST(TsneTest, PerplexityIsClampedForSmallInputs) {
  const std::vector<std::vector<double>> data = {{0}, {1}, {2}, {3}, {4}, {5}, {6}};
  const Embedding e = tsne_embed(data, Fast());
  EXPECT_DOUBLE_EQ(e.effective_perplexity, 2.0);
  for (const auto& p : e.coords) EXPECT_TRUE(std::isfinite(p.x) && std::isfinite(p.y));
}

TEST(TsneTest, DuplicatePointsStayFinite) {
  const std::vector<std::vector<double>> data(10, std::vector<double>{1, 0, 1});
  const Embedding e = tsne_embed(data, Fast());
  for (const auto& p : e.coords) EXPECT_TRUE(std::isfinite(p.x) && std::isfinite(p.y));
}

TEST(TsneTest, Errors) {
  auto code = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::NotFound;
  };
  const std::vector<std::vector<double>> one = {{1.0, 2.0}};
  EXPECT_EQ(code([&] { tsne_embed(one); }), Errc::TooFewPoints);
  const std::vector<std::vector<double>> ragged = {{1.0, 2.0}, {1.0}};
  EXPECT_EQ(code([&] { tsne_embed(ragged); }), Errc::DimensionMismatch);
  ProjectionConfig bad;
  bad.perplexity = 0.5;
  const std::vector<std::vector<double>> two = {{1.0}, {2.0}};
  EXPECT_EQ(code([&] { tsne_embed(two, bad); }), Errc::InvalidConfig);
}

TEST(ProjectTest, KeepsIdsAndTimeRanks) {
  const NodeUniverse u = gen::universe(5);
  gen::Rng rng(6);
  const FrameSequence frames = gen::sequence(rng, 5, 12);
  std::vector<CombinedVector> vecs;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    vecs.push_back(vectorize(frames[i], u));
    ids.push_back("L0-" + std::to_string(i));
  }
  const auto points = project(vecs, ids, Fast());
  ASSERT_EQ(points.size(), 12u);
  for (std::size_t i = 0; i < points.size(); ++i) {
    EXPECT_EQ(points[i].snapshot_id, ids[i]);
    EXPECT_EQ(points[i].time_rank, i);
  }
  const std::vector<std::string> short_ids(3, "x");
  EXPECT_THROW(project(vecs, short_ids, Fast()), Error);
}

}  // namespace
}  // namespace dgsnap
