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


#include "dgsnap/snapshot_engine.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <thread>
#include <vector>

#include "support/generators.hpp"
#include "support/reference.hpp"

namespace dgsnap {
namespace {

constexpr NodeOrdinal A = 0, B = 1, C = 2, D = 3;

TimestampedGraph Frame(double t, std::vector<NodeOrdinal> nodes, std::vector<LinkKey> links = {}) {
  std::vector<NodeState> states;
  for (auto n : nodes) states.push_back({n, {static_cast<double>(n), 0.0}, 1.0});
  return TimestampedGraph(t, std::move(states), std::move(links));
}

ChangeThresholds Th(double node, double link, double gap, std::optional<std::uint32_t> count = {}) {
  return {node, link, gap, count};
}

std::vector<std::size_t> Sizes(const Layer& layer) {
  std::vector<std::size_t> out;
  for (const auto& p : layer.parents) out.push_back(p.end - p.begin);
  return out;
}

TEST(ChangeDegreesTest, NodeChangeCountsSymmetricDifference) {
  const NodeUniverse u = gen::universe(4);
  // {A,B} -> {B,C}: two positions differ, normalised by |s1| = 2
  const SnapshotTree t = build_layer_zero(FrameSequence{Frame(0.0, {A, B}), Frame(0.3, {B, C})});
  const ChangeDegrees d = change_degrees(t.layer(0).snapshots[0], t.layer(0).snapshots[1], u);
  EXPECT_DOUBLE_EQ(d.node_change, 1.0);
  EXPECT_DOUBLE_EQ(d.link_change, 0.0);
  EXPECT_NEAR(d.time_gap, 0.3, 1e-12);
}

TEST(ChangeDegreesTest, ThreeNodeBase) {
  const NodeUniverse u = gen::universe(4);
  const SnapshotTree t = build_layer_zero(
      FrameSequence{Frame(0.0, {A, B, C}, {{A, B}}), Frame(1.0, {A, B, C, D}, {{A, B}, {C, D}})});
  const ChangeDegrees d = change_degrees(t.layer(0).snapshots[0], t.layer(0).snapshots[1], u);
  EXPECT_DOUBLE_EQ(d.node_change, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(d.link_change, 1.0);
  EXPECT_DOUBLE_EQ(d.time_gap, 1.0);
}

TEST(ChangeDegreesTest, EmptyFirstSnapshotFloorsDenominator) {
  const NodeUniverse u = gen::universe(4);
  const SnapshotTree t = build_layer_zero(FrameSequence{Frame(0.0, {}), Frame(0.3, {A, B}, {{A, B}})});
  const ChangeDegrees d = change_degrees(t.layer(0).snapshots[0], t.layer(0).snapshots[1], u);
  EXPECT_DOUBLE_EQ(d.node_change, 2.0);
  EXPECT_DOUBLE_EQ(d.link_change, 1.0);
}

TEST(ChangeDegreesTest, UniverseMismatch) {
  const NodeUniverse u = gen::universe(2);
  const SnapshotTree t = build_layer_zero(FrameSequence{Frame(0.0, {A}), Frame(0.3, {D})});
  try {
    change_degrees(t.layer(0).snapshots[0], t.layer(0).snapshots[1], u);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::UniverseMismatch);
  }
}

TEST(MergeConditionTest, GatesAreInclusive) {
  const ChangeDegrees d{0.5, 0.25, 0.3};
  EXPECT_TRUE(merge_condition(d, Th(0.5, 0.25, 0.3), 2));
  EXPECT_FALSE(merge_condition(d, Th(0.49, 0.25, 0.3), 2));
  EXPECT_FALSE(merge_condition(d, Th(0.5, 0.24, 0.3), 2));
  EXPECT_FALSE(merge_condition(d, Th(0.5, 0.25, 0.29), 2));
  EXPECT_TRUE(merge_condition(d, Th(0.5, 0.25, 0.3, 2), 2));
  EXPECT_FALSE(merge_condition(d, Th(0.5, 0.25, 0.3, 2), 3));
  EXPECT_TRUE(merge_condition({}, Th(0, 0, 0), 1000));
}

TEST(ThresholdsTest, Validation) {
  for (const auto& th : {Th(-0.1, 0, 0), Th(0, -1, 0), Th(0, 0, -1), Th(0, 0, 0, 0u),
                         Th(std::nan(""), 0, 0)}) {
    try {
      th.validate();
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::InvalidThresholds);
    }
  }
}

class GenerateLayerTest : public ::testing::Test {
 protected:
  // G G H H: two identical pairs separated by a complete change. Quarter
  // second spacing keeps every gap exact in binary floating point.
  SnapshotTree tree = build_layer_zero(FrameSequence{
      Frame(0.0, {A, B}, {{A, B}}), Frame(0.25, {A, B}, {{A, B}}),
      Frame(0.5, {C, D}, {{C, D}}), Frame(0.75, {C, D}, {{C, D}})});
  NodeUniverse u = gen::universe(4);
};

TEST_F(GenerateLayerTest, SplitsAtTopologyChange) {
  const Layer l = generate_layer(tree.layer(0).snapshots, Th(0.5, 0.5, 0.25), u, 1);
  EXPECT_EQ(Sizes(l), (std::vector<std::size_t>{2, 2}));
  EXPECT_EQ(l.snapshots[0].id(), "L1-0");
  EXPECT_EQ(l.snapshots[1].time_span(), (TimeSpan{0.5, 0.75}));
}

TEST_F(GenerateLayerTest, PermissiveThresholdsMergeEverything) {
  const Layer l = generate_layer(tree.layer(0).snapshots, Th(10, 10, 10), u, 1);
  EXPECT_EQ(Sizes(l), (std::vector<std::size_t>{4}));
}

TEST_F(GenerateLayerTest, ZeroThresholdsKeepEverySnapshot) {
  const Layer l = generate_layer(tree.layer(0).snapshots, Th(0, 0, 0), u, 1);
  EXPECT_EQ(l.snapshots.size(), 4u);
}

TEST_F(GenerateLayerTest, FrameCountCap) {
  const Layer l = generate_layer(tree.layer(0).snapshots, Th(10, 10, 10, 3u), u, 1);
  EXPECT_EQ(Sizes(l), (std::vector<std::size_t>{3, 1}));
}

TEST_F(GenerateLayerTest, BoundaryEqualityMerges) {
  // gap between frames is exactly 0.3 in floating point for 0.0 -> 0.3
  const SnapshotTree t = build_layer_zero(FrameSequence{Frame(0.0, {A}), Frame(0.3, {A})});
  EXPECT_EQ(generate_layer(t.layer(0).snapshots, Th(0, 0, 0.3), u, 1).snapshots.size(), 1u);
  EXPECT_EQ(generate_layer(t.layer(0).snapshots, Th(0, 0, 0.2999), u, 1).snapshots.size(), 2u);
}

// Gates compare exactly: 0.9 - 0.6 rounds above 0.3, so a 0.3 gate splits.
TEST_F(GenerateLayerTest, GapComparisonIsExact) {
  const SnapshotTree t = build_layer_zero(FrameSequence{Frame(0.6, {A}), Frame(0.9, {A})});
  EXPECT_GT(0.9 - 0.6, 0.3);
  EXPECT_EQ(generate_layer(t.layer(0).snapshots, Th(0, 0, 0.3), u, 1).snapshots.size(), 2u);
  EXPECT_EQ(generate_layer(t.layer(0).snapshots, Th(0, 0, 0.3 + 1e-9), u, 1).snapshots.size(), 1u);
}

TEST_F(GenerateLayerTest, SingleSnapshotLayer) {
  const SnapshotTree t = build_layer_zero(FrameSequence{Frame(0.0, {A})});
  const Layer l = generate_layer(t.layer(0).snapshots, Th(1, 1, 1), u, 1);
  ASSERT_EQ(l.snapshots.size(), 1u);
  EXPECT_EQ(l.parents[0].end, 1u);
}

TEST_F(GenerateLayerTest, EmptyLayerAndBadThresholds) {
  EXPECT_THROW(generate_layer({}, Th(1, 1, 1), u, 1), Error);
  EXPECT_THROW(generate_layer(tree.layer(0).snapshots, Th(-1, 1, 1), u, 1), Error);
}

TEST_F(GenerateLayerTest, ComparesAgainstAccumulatedSnapshot) {
  // A, AB, B: against the accumulated {A,B} the third frame changes nothing
  // new, but B alone vs AB would differ by one node out of two.
  const SnapshotTree t = build_layer_zero(
      FrameSequence{Frame(0.0, {A}), Frame(0.3, {A, B}), Frame(0.6, {B})});
  const Layer l = generate_layer(t.layer(0).snapshots, Th(1.0, 0, 1), u, 1);
  EXPECT_EQ(Sizes(l), (std::vector<std::size_t>{3}));
  const Layer strict = generate_layer(t.layer(0).snapshots, Th(0.5, 0, 1), u, 1);
  // A -> AB is one new node over |{A}| = 1 -> 1.0 > 0.5
  EXPECT_EQ(Sizes(strict), (std::vector<std::size_t>{1, 2}));
}

// Greedy pass agrees with the from-scratch reference on random data, at
// every level of a randomly built tree.
TEST(GenerateLayerOracleTest, MatchesReference) {
  gen::Rng rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = gen::pick(rng, 2, 10);
    const NodeUniverse u = gen::universe(n);
    SnapshotTree tree = build_layer_zero(gen::sequence(rng, n, static_cast<std::size_t>(gen::pick(rng, 1, 40))));
    for (int level = 0; level < 3; ++level) {
      const auto& layer = tree.top().snapshots;
      std::vector<ref::Group> groups;
      for (const auto& s : layer) groups.push_back(gen::to_ref(s));
      const ChangeThresholds th = gen::thresholds(rng);
      const Layer next = generate_layer(layer, th, u, tree.layer_count());
      ASSERT_EQ(Sizes(next), ref::segment(groups, gen::to_ref(th), n)) << "trial " << trial;
      tree = tree.with_layer(next);
    }
    EXPECT_FALSE(find_tree_violation(tree));
  }
}

TEST(GenerateLayerOracleTest, ChangeDegreesMatchReference) {
  gen::Rng rng(77);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = gen::pick(rng, 2, 10);
    const NodeUniverse u = gen::universe(n);
    const SnapshotTree t = build_layer_zero(gen::sequence(rng, n, 6));
    const auto& s = t.layer(0).snapshots;
    const Snapshot s1 = merge_snapshots(std::span(s).first(3));
    const Snapshot s2 = merge_snapshots(std::span(s).subspan(3));
    const ChangeDegrees d = change_degrees(s1, s2, u);
    const ref::Degrees r = ref::change(gen::to_ref(s1), gen::to_ref(s2), n);
    EXPECT_NEAR(d.node_change, r.node, 1e-9);
    EXPECT_NEAR(d.link_change, r.link, 1e-9);
    EXPECT_NEAR(d.time_gap, r.gap, 1e-9);
  }
}

// With only the time-gap and frame-count gates active, feasibility of a run
// is inherited by its sub-runs, so the greedy pass is optimal and looser
// gates can never produce more snapshots.
TEST(GenerateLayerPropertyTest, LooserTimeAndCountGatesNeverAddSnapshots) {
  gen::Rng rng(5150);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 8;
    const NodeUniverse u = gen::universe(n);
    SnapshotTree t = build_layer_zero(gen::sequence(rng, n, static_cast<std::size_t>(gen::pick(rng, 1, 100))));
    if (gen::pick(rng, 0, 1)) t = t.with_layer(generate_layer(t.top().snapshots, gen::thresholds(rng), u, 1));
    const auto& layer = t.top().snapshots;
    ChangeThresholds tight = gen::thresholds(rng);
    tight.node_change_max = tight.link_change_max = 1e9;
    ChangeThresholds loose = tight;
    loose.time_gap_max += gen::pick(rng, 0, 1) ? gen::uniform(rng, 0, 2) : 0.0;
    if (tight.frame_count_max && gen::pick(rng, 0, 1)) {
      loose.frame_count_max = *tight.frame_count_max + static_cast<std::uint32_t>(gen::pick(rng, 0, 5));
    } else if (gen::pick(rng, 0, 1)) {
      loose.frame_count_max.reset();
    }
    const std::size_t tight_count = generate_layer(layer, tight, u, 9).snapshots.size();
    EXPECT_LE(generate_layer(layer, loose, u, 9).snapshots.size(), tight_count);
    EXPECT_LE(tight_count, layer.size());
  }
}

// The change gates compare against the accumulated union, which a looser gate
// lets grow; a later small frame can then exceed the ratio. Pinned so the
// behaviour is a deliberate, visible property of the greedy pass.
TEST(GenerateLayerPropertyTest, LooserChangeGateCanAddSnapshots) {
  const NodeUniverse u = gen::universe(4);
  const SnapshotTree t = build_layer_zero(FrameSequence{
      Frame(0.0, {A, B, C}), Frame(0.3, {B, C, D}), Frame(0.6, {A, B}), Frame(0.9, {A}),
      Frame(1.2, {B}), Frame(1.5, {A, B, C})});
  EXPECT_EQ(generate_layer(t.layer(0).snapshots, Th(0.5, 1, 1), u, 1).snapshots.size(), 3u);
  EXPECT_EQ(generate_layer(t.layer(0).snapshots, Th(2.0 / 3.0, 1, 1), u, 1).snapshots.size(), 4u);
}

TEST(GenerateLayerPropertyTest, UnboundedGatesGiveOneSnapshot) {
  gen::Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const SnapshotTree t = build_layer_zero(gen::sequence(rng, 6, 40));
    EXPECT_EQ(generate_layer(t.layer(0).snapshots, Th(1e9, 1e9, 1e9), gen::universe(6), 1).snapshots.size(), 1u);
  }
}

TEST(GenerateLayerPropertyTest, Deterministic) {
  gen::Rng rng(8);
  const NodeUniverse u = gen::universe(10);
  const SnapshotTree t = build_layer_zero(gen::sequence(rng, 10, 50));
  const ChangeThresholds th = Th(0.5, 0.5, 1.0);
  EXPECT_EQ(generate_layer(t.layer(0).snapshots, th, u, 1).digest,
            generate_layer(t.layer(0).snapshots, th, u, 1).digest);
}

class SessionTest : public ::testing::Test {
 protected:
  SessionTest() {
    gen::Rng rng(31);
    base = build_layer_zero(gen::sequence(rng, 6, 30));
  }
  NodeUniverse u = gen::universe(6);
  SnapshotTree base;
};

TEST_F(SessionTest, GenerateDeleteRegenerate) {
  GenerationSession s(base, u);
  EXPECT_EQ(s.generate(0, Th(1, 1, 1)), 1u);
  EXPECT_EQ(s.generate(1, Th(2, 2, 2)), 2u);
  const std::string two = s.digest();
  s.delete_top();
  EXPECT_EQ(s.tree().layer_count(), 2u);
  EXPECT_EQ(s.regenerate_top(Th(0.5, 0.5, 0.5)), 1u);
  EXPECT_EQ(s.tree().layer_count(), 2u);
  EXPECT_EQ(s.history().size(), 4u);
  EXPECT_FALSE(find_tree_violation(s.tree()));
  EXPECT_NE(s.digest(), two);
}

TEST_F(SessionTest, Errors) {
  GenerationSession s(base, u);
  try {
    s.delete_top();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::CannotDeleteBase);
  }
  EXPECT_THROW(s.regenerate_top(Th(1, 1, 1)), Error);
  s.generate(0, Th(1, 1, 1));
  try {
    s.generate(0, Th(1, 1, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::LayerNotTop);
  }
  const std::string before = s.digest();
  EXPECT_THROW(s.regenerate_top(Th(-1, 1, 1)), Error);
  EXPECT_EQ(s.digest(), before);
  EXPECT_EQ(s.history().size(), 1u);
}

TEST_F(SessionTest, ReplayReproducesDigests) {
  GenerationSession s(base, u);
  s.generate(0, Th(0.5, 0.5, 0.6));
  s.generate(1, Th(1, 1, 2));
  s.delete_top();
  s.regenerate_top(Th(0.2, 0.2, 0.3, 4u));
  s.generate(1, Th(3, 3, 3));
  GenerationSession again(base, u);
  const auto history = s.history();
  again.replay(history);
  EXPECT_EQ(again.digest(), s.digest());
  EXPECT_EQ(again.history(), history);

  auto tampered = history;
  tampered.back().digest = "00";
  GenerationSession third(base, u);
  try {
    third.replay(tampered);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ReplayMismatch);
  }
}

TEST_F(SessionTest, ConcurrentReadersSeeConsistentTrees) {
  GenerationSession s(base, u);
  std::atomic<bool> stop = false;
  std::atomic<int> bad = 0;
  std::thread reader([&] {
    while (!stop) {
      if (find_tree_violation(s.tree())) ++bad;
    }
  });
  for (int i = 0; i < 50; ++i) {
    s.generate(s.tree().top_index(), Th(0.3, 0.3, 0.6));
    s.delete_top();
  }
  stop = true;
  reader.join();
  EXPECT_EQ(bad, 0);
}

TEST_F(SessionTest, LayersAreSharedNotCopied) {
  GenerationSession s(base, u);
  s.generate(0, Th(1, 1, 1));
  const SnapshotTree t1 = s.tree();
  s.generate(1, Th(1, 1, 1));
  const SnapshotTree t2 = s.tree();
  EXPECT_EQ(&t1.layer(1), &t2.layer(1));
  EXPECT_EQ(&t1.layer(0), &base.layer(0));
}

}  // namespace
}  // namespace dgsnap
