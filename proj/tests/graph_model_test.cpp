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

#include "dgsnap/graph_model.hpp"

#include <gtest/gtest.h>

#include <memory>
#include <vector>

#include "support/generators.hpp"

namespace dgsnap {
namespace {

constexpr NodeOrdinal A = 0, B = 1, C = 2;

TimestampedGraph Frame(double t, std::vector<NodeOrdinal> nodes, std::vector<LinkKey> links = {}) {
  std::vector<NodeState> states;
  for (auto n : nodes) states.push_back({n, {static_cast<double>(n), 0.0}, 1.0});
  return TimestampedGraph(t, std::move(states), std::move(links));
}

TEST(TimestampedGraphTest, CanonicalisesLinks) {
  TimestampedGraph g = Frame(0.0, {A, B, C}, {{C, A}, {A, B}, {B, A}});
  ASSERT_EQ(g.links().size(), 2u);
  EXPECT_EQ(g.links()[0], (LinkKey{A, B}));
  EXPECT_EQ(g.links()[1], (LinkKey{A, C}));
}

TEST(TimestampedGraphTest, RejectsBrokenFrames) {
  EXPECT_THROW(Frame(0.0, {A, B}, {{A, C}}), Error);  // endpoint absent
  EXPECT_THROW(Frame(0.0, {A}, {{A, A}}), Error);     // self-link
  EXPECT_THROW(TimestampedGraph(0.0, {{A, {0, 0}, -1.0}}), Error);
  EXPECT_THROW(TimestampedGraph(0.0, {{A, {0, 0}, 0.0}, {A, {1, 1}, 0.0}}), Error);
}

TEST(NodeUniverseTest, LinkIndexFollowsUpperTriangleOrder) {
  const NodeUniverse u = gen::universe(4);
  EXPECT_EQ(u.link_slots(), 6u);
  const std::vector<LinkKey> order = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
  for (std::size_t i = 0; i < order.size(); ++i) EXPECT_EQ(u.link_index(order[i]), i);
}

TEST(NodeUniverseTest, RejectsDuplicateIds) {
  EXPECT_THROW(NodeUniverse({{"x", "a"}, {"x", "b"}}), Error);
}

TEST(BuildLayerZeroTest, WrapsEachFrame) {
  const SnapshotTree tree = build_layer_zero(FrameSequence{Frame(0.0, {A}), Frame(0.3, {A}), Frame(0.6, {A})});
  ASSERT_EQ(tree.layer_count(), 1u);
  const auto& base = tree.layer(0).snapshots;
  ASSERT_EQ(base.size(), 3u);
  EXPECT_EQ(base[0].time_span(), (TimeSpan{0.0, 0.0}));
  EXPECT_EQ(base[1].time_span(), (TimeSpan{0.3, 0.3}));
  EXPECT_EQ(base[2].time_span(), (TimeSpan{0.6, 0.6}));
  EXPECT_EQ(base[1].id(), "L0-1");
  EXPECT_TRUE(tree.lineage().empty());
  EXPECT_FALSE(find_tree_violation(tree));
}

TEST(BuildLayerZeroTest, SingleFrame) {
  const SnapshotTree tree = build_layer_zero(FrameSequence{Frame(5.0, {A, B})});
  EXPECT_EQ(tree.layer(0).snapshots.size(), 1u);
}

TEST(BuildLayerZeroTest, Errors) {
  try {
    build_layer_zero(FrameSequence{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EmptyDataset);
  }
  try {
    build_layer_zero(FrameSequence{Frame(0.3, {A}), Frame(0.0, {A})});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::UnorderedTimestamps);
  }
}

TEST(MergeSnapshotsTest, UnionOfTopology) {
  const SnapshotTree tree = build_layer_zero(
      FrameSequence{Frame(0.0, {A, B}, {{A, B}}), Frame(0.3, {A, C}, {{A, C}})});
  const Snapshot m = merge_snapshots(tree.layer(0).snapshots);
  EXPECT_EQ(m.node_union(), (std::vector<NodeOrdinal>{A, B, C}));
  EXPECT_EQ(m.link_union(), (std::vector<LinkKey>{{A, B}, {A, C}}));
  EXPECT_EQ(m.link_counts().at({A, B}), 1u);
  EXPECT_EQ(m.link_counts().at({A, C}), 1u);
  EXPECT_EQ(m.time_span(), (TimeSpan{0.0, 0.3}));
  EXPECT_EQ(m.frame_count(), 2u);
}

TEST(MergeSnapshotsTest, RepeatedLinkIsCounted) {
  const SnapshotTree tree = build_layer_zero(
      FrameSequence{Frame(0.0, {A, B}, {{A, B}}), Frame(0.3, {A, B}, {{A, B}})});
  EXPECT_EQ(merge_snapshots(tree.layer(0).snapshots).link_counts().at({A, B}), 2u);
}

TEST(MergeSnapshotsTest, SingleSnapshotIsIdentity) {
  const SnapshotTree tree = build_layer_zero(FrameSequence{Frame(0.0, {A, B}, {{A, B}})});
  const Snapshot& s = tree.layer(0).snapshots[0];
  const Snapshot m = merge_snapshots(std::span(&s, 1));
  EXPECT_EQ(m.node_union(), s.node_union());
  EXPECT_EQ(m.link_counts(), s.link_counts());
  EXPECT_EQ(m.time_span(), s.time_span());
  EXPECT_EQ(m.indicators(), s.indicators());
}

TEST(MergeSnapshotsTest, RejectsGaps) {
  const SnapshotTree tree =
      build_layer_zero(FrameSequence{Frame(0.0, {A}), Frame(0.3, {A}), Frame(0.6, {A})});
  const auto& base = tree.layer(0).snapshots;
  std::vector<Snapshot> run = {base[0], base[2]};
  try {
    merge_snapshots(run);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NonContiguousRun);
  }
  std::vector<Snapshot> reversed = {base[1], base[0]};
  EXPECT_THROW(merge_snapshots(reversed), Error);
}

TEST(MergeSnapshotsTest, AssociativeOnRandomSequences) {
  gen::Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const SnapshotTree tree = build_layer_zero(gen::sequence(rng, 8, 3));
    const auto& s = tree.layer(0).snapshots;
    const Snapshot all = merge_snapshots(s);
    const Snapshot ab = merge_snapshots(std::span(s).first(2));
    const std::vector<Snapshot> nested = {ab, s[2]};
    const Snapshot again = merge_snapshots(nested);
    EXPECT_EQ(all.node_union(), again.node_union());
    EXPECT_EQ(all.link_counts(), again.link_counts());
    EXPECT_EQ(all.time_span(), again.time_span());
    std::size_t total = 0;
    for (const auto& x : s) total += x.frames()[0].links().size();
    std::size_t counted = 0;
    for (const auto& [_, c] : all.link_counts()) counted += c;
    EXPECT_EQ(counted, total);
  }
}

TEST(SnapshotTreeTest, DeleteBaseIsRefused) {
  const SnapshotTree tree = build_layer_zero(FrameSequence{Frame(0.0, {A})});
  try {
    tree.without_top();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::CannotDeleteBase);
  }
}

}  // namespace
}  // namespace dgsnap
