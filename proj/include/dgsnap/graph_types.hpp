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

#ifndef DGSNAP_GRAPH_TYPES_HPP
#define DGSNAP_GRAPH_TYPES_HPP

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dgsnap/error.hpp"

namespace dgsnap {

using NodeOrdinal = std::uint32_t;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

/// Undirected link, stored canonically with `a < b`.
struct LinkKey {
  NodeOrdinal a = 0;
  NodeOrdinal b = 0;

  static LinkKey of(NodeOrdinal u, NodeOrdinal v) {
    if (u == v) {
      throw Error(Errc::InvalidFrame,
                  "self-link on node " + std::to_string(u));
    }
    return u < v ? LinkKey{u, v} : LinkKey{v, u};
  }

  friend auto operator<=>(const LinkKey&, const LinkKey&) = default;
};

/// The fixed, ordered set of nodes a dataset can ever contain. Ordinals are
/// contiguous from 0 and determine the layout of every combined vector.
class NodeUniverse {
 public:
  struct Entry {
    std::string node_id;
    std::string class_label;
    friend bool operator==(const Entry&, const Entry&) = default;
  };

  NodeUniverse() = default;

  explicit NodeUniverse(std::vector<Entry> entries) : entries_(std::move(entries)) {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      auto [it, inserted] =
          index_.emplace(entries_[i].node_id, static_cast<NodeOrdinal>(i));
      if (!inserted) {
        throw Error(Errc::InvalidConfig,
                    "duplicate node id '" + entries_[i].node_id + "'");
      }
    }
  }

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const std::vector<Entry>& entries() const noexcept { return entries_; }
  const Entry& operator[](NodeOrdinal i) const { return entries_.at(i); }

  std::optional<NodeOrdinal> find(std::string_view node_id) const {
    auto it = index_.find(node_id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  /// Number of slots in the upper-triangle link vector, N(N-1)/2.
  std::size_t link_slots() const noexcept {
    const std::size_t n = entries_.size();
    return n < 2 ? 0 : n * (n - 1) / 2;
  }

  /// Position of `link` in the upper-triangle order (0,1),(0,2),...,(N-2,N-1).
  std::size_t link_index(LinkKey link) const noexcept {
    const std::size_t n = entries_.size();
    const std::size_t a = link.a;
    return a * (2 * n - a - 1) / 2 + (link.b - link.a - 1);
  }

  friend bool operator==(const NodeUniverse& l, const NodeUniverse& r) {
    return l.entries_ == r.entries_;
  }

 private:
  std::vector<Entry> entries_;
  std::map<std::string, NodeOrdinal, std::less<>> index_;
};

struct NodeState {
  NodeOrdinal node = 0;
  Vec2 position;
  double speed = 0.0;
  friend bool operator==(const NodeState&, const NodeState&) = default;
};

/// One frame of the dynamic graph. Nodes are kept sorted by ordinal and links
/// sorted canonically; every link endpoint is a present node.
class TimestampedGraph {
 public:
  TimestampedGraph() = default;

  TimestampedGraph(double timestamp, std::vector<NodeState> nodes,
                   std::vector<LinkKey> links = {})
      : timestamp_(timestamp), nodes_(std::move(nodes)), links_(std::move(links)) {
    if (!std::isfinite(timestamp_)) {
      throw Error(Errc::InvalidFrame, "non-finite timestamp");
    }
    std::sort(nodes_.begin(), nodes_.end(),
              [](const NodeState& l, const NodeState& r) { return l.node < r.node; });
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const auto& s = nodes_[i];
      if (i > 0 && nodes_[i - 1].node == s.node) {
        throw Error(Errc::InvalidFrame,
                    "node " + std::to_string(s.node) + " listed twice");
      }
      if (!std::isfinite(s.position.x) || !std::isfinite(s.position.y) ||
          !std::isfinite(s.speed) || s.speed < 0.0) {
        throw Error(Errc::InvalidFrame,
                    "bad position or speed for node " + std::to_string(s.node));
      }
    }
    for (auto& l : links_) {
      l = LinkKey::of(l.a, l.b);
      if (!has_node(l.a) || !has_node(l.b)) {
        throw Error(Errc::InvalidFrame, "link endpoint not present in frame");
      }
    }
    std::sort(links_.begin(), links_.end());
    links_.erase(std::unique(links_.begin(), links_.end()), links_.end());
  }

  double timestamp() const noexcept { return timestamp_; }
  std::span<const NodeState> nodes() const noexcept { return nodes_; }
  std::span<const LinkKey> links() const noexcept { return links_; }

  const NodeState* find(NodeOrdinal node) const noexcept {
    auto it = std::lower_bound(
        nodes_.begin(), nodes_.end(), node,
        [](const NodeState& s, NodeOrdinal n) { return s.node < n; });
    return (it != nodes_.end() && it->node == node) ? &*it : nullptr;
  }
  bool has_node(NodeOrdinal node) const noexcept { return find(node) != nullptr; }
  bool has_link(LinkKey link) const noexcept {
    return std::binary_search(links_.begin(), links_.end(), link);
  }

  TimestampedGraph with_links(std::vector<LinkKey> links) const {
    return TimestampedGraph(timestamp_, nodes_, std::move(links));
  }

  friend bool operator==(const TimestampedGraph&, const TimestampedGraph&) = default;

 private:
  double timestamp_ = 0.0;
  std::vector<NodeState> nodes_;
  std::vector<LinkKey> links_;
};

using FrameSequence = std::vector<TimestampedGraph>;
using FrameSequencePtr = std::shared_ptr<const FrameSequence>;

struct TimeSpan {
  double start = 0.0;
  double end = 0.0;
  friend bool operator==(const TimeSpan&, const TimeSpan&) = default;
};

/// User-defined merge gates. Comparisons are inclusive.
struct ChangeThresholds {
  double node_change_max = 0.0;
  double link_change_max = 0.0;
  double time_gap_max = 0.0;
  std::optional<std::uint32_t> frame_count_max;

  void validate() const {
    for (double v : {node_change_max, link_change_max, time_gap_max}) {
      if (!std::isfinite(v) || v < 0.0) {
        throw Error(Errc::InvalidThresholds,
                    "thresholds must be finite and non-negative");
      }
    }
    if (frame_count_max && *frame_count_max < 1) {
      throw Error(Errc::InvalidThresholds, "frame_count_max must be >= 1");
    }
  }

  friend bool operator==(const ChangeThresholds&, const ChangeThresholds&) = default;
};

struct FrameIndicators {
  double timestamp = 0.0;
  double avg_node_speed = 0.0;
  double avg_node_degree = 0.0;
  double avg_link_distance = 0.0;
  double avg_link_stability = 0.0;
  double graph_stability = 0.0;
  friend bool operator==(const FrameIndicators&, const FrameIndicators&) = default;
};

/// Aggregates shown on the tree overlays. Scalars are means of the per-frame
/// series except `graph_stability`, which is evaluated on the whole snapshot.
struct SnapshotIndicators {
  double avg_node_speed = 0.0;
  double avg_node_degree = 0.0;
  double avg_link_distance = 0.0;
  double avg_link_stability = 0.0;
  double graph_stability = 0.0;
  std::vector<FrameIndicators> per_frame;
  friend bool operator==(const SnapshotIndicators&, const SnapshotIndicators&) = default;
};

/// One or more consecutive frames of a sequence treated as a single static
/// graph: union topology plus per-link occurrence counts.
class Snapshot {
 public:
  Snapshot(std::string id, FrameSequencePtr sequence, std::size_t first,
           std::size_t count)
      : id_(std::move(id)), sequence_(std::move(sequence)), first_(first), count_(count) {
    if (!sequence_ || count_ == 0 || first_ + count_ > sequence_->size()) {
      throw Error(Errc::NonContiguousRun, "snapshot frame range out of bounds");
    }
    std::vector<bool> seen;
    for (const auto& frame : frames()) {
      for (const auto& s : frame.nodes()) {
        if (s.node >= seen.size()) seen.resize(s.node + 1, false);
        seen[s.node] = true;
      }
      for (const auto& l : frame.links()) ++link_counts_[l];
    }
    for (std::size_t i = 0; i < seen.size(); ++i) {
      if (seen[i]) node_union_.push_back(static_cast<NodeOrdinal>(i));
    }
  }

  const std::string& id() const noexcept { return id_; }
  const FrameSequencePtr& sequence() const noexcept { return sequence_; }
  std::size_t first_frame() const noexcept { return first_; }
  std::size_t frame_count() const noexcept { return count_; }
  std::size_t end_frame() const noexcept { return first_ + count_; }

  std::span<const TimestampedGraph> frames() const noexcept {
    return std::span<const TimestampedGraph>(sequence_->data() + first_, count_);
  }

  const std::vector<NodeOrdinal>& node_union() const noexcept { return node_union_; }
  const std::map<LinkKey, std::uint32_t>& link_counts() const noexcept {
    return link_counts_;
  }
  std::vector<LinkKey> link_union() const {
    std::vector<LinkKey> out;
    out.reserve(link_counts_.size());
    for (const auto& [link, _] : link_counts_) out.push_back(link);
    return out;
  }

  TimeSpan time_span() const noexcept {
    return {frames().front().timestamp(), frames().back().timestamp()};
  }

  const SnapshotIndicators& indicators() const noexcept { return indicators_; }

  Snapshot with_id(std::string id) const {
    Snapshot out = *this;
    out.id_ = std::move(id);
    return out;
  }
  Snapshot with_indicators(SnapshotIndicators indicators) const {
    Snapshot out = *this;
    out.indicators_ = std::move(indicators);
    return out;
  }

 private:
  std::string id_;
  FrameSequencePtr sequence_;
  std::size_t first_ = 0;
  std::size_t count_ = 0;
  std::vector<NodeOrdinal> node_union_;
  std::map<LinkKey, std::uint32_t> link_counts_;
  SnapshotIndicators indicators_;
};

inline std::string snapshot_id(std::size_t layer, std::size_t ordinal) {
  return "L" + std::to_string(layer) + "-" + std::to_string(ordinal);
}

}  // namespace dgsnap

#endif  // DGSNAP_GRAPH_TYPES_HPP
