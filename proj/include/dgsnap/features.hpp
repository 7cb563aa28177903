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

#ifndef DGSNAP_FEATURES_HPP
#define DGSNAP_FEATURES_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dgsnap/error.hpp"
#include "dgsnap/graph_types.hpp"

namespace dgsnap {

inline constexpr double kDefaultEps = 1e-6;

struct FeatureConfig {
  /// Added to every stability denominator.
  double eps = kDefaultEps;
  /// When set, graph stability divides by the summed speed instead of
  /// multiplying by it.
  bool stability_speed_inverse = false;
};

/// Hot-encoded node presence followed by the upper-triangle link presence.
struct CombinedVector {
  std::vector<std::uint8_t> node_vec;
  std::vector<std::uint8_t> link_vec;

  std::size_t size() const noexcept { return node_vec.size() + link_vec.size(); }

  std::vector<double> as_doubles() const {
    std::vector<double> out;
    out.reserve(size());
    for (auto v : node_vec) out.push_back(v);
    for (auto v : link_vec) out.push_back(v);
    return out;
  }

  friend bool operator==(const CombinedVector&, const CombinedVector&) = default;
};

namespace detail {

template <typename NodeRange, typename LinkRange>
CombinedVector encode(const NodeRange& nodes, const LinkRange& links,
                      const NodeUniverse& universe) {
  CombinedVector out;
  out.node_vec.assign(universe.size(), 0);
  out.link_vec.assign(universe.link_slots(), 0);
  for (NodeOrdinal n : nodes) {
    if (n >= universe.size()) {
      throw Error(Errc::OrdinalOutOfRange,
                  "node ordinal " + std::to_string(n) + " outside universe of " +
                      std::to_string(universe.size()));
    }
    out.node_vec[n] = 1;
  }
  for (const LinkKey& l : links) {
    if (l.b >= universe.size()) {
      throw Error(Errc::OrdinalOutOfRange, "link endpoint outside universe");
    }
    out.link_vec[universe.link_index(l)] = 1;
  }
  return out;
}

}  // namespace detail

inline CombinedVector vectorize(const Snapshot& snapshot, const NodeUniverse& universe) {
  return detail::encode(snapshot.node_union(), snapshot.link_union(), universe);
}

inline CombinedVector vectorize(const TimestampedGraph& frame, const NodeUniverse& universe) {
  std::vector<NodeOrdinal> nodes;
  nodes.reserve(frame.nodes().size());
  for (const auto& s : frame.nodes()) nodes.push_back(s.node);
  return detail::encode(nodes, frame.links(), universe);
}

inline double link_distance(Vec2 a, Vec2 b) noexcept {
  return std::hypot(a.x - b.x, a.y - b.y);
}

/// Reciprocal of endpoint speeds plus link distance plus `eps`.
inline double link_stability(double speed_a, double speed_b, double distance,
                             double eps = kDefaultEps) {
  if (!(speed_a >= 0.0) || !(speed_b >= 0.0) || !(distance >= 0.0)) {
    throw Error(Errc::NegativeInput, "speeds and distance must be non-negative");
  }
  if (!(eps > 0.0)) {
    throw Error(Errc::NegativeInput, "eps must be positive");
  }
  return 1.0 / (speed_a + speed_b + distance + eps);
}

/// Distance of `link` in `frame`; both endpoints must be present.
inline double frame_link_distance(const TimestampedGraph& frame, LinkKey link) {
  const NodeState* a = frame.find(link.a);
  const NodeState* b = frame.find(link.b);
  if (!a || !b) throw Error(Errc::NodeAbsent, "link endpoint absent from frame");
  return link_distance(a->position, b->position);
}

namespace detail {

inline double stability_formula(double link_count, double node_count, double speed_sum,
                                double distance_sum, const FeatureConfig& cfg) {
  const double m2 = link_count * link_count;
  if (cfg.stability_speed_inverse) {
    return m2 / (node_count * speed_sum * distance_sum + cfg.eps);
  }
  return (m2 * speed_sum) / (node_count * distance_sum + cfg.eps);
}

}  // namespace detail

/// Graph stability of a snapshot. For multi-frame snapshots each node's speed
/// and each link's distance is first averaged over the frames it occurs in;
/// m and n count distinct links and nodes of the union topology.
inline double graph_stability(const Snapshot& snapshot, const FeatureConfig& cfg = {}) {
  const std::size_t n = snapshot.node_union().size();
  if (n == 0) throw Error(Errc::EmptySnapshot, "snapshot has no nodes");

  std::map<NodeOrdinal, std::pair<double, std::size_t>> speed_acc;
  std::map<LinkKey, double> distance_acc;
  for (const auto& frame : snapshot.frames()) {
    for (const auto& s : frame.nodes()) {
      auto& [sum, cnt] = speed_acc[s.node];
      sum += s.speed;
      ++cnt;
    }
    for (const auto& l : frame.links()) distance_acc[l] += frame_link_distance(frame, l);
  }
  double speed_sum = 0.0;
  for (const auto& [_, acc] : speed_acc) speed_sum += acc.first / static_cast<double>(acc.second);
  double distance_sum = 0.0;
  for (const auto& [link, total] : distance_acc) {
    distance_sum += total / static_cast<double>(snapshot.link_counts().at(link));
  }
  const double m = static_cast<double>(snapshot.link_counts().size());
  return detail::stability_formula(m, static_cast<double>(n), speed_sum, distance_sum, cfg);
}

/// Number of links incident to `node` in the snapshot's `frame_index`-th frame.
inline std::size_t player_degree(const Snapshot& snapshot, NodeOrdinal node,
                                 std::size_t frame_index) {
  if (frame_index >= snapshot.frame_count()) {
    throw Error(Errc::OrdinalOutOfRange, "frame index outside snapshot");
  }
  const auto& frame = snapshot.frames()[frame_index];
  if (!frame.has_node(node)) {
    throw Error(Errc::NodeAbsent,
                "node " + std::to_string(node) + " absent from frame");
  }
  std::size_t degree = 0;
  for (const auto& l : frame.links()) degree += (l.a == node || l.b == node) ? 1 : 0;
  return degree;
}

inline FrameIndicators frame_indicators(const TimestampedGraph& frame,
                                        const FeatureConfig& cfg = {}) {
  FrameIndicators out;
  out.timestamp = frame.timestamp();
  const auto nodes = frame.nodes();
  const auto links = frame.links();
  if (nodes.empty()) return out;

  double speed_sum = 0.0;
  for (const auto& s : nodes) speed_sum += s.speed;
  const double n = static_cast<double>(nodes.size());
  out.avg_node_speed = speed_sum / n;
  out.avg_node_degree = 2.0 * static_cast<double>(links.size()) / n;

  if (!links.empty()) {
    double distance_sum = 0.0;
    double stability_sum = 0.0;
    for (const auto& l : links) {
      const NodeState* a = frame.find(l.a);
      const NodeState* b = frame.find(l.b);
      const double d = link_distance(a->position, b->position);
      distance_sum += d;
      stability_sum += link_stability(a->speed, b->speed, d, cfg.eps);
    }
    const double m = static_cast<double>(links.size());
    out.avg_link_distance = distance_sum / m;
    out.avg_link_stability = stability_sum / m;
    out.graph_stability = detail::stability_formula(m, n, speed_sum, distance_sum, cfg);
  }
  return out;
}

inline SnapshotIndicators snapshot_indicators(const Snapshot& snapshot,
                                              const FeatureConfig& cfg = {}) {
  SnapshotIndicators out;
  out.per_frame.reserve(snapshot.frame_count());
  for (const auto& frame : snapshot.frames()) {
    out.per_frame.push_back(frame_indicators(frame, cfg));
    const auto& f = out.per_frame.back();
    out.avg_node_speed += f.avg_node_speed;
    out.avg_node_degree += f.avg_node_degree;
    out.avg_link_distance += f.avg_link_distance;
    out.avg_link_stability += f.avg_link_stability;
  }
  const double frames = static_cast<double>(snapshot.frame_count());
  out.avg_node_speed /= frames;
  out.avg_node_degree /= frames;
  out.avg_link_distance /= frames;
  out.avg_link_stability /= frames;
  // A snapshot of empty frames has no stability; report 0 like a linkless one.
  if (!snapshot.node_union().empty()) out.graph_stability = graph_stability(snapshot, cfg);
  return out;
}

}  // namespace dgsnap

#endif  // DGSNAP_FEATURES_HPP
