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

#ifndef DGSNAP_VIEWS_HPP
#define DGSNAP_VIEWS_HPP

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dgsnap/error.hpp"
#include "dgsnap/features.hpp"
#include "dgsnap/graph_model.hpp"
#include "dgsnap/ingest.hpp"

// Aggregates behind the coordinated views: link-count matrix, score timeline
// and per-snapshot detail series.

namespace dgsnap {

struct MatrixAggregate {
  std::size_t from = 0;
  std::size_t to = 0;
  std::vector<NodeUniverse::Entry> nodes;
  /// Symmetric N x N link occurrence counts; zero diagonal.
  std::vector<std::vector<std::uint64_t>> counts;
};

/// Link occurrence counts over frames `from..to` inclusive.
inline MatrixAggregate matrix_aggregate(const NodeUniverse& universe, const FrameSequence& frames,
                                        std::size_t from, std::size_t to) {
  if (from > to || to >= frames.size()) {
    throw Error(Errc::RangeInvalid, "frame range [" + std::to_string(from) + ", " +
                                        std::to_string(to) + "] outside dataset of " +
                                        std::to_string(frames.size()));
  }
  MatrixAggregate out;
  out.from = from;
  out.to = to;
  out.nodes = universe.entries();
  out.counts.assign(universe.size(), std::vector<std::uint64_t>(universe.size(), 0));
  for (std::size_t f = from; f <= to; ++f) {
    for (const auto& l : frames[f].links()) {
      ++out.counts[l.a][l.b];
      ++out.counts[l.b][l.a];
    }
  }
  return out;
}

struct ScorePoint {
  double timestamp = 0.0;
  std::int64_t margin = 0;  // score_a - score_b
};

inline std::vector<ScorePoint> score_timeline(std::span<const EventRecord> events) {
  std::vector<ScorePoint> out;
  out.reserve(events.size());
  for (const auto& e : events) out.push_back({e.timestamp, e.score_a - e.score_b});
  return out;
}

struct TrajectorySegment {
  NodeOrdinal node = 0;
  double t0 = 0.0;
  double t1 = 0.0;
  Vec2 from;
  Vec2 to;
  /// Mean of the endpoint speeds; drives the path width.
  double speed = 0.0;
};

/// Per-frame series aligned with the snapshot's frames; empty where the
/// entity is absent.
struct NodeSeries {
  NodeOrdinal node = 0;
  std::vector<std::optional<double>> speed;
  std::vector<std::optional<std::size_t>> degree;
};

struct LinkSeries {
  LinkKey link;
  std::uint32_t count = 0;
  std::vector<std::optional<double>> distance;
};

struct SnapshotDetail {
  std::vector<double> timestamps;
  std::vector<TrajectorySegment> trajectories;
  std::vector<NodeSeries> nodes;
  std::vector<LinkSeries> links;
};

inline SnapshotDetail snapshot_detail(const Snapshot& snapshot) {
  SnapshotDetail out;
  const auto frames = snapshot.frames();
  for (const auto& f : frames) out.timestamps.push_back(f.timestamp());

  for (NodeOrdinal node : snapshot.node_union()) {
    NodeSeries series{node, {}, {}};
    for (std::size_t i = 0; i < frames.size(); ++i) {
      const NodeState* s = frames[i].find(node);
      if (!s) {
        series.speed.emplace_back();
        series.degree.emplace_back();
        continue;
      }
      series.speed.emplace_back(s->speed);
      series.degree.emplace_back(player_degree(snapshot, node, i));
      if (i > 0) {
        if (const NodeState* prev = frames[i - 1].find(node)) {
          out.trajectories.push_back({node, frames[i - 1].timestamp(), frames[i].timestamp(),
                                      prev->position, s->position,
                                      0.5 * (prev->speed + s->speed)});
        }
      }
    }
    out.nodes.push_back(std::move(series));
  }

  for (const auto& [link, count] : snapshot.link_counts()) {
    LinkSeries series{link, count, {}};
    for (const auto& f : frames) {
      if (f.has_link(link)) {
        series.distance.emplace_back(frame_link_distance(f, link));
      } else {
        series.distance.emplace_back();
      }
    }
    out.links.push_back(std::move(series));
  }
  return out;
}

/// Layer-0 tree over frames `from..to` inclusive of a dataset.
inline SnapshotTree selection_tree(const FrameSequence& frames, std::size_t from, std::size_t to,
                                   const FeatureConfig& cfg) {
  if (from > to || to >= frames.size()) {
    throw Error(Errc::RangeInvalid, "selection outside dataset");
  }
  auto sub = std::make_shared<const FrameSequence>(frames.begin() + static_cast<std::ptrdiff_t>(from),
                                                   frames.begin() + static_cast<std::ptrdiff_t>(to) + 1);
  return build_layer_zero(std::move(sub), cfg);
}

}  // namespace dgsnap

#endif  // DGSNAP_VIEWS_HPP
