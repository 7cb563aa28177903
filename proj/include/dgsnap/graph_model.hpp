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

#ifndef DGSNAP_GRAPH_MODEL_HPP
#define DGSNAP_GRAPH_MODEL_HPP

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dgsnap/digest.hpp"
#include "dgsnap/error.hpp"
#include "dgsnap/features.hpp"
#include "dgsnap/graph_types.hpp"

namespace dgsnap {

/// Half-open range of parent positions in the layer below.
struct ParentRun {
  std::size_t begin = 0;
  std::size_t end = 0;
  friend bool operator==(const ParentRun&, const ParentRun&) = default;
};

struct Layer {
  std::vector<Snapshot> snapshots;
  /// One entry per snapshot; empty for layer 0.
  std::vector<ParentRun> parents;
  /// Thresholds that produced this layer; empty for layer 0.
  std::optional<ChangeThresholds> params;
  std::string digest;
};

inline std::string layer_digest(const Layer& layer) {
  Sha256 h;
  if (layer.params) {
    const auto& p = *layer.params;
    h.update("params:")
        .update(format_double(p.node_change_max)).update(",")
        .update(format_double(p.link_change_max)).update(",")
        .update(format_double(p.time_gap_max)).update(",")
        .update(p.frame_count_max ? std::to_string(*p.frame_count_max) : "-")
        .update("\n");
  }
  for (std::size_t i = 0; i < layer.snapshots.size(); ++i) {
    const auto& s = layer.snapshots[i];
    h.update(s.id()).update(":")
        .update(std::to_string(s.first_frame())).update("+")
        .update(std::to_string(s.frame_count()));
    if (i < layer.parents.size()) {
      h.update("<").update(std::to_string(layer.parents[i].begin)).update("-")
          .update(std::to_string(layer.parents[i].end));
    }
    h.update("\n");
  }
  return h.finish();
}

/// Stack of layers of increasing time granularity. Copies are cheap: layers
/// are shared and never mutated once built.
class SnapshotTree {
 public:
  SnapshotTree() = default;

  std::size_t layer_count() const noexcept { return layers_.size(); }
  std::size_t top_index() const noexcept { return layers_.size() - 1; }
  const Layer& layer(std::size_t k) const { return *layers_.at(k); }
  const Layer& top() const { return *layers_.back(); }

  const std::optional<ChangeThresholds>& layer_params(std::size_t k) const {
    return layer(k).params;
  }

  /// Child snapshot id to the ids of its parents in the previous layer.
  std::map<std::string, std::vector<std::string>> lineage() const {
    std::map<std::string, std::vector<std::string>> out;
    for (std::size_t k = 1; k < layers_.size(); ++k) {
      const auto& below = layers_[k - 1]->snapshots;
      const auto& here = *layers_[k];
      for (std::size_t i = 0; i < here.snapshots.size(); ++i) {
        auto& ids = out[here.snapshots[i].id()];
        for (std::size_t p = here.parents[i].begin; p < here.parents[i].end; ++p) {
          ids.push_back(below[p].id());
        }
      }
    }
    return out;
  }

  const Snapshot* find(std::string_view id) const {
    for (const auto& l : layers_) {
      for (const auto& s : l->snapshots) {
        if (s.id() == id) return &s;
      }
    }
    return nullptr;
  }

  std::string digest() const {
    Sha256 h;
    for (const auto& l : layers_) h.update(l->digest).update("\n");
    return h.finish();
  }

  SnapshotTree with_layer(Layer layer) const {
    if (layer.digest.empty()) layer.digest = layer_digest(layer);
    SnapshotTree out = *this;
    out.layers_.push_back(std::make_shared<const Layer>(std::move(layer)));
    return out;
  }

  SnapshotTree without_top() const {
    if (layers_.size() < 2) {
      throw Error(Errc::CannotDeleteBase, "layer 0 cannot be deleted");
    }
    SnapshotTree out = *this;
    out.layers_.pop_back();
    return out;
  }

 private:
  std::vector<std::shared_ptr<const Layer>> layers_;
};

/// Wraps each frame in its own snapshot. Frames must be non-empty with
/// non-decreasing timestamps.
inline SnapshotTree build_layer_zero(FrameSequencePtr frames, const FeatureConfig& cfg = {}) {
  if (!frames || frames->empty()) throw Error(Errc::EmptyDataset, "no frames");
  for (std::size_t i = 1; i < frames->size(); ++i) {
    if ((*frames)[i].timestamp() < (*frames)[i - 1].timestamp()) {
      throw Error(Errc::UnorderedTimestamps,
                  "frame " + std::to_string(i) + " precedes frame " + std::to_string(i - 1));
    }
  }
  Layer base;
  base.snapshots.reserve(frames->size());
  for (std::size_t i = 0; i < frames->size(); ++i) {
    Snapshot s(snapshot_id(0, i), frames, i, 1);
    base.snapshots.push_back(s.with_indicators(snapshot_indicators(s, cfg)));
  }
  return SnapshotTree().with_layer(std::move(base));
}

inline SnapshotTree build_layer_zero(FrameSequence frames, const FeatureConfig& cfg = {}) {
  return build_layer_zero(std::make_shared<const FrameSequence>(std::move(frames)), cfg);
}

/// Merges a contiguous run of snapshots into one. The result has an empty id
/// unless `id` is given.
inline Snapshot merge_snapshots(std::span<const Snapshot> run, const FeatureConfig& cfg = {},
                                std::string id = {}) {
  if (run.empty()) throw Error(Errc::NonContiguousRun, "empty run");
  for (std::size_t i = 1; i < run.size(); ++i) {
    if (run[i].sequence() != run[0].sequence() ||
        run[i].first_frame() != run[i - 1].end_frame()) {
      throw Error(Errc::NonContiguousRun,
                  "snapshot '" + run[i].id() + "' does not follow '" + run[i - 1].id() + "'");
    }
  }
  const std::size_t first = run.front().first_frame();
  Snapshot merged(std::move(id), run.front().sequence(), first,
                  run.back().end_frame() - first);
  return merged.with_indicators(snapshot_indicators(merged, cfg));
}

/// Returns a description of the first violated tree invariant, or nothing.
inline std::optional<std::string> find_tree_violation(const SnapshotTree& tree) {
  if (tree.layer_count() == 0) return "tree has no layers";
  const auto& base = tree.layer(0).snapshots;
  if (base.empty()) return "layer 0 empty";
  for (std::size_t i = 0; i < base.size(); ++i) {
    if (base[i].frame_count() != 1) return "layer 0 snapshot wraps more than one frame";
    if (i > 0 && base[i].first_frame() != base[i - 1].end_frame()) {
      return "layer 0 frames not consecutive";
    }
  }
  const std::size_t total = base.back().end_frame() - base.front().first_frame();
  for (std::size_t k = 0; k < tree.layer_count(); ++k) {
    const auto& layer = tree.layer(k);
    std::size_t frames = 0;
    for (std::size_t i = 0; i < layer.snapshots.size(); ++i) {
      const auto& s = layer.snapshots[i];
      frames += s.frame_count();
      if (s.id() != snapshot_id(k, i)) return "unexpected snapshot id " + s.id();
      if (i > 0 && s.first_frame() != layer.snapshots[i - 1].end_frame()) {
        return "layer " + std::to_string(k) + " not contiguous";
      }
      if (s.time_span().start > s.time_span().end) return "inverted time span";
    }
    if (frames != total) return "frame count not conserved at layer " + std::to_string(k);
    if (k == 0) {
      if (!layer.parents.empty()) return "layer 0 has lineage";
      continue;
    }
    const auto& below = tree.layer(k - 1).snapshots;
    if (layer.parents.size() != layer.snapshots.size()) return "lineage size mismatch";
    std::size_t expect = 0;
    for (std::size_t i = 0; i < layer.parents.size(); ++i) {
      const auto& run = layer.parents[i];
      if (run.begin != expect || run.end <= run.begin || run.end > below.size()) {
        return "parents of " + layer.snapshots[i].id() + " not a contiguous run";
      }
      if (below[run.begin].first_frame() != layer.snapshots[i].first_frame() ||
          below[run.end - 1].end_frame() != layer.snapshots[i].end_frame()) {
        return "parents of " + layer.snapshots[i].id() + " do not cover it";
      }
      expect = run.end;
    }
    if (expect != below.size()) return "not every parent has a child";
  }
  return std::nullopt;
}

}  // namespace dgsnap

#endif  // DGSNAP_GRAPH_MODEL_HPP
