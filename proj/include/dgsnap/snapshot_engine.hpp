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

#ifndef DGSNAP_SNAPSHOT_ENGINE_HPP
#define DGSNAP_SNAPSHOT_ENGINE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "dgsnap/error.hpp"
#include "dgsnap/features.hpp"
#include "dgsnap/graph_model.hpp"
#include "dgsnap/graph_types.hpp"

namespace dgsnap {

/// Normalised edit distances between two snapshots plus the time between them.
struct ChangeDegrees {
  double node_change = 0.0;
  double link_change = 0.0;
  double time_gap = 0.0;
  friend bool operator==(const ChangeDegrees&, const ChangeDegrees&) = default;
};

namespace detail {

inline std::size_t l1_distance(std::span<const std::uint8_t> a,
                               std::span<const std::uint8_t> b) noexcept {
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i] ? 1 : 0;
  return d;
}

inline ChangeDegrees degrees_from_vectors(const CombinedVector& from, std::size_t from_nodes,
                                          std::size_t from_links, double from_end,
                                          const CombinedVector& to, double to_start) {
  ChangeDegrees d;
  d.node_change = static_cast<double>(l1_distance(to.node_vec, from.node_vec)) /
                  static_cast<double>(std::max<std::size_t>(from_nodes, 1));
  d.link_change = static_cast<double>(l1_distance(to.link_vec, from.link_vec)) /
                  static_cast<double>(std::max<std::size_t>(from_links, 1));
  d.time_gap = std::abs(to_start - from_end);
  return d;
}

}  // namespace detail

/// Change from `s1` to the following snapshot `s2`. Edit distances are
/// normalised by the size of `s1`, floored at one.
inline ChangeDegrees change_degrees(const Snapshot& s1, const Snapshot& s2,
                                    const NodeUniverse& universe) {
  CombinedVector v1, v2;
  try {
    v1 = vectorize(s1, universe);
    v2 = vectorize(s2, universe);
  } catch (const Error& e) {
    if (e.code() != Errc::OrdinalOutOfRange) throw;
    throw Error(Errc::UniverseMismatch, e.detail());
  }
  return detail::degrees_from_vectors(v1, s1.node_union().size(), s1.link_counts().size(),
                                      s1.time_span().end, v2, s2.time_span().start);
}

/// Inclusive gate check. `merged_count` is the frame count the merged
/// snapshot would have.
inline bool merge_condition(const ChangeDegrees& d, const ChangeThresholds& th,
                            std::size_t merged_count) noexcept {
  return d.node_change <= th.node_change_max && d.link_change <= th.link_change_max &&
         d.time_gap <= th.time_gap_max &&
         (!th.frame_count_max || merged_count <= *th.frame_count_max);
}

/// One greedy left-to-right merge pass over `layer`. The accumulated snapshot
/// is compared against each next snapshot; the result is the next layer with
/// ids for position `layer_index` and its parent runs.
inline Layer generate_layer(std::span<const Snapshot> layer, const ChangeThresholds& th,
                            const NodeUniverse& universe, std::size_t layer_index,
                            const FeatureConfig& cfg = {}) {
  th.validate();
  if (layer.empty()) throw Error(Errc::EmptySnapshot, "cannot generate from an empty layer");

  std::vector<CombinedVector> vectors;
  vectors.reserve(layer.size());
  for (const auto& s : layer) {
    try {
      vectors.push_back(vectorize(s, universe));
    } catch (const Error& e) {
      if (e.code() != Errc::OrdinalOutOfRange) throw;
      throw Error(Errc::UniverseMismatch, e.detail());
    }
  }

  Layer out;
  out.params = th;

  struct Accumulator {
    std::size_t begin = 0;
    CombinedVector vec;
    std::size_t nodes = 0;
    std::size_t links = 0;
    std::size_t frames = 0;
    double end_time = 0.0;
  };
  auto start_at = [&](std::size_t i) {
    return Accumulator{i,
                       vectors[i],
                       layer[i].node_union().size(),
                       layer[i].link_counts().size(),
                       layer[i].frame_count(),
                       layer[i].time_span().end};
  };
  auto emit = [&](std::size_t begin, std::size_t end) {
    out.snapshots.push_back(merge_snapshots(layer.subspan(begin, end - begin), cfg,
                                            snapshot_id(layer_index, out.snapshots.size())));
    out.parents.push_back({begin, end});
  };

  Accumulator acc = start_at(0);
  for (std::size_t i = 1; i < layer.size(); ++i) {
    const ChangeDegrees d = detail::degrees_from_vectors(
        acc.vec, acc.nodes, acc.links, acc.end_time, vectors[i], layer[i].time_span().start);
    if (merge_condition(d, th, acc.frames + layer[i].frame_count())) {
      for (std::size_t k = 0; k < acc.vec.node_vec.size(); ++k) {
        if (vectors[i].node_vec[k] && !acc.vec.node_vec[k]) {
          acc.vec.node_vec[k] = 1;
          ++acc.nodes;
        }
      }
      for (std::size_t k = 0; k < acc.vec.link_vec.size(); ++k) {
        if (vectors[i].link_vec[k] && !acc.vec.link_vec[k]) {
          acc.vec.link_vec[k] = 1;
          ++acc.links;
        }
      }
      acc.frames += layer[i].frame_count();
      acc.end_time = layer[i].time_span().end;
    } else {
      emit(acc.begin, i);
      acc = start_at(i);
    }
  }
  emit(acc.begin, layer.size());
  out.digest = layer_digest(out);
  return out;
}

struct HistoryEntry {
  enum class Op { Generate, DeleteTop, RegenerateTop };
  Op op = Op::Generate;
  std::optional<std::size_t> from_layer;
  std::optional<ChangeThresholds> thresholds;
  /// Tree digest after the operation.
  std::string digest;
  friend bool operator==(const HistoryEntry&, const HistoryEntry&) = default;
};

inline std::string_view to_string(HistoryEntry::Op op) noexcept {
  switch (op) {
    case HistoryEntry::Op::Generate: return "generate";
    case HistoryEntry::Op::DeleteTop: return "delete_top";
    case HistoryEntry::Op::RegenerateTop: return "regenerate_top";
  }
  return "unknown";
}

/// Interactive tree building over a fixed layer 0. All mutations go through
/// a single writer lock; readers receive immutable tree copies.
class GenerationSession {
 public:
  GenerationSession(SnapshotTree base, NodeUniverse universe, FeatureConfig cfg = {})
      : universe_(std::move(universe)), cfg_(cfg) {
    if (base.layer_count() == 0) throw Error(Errc::EmptyDataset, "session needs layer 0");
    while (base.layer_count() > 1) base = base.without_top();
    tree_ = std::move(base);
  }

  GenerationSession(const GenerationSession&) = delete;
  GenerationSession& operator=(const GenerationSession&) = delete;

  std::size_t generate(std::size_t from_layer, const ChangeThresholds& th) {
    std::unique_lock lock(mu_);
    const std::size_t k = generate_locked(from_layer, th);
    history_.push_back({HistoryEntry::Op::Generate, from_layer, th, tree_.digest()});
    return k;
  }

  void delete_top() {
    std::unique_lock lock(mu_);
    tree_ = tree_.without_top();
    history_.push_back({HistoryEntry::Op::DeleteTop, std::nullopt, std::nullopt, tree_.digest()});
  }

  std::size_t regenerate_top(const ChangeThresholds& th) {
    std::unique_lock lock(mu_);
    th.validate();
    SnapshotTree trimmed = tree_.without_top();
    SnapshotTree saved = std::exchange(tree_, std::move(trimmed));
    try {
      const std::size_t k = generate_locked(tree_.top_index(), th);
      history_.push_back({HistoryEntry::Op::RegenerateTop, std::nullopt, th, tree_.digest()});
      return k;
    } catch (...) {
      tree_ = std::move(saved);
      throw;
    }
  }

  /// Applies a recorded history, checking each resulting digest.
  void replay(std::span<const HistoryEntry> entries) {
    for (const auto& e : entries) {
      switch (e.op) {
        case HistoryEntry::Op::Generate:
          if (!e.from_layer || !e.thresholds) {
            throw Error(Errc::ReplayMismatch, "generate entry lacks parameters");
          }
          generate(*e.from_layer, *e.thresholds);
          break;
        case HistoryEntry::Op::DeleteTop:
          delete_top();
          break;
        case HistoryEntry::Op::RegenerateTop:
          if (!e.thresholds) throw Error(Errc::ReplayMismatch, "regenerate entry lacks thresholds");
          regenerate_top(*e.thresholds);
          break;
      }
      if (!e.digest.empty() && e.digest != digest()) {
        throw Error(Errc::ReplayMismatch, "digest differs after " + std::string(to_string(e.op)));
      }
    }
  }

  SnapshotTree tree() const {
    std::shared_lock lock(mu_);
    return tree_;
  }
  std::vector<HistoryEntry> history() const {
    std::shared_lock lock(mu_);
    return history_;
  }
  std::string digest() const {
    std::shared_lock lock(mu_);
    return tree_.digest();
  }
  const NodeUniverse& universe() const noexcept { return universe_; }
  const FeatureConfig& feature_config() const noexcept { return cfg_; }

 private:
  std::size_t generate_locked(std::size_t from_layer, const ChangeThresholds& th) {
    if (from_layer != tree_.top_index()) {
      throw Error(Errc::LayerNotTop, "layer " + std::to_string(from_layer) +
                                         " is not the top layer " +
                                         std::to_string(tree_.top_index()));
    }
    const std::size_t k = from_layer + 1;
    tree_ = tree_.with_layer(generate_layer(tree_.top().snapshots, th, universe_, k, cfg_));
    return k;
  }

  mutable std::shared_mutex mu_;
  SnapshotTree tree_;
  NodeUniverse universe_;
  FeatureConfig cfg_;
  std::vector<HistoryEntry> history_;
};

}  // namespace dgsnap

#endif  // DGSNAP_SNAPSHOT_ENGINE_HPP
