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

#ifndef DGSNAP_JSON_IO_HPP
#define DGSNAP_JSON_IO_HPP

#include <nlohmann/json.hpp>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "dgsnap/error.hpp"
#include "dgsnap/features.hpp"
#include "dgsnap/graph_model.hpp"
#include "dgsnap/ingest.hpp"
#include "dgsnap/projection.hpp"
#include "dgsnap/snapshot_engine.hpp"
#include "dgsnap/views.hpp"

namespace dgsnap {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

namespace jsonio {

template <typename T>
struct is_optional : std::false_type {};
template <typename T>
struct is_optional<std::optional<T>> : std::true_type {};

/// Reads `key` from `j` if present, converting type errors to InvalidConfig.
template <typename T>
void read_opt(const json& j, const char* key, T& dst) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return;
  try {
    if constexpr (is_optional<T>::value) {
      dst = it->get<typename T::value_type>();
    } else {
      dst = it->get<T>();
    }
  } catch (const json::exception&) {
    throw Error(Errc::InvalidConfig, std::string("field '") + key + "' has the wrong type");
  }
}

inline void require_object(const json& j, const char* what) {
  if (!j.is_object()) throw Error(Errc::InvalidConfig, std::string(what) + " must be an object");
}

}  // namespace jsonio

// --- thresholds & history ---------------------------------------------------

inline json to_json(const ChangeThresholds& th) {
  return {{"node_change_max", th.node_change_max},
          {"link_change_max", th.link_change_max},
          {"time_gap_max", th.time_gap_max},
          {"frame_count_max", th.frame_count_max ? json(*th.frame_count_max) : json(nullptr)}};
}

inline ChangeThresholds thresholds_from_json(const json& j) {
  jsonio::require_object(j, "thresholds");
  ChangeThresholds th;
  for (const char* key : {"node_change_max", "link_change_max", "time_gap_max"}) {
    if (!j.contains(key) || !j.at(key).is_number()) {
      throw Error(Errc::InvalidThresholds, std::string("missing numeric '") + key + "'");
    }
  }
  th.node_change_max = j.at("node_change_max").get<double>();
  th.link_change_max = j.at("link_change_max").get<double>();
  th.time_gap_max = j.at("time_gap_max").get<double>();
  if (auto it = j.find("frame_count_max"); it != j.end() && !it->is_null()) {
    if (!it->is_number_integer() || it->get<std::int64_t>() < 1) {
      throw Error(Errc::InvalidThresholds, "frame_count_max must be a positive integer");
    }
    th.frame_count_max = it->get<std::uint32_t>();
  }
  th.validate();
  return th;
}

inline json to_json(const HistoryEntry& e) {
  json j = {{"op", std::string(to_string(e.op))}, {"digest", e.digest}};
  if (e.from_layer) j["from_layer"] = *e.from_layer;
  if (e.thresholds) j["thresholds"] = to_json(*e.thresholds);
  return j;
}

inline HistoryEntry history_entry_from_json(const json& j) {
  jsonio::require_object(j, "history entry");
  HistoryEntry e;
  const std::string op = j.value("op", "");
  if (op == "generate") e.op = HistoryEntry::Op::Generate;
  else if (op == "delete_top") e.op = HistoryEntry::Op::DeleteTop;
  else if (op == "regenerate_top") e.op = HistoryEntry::Op::RegenerateTop;
  else throw Error(Errc::ReplayMismatch, "unknown op '" + op + "'");
  if (j.contains("from_layer")) e.from_layer = j.at("from_layer").get<std::size_t>();
  if (j.contains("thresholds")) e.thresholds = thresholds_from_json(j.at("thresholds"));
  e.digest = j.value("digest", "");
  return e;
}

inline json to_json(std::span<const HistoryEntry> history) {
  json arr = json::array();
  for (const auto& e : history) arr.push_back(to_json(e));
  return arr;
}

inline std::vector<HistoryEntry> history_from_json(const json& j) {
  if (!j.is_array()) throw Error(Errc::ReplayMismatch, "history must be an array");
  std::vector<HistoryEntry> out;
  for (const auto& e : j) out.push_back(history_entry_from_json(e));
  return out;
}

// --- configs ----------------------------------------------------------------

/// Dataset config. A `court` object must carry both `width` and `height`.
inline DatasetConfig dataset_config_from_json(const json& j) {
  DatasetConfig cfg;
  if (j.is_null()) return cfg;
  jsonio::require_object(j, "config");
  if (auto it = j.find("court"); it != j.end()) {
    jsonio::require_object(*it, "court");
    cfg.court_width.reset();
    cfg.court_height.reset();
    jsonio::read_opt(*it, "width", cfg.court_width);
    jsonio::read_opt(*it, "height", cfg.court_height);
    if (!cfg.court_width || !cfg.court_height || *cfg.court_width <= 0 || *cfg.court_height <= 0) {
      throw Error(Errc::UnknownUnits, "court needs positive width and height");
    }
  }
  jsonio::read_opt(j, "bounds_tolerance", cfg.bounds_tolerance);
  if (auto it = j.find("links"); it != j.end()) {
    jsonio::require_object(*it, "links");
    std::string mode = "proximity";
    jsonio::read_opt(*it, "mode", mode);
    if (mode == "proximity") cfg.links.mode = LinkInducerConfig::Mode::Proximity;
    else if (mode == "provided") cfg.links.mode = LinkInducerConfig::Mode::Provided;
    else throw Error(Errc::InvalidConfig, "links.mode must be 'proximity' or 'provided'");
    jsonio::read_opt(*it, "proximity_radius", cfg.links.proximity_radius);
    jsonio::read_opt(*it, "cross_team_only", cfg.links.cross_team_only);
  }
  jsonio::read_opt(j, "eps", cfg.features.eps);
  jsonio::read_opt(j, "stability_speed_inverse", cfg.features.stability_speed_inverse);
  if (!(cfg.features.eps > 0.0)) throw Error(Errc::InvalidConfig, "eps must be positive");
  cfg.links.validate();
  return cfg;
}

inline json to_json(const DatasetConfig& cfg) {
  return {{"court", {{"width", cfg.court_width.value_or(0.0)},
                     {"height", cfg.court_height.value_or(0.0)}}},
          {"bounds_tolerance", cfg.bounds_tolerance},
          {"links",
           {{"mode", cfg.links.mode == LinkInducerConfig::Mode::Proximity ? "proximity" : "provided"},
            {"proximity_radius", cfg.links.proximity_radius},
            {"cross_team_only", cfg.links.cross_team_only}}},
          {"eps", cfg.features.eps},
          {"stability_speed_inverse", cfg.features.stability_speed_inverse}};
}

inline ProjectionConfig projection_config_from_json(const json& j) {
  ProjectionConfig cfg;
  if (j.is_null()) return cfg;
  jsonio::require_object(j, "projection");
  jsonio::read_opt(j, "perplexity", cfg.perplexity);
  jsonio::read_opt(j, "iterations", cfg.iterations);
  jsonio::read_opt(j, "learning_rate", cfg.learning_rate);
  jsonio::read_opt(j, "seed", cfg.seed);
  jsonio::read_opt(j, "early_exaggeration", cfg.early_exaggeration);
  cfg.validate();
  return cfg;
}

inline json to_json(const ProjectionConfig& cfg) {
  return {{"perplexity", cfg.perplexity},       {"iterations", cfg.iterations},
          {"learning_rate", cfg.learning_rate}, {"seed", cfg.seed},
          {"early_exaggeration", cfg.early_exaggeration}};
}

// --- domain payloads --------------------------------------------------------

inline json to_json(const NodeUniverse& universe) {
  json arr = json::array();
  for (const auto& e : universe.entries()) arr.push_back({{"id", e.node_id}, {"class", e.class_label}});
  return arr;
}

inline json to_json(const FrameIndicators& f) {
  return {{"timestamp", f.timestamp},
          {"avg_node_speed", f.avg_node_speed},
          {"avg_node_degree", f.avg_node_degree},
          {"avg_link_distance", f.avg_link_distance},
          {"avg_link_stability", f.avg_link_stability},
          {"graph_stability", f.graph_stability}};
}

inline json to_json(const SnapshotIndicators& ind, bool with_series) {
  json j = {{"avg_node_speed", ind.avg_node_speed},
            {"avg_node_degree", ind.avg_node_degree},
            {"avg_link_distance", ind.avg_link_distance},
            {"avg_link_stability", ind.avg_link_stability},
            {"graph_stability", ind.graph_stability}};
  if (with_series) {
    json series = json::array();
    for (const auto& f : ind.per_frame) series.push_back(to_json(f));
    j["per_frame"] = std::move(series);
  }
  return j;
}

inline json snapshot_summary(const Snapshot& s, std::optional<ParentRun> parents,
                             std::size_t frame_offset = 0) {
  json j = {{"id", s.id()},
            {"first_frame", s.first_frame() + frame_offset},
            {"frame_count", s.frame_count()},
            {"time_span", {s.time_span().start, s.time_span().end}},
            {"node_count", s.node_union().size()},
            {"link_count", s.link_counts().size()},
            {"indicators", to_json(s.indicators(), false)}};
  if (parents) j["parents"] = {parents->begin, parents->end};
  return j;
}

inline json layer_to_json(const SnapshotTree& tree, std::size_t k, std::size_t frame_offset = 0) {
  const Layer& layer = tree.layer(k);
  json snaps = json::array();
  for (std::size_t i = 0; i < layer.snapshots.size(); ++i) {
    std::optional<ParentRun> parents;
    if (i < layer.parents.size()) parents = layer.parents[i];
    snaps.push_back(snapshot_summary(layer.snapshots[i], parents, frame_offset));
  }
  return {{"index", k},
          {"params", layer.params ? to_json(*layer.params) : json(nullptr)},
          {"digest", layer.digest},
          {"snapshots", std::move(snaps)}};
}

inline json tree_to_json(const SnapshotTree& tree, std::span<const HistoryEntry> history,
                         std::size_t frame_offset = 0) {
  json layers = json::array();
  for (std::size_t k = 0; k < tree.layer_count(); ++k) {
    layers.push_back(layer_to_json(tree, k, frame_offset));
  }
  return {{"schema_version", kSchemaVersion},
          {"digest", tree.digest()},
          {"frame_offset", frame_offset},
          {"layers", std::move(layers)},
          {"history", to_json(history)}};
}

inline json to_json(std::span<const ProjectionPoint> points) {
  json arr = json::array();
  for (const auto& p : points) {
    arr.push_back({{"snapshot_id", p.snapshot_id}, {"x", p.x}, {"y", p.y}, {"time_rank", p.time_rank}});
  }
  return arr;
}

inline json to_json(const MatrixAggregate& m) {
  json nodes = json::array();
  for (const auto& e : m.nodes) nodes.push_back({{"id", e.node_id}, {"class", e.class_label}});
  return {{"schema_version", kSchemaVersion},
          {"from", m.from},
          {"to", m.to},
          {"nodes", std::move(nodes)},
          {"counts", m.counts}};
}

inline json to_json(const EventRecord& e) {
  return {{"timestamp", e.timestamp},
          {"event_type", e.event_type},
          {"score_a", e.score_a},
          {"score_b", e.score_b},
          {"major_player", e.major_player ? json(*e.major_player) : json(nullptr)},
          {"secondary_player", e.secondary_player ? json(*e.secondary_player) : json(nullptr)}};
}

inline json events_payload(std::span<const EventRecord> events) {
  json timeline = json::array();
  for (const auto& p : score_timeline(events)) {
    timeline.push_back({{"timestamp", p.timestamp}, {"margin", p.margin}});
  }
  json list = json::array();
  for (const auto& e : events) list.push_back(to_json(e));
  return {{"schema_version", kSchemaVersion}, {"timeline", std::move(timeline)},
          {"events", std::move(list)}};
}

inline json snapshot_detail_json(const Snapshot& s, const NodeUniverse& universe,
                                 std::size_t frame_offset = 0) {
  const SnapshotDetail d = snapshot_detail(s);
  auto opt = [](const auto& v) { return v ? json(*v) : json(nullptr); };
  json trajectories = json::array();
  for (const auto& t : d.trajectories) {
    trajectories.push_back({{"player", universe[t.node].node_id},
                            {"t0", t.t0},
                            {"t1", t.t1},
                            {"from", {t.from.x, t.from.y}},
                            {"to", {t.to.x, t.to.y}},
                            {"speed", t.speed}});
  }
  json nodes = json::array();
  for (const auto& n : d.nodes) {
    json speed = json::array(), degree = json::array();
    for (const auto& v : n.speed) speed.push_back(opt(v));
    for (const auto& v : n.degree) degree.push_back(opt(v));
    nodes.push_back({{"player", universe[n.node].node_id},
                     {"class", universe[n.node].class_label},
                     {"speed", std::move(speed)},
                     {"degree", std::move(degree)}});
  }
  json links = json::array();
  for (const auto& l : d.links) {
    json dist = json::array();
    for (const auto& v : l.distance) dist.push_back(opt(v));
    links.push_back({{"a", universe[l.link.a].node_id},
                     {"b", universe[l.link.b].node_id},
                     {"count", l.count},
                     {"distance", std::move(dist)}});
  }
  json j = snapshot_summary(s, std::nullopt, frame_offset);
  j["schema_version"] = kSchemaVersion;
  j["indicators"] = to_json(s.indicators(), true);
  j["timestamps"] = d.timestamps;
  j["trajectories"] = std::move(trajectories);
  j["nodes"] = std::move(nodes);
  j["links"] = std::move(links);
  return j;
}

}  // namespace dgsnap

#endif  // DGSNAP_JSON_IO_HPP
