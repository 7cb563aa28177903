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

#ifndef DGSNAP_PIPELINE_HPP
#define DGSNAP_PIPELINE_HPP

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dgsnap/error.hpp"
#include "dgsnap/features.hpp"
#include "dgsnap/graph_model.hpp"
#include "dgsnap/ingest.hpp"
#include "dgsnap/json_io.hpp"
#include "dgsnap/projection.hpp"
#include "dgsnap/snapshot_engine.hpp"
#include "dgsnap/views.hpp"

namespace dgsnap {

struct RunConfig {
  std::filesystem::path tracking;
  std::optional<std::filesystem::path> links;
  std::optional<std::filesystem::path> events;
  DatasetConfig dataset;
  std::vector<ChangeThresholds> schedule;
  ProjectionConfig projection;
  std::filesystem::path output_dir = ".";

  void validate(bool needs_schedule) const {
    if (tracking.empty()) throw Error(Errc::InvalidConfig, "tracking input required");
    if (needs_schedule && schedule.empty()) {
      throw Error(Errc::InvalidConfig, "threshold schedule needs at least one layer");
    }
    for (const auto& th : schedule) th.validate();
    dataset.links.validate();
    projection.validate();
  }
};

/// Overlays the fields present in `j` onto `cfg`.
inline void apply_run_config_json(RunConfig& cfg, const json& j) {
  jsonio::require_object(j, "run config");
  auto path = [&](const char* key) -> std::optional<std::filesystem::path> {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return std::filesystem::path(j.at(key).get<std::string>());
  };
  if (auto p = path("tracking")) cfg.tracking = *p;
  if (auto p = path("links")) cfg.links = *p;
  if (auto p = path("events")) cfg.events = *p;
  if (auto p = path("output")) cfg.output_dir = *p;
  if (j.contains("dataset")) cfg.dataset = dataset_config_from_json(j.at("dataset"));
  if (j.contains("projection")) cfg.projection = projection_config_from_json(j.at("projection"));
  if (j.contains("schedule")) {
    if (!j.at("schedule").is_array()) throw Error(Errc::InvalidConfig, "schedule must be an array");
    cfg.schedule.clear();
    for (const auto& th : j.at("schedule")) cfg.schedule.push_back(thresholds_from_json(th));
  }
}

inline Dataset load_run_dataset(const RunConfig& cfg) {
  auto open = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(Errc::NotFound, "cannot open " + p.string());
    return in;
  };
  std::ifstream tracking = open(cfg.tracking);
  std::optional<std::ifstream> links, events;
  if (cfg.links) links.emplace(open(*cfg.links));
  if (cfg.events) events.emplace(open(*cfg.events));
  return load_dataset(tracking, links ? &*links : nullptr, events ? &*events : nullptr, cfg.dataset);
}

/// Builds every scheduled layer on top of layer 0 through a session so the
/// result carries a replayable history.
inline SnapshotTree build_tree(const Dataset& ds, std::span<const ChangeThresholds> schedule,
                               std::vector<HistoryEntry>* history = nullptr) {
  GenerationSession session(build_layer_zero(ds.frames, ds.config.features), ds.universe,
                            ds.config.features);
  for (const auto& th : schedule) session.generate(session.tree().top_index(), th);
  if (history) *history = session.history();
  return session.tree();
}

inline json summary_json(const SnapshotTree& tree) {
  json layers = json::array();
  const double base = static_cast<double>(tree.layer(0).snapshots.size());
  for (std::size_t k = 0; k < tree.layer_count(); ++k) {
    const auto& snaps = tree.layer(k).snapshots;
    double stability = 0.0;
    for (const auto& s : snaps) stability += s.indicators().graph_stability;
    layers.push_back({{"layer", k},
                      {"snapshots", snaps.size()},
                      {"compression_ratio", base / static_cast<double>(snaps.size())},
                      {"mean_graph_stability", stability / static_cast<double>(snaps.size())}});
  }
  return {{"schema_version", kSchemaVersion}, {"digest", tree.digest()}, {"layers", std::move(layers)}};
}

inline std::string summary_table(const json& summary) {
  std::ostringstream out;
  out << "layer,snapshots,compression_ratio,mean_graph_stability\n";
  for (const auto& l : summary.at("layers")) {
    out << l.at("layer").get<std::size_t>() << ',' << l.at("snapshots").get<std::size_t>() << ','
        << format_double(l.at("compression_ratio").get<double>()) << ','
        << format_double(l.at("mean_graph_stability").get<double>()) << '\n';
  }
  return out.str();
}

inline json projection_json(const Dataset& ds, const ProjectionConfig& cfg) {
  const auto& frames = *ds.frames;
  std::vector<CombinedVector> vectors;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    vectors.push_back(vectorize(frames[i], ds.universe));
    ids.push_back(snapshot_id(0, i));
  }
  Embedding diag;
  const auto points = project(vectors, ids, cfg, &diag);
  json arr = json::array();
  for (std::size_t i = 0; i < points.size(); ++i) {
    arr.push_back({{"snapshot_id", points[i].snapshot_id},
                   {"frame", i},
                   {"timestamp", frames[i].timestamp()},
                   {"x", points[i].x},
                   {"y", points[i].y},
                   {"time_rank", points[i].time_rank}});
  }
  return {{"schema_version", kSchemaVersion},
          {"config", to_json(cfg)},
          {"effective_perplexity", diag.effective_perplexity},
          {"kl_final", diag.kl_final},
          {"points", std::move(arr)}};
}

inline json features_json(const Dataset& ds) {
  json frames = json::array();
  for (const auto& f : *ds.frames) {
    json j = to_json(frame_indicators(f, ds.config.features));
    j["node_count"] = f.nodes().size();
    j["link_count"] = f.links().size();
    frames.push_back(std::move(j));
  }
  return {{"schema_version", kSchemaVersion},
          {"node_universe", to_json(ds.universe)},
          {"vector_length", ds.universe.size() + ds.universe.link_slots()},
          {"config", to_json(ds.config)},
          {"frames", std::move(frames)}};
}

/// Rebuilds the tree from the history embedded in a tree artifact and checks
/// it reproduces the recorded digest.
inline bool verify_tree_artifact(const Dataset& ds, const json& tree_artifact) {
  GenerationSession session(build_layer_zero(ds.frames, ds.config.features), ds.universe,
                            ds.config.features);
  session.replay(history_from_json(tree_artifact.at("history")));
  return session.digest() == tree_artifact.at("digest").get<std::string>();
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error(Errc::NotFound, "cannot write " + p.string());
}

struct PipelineArtifacts {
  std::vector<std::filesystem::path> written;
};

enum class Stage { Ingest, Tree, Project, Export };

/// Runs the batch pipeline up to `stage` and writes its artifacts into
/// `cfg.output_dir`.
inline PipelineArtifacts run_pipeline(const RunConfig& cfg, Stage stage = Stage::Export) {
  cfg.validate(stage == Stage::Tree || stage == Stage::Export);
  const Dataset ds = load_run_dataset(cfg);
  std::filesystem::create_directories(cfg.output_dir);
  PipelineArtifacts out;
  auto emit = [&](const char* name, const std::string& text) {
    const auto p = cfg.output_dir / name;
    write_text(p, text);
    out.written.push_back(p);
  };

  if (stage == Stage::Ingest) {
    emit("features.json", features_json(ds).dump(2));
    return out;
  }
  if (stage == Stage::Tree || stage == Stage::Export) {
    std::vector<HistoryEntry> history;
    const SnapshotTree tree = build_tree(ds, cfg.schedule, &history);
    json t = tree_to_json(tree, history);
    t["node_universe"] = to_json(ds.universe);
    emit("tree.json", t.dump(2));
    const json summary = summary_json(tree);
    emit("summary.json", summary.dump(2));
    emit("summary.csv", summary_table(summary));
  }
  if (stage == Stage::Project || stage == Stage::Export) {
    emit("projection.json", projection_json(ds, cfg.projection).dump(2));
  }
  if (stage == Stage::Export) {
    emit("matrix.json", to_json(matrix_aggregate(ds.universe, *ds.frames, 0, ds.frames->size() - 1)).dump(2));
    emit("events.json", events_payload(ds.events).dump(2));
  }
  return out;
}

}  // namespace dgsnap

#endif  // DGSNAP_PIPELINE_HPP
