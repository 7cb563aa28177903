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

#ifndef DGSNAP_SERVICE_HPP
#define DGSNAP_SERVICE_HPP

#include <httplib.h>

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dgsnap/digest.hpp"
#include "dgsnap/error.hpp"
#include "dgsnap/features.hpp"
#include "dgsnap/graph_model.hpp"
#include "dgsnap/ingest.hpp"
#include "dgsnap/json_io.hpp"
#include "dgsnap/projection.hpp"
#include "dgsnap/snapshot_engine.hpp"
#include "dgsnap/views.hpp"

namespace dgsnap {

struct ServiceResponse {
  int status = 200;
  json body;
  std::string etag;
};

inline int http_status(Errc code) noexcept {
  switch (code) {
    case Errc::NotFound: return 404;
    case Errc::RangeInvalid: return 416;
    case Errc::NonContiguousSelection:
    case Errc::InvalidThresholds:
    case Errc::InvalidConfig:
    case Errc::TooFewPoints:
      return 422;
    case Errc::CannotDeleteBase:
    case Errc::LayerNotTop:
      return 409;
    default:
      return 400;
  }
}

inline ServiceResponse error_response(const Error& e) {
  json err = {{"code", std::string(to_string(e.code()))}, {"message", e.what()}};
  if (e.line()) err["line"] = *e.line();
  return {http_status(e.code()), {{"schema_version", kSchemaVersion}, {"error", std::move(err)}}, {}};
}

/// Session-oriented analysis API. Datasets and session logs live as files
/// under `data_dir`; everything else is recomputed or replayed on demand.
class AnalysisService {
 public:
  explicit AnalysisService(std::filesystem::path data_dir) : root_(std::move(data_dir)) {
    std::filesystem::create_directories(root_ / "datasets");
    std::filesystem::create_directories(root_ / "sessions");
    for (const auto& entry : std::filesystem::directory_iterator(root_ / "sessions")) {
      const std::string stem = entry.path().stem().string();
      if (stem.size() > 1 && stem[0] == 's') {
        try {
          next_session_ = std::max(next_session_, std::stoull(stem.substr(1)) + 1);
        } catch (...) {
        }
      }
    }
  }

  // POST /datasets
  ServiceResponse create_dataset(const std::string& tracking, const std::optional<std::string>& links,
                                 const std::optional<std::string>& events, const json& config,
                                 const std::string& name = {}) {
    return guarded([&] {
      std::scoped_lock lock(datasets_mu_);
      const DatasetConfig cfg = dataset_config_from_json(config);
      const json cfg_json = to_json(cfg);
      const std::string id = Sha256()
                                 .update(tracking).update("\x1f")
                                 .update(links.value_or("")).update("\x1f")
                                 .update(events.value_or("")).update("\x1f")
                                 .update(cfg_json.dump())
                                 .finish()
                                 .substr(0, 16);
      if (auto it = datasets_.find(id); it != datasets_.end()) {
        return ServiceResponse{200, it->second->descriptor, {}};
      }
      auto state = ingest(id, name, tracking, links, events, cfg);
      const auto dir = dataset_dir(id);
      std::filesystem::create_directories(dir);
      write_file(dir / "tracking.csv", tracking);
      if (links) write_file(dir / "links.csv", *links);
      if (events) write_file(dir / "events.csv", *events);
      write_file(dir / "config.json", json{{"name", name}, {"config", cfg_json}}.dump(2));
      datasets_[id] = state;
      return ServiceResponse{201, state->descriptor, {}};
    });
  }

  // GET /datasets/{id}
  ServiceResponse get_dataset(const std::string& id) {
    return guarded([&] { return ServiceResponse{200, dataset(id)->descriptor, {}}; });
  }

  // GET /datasets/{id}/matrix?from=&to=
  ServiceResponse matrix(const std::string& id, std::optional<std::size_t> from,
                         std::optional<std::size_t> to) {
    return guarded([&] {
      auto ds = dataset(id);
      const auto& frames = *ds->data.frames;
      auto m = matrix_aggregate(ds->data.universe, frames, from.value_or(0),
                                to.value_or(frames.size() - 1));
      return ServiceResponse{200, to_json(m), {}};
    });
  }

  // GET /datasets/{id}/projection
  ServiceResponse projection(const std::string& id, const ProjectionConfig& cfg) {
    return guarded([&] {
      cfg.validate();
      auto ds = dataset(id);
      const std::string key = sha256_hex(to_json(cfg).dump()).substr(0, 16);
      const auto cache = dataset_dir(id) / ("projection-" + key + ".json");
      {
        std::scoped_lock lock(ds->mu);
        if (auto it = ds->projections.find(key); it != ds->projections.end()) {
          return ServiceResponse{200, it->second, {}};
        }
      }
      json body;
      if (std::filesystem::exists(cache)) {
        body = json::parse(read_file(cache));
      } else {
        const auto& frames = *ds->data.frames;
        std::vector<std::string> ids;
        ids.reserve(frames.size());
        for (std::size_t i = 0; i < frames.size(); ++i) ids.push_back(snapshot_id(0, i));
        Embedding diag;
        auto points = project(ds->vectors, ids, cfg, &diag);
        json arr = json::array();
        for (std::size_t i = 0; i < points.size(); ++i) {
          arr.push_back({{"snapshot_id", points[i].snapshot_id},
                         {"frame", i},
                         {"timestamp", frames[i].timestamp()},
                         {"x", points[i].x},
                         {"y", points[i].y},
                         {"time_rank", points[i].time_rank}});
        }
        body = {{"schema_version", kSchemaVersion},
                {"dataset_id", id},
                {"config", to_json(cfg)},
                {"effective_perplexity", diag.effective_perplexity},
                {"kl_final", diag.kl_final},
                {"points", std::move(arr)}};
        write_file(cache, body.dump());
      }
      std::scoped_lock lock(ds->mu);
      ds->projections[key] = body;
      return ServiceResponse{200, body, {}};
    });
  }

  // GET /datasets/{id}/events
  ServiceResponse events(const std::string& id) {
    return guarded([&] { return ServiceResponse{200, events_payload(dataset(id)->data.events), {}}; });
  }

  // POST /sessions
  ServiceResponse create_session(const json& body) {
    return guarded([&] {
      jsonio::require_object(body, "session request");
      if (!body.contains("dataset_id") || !body.at("dataset_id").is_string()) {
        throw Error(Errc::InvalidConfig, "dataset_id required");
      }
      const std::string dataset_id = body.at("dataset_id").get<std::string>();
      auto ds = dataset(dataset_id);
      auto [from, to] = parse_selection(body.value("selection", json(nullptr)), ds->data.frames->size());
      std::string sid;
      {
        std::scoped_lock lock(sessions_mu_);
        sid = "s" + std::to_string(next_session_++);
      }
      auto state = open_session(sid, ds, from, to, {});
      persist(*state);
      std::scoped_lock lock(sessions_mu_);
      sessions_[sid] = state;
      return ServiceResponse{201, session_header(*state), {}};
    });
  }

  // GET /sessions/{id}
  ServiceResponse get_session(const std::string& sid) {
    return guarded([&] {
      auto s = session(sid);
      const SnapshotTree tree = s->engine->tree();
      json body = tree_to_json(tree, s->engine->history(), s->from);
      body["session_id"] = sid;
      body["dataset_id"] = s->dataset_id;
      body["selection"] = {{"from", s->from}, {"to", s->to}};
      return ServiceResponse{200, std::move(body), tree.digest()};
    });
  }

  // POST /sessions/{id}/layers
  ServiceResponse add_layer(const std::string& sid, const json& body) {
    return guarded([&] {
      jsonio::require_object(body, "layer request");
      auto s = session(sid);
      const ChangeThresholds th = thresholds_from_json(body.value("thresholds", json::object()));
      std::scoped_lock lock(s->write_mu);
      const std::size_t from =
          body.contains("from_layer") ? body.at("from_layer").get<std::size_t>()
                                      : s->engine->tree().top_index();
      const std::size_t k = s->engine->generate(from, th);
      persist(*s);
      return ServiceResponse{201, layer_delta(*s, "generate", k), {}};
    });
  }

  // PUT /sessions/{id}/layers/top
  ServiceResponse regenerate_top(const std::string& sid, const json& body) {
    return guarded([&] {
      jsonio::require_object(body, "layer request");
      auto s = session(sid);
      const ChangeThresholds th = thresholds_from_json(body.value("thresholds", json::object()));
      std::scoped_lock lock(s->write_mu);
      const std::size_t k = s->engine->regenerate_top(th);
      persist(*s);
      return ServiceResponse{200, layer_delta(*s, "regenerate_top", k), {}};
    });
  }

  // DELETE /sessions/{id}/layers/top
  ServiceResponse delete_top(const std::string& sid) {
    return guarded([&] {
      auto s = session(sid);
      std::scoped_lock lock(s->write_mu);
      const std::size_t removed = s->engine->tree().top_index();
      s->engine->delete_top();
      persist(*s);
      const SnapshotTree tree = s->engine->tree();
      return ServiceResponse{200,
                             {{"schema_version", kSchemaVersion},
                              {"session_id", sid},
                              {"op", "delete_top"},
                              {"removed_layer", removed},
                              {"layer_count", tree.layer_count()},
                              {"tree_digest", tree.digest()}},
                             {}};
    });
  }

  // GET /sessions/{id}/snapshots/{sid}
  ServiceResponse snapshot(const std::string& sid, const std::string& snapshot_id) {
    return guarded([&] {
      auto s = session(sid);
      const SnapshotTree tree = s->engine->tree();
      const Snapshot* snap = tree.find(snapshot_id);
      if (!snap) throw Error(Errc::NotFound, "no snapshot '" + snapshot_id + "'");
      json body = snapshot_detail_json(*snap, s->engine->universe(), s->from);
      body["session_id"] = sid;
      return ServiceResponse{200, std::move(body), tree.digest()};
    });
  }

  /// Registers every endpoint on `server`.
  void mount(httplib::Server& server) {
    auto reply = [](httplib::Response& res, const ServiceResponse& r) {
      res.status = r.status;
      if (!r.etag.empty()) res.set_header("ETag", "\"" + r.etag + "\"");
      res.set_header("Access-Control-Allow-Origin", "*");
      res.set_content(r.body.dump(), "application/json");
    };
    auto parse_body = [](const httplib::Request& req) {
      if (req.body.empty()) return json::object();
      return json::parse(req.body);
    };
    auto bad_json = [](const std::exception& e) {
      return ServiceResponse{400,
                             {{"schema_version", kSchemaVersion},
                              {"error", {{"code", "MalformedJson"}, {"message", e.what()}}}},
                             {}};
    };

    server.Post("/datasets", [=, this](const httplib::Request& req, httplib::Response& res) {
      auto field = [&](const char* key) -> std::optional<std::string> {
        if (req.has_file(key)) return req.get_file_value(key).content;
        if (req.has_param(key)) return req.get_param_value(key);
        return std::nullopt;
      };
      const auto tracking = field("tracking");
      if (!tracking) {
        return reply(res, error_response(Error(Errc::MalformedRow, "multipart field 'tracking' required")));
      }
      json config = nullptr;
      if (auto c = field("config"); c && !c->empty()) {
        try {
          config = json::parse(*c);
        } catch (const std::exception& e) {
          return reply(res, bad_json(e));
        }
      }
      reply(res, create_dataset(*tracking, field("links"), field("events"), config,
                                field("name").value_or("")));
    });
    server.Get(R"(/datasets/([^/]+))", [=, this](const httplib::Request& req, httplib::Response& res) {
      reply(res, get_dataset(req.matches[1]));
    });
    server.Get(R"(/datasets/([^/]+)/matrix)", [=, this](const httplib::Request& req, httplib::Response& res) {
      std::optional<std::size_t> from, to;
      try {
        if (req.has_param("from")) from = parse_index(req.get_param_value("from"));
        if (req.has_param("to")) to = parse_index(req.get_param_value("to"));
      } catch (const Error& e) {
        return reply(res, error_response(e));
      }
      reply(res, matrix(req.matches[1], from, to));
    });
    server.Get(R"(/datasets/([^/]+)/projection)", [=, this](const httplib::Request& req, httplib::Response& res) {
      ProjectionConfig cfg;
      try {
        if (req.has_param("perplexity")) cfg.perplexity = parse_number(req.get_param_value("perplexity"));
        if (req.has_param("seed")) cfg.seed = parse_index(req.get_param_value("seed"));
        if (req.has_param("iters")) cfg.iterations = static_cast<int>(parse_index(req.get_param_value("iters")));
        if (req.has_param("learning_rate")) cfg.learning_rate = parse_number(req.get_param_value("learning_rate"));
      } catch (const Error& e) {
        return reply(res, error_response(e));
      }
      reply(res, projection(req.matches[1], cfg));
    });
    server.Get(R"(/datasets/([^/]+)/events)", [=, this](const httplib::Request& req, httplib::Response& res) {
      reply(res, events(req.matches[1]));
    });
    server.Post("/sessions", [=, this](const httplib::Request& req, httplib::Response& res) {
      try {
        reply(res, create_session(parse_body(req)));
      } catch (const json::exception& e) {
        reply(res, bad_json(e));
      }
    });
    server.Get(R"(/sessions/([^/]+))", [=, this](const httplib::Request& req, httplib::Response& res) {
      ServiceResponse r = get_session(req.matches[1]);
      if (r.status == 200 && req.get_header_value("If-None-Match") == "\"" + r.etag + "\"") {
        res.status = 304;
        res.set_header("ETag", "\"" + r.etag + "\"");
        return;
      }
      reply(res, r);
    });
    server.Post(R"(/sessions/([^/]+)/layers)", [=, this](const httplib::Request& req, httplib::Response& res) {
      try {
        reply(res, add_layer(req.matches[1], parse_body(req)));
      } catch (const json::exception& e) {
        reply(res, bad_json(e));
      }
    });
    server.Put(R"(/sessions/([^/]+)/layers/top)", [=, this](const httplib::Request& req, httplib::Response& res) {
      try {
        reply(res, regenerate_top(req.matches[1], parse_body(req)));
      } catch (const json::exception& e) {
        reply(res, bad_json(e));
      }
    });
    server.Delete(R"(/sessions/([^/]+)/layers/top)", [=, this](const httplib::Request& req, httplib::Response& res) {
      reply(res, delete_top(req.matches[1]));
    });
    server.Get(R"(/sessions/([^/]+)/snapshots/([^/]+))", [=, this](const httplib::Request& req, httplib::Response& res) {
      reply(res, snapshot(req.matches[1], req.matches[2]));
    });
  }

  const std::filesystem::path& data_dir() const noexcept { return root_; }

 private:
  struct DatasetState {
    std::string id;
    Dataset data;
    std::vector<CombinedVector> vectors;
    json descriptor;
    std::mutex mu;  // guards projections
    std::map<std::string, json> projections;
  };

  struct SessionState {
    std::string id;
    std::string dataset_id;
    std::size_t from = 0;
    std::size_t to = 0;
    std::unique_ptr<GenerationSession> engine;
    std::mutex write_mu;
  };

  template <typename Fn>
  ServiceResponse guarded(Fn&& fn) {
    try {
      return fn();
    } catch (const Error& e) {
      return error_response(e);
    } catch (const json::exception& e) {
      return error_response(Error(Errc::InvalidConfig, e.what()));
    }
  }

  static std::size_t parse_index(const std::string& s) {
    auto v = csv::to_int(s);
    if (!v || *v < 0) throw Error(Errc::InvalidConfig, "expected a non-negative integer, got '" + s + "'");
    return static_cast<std::size_t>(*v);
  }
  static double parse_number(const std::string& s) {
    auto v = csv::to_double(s);
    if (!v) throw Error(Errc::InvalidConfig, "expected a number, got '" + s + "'");
    return *v;
  }

  static std::pair<std::size_t, std::size_t> parse_selection(const json& sel, std::size_t frame_count) {
    if (sel.is_null()) return {0, frame_count - 1};
    jsonio::require_object(sel, "selection");
    if (sel.contains("frames")) {
      const auto ids = sel.at("frames").get<std::vector<std::size_t>>();
      if (ids.empty()) throw Error(Errc::NonContiguousSelection, "empty frame list");
      for (std::size_t i = 1; i < ids.size(); ++i) {
        if (ids[i] != ids[i - 1] + 1) {
          throw Error(Errc::NonContiguousSelection, "frames must form one ascending contiguous run");
        }
      }
      if (ids.back() >= frame_count) throw Error(Errc::RangeInvalid, "selection outside dataset");
      return {ids.front(), ids.back()};
    }
    const std::size_t from = sel.value("from", std::size_t{0});
    const std::size_t to = sel.value("to", frame_count - 1);
    if (from > to || to >= frame_count) throw Error(Errc::RangeInvalid, "selection outside dataset");
    return {from, to};
  }

  static std::shared_ptr<DatasetState> ingest(const std::string& id, const std::string& name,
                                              const std::string& tracking,
                                              const std::optional<std::string>& links,
                                              const std::optional<std::string>& events,
                                              const DatasetConfig& cfg) {
    std::istringstream t(tracking);
    std::optional<std::istringstream> l, e;
    if (links) l.emplace(*links);
    if (events) e.emplace(*events);
    auto state = std::make_shared<DatasetState>();
    state->id = id;
    state->data = load_dataset(t, l ? &*l : nullptr, e ? &*e : nullptr, cfg);
    const auto& frames = *state->data.frames;
    state->vectors.reserve(frames.size());
    std::size_t link_total = 0;
    std::vector<double> gaps;
    for (std::size_t i = 0; i < frames.size(); ++i) {
      state->vectors.push_back(vectorize(frames[i], state->data.universe));
      link_total += frames[i].links().size();
      if (i > 0) gaps.push_back(frames[i].timestamp() - frames[i - 1].timestamp());
    }
    double granularity = 0.0;
    if (!gaps.empty()) {
      std::nth_element(gaps.begin(), gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2), gaps.end());
      granularity = gaps[gaps.size() / 2];
    }
    json digests = {{"tracking", sha256_hex(tracking)}};
    if (links) digests["links"] = sha256_hex(*links);
    if (events) digests["events"] = sha256_hex(*events);
    state->descriptor = {{"schema_version", kSchemaVersion},
                         {"id", id},
                         {"name", name},
                         {"frame_count", frames.size()},
                         {"link_occurrences", link_total},
                         {"event_count", state->data.events.size()},
                         {"node_universe", to_json(state->data.universe)},
                         {"time_range", {frames.front().timestamp(), frames.back().timestamp()}},
                         {"granularity", granularity},
                         {"config", to_json(cfg)},
                         {"file_digests", std::move(digests)}};
    return state;
  }

  std::shared_ptr<DatasetState> dataset(const std::string& id) {
    std::scoped_lock lock(datasets_mu_);
    if (auto it = datasets_.find(id); it != datasets_.end()) return it->second;
    const auto dir = dataset_dir(id);
    if (id.find_first_of("/\\.") != std::string::npos || !std::filesystem::exists(dir / "tracking.csv")) {
      throw Error(Errc::NotFound, "no dataset '" + id + "'");
    }
    const json meta = json::parse(read_file(dir / "config.json"));
    auto opt_file = [&](const char* name) -> std::optional<std::string> {
      if (!std::filesystem::exists(dir / name)) return std::nullopt;
      return read_file(dir / name);
    };
    auto state = ingest(id, meta.value("name", ""), read_file(dir / "tracking.csv"), opt_file("links.csv"),
                        opt_file("events.csv"), dataset_config_from_json(meta.at("config")));
    datasets_[id] = state;
    return state;
  }

  std::shared_ptr<SessionState> open_session(const std::string& sid, const std::shared_ptr<DatasetState>& ds,
                                             std::size_t from, std::size_t to,
                                             const std::vector<HistoryEntry>& history) {
    auto state = std::make_shared<SessionState>();
    state->id = sid;
    state->dataset_id = ds->id;
    state->from = from;
    state->to = to;
    const auto& cfg = ds->data.config.features;
    state->engine = std::make_unique<GenerationSession>(selection_tree(*ds->data.frames, from, to, cfg),
                                                        ds->data.universe, cfg);
    state->engine->replay(history);
    return state;
  }

  std::shared_ptr<SessionState> session(const std::string& sid) {
    {
      std::scoped_lock lock(sessions_mu_);
      if (auto it = sessions_.find(sid); it != sessions_.end()) return it->second;
    }
    const auto path = root_ / "sessions" / (sid + ".json");
    if (sid.find_first_of("/\\.") != std::string::npos || !std::filesystem::exists(path)) {
      throw Error(Errc::NotFound, "no session '" + sid + "'");
    }
    const json log = json::parse(read_file(path));
    auto state = open_session(sid, dataset(log.at("dataset_id").get<std::string>()),
                              log.at("selection").at("from").get<std::size_t>(),
                              log.at("selection").at("to").get<std::size_t>(),
                              history_from_json(log.at("history")));
    std::scoped_lock lock(sessions_mu_);
    return sessions_.try_emplace(sid, state).first->second;
  }

  json session_header(const SessionState& s) const {
    const SnapshotTree tree = s.engine->tree();
    return {{"schema_version", kSchemaVersion},
            {"session_id", s.id},
            {"dataset_id", s.dataset_id},
            {"selection", {{"from", s.from}, {"to", s.to}}},
            {"layer_count", tree.layer_count()},
            {"tree_digest", tree.digest()}};
  }

  json layer_delta(const SessionState& s, const char* op, std::size_t k) const {
    const SnapshotTree tree = s.engine->tree();
    json body = session_header(s);
    body["op"] = op;
    body["layer"] = layer_to_json(tree, k, s.from);
    return body;
  }

  void persist(const SessionState& s) const {
    const json log = {{"schema_version", kSchemaVersion},
                      {"session_id", s.id},
                      {"dataset_id", s.dataset_id},
                      {"selection", {{"from", s.from}, {"to", s.to}}},
                      {"history", to_json(s.engine->history())}};
    write_file(root_ / "sessions" / (s.id + ".json"), log.dump(2));
  }

  std::filesystem::path dataset_dir(const std::string& id) const { return root_ / "datasets" / id; }

  static std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(Errc::NotFound, "cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  static void write_file(const std::filesystem::path& p, const std::string& content) {
    const auto tmp = p.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << content;
      if (!out) throw std::runtime_error("cannot write " + tmp);
    }
    std::filesystem::rename(tmp, p);
  }

  std::filesystem::path root_;
  std::mutex datasets_mu_;
  std::map<std::string, std::shared_ptr<DatasetState>> datasets_;
  std::mutex sessions_mu_;
  std::map<std::string, std::shared_ptr<SessionState>> sessions_;
  unsigned long long next_session_ = 0;
};

}  // namespace dgsnap

#endif  // DGSNAP_SERVICE_HPP
