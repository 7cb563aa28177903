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

#ifndef DGSNAP_INGEST_HPP
#define DGSNAP_INGEST_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dgsnap/digest.hpp"
#include "dgsnap/error.hpp"
#include "dgsnap/features.hpp"
#include "dgsnap/graph_types.hpp"

namespace dgsnap {

struct LinkInducerConfig {
  enum class Mode { Provided, Proximity };
  Mode mode = Mode::Proximity;
  double proximity_radius = 10.0;
  bool cross_team_only = false;

  void validate() const {
    if (mode == Mode::Proximity && !(proximity_radius > 0.0 && std::isfinite(proximity_radius))) {
      throw Error(Errc::InvalidConfig, "proximity_radius must be positive");
    }
  }
};

/// Per-dataset settings. Court dimensions default to an NBA court in feet.
struct DatasetConfig {
  std::optional<double> court_width = 94.0;
  std::optional<double> court_height = 50.0;
  /// How far outside the court a position may fall before the row is rejected.
  double bounds_tolerance = 3.0;
  LinkInducerConfig links;
  FeatureConfig features;
};

struct TrackingRow {
  double timestamp = 0.0;
  std::string player_id;
  std::string team;
  double x = 0.0;
  double y = 0.0;
  std::optional<double> speed;
};

struct EventRecord {
  double timestamp = 0.0;
  std::string event_type;
  std::int64_t score_a = 0;
  std::int64_t score_b = 0;
  std::optional<std::string> major_player;
  std::optional<std::string> secondary_player;
  friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

struct TrackingData {
  NodeUniverse universe;
  FrameSequence frames;
};

namespace csv {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::optional<double> to_double(std::string_view s) {
  double v = 0.0;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

inline std::optional<std::int64_t> to_int(std::string_view s) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

/// Reads non-blank lines, invoking `fn(fields, line_number)`. A first line
/// whose first field is "timestamp" is treated as a header and passed to
/// `on_header` instead.
template <typename HeaderFn, typename RowFn>
void for_each_row(std::istream& in, HeaderFn&& on_header, RowFn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (line_no == 1 && view.starts_with("\xEF\xBB\xBF")) view.remove_prefix(3);
    if (view.empty()) continue;
    auto fields = split(view);
    if (first) {
      first = false;
      if (fields.front() == "timestamp") {
        on_header(fields, line_no);
        continue;
      }
    }
    fn(fields, line_no);
  }
}

}  // namespace csv

/// Parses tracking CSV (`timestamp,player_id,team,x,y[,speed]`) into one frame
/// per distinct timestamp. Missing speeds are derived by backward finite
/// difference from the player's previous frame; a player's first frame, or a
/// frame not directly following one it appeared in, gets speed 0. Frames carry
/// no links.
inline TrackingData parse_tracking(std::istream& in, const DatasetConfig& cfg = {}) {
  if (!cfg.court_width || !cfg.court_height) {
    throw Error(Errc::UnknownUnits, "court width and height are required");
  }
  const double width = *cfg.court_width;
  const double height = *cfg.court_height;
  const double tol = cfg.bounds_tolerance;

  struct Group {
    double timestamp;
    std::map<std::string, std::pair<TrackingRow, std::size_t>> rows;
  };
  std::vector<Group> groups;
  std::map<std::string, std::string> team_of;
  std::optional<bool> header_has_speed;

  csv::for_each_row(
      in,
      [&](const std::vector<std::string_view>& header, std::size_t line) {
        static constexpr std::string_view kCols[] = {"timestamp", "player_id", "team", "x", "y",
                                                     "speed"};
        if (header.size() < 5 || header.size() > 6) {
          throw Error(Errc::MalformedRow, "tracking header must have 5 or 6 columns", line);
        }
        for (std::size_t i = 0; i < header.size(); ++i) {
          if (header[i] != kCols[i]) {
            throw Error(Errc::MalformedRow, "unexpected column '" + std::string(header[i]) + "'",
                        line);
          }
        }
        header_has_speed = header.size() == 6;
      },
      [&](const std::vector<std::string_view>& f, std::size_t line) {
        const bool speed_col = header_has_speed.value_or(f.size() == 6);
        if (f.size() != (speed_col ? 6u : 5u)) {
          throw Error(Errc::MalformedRow, "wrong field count", line);
        }
        TrackingRow row;
        auto t = csv::to_double(f[0]);
        auto x = csv::to_double(f[3]);
        auto y = csv::to_double(f[4]);
        if (!t || !x || !y || f[1].empty() || f[2].empty()) {
          throw Error(Errc::MalformedRow, "unparseable field", line);
        }
        row.timestamp = *t;
        row.player_id = f[1];
        row.team = f[2];
        row.x = *x;
        row.y = *y;
        if (row.x < -tol || row.x > width + tol || row.y < -tol || row.y > height + tol) {
          throw Error(Errc::MalformedRow, "position outside court", line);
        }
        if (speed_col && !f[5].empty()) {
          auto s = csv::to_double(f[5]);
          if (!s || *s < 0.0) throw Error(Errc::MalformedRow, "bad speed", line);
          row.speed = *s;
        }
        auto [team_it, fresh] = team_of.emplace(row.player_id, row.team);
        if (!fresh && team_it->second != row.team) {
          throw Error(Errc::MalformedRow, "player '" + row.player_id + "' changes team", line);
        }
        if (groups.empty() || row.timestamp > groups.back().timestamp) {
          groups.push_back({row.timestamp, {}});
        } else if (row.timestamp < groups.back().timestamp) {
          throw Error(Errc::NonMonotoneTimestamps, "timestamp decreases", line);
        }
        // Later rows for the same (timestamp, player) replace earlier ones.
        std::string key = row.player_id;
        groups.back().rows.insert_or_assign(std::move(key), std::make_pair(std::move(row), line));
      });

  std::vector<std::pair<std::string, std::string>> order;
  for (const auto& [id, team] : team_of) order.emplace_back(team, id);
  std::sort(order.begin(), order.end());
  std::vector<NodeUniverse::Entry> entries;
  for (auto& [team, id] : order) entries.push_back({id, team});

  TrackingData out{NodeUniverse(std::move(entries)), {}};
  out.frames.reserve(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    std::vector<NodeState> nodes;
    nodes.reserve(groups[g].rows.size());
    for (const auto& [id, entry] : groups[g].rows) {
      const TrackingRow& row = entry.first;
      NodeState s{*out.universe.find(id), {row.x, row.y}, 0.0};
      if (row.speed) {
        s.speed = *row.speed;
      } else if (g > 0) {
        if (const NodeState* prev = out.frames.back().find(s.node)) {
          const double dt = row.timestamp - groups[g - 1].timestamp;
          s.speed = link_distance(prev->position, s.position) / dt;
        }
      }
      nodes.push_back(s);
    }
    out.frames.emplace_back(groups[g].timestamp, std::move(nodes));
  }
  return out;
}

/// Writes frames back as tracking CSV with an explicit speed column.
inline void write_tracking(std::ostream& out, const NodeUniverse& universe,
                           const FrameSequence& frames) {
  out << "timestamp,player_id,team,x,y,speed\n";
  for (const auto& frame : frames) {
    const std::string t = format_double(frame.timestamp());
    for (const auto& s : frame.nodes()) {
      const auto& e = universe[s.node];
      out << t << ',' << e.node_id << ',' << e.class_label << ',' << format_double(s.position.x)
          << ',' << format_double(s.position.y) << ',' << format_double(s.speed) << '\n';
    }
  }
}

/// Replaces every frame's links according to `cfg`. In proximity mode a link
/// joins two present nodes no farther apart than the radius.
inline FrameSequence induce_links(const FrameSequence& frames, const NodeUniverse& universe,
                                  const LinkInducerConfig& cfg) {
  cfg.validate();
  if (cfg.mode == LinkInducerConfig::Mode::Provided) return frames;
  FrameSequence out;
  out.reserve(frames.size());
  for (const auto& frame : frames) {
    const auto nodes = frame.nodes();
    std::vector<LinkKey> links;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      for (std::size_t j = i + 1; j < nodes.size(); ++j) {
        if (nodes[i].node >= universe.size() || nodes[j].node >= universe.size()) {
          throw Error(Errc::MissingPositions, "node outside universe has no position");
        }
        if (cfg.cross_team_only &&
            universe[nodes[i].node].class_label == universe[nodes[j].node].class_label) {
          continue;
        }
        if (link_distance(nodes[i].position, nodes[j].position) <= cfg.proximity_radius) {
          links.push_back(LinkKey::of(nodes[i].node, nodes[j].node));
        }
      }
    }
    out.push_back(frame.with_links(std::move(links)));
  }
  return out;
}

/// Attaches links from a `timestamp,player_a,player_b` CSV. Each row must name
/// an existing frame timestamp and two players present in it.
inline FrameSequence attach_links(const FrameSequence& frames, const NodeUniverse& universe,
                                  std::istream& in) {
  std::vector<std::vector<LinkKey>> links(frames.size());
  csv::for_each_row(
      in, [](const auto&, std::size_t) {},
      [&](const std::vector<std::string_view>& f, std::size_t line) {
        if (f.size() != 3) throw Error(Errc::MalformedRow, "links row needs 3 fields", line);
        auto t = csv::to_double(f[0]);
        auto a = universe.find(f[1]);
        auto b = universe.find(f[2]);
        if (!t || !a || !b) throw Error(Errc::MalformedRow, "unknown timestamp or player", line);
        auto it = std::lower_bound(frames.begin(), frames.end(), *t,
                                   [](const TimestampedGraph& g, double v) { return g.timestamp() < v; });
        if (it == frames.end() || it->timestamp() != *t) {
          throw Error(Errc::MalformedRow, "no frame at timestamp " + std::string(f[0]), line);
        }
        if (!it->has_node(*a) || !it->has_node(*b) || *a == *b) {
          throw Error(Errc::MalformedRow, "link endpoints not both present", line);
        }
        links[static_cast<std::size_t>(it - frames.begin())].push_back(LinkKey::of(*a, *b));
      });
  FrameSequence out;
  out.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) out.push_back(frames[i].with_links(links[i]));
  return out;
}

/// Parses play-by-play CSV, sorted by timestamp (stable). Empty score fields
/// repeat the previous score. Scores may not decrease for either team.
inline std::vector<EventRecord> parse_events(std::istream& in) {
  std::vector<std::pair<EventRecord, std::size_t>> rows;
  csv::for_each_row(
      in, [](const auto&, std::size_t) {},
      [&](const std::vector<std::string_view>& f, std::size_t line) {
        if (f.size() < 2 || f.size() > 6) {
          throw Error(Errc::MalformedRow, "events row needs 2 to 6 fields", line);
        }
        auto field = [&](std::size_t i) { return i < f.size() ? f[i] : std::string_view{}; };
        EventRecord e;
        auto t = csv::to_double(f[0]);
        if (!t || f[1].empty()) throw Error(Errc::MalformedRow, "bad timestamp or type", line);
        e.timestamp = *t;
        e.event_type = f[1];
        e.score_a = -1;
        e.score_b = -1;
        for (auto [idx, dst] : {std::pair{2u, &e.score_a}, std::pair{3u, &e.score_b}}) {
          if (field(idx).empty()) continue;
          auto v = csv::to_int(field(idx));
          if (!v || *v < 0) throw Error(Errc::MalformedRow, "bad score", line);
          *dst = *v;
        }
        if (!field(4).empty()) e.major_player = std::string(field(4));
        if (!field(5).empty()) e.secondary_player = std::string(field(5));
        rows.emplace_back(std::move(e), line);
      });
  std::stable_sort(rows.begin(), rows.end(), [](const auto& l, const auto& r) {
    return l.first.timestamp < r.first.timestamp;
  });
  std::vector<EventRecord> out;
  out.reserve(rows.size());
  std::int64_t a = 0, b = 0;
  for (auto& [e, line] : rows) {
    if (e.score_a < 0) e.score_a = a;
    if (e.score_b < 0) e.score_b = b;
    if (e.score_a < a || e.score_b < b) {
      throw Error(Errc::ScoreRegression, "score decreases", line);
    }
    a = e.score_a;
    b = e.score_b;
    out.push_back(std::move(e));
  }
  return out;
}

/// A fully ingested dataset: frames with links, events, and the universe.
struct Dataset {
  NodeUniverse universe;
  FrameSequencePtr frames;
  std::vector<EventRecord> events;
  DatasetConfig config;
};

/// Parses tracking plus optional links/events streams. In `Provided` mode the
/// links stream supplies topology (frames stay link-free without it).
inline Dataset load_dataset(std::istream& tracking, std::istream* links, std::istream* events,
                            const DatasetConfig& cfg = {}) {
  cfg.links.validate();
  TrackingData parsed = parse_tracking(tracking, cfg);
  if (parsed.frames.empty()) throw Error(Errc::EmptyDataset, "tracking file has no rows");
  FrameSequence frames;
  if (cfg.links.mode == LinkInducerConfig::Mode::Provided) {
    frames = links ? attach_links(parsed.frames, parsed.universe, *links) : std::move(parsed.frames);
  } else {
    frames = induce_links(parsed.frames, parsed.universe, cfg.links);
  }
  Dataset out;
  out.universe = std::move(parsed.universe);
  out.frames = std::make_shared<const FrameSequence>(std::move(frames));
  if (events) out.events = parse_events(*events);
  out.config = cfg;
  return out;
}

}  // namespace dgsnap

#endif  // DGSNAP_INGEST_HPP
