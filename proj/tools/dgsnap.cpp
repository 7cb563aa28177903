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

// Batch driver: ingest, tree, project, export, serve.

#include <CLI11.hpp>
#include <httplib.h>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "dgsnap/error.hpp"
#include "dgsnap/json_io.hpp"
#include "dgsnap/pipeline.hpp"
#include "dgsnap/service.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

bool is_config_error(dgsnap::Errc code) {
  switch (code) {
    case dgsnap::Errc::InvalidConfig:
    case dgsnap::Errc::InvalidThresholds:
    case dgsnap::Errc::UnknownUnits:
      return true;
    default:
      return false;
  }
}

int fail(int exit_code, const std::string& code, const std::string& message) {
  std::cerr << dgsnap::json{{"error", {{"code", code}, {"message", message}}}}.dump() << '\n';
  return exit_code;
}

// "node,link,gap[,count]"
dgsnap::ChangeThresholds parse_layer(const std::string& text) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    parts.push_back(text.substr(start, comma == std::string::npos ? comma : comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (parts.size() < 3 || parts.size() > 4) {
    throw dgsnap::Error(dgsnap::Errc::InvalidThresholds,
                        "--layer expects node,link,gap[,count], got '" + text + "'");
  }
  auto num = [&](const std::string& s) {
    auto v = dgsnap::csv::to_double(s);
    if (!v) throw dgsnap::Error(dgsnap::Errc::InvalidThresholds, "bad number '" + s + "'");
    return *v;
  };
  dgsnap::ChangeThresholds th{num(parts[0]), num(parts[1]), num(parts[2]), std::nullopt};
  if (parts.size() == 4 && !parts[3].empty()) {
    auto c = dgsnap::csv::to_int(parts[3]);
    if (!c || *c < 1) throw dgsnap::Error(dgsnap::Errc::InvalidThresholds, "bad frame count '" + parts[3] + "'");
    th.frame_count_max = static_cast<std::uint32_t>(*c);
  }
  th.validate();
  return th;
}

struct Flags {
  std::string tracking, links, events, dataset_config, config_file, output = ".";
  std::string link_mode;
  std::optional<double> radius;
  bool cross_team_only = false;
  std::vector<std::string> layers;
  std::optional<double> perplexity, learning_rate;
  std::optional<int> iterations;
  std::optional<std::uint64_t> seed;
};

void add_input_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--tracking", f.tracking, "Tracking CSV (timestamp,player_id,team,x,y[,speed])");
  cmd->add_option("--links", f.links, "Links CSV (timestamp,player_a,player_b)");
  cmd->add_option("--events", f.events, "Play-by-play CSV");
  cmd->add_option("--dataset-config", f.dataset_config, "Dataset config JSON file");
  cmd->add_option("--link-mode", f.link_mode, "proximity | provided")
      ->check(CLI::IsMember({"proximity", "provided"}));
  cmd->add_option("--radius", f.radius, "Proximity radius in court units");
  cmd->add_flag("--cross-team-only", f.cross_team_only, "Only induce links between teams");
  cmd->add_option("--config", f.config_file, "Run config JSON; overrides flags");
  cmd->add_option("-o,--out", f.output, "Output directory");
}

void add_schedule_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--layer", f.layers, "Thresholds for one layer: node,link,gap[,count] (repeatable)");
}

void add_projection_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--perplexity", f.perplexity);
  cmd->add_option("--iters", f.iterations);
  cmd->add_option("--learning-rate", f.learning_rate);
  cmd->add_option("--seed", f.seed);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw dgsnap::Error(dgsnap::Errc::InvalidConfig, "cannot read " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

dgsnap::RunConfig to_run_config(const Flags& f) {
  dgsnap::RunConfig cfg;
  cfg.tracking = f.tracking;
  if (!f.links.empty()) cfg.links = f.links;
  if (!f.events.empty()) cfg.events = f.events;
  cfg.output_dir = f.output;
  if (!f.dataset_config.empty()) {
    cfg.dataset = dgsnap::dataset_config_from_json(dgsnap::json::parse(slurp(f.dataset_config)));
  }
  if (f.link_mode == "provided") cfg.dataset.links.mode = dgsnap::LinkInducerConfig::Mode::Provided;
  if (f.link_mode == "proximity") cfg.dataset.links.mode = dgsnap::LinkInducerConfig::Mode::Proximity;
  if (f.radius) cfg.dataset.links.proximity_radius = *f.radius;
  if (f.cross_team_only) cfg.dataset.links.cross_team_only = true;
  for (const auto& l : f.layers) cfg.schedule.push_back(parse_layer(l));
  if (f.perplexity) cfg.projection.perplexity = *f.perplexity;
  if (f.iterations) cfg.projection.iterations = *f.iterations;
  if (f.learning_rate) cfg.projection.learning_rate = *f.learning_rate;
  if (f.seed) cfg.projection.seed = *f.seed;
  if (!f.config_file.empty()) {
    dgsnap::apply_run_config_json(cfg, dgsnap::json::parse(slurp(f.config_file)));
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dgsnap: dynamic graph snapshot engine"};
  app.require_subcommand(1);
  Flags flags;

  auto* ingest = app.add_subcommand("ingest", "Parse inputs and write per-frame features");
  add_input_flags(ingest, flags);
  auto* tree = app.add_subcommand("tree", "Build the snapshot tree from a threshold schedule");
  add_input_flags(tree, flags);
  add_schedule_flags(tree, flags);
  auto* project = app.add_subcommand("project", "Project frame vectors onto the plane");
  add_input_flags(project, flags);
  add_projection_flags(project, flags);
  auto* exp = app.add_subcommand("export", "Run the full pipeline and write all artifacts");
  add_input_flags(exp, flags);
  add_schedule_flags(exp, flags);
  add_projection_flags(exp, flags);

  auto* serve = app.add_subcommand("serve", "Start the HTTP analysis service");
  std::string host = "127.0.0.1", data_dir = "./dgsnap-data";
  int port = 8080;
  serve->add_option("--host", host);
  serve->add_option("--port", port);
  serve->add_option("--data-dir", data_dir);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(kExitConfig, "UsageError", e.what());
  }

  try {
    if (serve->parsed()) {
      dgsnap::AnalysisService service(data_dir);
      httplib::Server server;
      service.mount(server);
      std::cerr << "listening on " << host << ':' << port << '\n';
      if (!server.listen(host, port)) return fail(kExitRuntime, "ListenFailed", "cannot bind " + host);
      return kExitOk;
    }
    dgsnap::Stage stage = dgsnap::Stage::Export;
    if (ingest->parsed()) stage = dgsnap::Stage::Ingest;
    if (tree->parsed()) stage = dgsnap::Stage::Tree;
    if (project->parsed()) stage = dgsnap::Stage::Project;
    const dgsnap::RunConfig cfg = to_run_config(flags);
    const auto artifacts = dgsnap::run_pipeline(cfg, stage);
    for (const auto& p : artifacts.written) std::cout << p.string() << '\n';
    return kExitOk;
  } catch (const dgsnap::Error& e) {
    return fail(is_config_error(e.code()) ? kExitConfig : kExitRuntime, std::string(dgsnap::to_string(e.code())),
                e.what());
  } catch (const dgsnap::json::exception& e) {
    return fail(kExitConfig, "MalformedJson", e.what());
  } catch (const std::exception& e) {
    return fail(kExitRuntime, "RuntimeError", e.what());
  }
}
