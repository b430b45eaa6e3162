// Copyright 2026 The Data Station Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <csignal>
#include <iostream>

#include "CLI11.hpp"
#include "station/api.hpp"
#include "station/demo.hpp"
#include "station/http_server.hpp"

namespace {

station::HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

int run_demo(const std::string& workdir, const std::string& data, const std::string& capsule) {
  auto report = station::run_demo(workdir, data, capsule);
  for (const auto& step : report.steps) std::cout << step.name << ": " << step.detail << '\n';
  std::cout << "--- audit log ---\n" << report.audit_log;
  std::cout << (report.completed ? "demo completed\n" : "demo did not complete\n");
  return report.completed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data station server"};
  app.name("stationd");
  std::string config_path, key_out, demo_dir;
  std::string data_dir = "data/demo";
  std::string capsule = "docs/capsules/deliveries_qbe.json";
  app.add_option("-c,--config", config_path, "Station configuration file");
  app.add_option("--generate-key", key_out, "Write a fresh token-signing key file and exit");
  app.add_option("--demo", demo_dir, "Run the scripted demo in this (new) directory and exit");
  app.add_option("--demo-data", data_dir, "Demo corpus directory")->capture_default_str();
  app.add_option("--demo-capsule", capsule, "Demo capsule document")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    if (!key_out.empty()) {
      station::write_key_file(key_out);
      std::cout << "wrote " << key_out << '\n';
      return 0;
    }
    if (!demo_dir.empty()) return run_demo(demo_dir, data_dir, capsule);
    if (config_path.empty()) {
      std::cerr << "stationd: --config is required\n";
      return 2;
    }
    station::Station st(station::load_config(config_path));
    station::Api api(st);
    station::HttpServer server(api);
    const auto& cfg = st.config();
    int port = server.bind(cfg.listen_host, cfg.listen_port);
    if (port < 0) {
      std::cerr << "stationd: cannot bind " << cfg.listen_host << ':' << cfg.listen_port << '\n';
      return 1;
    }
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cout << "listening on " << cfg.listen_host << ':' << port << std::endl;
    server.run();
    return 0;
  } catch (const station::Error& e) {
    std::cerr << "stationd: " << e.name() << ": " << e.what() << '\n';
    for (const auto& d : e.details()) std::cerr << "  " << d << '\n';
    return 1;
  }
}
