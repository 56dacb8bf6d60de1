// Copyright 2026 The m4d Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "m4d/fitting.hpp"
#include "m4d/model_registry.hpp"
#include "m4d/sequence.hpp"

namespace m4d {

inline constexpr std::uint16_t kDefaultPort = 7464;

struct ServerConfig {
  std::string address = "127.0.0.1";
  // 0 picks an ephemeral port; see Server::port().
  std::uint16_t port = kDefaultPort;
  // Optional directory of static viewer assets served over plain HTTP GET.
  std::filesystem::path static_dir;
  FitConfig fit;
  // Stop run() on SIGINT / SIGTERM.
  bool handle_signals = false;
};

/**
 * WebSocket front end for Session. Each connection gets its own Session and
 * playback timer; every handler runs on the server's single io thread, so
 * message handling and frame emission for a session never interleave.
 * Websocket text messages carry newline-delimited JSON objects.
 */
class Server {
 public:
  Server(ServerConfig config, std::shared_ptr<const ModelRegistry> registry,
         std::shared_ptr<const LandmarkSequence> sequence);
  ~Server();

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Bound port, valid after construction.
  std::uint16_t port() const;

  // Blocks until stop() is called.
  void run();
  // Safe to call from any thread.
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Port from the M4D_PORT environment variable, or fallback.
std::uint16_t port_from_env(std::uint16_t fallback = kDefaultPort);

}  // namespace m4d
