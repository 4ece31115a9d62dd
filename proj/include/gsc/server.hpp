#pragma once

#include <cstdint>
#include <functional>
#include <string>

namespace gsc {

struct ServerOptions {
  std::string host = "127.0.0.1";
  std::uint16_t port = 8787;
  double park_seconds = 60.0;  // how long a disconnected session waits for a resume
  std::size_t queue_cap = 8;   // outgoing snapshots buffered per client before dropping
  std::size_t max_frame_bytes = 64 * 1024;  // larger client frames close the connection
};

/// Serves WebSocket sessions on /session and the catalog on GET /scenarios
/// until SIGINT/SIGTERM. `on_listening` is called with the bound port (useful
/// with port 0). Returns a process exit code.
int run_server(const ServerOptions& options,
               const std::function<void(std::uint16_t)>& on_listening = {});

}  // namespace gsc
