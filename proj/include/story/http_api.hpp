// HTTP front end for design sessions.
//
// Routes:
//   POST /sessions                              create (optional JSON body)
//   GET  /sessions                              list ids
//   GET  /sessions/{id}                         status
//   GET  /sessions/{id}/target                  working graph + evaluation
//   PUT  /sessions/{id}/target                  replace the working graph
//   GET  /sessions/{id}/grid?x=&y=              snapshot document
//   GET  /sessions/{id}/cells/{i}/{j}?x=&y=     elite view
//   POST /sessions/{id}/cells/{i}/{j}/adopt     elite becomes the working graph
//   PUT  /sessions/{id}/dimensions              dimension spec
//   PUT  /sessions/{id}/constraints             budgets, or null to clear
//   POST /sessions/{id}/pause, /resume
//   GET  /sessions/{id}/stream                  server-sent snapshot events
//
// Errors are {"error": code, "detail": message} with 400 or 404.

#pragma once

#include <chrono>

#include "story/session.hpp"

namespace httplib {
class Server;
}

namespace story {

struct ApiOptions {
  /// Minimum spacing between two pushes on one stream.
  std::chrono::milliseconds stream_interval{1000};
  std::chrono::milliseconds keepalive{5000};
};

/// Registers every route on `server`. The manager must outlive the server.
void mount_api(httplib::Server& server, SessionManager& sessions, ApiOptions options = {});

/// Error code and HTTP status for an exception thrown by a handler.
struct ApiError {
  int status = 500;
  std::string code;
  std::string detail;
};
ApiError classify(const std::exception& e);

}  // namespace story
