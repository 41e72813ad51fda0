#include "story/http_api.hpp"

#include <thread>

#include "httplib.h"
#include "story/error.hpp"
#include "story/graph_io.hpp"

namespace story {

using ojson = nlohmann::ordered_json;

ApiError classify(const std::exception& e) {
  if (dynamic_cast<const NoElite*>(&e)) return {404, "no_elite", e.what()};
  if (dynamic_cast<const NotFound*>(&e)) return {404, "not_found", e.what()};
  if (dynamic_cast<const UnknownDimension*>(&e)) return {400, "unknown_dimension", e.what()};
  if (dynamic_cast<const ParseError*>(&e)) return {400, "parse_error", e.what()};
  if (dynamic_cast<const IntegrityError*>(&e)) return {400, "integrity_error", e.what()};
  if (dynamic_cast<const Duplicate*>(&e)) return {400, "integrity_error", e.what()};
  if (dynamic_cast<const InvalidArgument*>(&e)) return {400, "invalid_argument", e.what()};
  return {500, "internal", e.what()};
}

namespace {

using Handler = std::function<ojson(const httplib::Request&, httplib::Response&)>;

void send_json(httplib::Response& res, int status, const ojson& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

httplib::Server::Handler wrap(Handler h) {
  return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
    try {
      res.status = 200;
      ojson body = h(req, res);
      send_json(res, res.status, body);
    } catch (const std::exception& e) {
      auto err = classify(e);
      send_json(res, err.status, {{"error", err.code}, {"detail", err.detail}});
    }
  };
}

nlohmann::json parse_body(const httplib::Request& req, bool allow_empty) {
  if (req.body.find_first_not_of(" \t\r\n") == std::string::npos) {
    if (allow_empty) return nullptr;
    throw ParseError("", "request body is empty");
  }
  try {
    return nlohmann::json::parse(req.body);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("byte " + std::to_string(e.byte), "malformed JSON");
  }
}

std::optional<std::pair<Dimension, Dimension>> projection(const httplib::Request& req) {
  const bool hx = req.has_param("x"), hy = req.has_param("y");
  if (!hx && !hy) return std::nullopt;
  if (hx != hy) throw InvalidArgument("projection needs both x and y");
  return std::make_pair(parse_dimension(req.get_param_value("x")),
                        parse_dimension(req.get_param_value("y")));
}

int cell_index(const std::string& s) {
  try {
    return std::stoi(s);
  } catch (const std::exception&) {
    throw InvalidArgument("bad cell index '" + s + "'");
  }
}

std::string sse_event(const ojson& doc) { return "event: snapshot\ndata: " + doc.dump() + "\n\n"; }

}  // namespace

void mount_api(httplib::Server& server, SessionManager& sessions, ApiOptions options) {
  const std::string sid = "/sessions/([^/]+)";
  auto session = [&sessions](const httplib::Request& req) { return sessions.get(req.matches[1]); };

  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Content-Type"},
                              {"Access-Control-Allow-Methods", "GET, POST, PUT, OPTIONS"}});
  server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
  });

  server.Post("/sessions", wrap([&sessions](const httplib::Request& req, httplib::Response& res) {
                auto options = session_options_from_json(parse_body(req, true));
                auto s = sessions.create(options);
                res.status = 201;
                return ojson{{"id", s->id()},
                             {"session", info_to_json(s->info())},
                             {"target", ack_to_json(s->target())}};
              }));

  server.Get("/sessions", wrap([&sessions](const httplib::Request&, httplib::Response&) {
               return ojson{{"sessions", sessions.ids()}};
             }));

  server.Get(sid, wrap([session](const httplib::Request& req, httplib::Response&) {
               return info_to_json(session(req)->info());
             }));

  server.Get(sid + "/target", wrap([session](const httplib::Request& req, httplib::Response&) {
               return ack_to_json(session(req)->target());
             }));

  server.Put(sid + "/target", wrap([session](const httplib::Request& req, httplib::Response&) {
               auto s = session(req);
               auto doc = parse_body(req, false);
               return ack_to_json(s->update_target(graph_from_json(doc)));
             }));

  server.Get(sid + "/grid", wrap([session](const httplib::Request& req, httplib::Response&) {
               auto s = session(req);
               auto proj = projection(req);
               return snapshot_to_json(proj ? s->grid(proj->first, proj->second) : s->grid());
             }));

  server.Get(sid + R"(/cells/(-?\d+)/(-?\d+))",
             wrap([session](const httplib::Request& req, httplib::Response&) {
               auto s = session(req);
               return elite_to_json(s->elite(cell_index(req.matches[2]),
                                             cell_index(req.matches[3]), projection(req)));
             }));

  server.Post(sid + R"(/cells/(-?\d+)/(-?\d+)/adopt)",
              wrap([session](const httplib::Request& req, httplib::Response&) {
                auto s = session(req);
                return ack_to_json(s->adopt(cell_index(req.matches[2]),
                                            cell_index(req.matches[3]), projection(req)));
              }));

  server.Put(sid + "/dimensions", wrap([session](const httplib::Request& req, httplib::Response&) {
               auto s = session(req);
               s->set_dimensions(dimensions_from_json(parse_body(req, false)));
               return info_to_json(s->info());
             }));

  server.Put(sid + "/constraints",
             wrap([session](const httplib::Request& req, httplib::Response&) {
               auto s = session(req);
               auto doc = parse_body(req, true);
               s->set_constraints(doc.is_null() ? std::nullopt
                                                : std::optional(constraints_from_json(doc)));
               return info_to_json(s->info());
             }));

  server.Post(sid + "/pause", wrap([session](const httplib::Request& req, httplib::Response&) {
                auto s = session(req);
                s->pause();
                return info_to_json(s->info());
              }));

  server.Post(sid + "/resume", wrap([session](const httplib::Request& req, httplib::Response&) {
                auto s = session(req);
                s->resume();
                return info_to_json(s->info());
              }));

  server.Get(sid + "/stream", [session, options](const httplib::Request& req,
                                                  httplib::Response& res) {
    std::shared_ptr<Session> s;
    try {
      s = session(req);
    } catch (const std::exception& e) {
      auto err = classify(e);
      send_json(res, err.status, {{"error", err.code}, {"detail", err.detail}});
      return;
    }
    struct State {
      std::uint64_t seq = 0;
      std::optional<std::uint64_t> generation;
      std::chrono::steady_clock::time_point last_write{};
    };
    auto state = std::make_shared<State>();
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider(
        "text/event-stream", [s, state, options](std::size_t, httplib::DataSink& sink) {
          using clock = std::chrono::steady_clock;
          const auto now = clock::now();
          if (state->generation) {
            const auto ready = state->last_write + options.stream_interval;
            if (now < ready) {
              std::this_thread::sleep_for(
                  std::min<clock::duration>(ready - now, std::chrono::milliseconds(200)));
              return true;
            }
          }
          auto got = s->wait_published(state->seq, std::chrono::milliseconds(200));
          if (got) {
            state->seq = got->first;
            const auto& snap = got->second;
            if (!state->generation || snap.generation > *state->generation) {
              const auto text = sse_event(snapshot_to_json(snap));
              if (!sink.write(text.data(), text.size())) return false;
              state->generation = snap.generation;
              state->last_write = clock::now();
            }
          } else if (clock::now() - state->last_write >= options.keepalive) {
            static const std::string ping = ": keepalive\n\n";
            if (!sink.write(ping.data(), ping.size())) return false;
            state->last_write = clock::now();
          }
          return true;
        });
  });
}

}  // namespace story
