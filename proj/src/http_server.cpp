#include "beergame/http_server.hpp"

#include <atomic>
#include <sstream>

#include <fmt/format.h>

#include "beergame/errors.hpp"
#include "httplib.h"

namespace beergame {

using nlohmann::json;

namespace {

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

json event_json(const SessionEvent& e) {
  return {{"seq", e.seq}, {"type", e.type}, {"period", e.period}, {"data", e.data}};
}

json parse_body(const httplib::Request& req) {
  try {
    return req.body.empty() ? json::object() : json::parse(req.body);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("request body is not valid JSON: ") + e.what());
  }
}

std::string required_string(const json& body, const char* key) {
  if (!body.contains(key) || !body.at(key).is_string()) {
    throw ConfigError(fmt::format("missing string field '{}'", key));
  }
  return body.at(key).get<std::string>();
}

std::uint64_t since_param(const httplib::Request& req) {
  if (!req.has_param("since")) return 0;
  try {
    return std::stoull(req.get_param_value("since"));
  } catch (const std::exception&) {
    throw ConfigError("since must be a non-negative integer");
  }
}

// Maps domain errors onto HTTP status codes.
httplib::Server::Handler guarded(std::function<void(const httplib::Request&, httplib::Response&)> f) {
  return [f = std::move(f)](const httplib::Request& req, httplib::Response& res) {
    auto fail = [&](int status, const char* kind, const std::exception& e) {
      send_json(res, {{"v", kProtocolVersion}, {"error", kind}, {"message", e.what()}}, status);
    };
    try {
      f(req, res);
    } catch (const NotFoundError& e) {
      fail(404, "not_found", e);
    } catch (const StateError& e) {
      fail(409, "conflict", e);
    } catch (const ConfigError& e) {
      fail(400, "bad_request", e);
    } catch (const FormatError& e) {
      fail(400, "bad_request", e);
    } catch (const json::exception& e) {
      fail(400, "bad_request", e);
    } catch (const std::exception& e) {
      fail(500, "internal", e);
    }
  };
}

}  // namespace

struct HttpServer::Impl {
  SessionManager& sessions;
  httplib::Server server;
  std::thread serve_thread;
  std::thread tick_thread;
  std::atomic<bool> stopping{false};

  explicit Impl(SessionManager& s) : sessions(s) {}

  void routes(const std::string& static_dir) {
    if (!static_dir.empty()) server.set_mount_point("/", static_dir);

    server.Get("/api/v1/presets", guarded([this](const auto&, auto& res) {
      send_json(res, SessionManager::presets_json());
    }));

    server.Post("/api/v1/sessions", guarded([this](const auto& req, auto& res) {
      const CreatedSession c = sessions.create(SessionPlan::from_json(parse_body(req)));
      send_json(res, {{"v", kProtocolVersion}, {"session", c.session}, {"tokens", c.tokens}}, 201);
    }));

    server.Post("/api/v1/join", guarded([this](const auto& req, auto& res) {
      send_json(res, sessions.join(required_string(parse_body(req), "token")));
    }));

    server.Post(R"(/api/v1/sessions/([0-9a-f]+)/start)", guarded([this](const auto& req, auto& res) {
      send_json(res, sessions.start(req.matches[1]));
    }));

    server.Get("/api/v1/state", guarded([this](const auto& req, auto& res) {
      if (!req.has_param("token")) throw ConfigError("missing token");
      send_json(res, sessions.get_state(req.get_param_value("token")));
    }));

    server.Post("/api/v1/orders", guarded([this](const auto& req, auto& res) {
      const json body = parse_body(req);
      if (!body.contains("order") || !body.at("order").is_number_integer()) {
        throw ConfigError("order must be a non-negative integer");
      }
      send_json(res, sessions.submit_order(required_string(body, "token"),
                                           body.at("order").template get<Units>()));
    }));

    server.Get(R"(/api/v1/sessions/([0-9a-f]+)/events)", guarded([this](const auto& req, auto& res) {
      json list = json::array();
      for (const auto& e : sessions.events(req.matches[1], since_param(req))) {
        list.push_back(event_json(e));
      }
      send_json(res, {{"v", kProtocolVersion}, {"events", list}});
    }));

    server.Get(R"(/api/v1/sessions/([0-9a-f]+)/trace)", guarded([this](const auto& req, auto& res) {
      std::ostringstream csv;
      write_trace_csv(csv, sessions.trace(req.matches[1]));
      res.set_content(csv.str(), "text/csv");
    }));

    server.Get(R"(/api/v1/sessions/([0-9a-f]+)/stream)", guarded([this](const auto& req, auto& res) {
      const std::string id = req.matches[1];
      sessions.status(id);  // 404 before the stream opens
      const std::uint64_t start = since_param(req);
      res.set_chunked_content_provider(
          "text/event-stream", [this, id, next = start](std::size_t, httplib::DataSink& sink) mutable {
            if (stopping) {
              sink.done();
              return true;
            }
            if (!sessions.wait_for_event(id, next, std::chrono::milliseconds(500))) {
              const std::string ping = ": keep-alive\n\n";
              return sink.write(ping.data(), ping.size());
            }
            bool finished = false;
            for (const auto& e : sessions.events(id, next)) {
              const std::string msg = fmt::format("id: {}\nevent: {}\ndata: {}\n\n", e.seq, e.type,
                                                  event_json(e).dump());
              if (!sink.write(msg.data(), msg.size())) return false;
              next = e.seq + 1;
              finished = finished || e.type == "finished";
            }
            if (finished) sink.done();
            return true;
          });
    }));
  }

  void start_ticker() {
    tick_thread = std::thread([this] {
      while (!stopping) {
        sessions.tick();
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
      }
    });
  }
};

HttpServer::HttpServer(SessionManager& sessions, std::string static_dir)
    : impl_(std::make_unique<Impl>(sessions)) {
  impl_->routes(static_dir);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host)
                              : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw ConfigError(fmt::format("cannot bind {}:{}", host, port));
  impl_->start_ticker();
  impl_->serve_thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void HttpServer::run(const std::string& host, int port) {
  if (!impl_->server.bind_to_port(host, port)) {
    throw ConfigError(fmt::format("cannot bind {}:{}", host, port));
  }
  impl_->start_ticker();
  impl_->server.listen_after_bind();
}

void HttpServer::stop() {
  if (!impl_) return;
  impl_->stopping = true;
  impl_->server.stop();
  if (impl_->serve_thread.joinable()) impl_->serve_thread.join();
  if (impl_->tick_thread.joinable()) impl_->tick_thread.join();
}

}  // namespace beergame
