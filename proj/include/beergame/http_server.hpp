#pragma once

#include <memory>
#include <string>
#include <thread>

#include "beergame/server.hpp"

namespace beergame {

// JSON over HTTP in front of a SessionManager. Routes live under /api/v1.
class HttpServer {
 public:
  explicit HttpServer(SessionManager& sessions, std::string static_dir = {});
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds and serves on a background thread; port 0 picks a free port.
  // Returns the bound port.
  int start(const std::string& host, int port);
  // Serves on the calling thread until stop().
  void run(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace beergame
