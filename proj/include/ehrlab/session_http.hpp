#pragma once

// HTTP binding of the session service.

#include <string>

#include <httplib.h>

#include "ehrlab/session.hpp"

namespace ehrlab {

inline void bind_routes(httplib::Server& server, SessionService& service) {
  auto forward = [&service](const httplib::Request& req, httplib::Response& res) {
    auto out = service.handle(req.method, req.path, req.body);
    res.status = out.status;
    res.set_content(out.body.dump(), "application/json");
  };
  server.Post("/sessions", forward);
  server.Get(R"(/sessions/[^/]+)", forward);
  server.Post(R"(/sessions/[^/]+/moves)", forward);
  server.Get(R"(/sessions/[^/]+/hint)", forward);
}

}  // namespace ehrlab
