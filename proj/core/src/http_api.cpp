// Copyright 2026 The sigverify Authors
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

#include "sigverify/http_api.hpp"

#include <atomic>

#include "httplib.h"
#include "json.hpp"
#include "sigverify/error.hpp"

using nlohmann::json;

namespace sigverify::service {
namespace {

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownUser: return 404;
    case ErrorCode::QuotaExceeded:
    case ErrorCode::AlreadyTrained:
    case ErrorCode::NotTrained: return 409;
    case ErrorCode::ParseError:
    case ErrorCode::InvalidArgument: return 400;
    default: return 500;
  }
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message) {
  send_json(res, status, {{"error", code}, {"message", message}});
}

json counts_json(const SessionCounts& counts) {
  return {{"session1", counts.session1},
          {"session2", counts.session2},
          {"session1_quota", kSession1Quota},
          {"session2_quota", kSession2Quota}};
}

json status_json(const UserStatus& s) {
  json j = {{"user", s.user},
            {"state", to_string(s.state)},
            {"trained", s.state == EnrollmentState::Trained},
            {"counts", counts_json(s.counts)},
            {"threshold", s.threshold},
            {"created", s.created},
            {"updated", s.updated}};
  if (s.model) {
    j["model"] = {{"n_states", s.model->n_states},
                  {"n_mixtures", s.model->n_mixtures},
                  {"dim", s.model->dim},
                  {"iterations", s.model->iterations}};
  }
  return j;
}

// Wraps a handler so library errors map onto HTTP status codes.
template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const Error& e) {
      send_error(res, status_for(e.code()), to_string(e.code()), e.what());
    } catch (const json::exception& e) {
      send_error(res, 400, "InvalidArgument", std::string("bad JSON body: ") + e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "Internal", e.what());
    }
  };
}

json parse_body(const httplib::Request& req) {
  json body = json::parse(req.body);
  if (!body.is_object()) throw Error(ErrorCode::InvalidArgument, "request body must be a JSON object");
  return body;
}

std::string svc_field(const json& body) {
  if (!body.contains("svc") || !body["svc"].is_string()) {
    throw Error(ErrorCode::InvalidArgument, "field 'svc' (string) is required");
  }
  return body["svc"].get<std::string>();
}

}  // namespace

struct HttpServer::Impl {
  VerificationService& service;
  HttpConfig config;
  httplib::Server server;
  std::atomic<int> port{-1};

  Impl(VerificationService& s, HttpConfig c) : service(s), config(std::move(c)) { routes(); }

  void routes() {
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Headers", "Content-Type"},
                                {"Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS"}});
    server.Options(R"(/users/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    server.Post(R"(/users/([^/]+)/enroll)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = parse_body(req);
      if (!body.contains("session") || !body["session"].is_number_integer()) {
        throw Error(ErrorCode::InvalidArgument, "field 'session' (1 or 2) is required");
      }
      const auto status = service.enroll_submit(req.matches[1], body["session"].get<int>(), svc_field(body));
      send_json(res, 200, {{"user", status.user}, {"state", to_string(status.state)}, {"counts", counts_json(status.counts)}});
    }));

    server.Post(R"(/users/([^/]+)/verify)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = parse_body(req);
      const auto d = service.verify(req.matches[1], svc_field(body));
      send_json(res, 200, {{"user", d.user},
                           {"score", d.score},
                           {"threshold", d.threshold},
                           {"decision", d.accept ? "accept" : "reject"},
                           {"timestamp", d.timestamp}});
    }));

    server.Get(R"(/users/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, 200, status_json(service.user_status(req.matches[1])));
    }));

    server.Delete(R"(/users/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      service.reset(req.matches[1]);
      send_json(res, 200, {{"user", std::string(req.matches[1])}, {"state", "reset"}});
    }));

    server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("ok\n", "text/plain");
    });

    if (!config.static_dir.empty()) server.set_mount_point("/", config.static_dir.string());
  }
};

HttpServer::HttpServer(VerificationService& service, HttpConfig config)
    : impl_(std::make_unique<Impl>(service, std::move(config))) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind() {
  if (impl_->port >= 0) return impl_->port;
  int port = impl_->config.port;
  if (port == 0) {
    port = impl_->server.bind_to_any_port(impl_->config.host);
  } else if (!impl_->server.bind_to_port(impl_->config.host, port)) {
    port = -1;
  }
  if (port < 0) {
    throw Error(ErrorCode::Io, "cannot bind " + impl_->config.host + ":" + std::to_string(impl_->config.port));
  }
  impl_->port = port;
  return port;
}

void HttpServer::listen() {
  bind();
  impl_->server.listen_after_bind();
}

void HttpServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

int HttpServer::port() const { return impl_->port; }

}  // namespace sigverify::service
