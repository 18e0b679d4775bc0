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

#pragma once

// HTTP + JSON front end for VerificationService.
//
//   POST   /users/{id}/enroll   {"session": 1|2, "svc": "<svc text>"}
//                               -> {"user", "state", "counts": {"session1", "session2"}}
//   POST   /users/{id}/verify   {"svc": "<svc text>"}
//                               -> {"user", "score", "threshold", "decision"}
//   GET    /users/{id}          -> {"user", "state", "trained", "counts", "threshold", "model"?}
//   DELETE /users/{id}          -> {"user", "state": "reset"}
//
// Errors: {"error": "<ErrorCode>", "message": "..."} with 400 (bad request /
// unparsable signature), 404 (unknown user), 409 (quota, already trained,
// not trained) or 500.

#include <filesystem>
#include <memory>
#include <string>

#include "sigverify/service.hpp"

namespace sigverify::service {

struct HttpConfig {
  std::string host = "127.0.0.1";
  int port = 8080;                    // 0 picks a free port
  std::filesystem::path static_dir;   // optional asset bundle served at /
};

class HttpServer {
 public:
  HttpServer(VerificationService& service, HttpConfig config);
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds the socket; returns the bound port.
  int bind();
  /// Serves until stop(); bind() is called first if needed.
  void listen();
  void stop();
  int port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace sigverify::service
