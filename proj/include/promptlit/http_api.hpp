#pragma once

#include <memory>
#include <string>

#include "promptlit/service.hpp"

namespace promptlit {

/// JSON-over-HTTP adapter for PracticeService.
///
/// Student routes: GET /scenarios, GET /items, POST /sessions,
/// GET /sessions/{id}, POST /sessions/{id}/{survey|test|warmup|prompt|check|advance|reflection}.
/// Operator routes: GET /admin/export?table=..., POST /admin/labels, GET /admin/analysis.
class HttpApi {
 public:
  explicit HttpApi(PracticeService& service);
  ~HttpApi();
  HttpApi(const HttpApi&) = delete;
  HttpApi& operator=(const HttpApi&) = delete;

  /// Binds to an ephemeral port and returns it; serve with listen_after_bind().
  int bind_any_port(const std::string& host = "127.0.0.1");
  bool listen_after_bind();
  /// Binds and serves until stop(); false when the address cannot be bound.
  bool listen(const std::string& host, int port);
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace promptlit
