#include "promptlit/http_api.hpp"

#include <httplib.h>

namespace promptlit {

using nlohmann::json;

struct HttpApi::Impl {
  PracticeService& service;
  httplib::Server server;

  explicit Impl(PracticeService& s) : service(s) { routes(); }

  static void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded()) throw PreconditionError("request body is not valid JSON");
    return body;
  }

  template <class Fn>
  static httplib::Server::Handler guarded(Fn fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const std::exception& e) {
        const ApiError err = classify_error(e);
        send_json(res, err.status, err.to_json());
      }
    };
  }

  void session_post(const std::string& action, json (PracticeService::*op)(const std::string&, const json&)) {
    server.Post("/sessions/([^/]+)/" + action, guarded([this, op](const httplib::Request& req, httplib::Response& res) {
                  send_json(res, 200, (service.*op)(req.matches[1], parse_body(req)));
                }));
  }

  void routes() {
    server.Get("/scenarios", guarded([this](const httplib::Request&, httplib::Response& res) {
                 send_json(res, 200, service.scenarios_json());
               }));
    server.Get("/items", guarded([this](const httplib::Request&, httplib::Response& res) {
                 send_json(res, 200, service.items_json());
               }));
    server.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
                  send_json(res, 201, service.create_session(parse_body(req)));
                }));
    server.Get("/sessions/([^/]+)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 send_json(res, 200, service.get_session(req.matches[1]));
               }));
    session_post("survey", &PracticeService::submit_survey);
    session_post("test", &PracticeService::submit_test);
    session_post("warmup", &PracticeService::submit_warmup);
    session_post("prompt", &PracticeService::submit_prompt);
    session_post("advance", &PracticeService::advance);
    session_post("reflection", &PracticeService::submit_reflection);
    server.Post("/sessions/([^/]+)/check", guarded([this](const httplib::Request& req, httplib::Response& res) {
                  send_json(res, 200, service.check(req.matches[1]));
                }));

    server.Get("/admin/export", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const std::string table = req.has_param("table") ? req.get_param_value("table") : "responses";
                 res.status = 200;
                 res.set_content(service.export_table(table), "text/csv");
               }));
    server.Post("/admin/labels", guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const std::string type = req.get_header_value("Content-Type");
                  const bool is_csv = type.find("csv") != std::string::npos;
                  send_json(res, 200, service.import_labels(req.body, is_csv));
                }));
    server.Get("/admin/analysis", guarded([this](const httplib::Request&, httplib::Response& res) {
                 send_json(res, 200, service.analysis());
               }));
  }
};

HttpApi::HttpApi(PracticeService& service) : impl_(std::make_unique<Impl>(service)) {}
HttpApi::~HttpApi() { stop(); }

int HttpApi::bind_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }
bool HttpApi::listen_after_bind() { return impl_->server.listen_after_bind(); }
bool HttpApi::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }
void HttpApi::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}
void HttpApi::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace promptlit
