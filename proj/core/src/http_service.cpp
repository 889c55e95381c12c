// Copyright 2026 The fms Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fms/http_service.hpp"

#include <httplib.h>

#include <nlohmann/json.hpp>

#include "text_util.hpp"

namespace fms {

using nlohmann::json;

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownSession:
      return 404;
    case ErrorCode::StageMismatch:
    case ErrorCode::SessionAlreadyComplete:
    case ErrorCode::SessionIncomplete:
      return 409;
    case ErrorCode::BadRequest:
      return 400;
    case ErrorCode::IoError:
    case ErrorCode::SchemaMismatch:
      return 500;
    default:
      return 422;
  }
}

struct HttpService::Impl {
  httplib::Server server;
};

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, ErrorCode code, const std::string& message) {
  send_json(res, http_status(code),
            {{"error", {{"code", std::string(to_string(code))}, {"message", message}}}});
}

json parse_body(const httplib::Request& req) {
  try {
    auto j = json::parse(req.body);
    if (!j.is_object()) throw Error(ErrorCode::BadRequest, "request body must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::BadRequest, std::string("malformed JSON: ") + e.what());
  }
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const Error& e) {
      send_error(res, e.code(), e.what());
    } catch (const json::exception& e) {
      send_error(res, ErrorCode::BadRequest, e.what());
    } catch (const std::exception& e) {
      send_error(res, ErrorCode::IoError, e.what());
    }
  };
}

}  // namespace

HttpService::HttpService(ServiceConfig config)
    : config_(std::move(config)),
      store_(config_.store_root, config_.store_options),
      impl_(std::make_unique<Impl>()) {
  auto& srv = impl_->server;
  const std::string origin = config_.cors_origin;
  srv.set_post_routing_handler([origin](const httplib::Request&, httplib::Response& res) {
    if (!origin.empty()) {
      res.set_header("Access-Control-Allow-Origin", origin);
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    }
  });
  srv.Options(R"(/sessions.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  srv.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
             const auto body = parse_body(req);

             std::optional<Profile> profile;
             if (body.contains("profile")) {
               profile = profile_from_json(body.at("profile"));
             } else if (body.contains("profile_id")) {
               const auto id = body.at("profile_id").get<std::int64_t>();
               const auto it = config_.profiles.find(id);
               if (it == config_.profiles.end()) {
                 throw Error(ErrorCode::InvalidProfile, "unknown profile id " + std::to_string(id));
               }
               profile = it->second;
             } else {
               throw Error(ErrorCode::InvalidProfile, "request needs 'profile' or 'profile_id'");
             }

             const auto cond_name = body.value("condition", std::string{});
             if (cond_name.empty() && !body.contains("condition_csv")) {
               throw Error(ErrorCode::InvalidCondition, "request needs 'condition'");
             }
             std::optional<AllocationSchedule> schedule;
             try {
               if (body.contains("condition_csv")) {
                 schedule = parse_condition_csv(body.at("condition_csv").get<std::string>(),
                                                ConditionId::parse(cond_name.empty() ? "custom" : cond_name));
               } else {
                 const auto it = config_.conditions.find(detail::to_lower(cond_name));
                 if (it == config_.conditions.end()) {
                   throw Error(ErrorCode::InvalidCondition, "unknown condition '" + cond_name + "'");
                 }
                 schedule = it->second;
               }
             } catch (const Error& e) {
               if (e.code() == ErrorCode::InvalidCondition) throw;
               throw Error(ErrorCode::InvalidCondition,
                           std::string(to_string(e.code())) + ": " + e.what());
             }

             PenaltyMode penalty = config_.default_penalty;
             if (body.contains("penalty_mode")) {
               penalty = PenaltyMode::parse(body.at("penalty_mode").get<std::string>());
             }
             send_json(res, 201, to_json(store_.create(*profile, *schedule, penalty)));
           }));

  srv.Get(R"(/sessions/([A-Za-z0-9_-]+))",
          guarded([this](const httplib::Request& req, httplib::Response& res) {
            send_json(res, 200, to_json(store_.get(req.matches[1])));
          }));

  srv.Post(R"(/sessions/([A-Za-z0-9_-]+)/emotions)",
           guarded([this](const httplib::Request& req, httplib::Response& res) {
             const auto body = parse_body(req);
             const EmotionEvent ev{body.at("valence").get<int>(), body.at("arousal").get<int>()};
             send_json(res, 200, to_json(store_.submit(req.matches[1], ev)));
           }));

  srv.Post(R"(/sessions/([A-Za-z0-9_-]+)/decision)",
           guarded([this](const httplib::Request& req, httplib::Response& res) {
             const auto body = parse_body(req);
             const auto d = decision_from_string(body.at("decision").get<std::string>());
             if (!d) throw Error(ErrorCode::BadRequest, "decision must be 'accept' or 'reject'");
             send_json(res, 200, to_json(store_.submit(req.matches[1], DecideEvent{*d})));
           }));

  srv.Get(R"(/sessions/([A-Za-z0-9_-]+)/trace)",
          guarded([this](const httplib::Request& req, httplib::Response& res) {
            send_json(res, 200, to_json(store_.trace(req.matches[1])));
          }));
}

HttpService::~HttpService() { stop(); }

int HttpService::start(const std::string& host, int port) {
  auto& srv = impl_->server;
  const int bound = port == 0 ? srv.bind_to_any_port(host) : (srv.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(ErrorCode::IoError, "cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([&srv] { srv.listen_after_bind(); });
  srv.wait_until_ready();
  return bound;
}

void HttpService::run(const std::string& host, int port) {
  if (!impl_->server.listen(host, port)) {
    throw Error(ErrorCode::IoError, "cannot listen on " + host + ":" + std::to_string(port));
  }
}

void HttpService::request_stop() { impl_->server.stop(); }

void HttpService::wait() {
  if (thread_.joinable()) thread_.join();
}

void HttpService::stop() {
  if (impl_) impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace fms
