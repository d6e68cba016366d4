// Copyright 2026 The Edgeflow Authors.
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

#include "edgeflow/util/http.hpp"

#include <array>

namespace edgeflow::http {

int status_for(Errc code) {
  switch (code) {
    case Errc::invalid_name:
    case Errc::invalid_argument:
    case Errc::invalid_spec:
    case Errc::parse_error:
    case Errc::non_finite_value:
    case Errc::empty_input:
      return 400;
    case Errc::not_found:
    case Errc::unknown_workflow:
    case Errc::no_such_stage_assignment:
      return 404;
    case Errc::duplicate_node:
      return 409;
    case Errc::payload_too_large:
      return 413;
    case Errc::storage_full:
      return 507;
    case Errc::unschedulable:
      return 422;
    case Errc::replica_failure:
      return 502;
    case Errc::no_live_replica:
    case Errc::unavailable:
    case Errc::metric_store_unavailable:
      return 503;
    case Errc::timeout:
      return 504;
    case Errc::digest_mismatch:
    case Errc::protocol_violation:
    case Errc::io_error:
      return 500;
  }
  return 500;
}

Errc errc_from_name(std::string_view name) {
  constexpr std::array kAll{
      Errc::invalid_name, Errc::invalid_argument, Errc::not_found,
      Errc::digest_mismatch, Errc::storage_full, Errc::payload_too_large,
      Errc::no_such_stage_assignment, Errc::invalid_spec, Errc::unknown_workflow,
      Errc::duplicate_node, Errc::unschedulable, Errc::protocol_violation,
      Errc::timeout, Errc::no_live_replica, Errc::replica_failure,
      Errc::empty_input, Errc::non_finite_value, Errc::metric_store_unavailable,
      Errc::parse_error, Errc::io_error, Errc::unavailable,
  };
  for (auto e : kAll) {
    if (errc_name(e) == name) return e;
  }
  return Errc::io_error;
}

void reply_json(httplib::Response& res, const json& body, int status) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, const Error& err) {
  reply_json(res, json{{"error", std::string(errc_name(err.code()))}, {"message", err.what()}},
             status_for(err.code()));
}

httplib::Server::Handler guarded(std::function<void(const httplib::Request&, httplib::Response&)> fn) {
  return [fn = std::move(fn)](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const Error& e) {
      reply_error(res, e);
    } catch (const json::exception& e) {
      reply_error(res, Error(Errc::invalid_argument, e.what()));
    } catch (const std::exception& e) {
      reply_error(res, Error(Errc::io_error, e.what()));
    }
  };
}

Client::Client(const std::string& base_url, int timeout_ms) : base_url_(base_url) {
  client_ = std::make_unique<httplib::Client>(base_url);
  auto secs = timeout_ms / 1000;
  auto usecs = (timeout_ms % 1000) * 1000;
  client_->set_connection_timeout(2, 0);
  client_->set_read_timeout(secs, usecs);
  client_->set_write_timeout(secs, usecs);
  client_->set_keep_alive(false);
}

httplib::Result Client::get(const std::string& path, const httplib::Headers& headers) {
  return client_->Get(path, headers);
}

httplib::Result Client::post(const std::string& path, std::string_view body,
                             const std::string& content_type) {
  return client_->Post(path, body.data(), body.size(), content_type);
}

httplib::Result Client::put(const std::string& path, std::string_view body,
                            const std::string& content_type) {
  return client_->Put(path, body.data(), body.size(), content_type);
}

httplib::Result Client::del(const std::string& path) { return client_->Delete(path); }

const httplib::Response& Client::check(const httplib::Result& r, const std::string& what) {
  if (!r) {
    throw Error(Errc::unavailable, what + ": " + httplib::to_string(r.error()));
  }
  if (r->status >= 200 && r->status < 300) return *r;
  Errc code = Errc::io_error;
  std::string message = what + ": HTTP " + std::to_string(r->status);
  try {
    auto body = json::parse(r->body);
    code = errc_from_name(body.value("error", std::string()));
    message = body.value("message", message);
  } catch (const json::exception&) {
  }
  throw Error(code, message);
}

json Client::get_json(const std::string& path) {
  auto r = get(path);
  return parse_json(check(r, "GET " + path).body);
}

json Client::post_json(const std::string& path, const json& body) {
  auto r = post(path, body.dump());
  return parse_json(check(r, "POST " + path).body);
}

std::string url_encode(std::string_view s) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 0xf]);
    }
  }
  return out;
}

}  // namespace edgeflow::http
