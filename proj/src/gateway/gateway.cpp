#include "orgscada/gateway/gateway.hpp"

#include <httplib.h>

#include <future>

namespace orgscada {

namespace {

constexpr std::size_t kLogLimit = 4096;

void send_json(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& detail = "") {
  Json body{{"error", code}};
  if (!detail.empty()) body["detail"] = detail;
  send_json(res, status, body);
}

bool is_terminal(const Json& e) {
  if (e.value("type", "") != "session") return false;
  const std::string s = e.value("state", "");
  return s == "closed" || s == "failed";
}

std::string sse_frame(const Json& e) {
  return "event: " + e.value("type", "message") + "\ndata: " + e.dump() + "\n\n";
}

}  // namespace

Json session_event_json(const SessionEvent& e) {
  Json j = e.payload.is_object() ? e.payload : Json::object();
  j.erase("op");
  j.erase("ra");
  j["type"] = e.type;
  if (e.type == "data" && j.contains("t_ms")) {
    j["t"] = j["t_ms"];
    j.erase("t_ms");
  }
  return j;
}

// ------------------------------------------------------------------ SessionHub

void SessionHub::create(const AgentId& ra, const std::string& service) {
  std::lock_guard lock(mutex_);
  sessions_[ra.str()].service = service;
}

void SessionHub::push(const SessionEvent& e) {
  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(e.ra.str());
  if (it == sessions_.end()) return;
  Session& s = it->second;
  Json j = session_event_json(e);
  if (is_terminal(j)) s.ended = true;
  s.log.push_back(std::move(j));
  while (s.log.size() > kLogLimit) {
    s.log.pop_front();
    ++s.base;
  }
  changed_.notify_all();
}

bool SessionHub::known(const std::string& ra) const {
  std::lock_guard lock(mutex_);
  return sessions_.contains(ra);
}

std::size_t SessionHub::cursor(const std::string& ra) const {
  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(ra);
  return it == sessions_.end() ? 0 : it->second.base + it->second.log.size();
}

std::optional<Json> SessionHub::wait_for(const std::string& ra, std::size_t& cursor,
                                         const std::function<bool(const Json&)>& match, Duration timeout) {
  std::unique_lock lock(mutex_);
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout.count());
  for (;;) {
    const auto it = sessions_.find(ra);
    if (it == sessions_.end() || stopping_) return std::nullopt;
    const Session& s = it->second;
    cursor = std::max(cursor, s.base);
    while (cursor < s.base + s.log.size()) {
      const Json& e = s.log[cursor - s.base];
      ++cursor;
      if (match(e)) return e;
    }
    if (changed_.wait_until(lock, deadline) == std::cv_status::timeout) return std::nullopt;
  }
}

std::vector<Json> SessionHub::next(const std::string& ra, std::size_t& cursor, Duration timeout, bool* ended) {
  std::unique_lock lock(mutex_);
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout.count());
  for (;;) {
    const auto it = sessions_.find(ra);
    if (it == sessions_.end() || stopping_) {
      *ended = true;
      return {};
    }
    const Session& s = it->second;
    cursor = std::max(cursor, s.base);
    if (cursor < s.base + s.log.size()) {
      std::vector<Json> out(s.log.begin() + static_cast<std::ptrdiff_t>(cursor - s.base), s.log.end());
      cursor = s.base + s.log.size();
      *ended = false;
      for (const auto& e : out) *ended = *ended || is_terminal(e);
      return out;
    }
    *ended = s.ended;
    if (s.ended) return {};
    if (changed_.wait_until(lock, deadline) == std::cv_status::timeout) return {};
  }
}

std::vector<std::pair<std::string, Json>> SessionHub::list() const {
  std::lock_guard lock(mutex_);
  std::vector<std::pair<std::string, Json>> out;
  for (const auto& [ra, s] : sessions_) {
    if (s.ended) continue;
    std::string state = "opening";
    for (const auto& e : s.log) {
      if (e.value("type", "") == "session") state = e.value("state", state);
    }
    out.push_back({ra, Json{{"ra_id", ra}, {"service", s.service}, {"state", state}}});
  }
  return out;
}

void SessionHub::shutdown() {
  std::lock_guard lock(mutex_);
  stopping_ = true;
  changed_.notify_all();
}

// --------------------------------------------------------------------- Gateway

Gateway::Gateway(Organization& org, RealtimeLoop& loop, GatewayOptions options)
    : org_(org), loop_(loop), options_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
  listener_ = loop_.call([this] { return org_.add_listener([this](const SessionEvent& e) { hub_.push(e); }); });
  server_->new_task_queue = [] { return new httplib::ThreadPool(64); };
  routes();
}

Gateway::~Gateway() {
  stop();
  loop_.call([this] { org_.remove_listener(listener_); });
}

void Gateway::start(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos) fail(ErrorCode::ConfigInvalid, "http-listen '" + address + "' lacks a port");
  const std::string host = address.substr(0, colon);
  const int want = std::stoi(address.substr(colon + 1));
  const bool ok = want == 0 ? (port_ = server_->bind_to_any_port(host), port_ > 0) : server_->bind_to_port(host, want);
  if (!ok) fail(ErrorCode::AddressInUse, address);
  if (want != 0) port_ = want;
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void Gateway::stop() {
  hub_.shutdown();
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

AgentId Gateway::resolve_ra(const std::string& text) const {
  if (text.find('@') != std::string::npos) return AgentId::parse(text);
  return AgentId{text, org_.name()};
}

void Gateway::routes() {
  httplib::Server& s = *server_;
  s.set_default_headers({{"Access-Control-Allow-Origin", options_.cors_origin},
                         {"Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS"},
                         {"Access-Control-Allow-Headers", "Content-Type"}});
  s.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  s.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
    const Json body = loop_.call([this] { return Json{{"org", org_.name()}, {"now_ms", org_.scheduler().now().count()}}; });
    send_json(res, 200, body);
  });

  s.Get("/services", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string scope = req.has_param("scope") ? req.get_param_value("scope") : "local";
    if (scope == "local") {
      send_json(res, 200, loop_.call([this] { return org_.services_json(); }));
    } else if (scope == "reachable") {
      auto done = std::make_shared<std::promise<Json>>();
      auto result = done->get_future();
      loop_.post([this, done] { org_.query_reachable(options_.reachable_timeout, [done](Json j) { done->set_value(std::move(j)); }); });
      send_json(res, 200, result.get());
    } else {
      send_error(res, 400, "InvalidArgument", "scope must be local or reachable");
    }
  });

  s.Get("/topology", [this](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, loop_.call([this] { return org_.topology(); }));
  });

  s.Get("/operators", [this](const httplib::Request&, httplib::Response& res) {
    Json out = Json::array();
    for (auto& [ra, j] : hub_.list()) out.push_back(std::move(j));
    send_json(res, 200, out);
  });

  s.Post("/operators", [this](const httplib::Request& req, httplib::Response& res) {
    Json body;
    try {
      body = Json::parse(req.body);
    } catch (const Json::exception&) {
      return send_error(res, 400, "InvalidArgument", "body is not JSON");
    }
    const std::string service = body.value("service_name", body.value("service", ""));
    if (service.empty()) return send_error(res, 400, "InvalidArgument", "service_name is required");
    std::vector<std::string> vars;
    if (body.contains("vars") && body["vars"].is_array()) vars = body["vars"].get<std::vector<std::string>>();

    const AgentId ra = loop_.call([&] {
      const AgentId id = org_.launch_operator(service, vars);
      hub_.create(id, service);
      return id;
    });
    std::size_t cursor = 0;
    const auto e = hub_.wait_for(
        ra.str(), cursor,
        [](const Json& j) {
          const std::string st = j.value("state", "");
          return j.value("type", "") == "session" && (st == "opened" || st == "failed" || st == "closed");
        },
        options_.open_timeout);
    if (!e) {
      loop_.call([&] { org_.close_operator(ra); });
      return send_error(res, 504, "Timeout", "no access to " + service + " in time");
    }
    const std::string state = e->value("state", "");
    if (state == "opened") {
      Json out{{"ra_id", ra.str()},
               {"session", Json{{"state", "open"}, {"service", service}, {"provider", e->value("provider", "")}}},
               {"latency_record", e->value("latency", Json::object())}};
      res.set_header("Location", "/operators/" + ra.str());
      return send_json(res, 201, out);
    }
    const std::string reason = e->value("reason", "PeerUnreachable");
    if (reason == "ServiceUnknownEverywhere") return send_error(res, 404, reason, service);
    if (reason == "Timeout") return send_error(res, 504, reason, service);
    send_error(res, 502, reason, service);
  });

  s.Delete(R"(/operators/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    const AgentId ra = resolve_ra(req.matches[1]);
    if (!hub_.known(ra.str())) return send_error(res, 404, "UnknownAgent", ra.str());
    std::size_t cursor = hub_.cursor(ra.str());
    const bool live = loop_.call([&] {
      const bool exists = org_.session_exists(ra);
      org_.close_operator(ra);
      return exists;
    });
    if (live) hub_.wait_for(ra.str(), cursor, is_terminal, Duration{2000});
    send_json(res, 200, Json{{"ra_id", ra.str()}, {"state", "closed"}});
  });

  s.Post(R"(/operators/([^/]+)/setpoints)", [this](const httplib::Request& req, httplib::Response& res) {
    const AgentId ra = resolve_ra(req.matches[1]);
    if (!hub_.known(ra.str())) return send_error(res, 404, "UnknownAgent", ra.str());
    Json body;
    try {
      body = Json::parse(req.body);
    } catch (const Json::exception&) {
      return send_error(res, 400, "InvalidArgument", "body is not JSON");
    }
    if (!body.contains("var") || !body["var"].is_string() || !body.contains("value") || !body["value"].is_number()) {
      return send_error(res, 400, "InvalidArgument", "need {var: string, value: number}");
    }
    const std::string request_id = body.value("request_id", "http-" + std::to_string(next_request_++));
    std::size_t cursor = hub_.cursor(ra.str());
    const std::string var = body["var"];
    const double value = body["value"];
    loop_.call([&] { org_.setpoint(ra, var, value, request_id); });
    const auto v = hub_.wait_for(
        ra.str(), cursor,
        [&](const Json& j) { return j.value("type", "") == "verdict" && j.value("request_id", "") == request_id; },
        options_.setpoint_timeout);
    if (!v) return send_error(res, 504, "Timeout", "no verdict for " + request_id);
    Json out = *v;
    out.erase("type");
    if (v->value("accepted", false)) return send_json(res, 200, out);
    const std::string reason = v->value("reason", "");
    if (reason == "SessionClosed") return send_json(res, 409, out);
    if (reason == "PeerUnreachable") return send_json(res, 503, out);
    send_json(res, 422, out);
  });

  s.Get(R"(/operators/([^/]+)/events)", [this](const httplib::Request& req, httplib::Response& res) {
    const AgentId ra = resolve_ra(req.matches[1]);
    if (!hub_.known(ra.str())) return send_error(res, 404, "UnknownAgent", ra.str());
    // A stream on a finished session replays the final event and ends.
    auto cursor = std::make_shared<std::size_t>(hub_.cursor(ra.str()));
    {
      std::size_t probe = 0;
      bool ended = false;
      const auto past = hub_.next(ra.str(), probe, Duration{0}, &ended);
      if (ended) {
        for (auto it = past.rbegin(); it != past.rend(); ++it) {
          if (is_terminal(*it)) {
            res.set_content(sse_frame(*it), "text/event-stream");
            return;
          }
        }
      }
    }
    res.set_header("Cache-Control", "no-cache");
    const std::string key = ra.str();
    res.set_chunked_content_provider("text/event-stream", [this, key, cursor](std::size_t, httplib::DataSink& sink) {
      bool ended = false;
      const auto events = hub_.next(key, *cursor, options_.keepalive, &ended);
      std::string chunk;
      for (const auto& e : events) chunk += sse_frame(e);
      if (chunk.empty() && !ended) chunk = ": keepalive\n\n";
      if (!chunk.empty() && !sink.write(chunk.data(), chunk.size())) return false;
      if (ended) sink.done();
      return true;
    });
  });
}

}  // namespace orgscada
