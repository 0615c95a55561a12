#include "beliefnet/service.hpp"

#include <httplib.h>

#include <thread>
#include <vector>

#include "beliefnet/netlang.hpp"
#include "beliefnet/report.hpp"

namespace beliefnet {
namespace {

using nlohmann::json;

HttpResponse reply(int status, const json& body) { return {status, body.dump(), "application/json"}; }

HttpResponse failure(int status, std::string_view code, std::string_view message) {
  return reply(status, {{"error", code}, {"message", message}});
}

std::vector<std::string> split_path(std::string_view path) {
  if (auto q = path.find('?'); q != std::string_view::npos) path = path.substr(0, q);
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= path.size()) {
    auto end = path.find('/', start);
    if (end == std::string_view::npos) end = path.size();
    if (end > start) out.emplace_back(path.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

json parse_body(std::string_view body) {
  if (body.empty()) return json::object();
  return json::parse(body);
}

// Applies {"variable": V, "level": L|null} style edits to a copy of the evidence.
void apply_assignment(const Network& net, Evidence& ev, const std::string& variable, const json& level) {
  if (level.is_null()) {
    net.index_of(variable);
    ev.erase(variable);
  } else if (level.is_string()) {
    ev.set(net, variable, level.get<std::string>());
  } else {
    throw ModelError("level for '" + variable + "' must be a string or null");
  }
}

}  // namespace

struct Service::Server {
  httplib::Server http;
  std::thread thread;
};

Service::Service() = default;
Service::~Service() { stop(); }

std::shared_ptr<const Service::Loaded> Service::find_network(const std::string& id) const {
  std::shared_lock lock(registry_mutex_);
  auto it = networks_.find(id);
  return it == networks_.end() ? nullptr : it->second;
}

std::shared_ptr<Service::Session> Service::find_session(const std::string& id) const {
  std::shared_lock lock(registry_mutex_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

std::string Service::load(std::string_view source) {
  auto net = load_network(source, "<request>");
  auto loaded = std::make_shared<Loaded>();
  loaded->id = "n" + std::to_string(next_network_++);
  loaded->network = std::move(net);
  std::unique_lock lock(registry_mutex_);
  networks_.emplace(loaded->id, loaded);
  return loaded->id;
}

HttpResponse Service::handle(std::string_view method, std::string_view path, std::string_view body) {
  try {
    const auto parts = split_path(path);
    const auto n = parts.size();
    if (n >= 1 && parts[0] == "networks") {
      if (n == 1 && method == "POST") return post_network(body);
      if (n == 2 && method == "GET") return get_network(parts[1]);
    } else if (n >= 1 && parts[0] == "sessions") {
      if (n == 1 && method == "POST") return post_session(body);
      if (n == 3 && parts[2] == "evidence" && method == "PUT") return put_evidence(parts[1], body);
      if (n == 4 && parts[2] == "evidence" && method == "DELETE") return delete_evidence(parts[1], parts[3]);
      if (n == 3 && parts[2] == "posteriors" && method == "GET") return get_posteriors(parts[1]);
      if (n == 3 && parts[2] == "decision" && method == "GET") return get_decision(parts[1]);
      if (n == 3 && parts[2] == "whatif" && method == "POST") return post_whatif(parts[1], body);
      if (n == 3 && parts[2] == "export" && method == "GET") return get_export(parts[1]);
    }
    return failure(404, "not_found", std::string(method) + " " + std::string(path) + " is not a route");
  } catch (const json::exception& e) {
    return failure(400, "bad_request", e.what());
  } catch (const EvidenceConflict& e) {
    return failure(409, "conflict", e.what());
  } catch (const ModelError& e) {
    return failure(422, "invalid", e.what());
  } catch (const std::exception& e) {
    return failure(500, "internal", e.what());
  }
}

HttpResponse Service::post_network(std::string_view body) {
  std::string source(body);
  // Accept raw source text or {"source": "..."}.
  if (!body.empty() && body.front() == '{') {
    auto j = json::parse(body, nullptr, false);
    if (!j.is_discarded() && j.is_object() && j.contains("source")) source = j.at("source").get<std::string>();
  }
  auto parsed = parse_network(source, "<request>");
  if (!parsed.network) {
    return reply(422, {{"error", "invalid_network"}, {"diagnostics", report::diagnostics(parsed.diagnostics)}});
  }
  auto loaded = std::make_shared<Loaded>();
  loaded->id = "n" + std::to_string(next_network_++);
  loaded->network = std::move(*parsed.network);
  {
    std::unique_lock lock(registry_mutex_);
    networks_.emplace(loaded->id, loaded);
  }
  json j = report::catalog(loaded->network);
  j["id"] = loaded->id;
  j["diagnostics"] = report::diagnostics(parsed.diagnostics);
  return reply(201, j);
}

HttpResponse Service::get_network(const std::string& id) {
  auto loaded = find_network(id);
  if (!loaded) return failure(404, "not_found", "no network '" + id + "'");
  json j = report::catalog(loaded->network);
  j["id"] = loaded->id;
  return reply(200, j);
}

HttpResponse Service::post_session(std::string_view body) {
  auto j = parse_body(body);
  if (!j.contains("network") || !j.at("network").is_string()) {
    return failure(400, "bad_request", "body must name a network: {\"network\": id}");
  }
  auto loaded = find_network(j.at("network").get<std::string>());
  if (!loaded) return failure(404, "not_found", "no network '" + j.at("network").get<std::string>() + "'");
  auto session = std::make_shared<Session>();
  session->id = "s" + std::to_string(next_session_++);
  session->network = loaded;
  json payload = report::consultation(loaded->network, session->evidence);
  {
    std::unique_lock lock(registry_mutex_);
    sessions_.emplace(session->id, session);
  }
  payload["session"] = session->id;
  payload["network"] = loaded->id;
  payload["revision"] = session->revision;
  return reply(201, payload);
}

HttpResponse Service::put_evidence(const std::string& id, std::string_view body) {
  auto session = find_session(id);
  if (!session) return failure(404, "not_found", "no session '" + id + "'");
  const auto& net = session->network->network;
  auto j = parse_body(body);

  std::lock_guard lock(session->mutex);
  Evidence next = session->evidence;
  if (j.value("clear_all", false)) {
    next.clear();
  } else if (j.contains("variable")) {
    apply_assignment(net, next, j.at("variable").get<std::string>(), j.value("level", json(nullptr)));
  } else if (j.contains("assignments")) {
    for (const auto& [var, level] : j.at("assignments").items()) apply_assignment(net, next, var, level);
  } else {
    return failure(400, "bad_request", "expected {\"variable\", \"level\"}, {\"assignments\"} or {\"clear_all\": true}");
  }

  json payload = report::consultation(net, next);
  payload["session"] = session->id;
  if (payload.at("conflict").get<bool>()) {
    payload["error"] = "conflict";
    payload["message"] = "the evidence would have probability zero; session unchanged";
    payload["revision"] = session->revision;
    payload["evidence"] = report::evidence(net, session->evidence);
    return reply(409, payload);
  }
  session->evidence = std::move(next);
  payload["revision"] = ++session->revision;
  return reply(200, payload);
}

HttpResponse Service::delete_evidence(const std::string& id, const std::string& variable) {
  json body{{"variable", variable}, {"level", nullptr}};
  return put_evidence(id, body.dump());
}

HttpResponse Service::get_posteriors(const std::string& id) {
  auto session = find_session(id);
  if (!session) return failure(404, "not_found", "no session '" + id + "'");
  Evidence ev;
  std::uint64_t revision;
  {
    std::lock_guard lock(session->mutex);
    ev = session->evidence;
    revision = session->revision;
  }
  json payload = report::consultation(session->network->network, ev);
  payload["session"] = session->id;
  payload["revision"] = revision;
  return reply(200, payload);
}

HttpResponse Service::get_decision(const std::string& id) {
  auto session = find_session(id);
  if (!session) return failure(404, "not_found", "no session '" + id + "'");
  Evidence ev;
  std::uint64_t revision;
  {
    std::lock_guard lock(session->mutex);
    ev = session->evidence;
    revision = session->revision;
  }
  const auto& net = session->network->network;
  if (!net.utility_node() || net.decision_nodes().size() != 1) {
    return failure(422, "no_decision", "network has no single decision with a utility node");
  }
  json payload = report::decision(recommend(net, ev));
  payload["session"] = session->id;
  payload["revision"] = revision;
  return reply(200, payload);
}

HttpResponse Service::post_whatif(const std::string& id, std::string_view body) {
  auto session = find_session(id);
  if (!session) return failure(404, "not_found", "no session '" + id + "'");
  const auto& net = session->network->network;
  auto j = parse_body(body);
  Evidence current;
  std::uint64_t revision;
  {
    std::lock_guard lock(session->mutex);
    current = session->evidence;
    revision = session->revision;
  }
  Evidence hypothetical = current;
  if (j.contains("assignments")) {
    for (const auto& [var, level] : j.at("assignments").items()) apply_assignment(net, hypothetical, var, level);
  }

  json base = report::consultation(net, current);
  json payload = report::consultation(net, hypothetical);
  payload["session"] = session->id;
  payload["revision"] = revision;
  payload["hypothetical"] = true;
  if (payload.at("conflict").get<bool>()) {
    payload["error"] = "conflict";
    payload["message"] = "the hypothetical evidence has probability zero";
    return reply(409, payload);
  }

  json deltas{{"posteriors", json::object()}, {"expected_utilities", json::object()}};
  for (const auto& [var, entry] : payload.at("posteriors").items()) {
    const auto& now = base.at("posteriors").at(var).at("probabilities");
    const auto& then = entry.at("probabilities");
    json d = json::array();
    for (std::size_t k = 0; k < then.size(); ++k) d.push_back(then[k].get<double>() - now[k].get<double>());
    deltas["posteriors"][var] = d;
  }
  if (!payload.at("decision").is_null() && !base.at("decision").is_null()) {
    const auto& now = base.at("decision").at("alternatives");
    const auto& then = payload.at("decision").at("alternatives");
    for (std::size_t a = 0; a < then.size(); ++a) {
      deltas["expected_utilities"][then[a].at("alternative").get<std::string>()] =
          then[a].at("expected_utility").get<double>() - now[a].at("expected_utility").get<double>();
    }
  }
  payload["deltas"] = deltas;

  auto diagnoses = report::diagnosis_variables(net);
  std::optional<Event> target;
  if (j.contains("target")) {
    target = parse_event(j.at("target").get<std::string>());
  } else if (!diagnoses.empty()) {
    const auto& levels = net.node(diagnoses.front()).variable.levels;
    target = Event{diagnoses.front(), levels.back()};
  }
  if (target && !hypothetical.contains(target->variable)) {
    payload["target"] = to_string(*target);
    payload["indicants"] = report::ranking(
        rank_indicants(net, hypothetical, *target, report::indicant_variables(net)));
  } else {
    payload["target"] = nullptr;
    payload["indicants"] = json::array();
  }
  return reply(200, payload);
}

HttpResponse Service::get_export(const std::string& id) {
  auto session = find_session(id);
  if (!session) return failure(404, "not_found", "no session '" + id + "'");
  std::lock_guard lock(session->mutex);
  return {200, serialize_evidence(session->network->network, session->evidence), "text/plain"};
}

namespace {

void install_routes(httplib::Server& http, Service& service) {
  auto bridge = [&service](const httplib::Request& req, httplib::Response& res) {
    auto r = service.handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body, r.content_type.c_str());
  };
  http.Get(R"(/.*)", bridge);
  http.Post(R"(/.*)", bridge);
  http.Put(R"(/.*)", bridge);
  http.Delete(R"(/.*)", bridge);
}

}  // namespace

bool Service::listen(const std::string& host, int port) {
  server_ = std::make_unique<Server>();
  install_routes(server_->http, *this);
  return server_->http.listen(host, port);
}

int Service::start_background(const std::string& host) {
  server_ = std::make_unique<Server>();
  install_routes(server_->http, *this);
  const int port = server_->http.bind_to_any_port(host);
  if (port <= 0) return 0;
  server_->thread = std::thread([this] { server_->http.listen_after_bind(); });
  server_->http.wait_until_ready();
  return port;
}

void Service::stop() {
  if (!server_) return;
  server_->http.stop();
  if (server_->thread.joinable()) server_->thread.join();
  server_.reset();
}

}  // namespace beliefnet
