#pragma once

// HTTP + JSON consultation service: loaded networks and in-memory sessions
// holding mutable evidence. Routing is independent of the transport so the
// handlers can be exercised without sockets.

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <string_view>

#include "beliefnet/model.hpp"

namespace beliefnet {

struct HttpResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

class Service {
 public:
  Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Dispatches one request. Never throws; failures become 4xx responses.
  HttpResponse handle(std::string_view method, std::string_view path, std::string_view body);

  /// Loads a network directly (as POST /networks would) and returns its id.
  /// Throws ParseFailure on error diagnostics.
  std::string load(std::string_view source);

  /// Blocks serving HTTP on host:port. Returns false if binding fails.
  bool listen(const std::string& host, int port);
  /// Binds an ephemeral port, serves on a background thread and returns the
  /// port; 0 when binding fails.
  int start_background(const std::string& host = "127.0.0.1");
  void stop();

  ~Service();

 private:
  struct Loaded {
    std::string id;
    Network network;
  };
  struct Session {
    std::string id;
    std::shared_ptr<const Loaded> network;
    std::mutex mutex;  // serializes mutations
    Evidence evidence;
    std::uint64_t revision = 0;
  };

  HttpResponse post_network(std::string_view body);
  HttpResponse get_network(const std::string& id);
  HttpResponse post_session(std::string_view body);
  HttpResponse put_evidence(const std::string& id, std::string_view body);
  HttpResponse delete_evidence(const std::string& id, const std::string& variable);
  HttpResponse get_posteriors(const std::string& id);
  HttpResponse get_decision(const std::string& id);
  HttpResponse post_whatif(const std::string& id, std::string_view body);
  HttpResponse get_export(const std::string& id);

  std::shared_ptr<const Loaded> find_network(const std::string& id) const;
  std::shared_ptr<Session> find_session(const std::string& id) const;

  mutable std::shared_mutex registry_mutex_;
  std::map<std::string, std::shared_ptr<const Loaded>> networks_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::atomic<std::uint64_t> next_network_{1};
  std::atomic<std::uint64_t> next_session_{1};

  struct Server;
  std::unique_ptr<Server> server_;
};

}  // namespace beliefnet
