#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <thread>

#include "json.hpp"
#include "permreg/core.hpp"
#include "permreg/session.hpp"

namespace httplib {
class Server;
}

namespace permreg {

struct ServerConfig {
  std::string bind = "127.0.0.1";
  int port = 8080;
  std::size_t max_sessions = 256;
  std::size_t max_rows = 200000;
  std::size_t default_max_len = 0;  // 0: n_items; reported by /v1/health
};

/// Reads PERMREG_BIND, PERMREG_PORT, PERMREG_MAX_SESSIONS, PERMREG_MAX_ROWS
/// and PERMREG_MAX_LEN over the defaults.
ServerConfig config_from_env(ServerConfig base = {});

int http_status(ErrorCode code) noexcept;

struct Reply {
  int status = 200;
  nlohmann::json body;
};

/// Transport-independent session service. Sessions are single-writer:
/// mutations on one session are serialized by its own lock while reads
/// share it. The dataset registry is append-only.
class Service {
 public:
  explicit Service(ServerConfig config) : config_(std::move(config)) {}

  Reply register_dataset(const std::string& body);
  Reply create_session(const std::string& body);
  Reply get_session(const std::string& id);
  Reply export_session(const std::string& id);
  /// action is one of expand, collapse, simplify, restart, revert, finalize.
  Reply act(const std::string& id, const std::string& action, const std::string& body);
  Reply health() const;

  const ServerConfig& config() const noexcept { return config_; }

 private:
  struct Slot {
    Slot(std::string slot_id, Session s) : id(std::move(slot_id)), session(std::move(s)) {}
    std::shared_mutex mutex;
    std::string id;
    Session session;
  };

  std::shared_ptr<Slot> find(const std::string& id);
  Dataset resolve_dataset(const nlohmann::json& ref);
  std::string new_id(const char* prefix);

  ServerConfig config_;
  std::shared_mutex datasets_mutex_;
  std::map<std::string, std::shared_ptr<const Dataset>> datasets_;
  std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Slot>> sessions_;
  std::mutex id_mutex_;
  std::uint64_t id_counter_ = 0;
  std::uint64_t id_salt_ = 0;
};

/// HTTP/1.1 front end over a Service.
class HttpServer {
 public:
  explicit HttpServer(ServerConfig config);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds (port 0 picks a free port) and serves on a background thread.
  /// Returns the bound port.
  int start();
  /// Binds and serves on the calling thread until stop().
  void run();
  void stop();

  Service& service() noexcept { return service_; }

 private:
  void install_routes();

  Service service_;
  std::unique_ptr<httplib::Server> http_;
  std::thread worker_;
};

}  // namespace permreg
