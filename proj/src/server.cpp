#include "permreg/server.hpp"

#include <cstdlib>
#include <random>

#include "httplib.h"
#include "permreg/data.hpp"
#include "permreg/model_io.hpp"
#include "permreg/session_io.hpp"

namespace permreg {

using nlohmann::json;

namespace {

Reply error_reply(ErrorCode code, const std::string& message) {
  return {http_status(code), json{{"code", std::string(to_string(code))}, {"message", message}}};
}

json parse_body(const std::string& body) {
  if (body.empty()) return json::object();
  try {
    json doc = json::parse(body);
    if (!doc.is_object()) throw Error(ErrorCode::Malformed, "request body must be a JSON object");
    return doc;
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Malformed, std::string("invalid JSON: ") + e.what());
  }
}

template <class F>
Reply guarded(F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    return error_reply(e.code(), e.what());
  } catch (const json::exception& e) {
    return error_reply(ErrorCode::Malformed, e.what());
  }
}

std::size_t env_size(const char* name, std::size_t fallback) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') return fallback;
  return static_cast<std::size_t>(std::strtoull(v, nullptr, 10));
}

std::int64_t integer_field(const json& doc, const char* key) {
  if (!doc.contains(key) || !doc.at(key).is_number_integer()) {
    throw Error(ErrorCode::Malformed, std::string("'") + key + "' must be an integer");
  }
  return doc.at(key).get<std::int64_t>();
}

}  // namespace

ServerConfig config_from_env(ServerConfig base) {
  if (const char* bind = std::getenv("PERMREG_BIND"); bind && *bind) base.bind = bind;
  base.port = static_cast<int>(env_size("PERMREG_PORT", static_cast<std::size_t>(base.port)));
  base.max_sessions = env_size("PERMREG_MAX_SESSIONS", base.max_sessions);
  base.max_rows = env_size("PERMREG_MAX_ROWS", base.max_rows);
  base.default_max_len = env_size("PERMREG_MAX_LEN", base.default_max_len);
  return base;
}

int http_status(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::UnknownSession:
    case ErrorCode::UnknownNode:
    case ErrorCode::UnknownDataset:
    case ErrorCode::IndexOutOfRange:
      return 404;
    case ErrorCode::NodeInactive:
    case ErrorCode::NodeActive:
    case ErrorCode::AlreadyFinalized:
      return 409;
    case ErrorCode::TooManyRows:
      return 413;
    case ErrorCode::TooManySessions:
      return 429;
    case ErrorCode::Malformed:
      return 400;
    case ErrorCode::IoError:
      return 500;
    default:
      return 422;
  }
}

std::string Service::new_id(const char* prefix) {
  std::lock_guard lock(id_mutex_);
  if (id_salt_ == 0) {
    std::random_device rd;
    id_salt_ = (static_cast<std::uint64_t>(rd()) << 32) ^ rd() ^ 1;
  }
  ++id_counter_;
  std::mt19937_64 mix(id_salt_ ^ (id_counter_ * 0x9e3779b97f4a7c15ULL));
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%s%016llx", prefix, static_cast<unsigned long long>(mix()));
  return buf;
}

Dataset Service::resolve_dataset(const json& ref) {
  if (ref.contains("dataset_id")) {
    const auto id = ref.at("dataset_id").get<std::string>();
    std::shared_lock lock(datasets_mutex_);
    auto it = datasets_.find(id);
    if (it == datasets_.end()) throw Error(ErrorCode::UnknownDataset, "no dataset " + id);
    return *it->second;
  }
  if (ref.contains("csv")) {
    Dataset ds = parse_csv_string(ref.at("csv").get<std::string>());
    if (ds.size() > config_.max_rows) {
      throw Error(ErrorCode::TooManyRows, "dataset exceeds " + std::to_string(config_.max_rows) + " rows");
    }
    return ds;
  }
  throw Error(ErrorCode::Malformed, "dataset reference needs 'dataset_id' or 'csv'");
}

Reply Service::register_dataset(const std::string& body) {
  return guarded([&] {
    const json doc = parse_body(body);
    auto ds = std::make_shared<const Dataset>(resolve_dataset(doc));
    const std::string id = new_id("d-");
    {
      std::unique_lock lock(datasets_mutex_);
      datasets_.emplace(id, ds);
    }
    return Reply{201, json{{"dataset_id", id}, {"n_items", ds->n_items()}, {"rows", ds->size()}}};
  });
}

Reply Service::create_session(const std::string& body) {
  return guarded([&] {
    const json doc = parse_body(body);
    if (!doc.contains("hyperparams")) throw Error(ErrorCode::InvalidHyperparams, "missing 'hyperparams'");
    const Hyperparams hp = hyperparams_from_json(doc.at("hyperparams"));
    hp.validate();

    std::optional<Splits> parts;
    if (doc.contains("train")) {
      if (!doc.contains("validation") || !doc.contains("test")) {
        throw Error(ErrorCode::Malformed, "pre-split sessions need 'train', 'validation' and 'test'");
      }
      parts = Splits{resolve_dataset(doc.at("train")), resolve_dataset(doc.at("validation")),
                     resolve_dataset(doc.at("test"))};
    } else {
      if (!doc.contains("split")) throw Error(ErrorCode::Malformed, "missing 'split' sizes");
      const json& s = doc.at("split");
      SplitSpec spec;
      spec.train = static_cast<std::size_t>(integer_field(s, "train"));
      spec.validation = static_cast<std::size_t>(integer_field(s, "validation"));
      spec.test = static_cast<std::size_t>(integer_field(s, "test"));
      spec.seed = s.contains("seed") ? s.at("seed").get<std::uint64_t>() : 0;
      parts = split(resolve_dataset(doc), spec);
    }

    {
      std::shared_lock lock(sessions_mutex_);
      if (sessions_.size() >= config_.max_sessions) {
        throw Error(ErrorCode::TooManySessions, "session limit reached");
      }
    }
    const std::string id = new_id("s-");
    auto slot = std::make_shared<Slot>(
        id, Session(std::move(parts->train), std::move(parts->validation), std::move(parts->test), hp));
    json view = session_view(slot->session, id);
    {
      std::unique_lock lock(sessions_mutex_);
      if (sessions_.size() >= config_.max_sessions) {
        throw Error(ErrorCode::TooManySessions, "session limit reached");
      }
      sessions_.emplace(id, std::move(slot));
    }
    return Reply{201, std::move(view)};
  });
}

std::shared_ptr<Service::Slot> Service::find(const std::string& id) {
  std::shared_lock lock(sessions_mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::UnknownSession, "no session " + id);
  return it->second;
}

Reply Service::get_session(const std::string& id) {
  return guarded([&] {
    auto slot = find(id);
    std::shared_lock lock(slot->mutex);
    return Reply{200, session_view(slot->session, id)};
  });
}

Reply Service::export_session(const std::string& id) {
  return guarded([&] {
    auto slot = find(id);
    std::shared_lock lock(slot->mutex);
    return Reply{200, session_export(slot->session, id)};
  });
}

Reply Service::act(const std::string& id, const std::string& action, const std::string& body) {
  return guarded([&] {
    const json doc = parse_body(body);
    auto slot = find(id);
    std::unique_lock lock(slot->mutex);
    Session& s = slot->session;
    if (action == "expand") {
      s.expand(integer_field(doc, "node_id"));
    } else if (action == "collapse") {
      s.collapse(integer_field(doc, "node_id"));
    } else if (action == "simplify") {
      s.simplify();
    } else if (action == "restart") {
      if (!doc.contains("hyperparams")) throw Error(ErrorCode::InvalidHyperparams, "missing 'hyperparams'");
      s.restart(hyperparams_from_json(doc.at("hyperparams")));
    } else if (action == "revert") {
      const auto index = integer_field(doc, "iteration");
      if (index < 0) throw Error(ErrorCode::IndexOutOfRange, "iteration must be non-negative");
      s.revert(static_cast<std::size_t>(index));
    } else if (action == "finalize") {
      s.finalize();
    } else {
      throw Error(ErrorCode::Malformed, "unknown action " + action);
    }
    return Reply{200, session_view(s, id)};
  });
}

Reply Service::health() const {
  return {200, json{{"status", "ok"},
                    {"max_sessions", config_.max_sessions},
                    {"max_rows", config_.max_rows},
                    {"default_max_len", config_.default_max_len}}};
}

HttpServer::HttpServer(ServerConfig config)
    : service_(std::move(config)), http_(std::make_unique<httplib::Server>()) {
  install_routes();
}

HttpServer::~HttpServer() { stop(); }

void HttpServer::install_routes() {
  auto send = [](httplib::Response& res, const Reply& reply) {
    res.status = reply.status;
    res.set_content(reply.body.dump(), "application/json");
  };
  http_->Get("/v1/health", [this, send](const httplib::Request&, httplib::Response& res) {
    send(res, service_.health());
  });
  http_->Post("/v1/datasets", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, service_.register_dataset(req.body));
  });
  http_->Post("/v1/sessions", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, service_.create_session(req.body));
  });
  http_->Get(R"(/v1/sessions/([^/]+))", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, service_.get_session(req.matches[1]));
  });
  http_->Get(R"(/v1/sessions/([^/]+)/export)",
             [this, send](const httplib::Request& req, httplib::Response& res) {
               send(res, service_.export_session(req.matches[1]));
             });
  http_->Post(R"(/v1/sessions/([^/]+)/(expand|collapse|simplify|restart|revert|finalize))",
              [this, send](const httplib::Request& req, httplib::Response& res) {
                send(res, service_.act(req.matches[1], req.matches[2], req.body));
              });
}

int HttpServer::start() {
  const auto& cfg = service_.config();
  int port = cfg.port;
  if (port == 0) {
    port = http_->bind_to_any_port(cfg.bind);
  } else if (!http_->bind_to_port(cfg.bind, port)) {
    port = -1;
  }
  if (port < 0) throw Error(ErrorCode::IoError, "cannot bind " + cfg.bind + ":" + std::to_string(cfg.port));
  worker_ = std::thread([this] { http_->listen_after_bind(); });
  http_->wait_until_ready();
  return port;
}

void HttpServer::run() {
  const auto& cfg = service_.config();
  if (!http_->listen(cfg.bind, cfg.port)) {
    throw Error(ErrorCode::IoError, "cannot listen on " + cfg.bind + ":" + std::to_string(cfg.port));
  }
}

void HttpServer::stop() {
  if (http_) http_->stop();
  if (worker_.joinable()) worker_.join();
}

}  // namespace permreg
