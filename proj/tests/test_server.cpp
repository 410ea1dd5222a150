#include "doctest.h"
#include "fixtures.hpp"
#include "httplib.h"
#include "permreg/data.hpp"
#include "permreg/server.hpp"

using namespace permreg;
using nlohmann::json;

namespace {

std::string planted_csv(std::size_t rows, std::uint64_t seed) {
  PlantedSpec spec;
  spec.n_items = 5;
  spec.m_rows = rows;
  spec.mu0 = 1.0;
  spec.planted = {{Constraint({1, 2}), 0.5}, {Constraint({4, 3}), -0.3}};
  spec.noise_sd = 0.05;
  spec.seed = seed;
  return to_csv_string(generate_planted(spec));
}

json session_body(const std::string& csv, int l = 3) {
  return {{"csv", csv},
          {"split", {{"train", 100}, {"validation", 40}, {"test", 40}, {"seed", 1}}},
          {"hyperparams", {{"l", l}, {"learning_rate", 1.0}}}};
}

struct Client {
  httplib::Client http;
  explicit Client(int port) : http("127.0.0.1", port) {}

  std::pair<int, json> post(const std::string& path, const json& body = json::object()) {
    auto res = http.Post(path, body.dump(), "application/json");
    REQUIRE(res);
    return {res->status, json::parse(res->body)};
  }
  std::pair<int, json> get(const std::string& path) {
    auto res = http.Get(path);
    REQUIRE(res);
    return {res->status, json::parse(res->body)};
  }
};

}  // namespace

TEST_CASE("http status mapping") {
  CHECK(http_status(ErrorCode::UnknownSession) == 404);
  CHECK(http_status(ErrorCode::UnknownNode) == 404);
  CHECK(http_status(ErrorCode::NodeInactive) == 409);
  CHECK(http_status(ErrorCode::AlreadyFinalized) == 409);
  CHECK(http_status(ErrorCode::InvalidHyperparams) == 422);
  CHECK(http_status(ErrorCode::Malformed) == 400);
  CHECK(http_status(ErrorCode::TooManySessions) == 429);
}

TEST_CASE("service: session lifecycle without transport") {
  Service svc(ServerConfig{});
  const Reply created = svc.create_session(session_body(planted_csv(200, 1)).dump());
  REQUIRE(created.status == 201);
  const std::string id = created.body.at("session_id");
  CHECK(created.body.at("nodes").size() == 3);

  const NodeId first = created.body.at("nodes").at(0).at("id");
  const Reply expanded = svc.act(id, "expand", json{{"node_id", first}}.dump());
  CHECK(expanded.status == 200);
  CHECK(expanded.body.at("iteration_index") == 1);

  CHECK(svc.act(id, "expand", json{{"node_id", first}}.dump()).status == 409);
  CHECK(svc.act(id, "collapse", json{{"node_id", 999}}.dump()).status == 404);
  CHECK(svc.act(id, "revert", json{{"iteration", 50}}.dump()).status == 404);
  CHECK(svc.act(id, "restart", json{{"hyperparams", {{"l", 0}, {"learning_rate", 1}}}}.dump()).status == 422);
  CHECK(svc.act(id, "expand", "{not json").status == 400);
  CHECK(svc.act(id, "expand", "{}").status == 400);
  CHECK(svc.get_session("s-missing").status == 404);

  const Reply fin = svc.act(id, "finalize", "");
  CHECK(fin.status == 200);
  CHECK(fin.body.at("finalized") == true);
  CHECK(fin.body.at("test_metrics").at("n") == 40);
  CHECK(svc.act(id, "simplify", "").status == 409);

  const Reply exported = svc.export_session(id);
  // malformed bodies are rejected before they reach the session log
  CHECK(exported.body.at("action_log").size() == 8);
}

TEST_CASE("service: dataset registry, pre-split sessions and limits") {
  ServerConfig cfg;
  cfg.max_sessions = 1;
  cfg.max_rows = 150;
  Service svc(cfg);
  CHECK(svc.register_dataset(json{{"csv", planted_csv(200, 2)}}.dump()).status == 413);
  const Reply reg = svc.register_dataset(json{{"csv", planted_csv(100, 2)}}.dump());
  REQUIRE(reg.status == 201);
  CHECK(reg.body.at("rows") == 100);
  const std::string did = reg.body.at("dataset_id");

  const json body{{"train", {{"dataset_id", did}}},
                  {"validation", {{"csv", planted_csv(30, 3)}}},
                  {"test", {{"csv", planted_csv(30, 4)}}},
                  {"hyperparams", {{"l", 2}, {"learning_rate", 0.5}}}};
  CHECK(svc.create_session(body.dump()).status == 201);
  CHECK(svc.create_session(body.dump()).status == 429);

  json missing = body;
  missing["train"] = {{"dataset_id", "d-nope"}};
  CHECK(svc.create_session(missing.dump()).status == 404);
  CHECK(svc.create_session(json{{"csv", "x"}}.dump()).status == 422);  // no hyperparams
}

TEST_CASE("http: end-to-end over a loopback socket") {
  ServerConfig cfg;
  cfg.port = 0;
  HttpServer server(cfg);
  const int port = server.start();
  REQUIRE(port > 0);
  Client c(port);

  auto [hs, health] = c.get("/v1/health");
  CHECK(hs == 200);
  CHECK(health.at("status") == "ok");

  auto [cs, view] = c.post("/v1/sessions", session_body(planted_csv(200, 5), 2));
  REQUIRE(cs == 201);
  const std::string id = view.at("session_id");
  const std::string base = "/v1/sessions/" + id;

  auto [es, expanded] = c.post(base + "/expand", {{"node_id", view.at("nodes").at(0).at("id")}});
  CHECK(es == 200);
  auto [rs, reverted] = c.post(base + "/revert", {{"iteration", 0}});
  CHECK(rs == 200);
  CHECK(reverted.at("val_mae") == view.at("val_mae"));

  auto [gs, fetched] = c.get(base);
  CHECK(gs == 200);
  CHECK(fetched == reverted);

  auto [bad, err] = c.post(base + "/collapse", {{"node_id", 12345}});
  CHECK(bad == 404);
  CHECK(err.at("code") == "UnknownNode");

  auto [xs, doc] = c.get(base + "/export");
  CHECK(xs == 200);
  CHECK(doc.at("iterations").size() == 3);

  CHECK(c.get("/v1/sessions/nope").first == 404);
  server.stop();
}
