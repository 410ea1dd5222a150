#include <filesystem>

#include "doctest.h"
#include "fixtures.hpp"
#include "permreg/boost.hpp"
#include "permreg/model_io.hpp"

using namespace permreg;
using nlohmann::json;
using fixtures::code_of;

TEST_CASE("model JSON layout") {
  const Model m{3, 0.6, {{Constraint({2, 3}), 0.35}}};
  const json doc = model_to_json(m);
  CHECK(doc.at("format") == 1);
  CHECK(doc.at("n_items") == 3);
  CHECK(doc.at("terms").at(0).at("items") == json::array({2, 3}));
  CHECK(doc.at("terms").at(0).at("beta") == 0.35);
}

TEST_CASE("model JSON round trip is exact") {
  Rng rng(1);
  const Dataset ds = fixtures::random_dataset(rng, 6, 150);
  const Model m = fit_auto(ds, {12, 0.3, 4});
  REQUIRE(!m.terms.empty());
  CHECK(model_from_json(json::parse(model_to_json(m).dump())) == m);

  const auto path = std::filesystem::temp_directory_path() / "permreg_test_model.json";
  save_model(m, path);
  CHECK(load_model(path) == m);
  std::filesystem::remove(path);
}

TEST_CASE("model JSON rejects bad documents") {
  const auto load = [](const char* text) { return model_from_json(json::parse(text)); };
  CHECK(code_of([&] { load(R"({"format":2,"n_items":3,"mu":0,"terms":[]})"); }) == ErrorCode::Malformed);
  CHECK(code_of([&] { load(R"({"format":1,"mu":0,"terms":[]})"); }) == ErrorCode::Malformed);
  CHECK(code_of([&] { load(R"({"format":1,"n_items":3,"mu":"x","terms":[]})"); }) == ErrorCode::Malformed);
  CHECK(code_of([&] { load(R"({"format":1,"n_items":3,"mu":0,"terms":[{"items":[1,4],"beta":1}]})"); }) ==
        ErrorCode::ItemOutOfRange);
  CHECK(code_of([&] { load(R"({"format":1,"n_items":3,"mu":0,"terms":[{"items":[1],"beta":1}]})"); }) ==
        ErrorCode::InvalidConstraint);
  CHECK(code_of([&] {
          load(R"({"format":1,"n_items":3,"mu":0,"terms":[{"items":[1,2],"beta":1},{"items":[1,2],"beta":2}]})");
        }) == ErrorCode::DuplicateConstraint);
  CHECK(code_of([] { load_model("/nonexistent/model.json"); }) == ErrorCode::IoError);
}

TEST_CASE("metrics JSON writes null for undefined r2") {
  CHECK(metrics_to_json(MetricsReport{1.0, 2.0, std::nullopt, 3}).at("r2").is_null());
  CHECK(metrics_to_json(MetricsReport{1.0, 2.0, 0.5, 3}).at("r2") == 0.5);
}

TEST_CASE("hyperparams JSON") {
  const Hyperparams hp = hyperparams_from_json(json{{"l", 7}, {"learning_rate", 0.25}});
  CHECK(hp.l == 7);
  CHECK(hp.learning_rate == 0.25);
  CHECK(hyperparams_from_json(hyperparams_to_json(hp)).l == 7);
  CHECK(code_of([] { hyperparams_from_json(json{{"l", 2.5}, {"learning_rate", 0.1}}); }) ==
        ErrorCode::InvalidHyperparams);
  CHECK(code_of([] { hyperparams_from_json(json{{"l", 2}, {"learning_rate", "fast"}}); }) ==
        ErrorCode::InvalidHyperparams);
}

TEST_CASE("planted spec JSON") {
  const json doc = json::parse(R"({"n_items":5,"m_rows":100,"mu0":1.5,
    "planted":[{"items":[1,2],"coefficient":0.3},{"items":[3,4,5],"coefficient":-0.2}],
    "noise_sd":0.05,"seed":42})");
  const PlantedSpec spec = planted_spec_from_json(doc);
  CHECK(spec.n_items == 5);
  CHECK(spec.planted.size() == 2);
  CHECK(spec.planted[1].constraint == Constraint({3, 4, 5}));
  CHECK(spec.seed == 42);
  CHECK(planted_spec_to_json(spec) == doc);
  CHECK(code_of([] {
          planted_spec_from_json(json::parse(R"({"n_items":3,"m_rows":5,"mu0":0,"planted":[{"items":[1,9],"coefficient":1}]})"));
        }) == ErrorCode::InvalidSpec);
}
