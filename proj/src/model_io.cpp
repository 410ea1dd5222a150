#include "permreg/model_io.hpp"

#include <fstream>

namespace permreg {

using nlohmann::json;

namespace {

template <class T>
T field(const json& doc, const char* key) {
  if (!doc.is_object() || !doc.contains(key)) {
    throw Error(ErrorCode::Malformed, std::string("missing field '") + key + "'");
  }
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::Malformed, std::string("field '") + key + "' has the wrong type");
  }
}

}  // namespace

json constraint_to_json(const Constraint& c) {
  return json(std::vector<Item>(c.items().begin(), c.items().end()));
}

Constraint constraint_from_json(const json& doc, std::size_t n_items) {
  if (!doc.is_array()) throw Error(ErrorCode::Malformed, "constraint must be an item array");
  std::vector<Item> items;
  for (const auto& v : doc) {
    if (!v.is_number_integer()) throw Error(ErrorCode::Malformed, "constraint items must be integers");
    items.push_back(v.get<Item>());
  }
  return Constraint::checked(std::move(items), n_items);
}

json model_to_json(const Model& model) {
  json terms = json::array();
  for (const auto& t : model.terms) {
    terms.push_back({{"items", constraint_to_json(t.constraint)}, {"beta", t.beta}});
  }
  return {{"format", kModelFormat}, {"n_items", model.n_items}, {"mu", model.mu}, {"terms", terms}};
}

Model model_from_json(const json& doc) {
  if (field<int>(doc, "format") != kModelFormat) {
    throw Error(ErrorCode::Malformed, "unsupported model format");
  }
  Model model;
  model.n_items = field<std::size_t>(doc, "n_items");
  model.mu = field<double>(doc, "mu");
  const json terms = field<json>(doc, "terms");
  if (!terms.is_array()) throw Error(ErrorCode::Malformed, "'terms' must be an array");
  for (const auto& t : terms) {
    if (!t.is_object() || !t.contains("items")) throw Error(ErrorCode::Malformed, "term missing 'items'");
    model.add_term(constraint_from_json(t.at("items"), model.n_items), field<double>(t, "beta"));
  }
  return model;
}

Model load_model(const std::filesystem::path& path) { return model_from_json(read_json_file(path)); }

void save_model(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << model_to_json(model).dump(2) << '\n';
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

json metrics_to_json(const MetricsReport& report) {
  return {{"mae", report.mae},
          {"mse", report.mse},
          {"r2", report.r2 ? json(*report.r2) : json(nullptr)},
          {"n", report.n}};
}

json hyperparams_to_json(const Hyperparams& hp) {
  return {{"l", hp.l}, {"learning_rate", hp.learning_rate}};
}

Hyperparams hyperparams_from_json(const json& doc) {
  Hyperparams hp;
  const json l = field<json>(doc, "l");
  if (!l.is_number_integer()) throw Error(ErrorCode::InvalidHyperparams, "l must be an integer");
  hp.l = l.get<int>();
  const json lr = field<json>(doc, "learning_rate");
  if (!lr.is_number()) throw Error(ErrorCode::InvalidHyperparams, "learning_rate must be a number");
  hp.learning_rate = lr.get<double>();
  return hp;
}

json planted_spec_to_json(const PlantedSpec& spec) {
  json planted = json::array();
  for (const auto& p : spec.planted) {
    planted.push_back({{"items", constraint_to_json(p.constraint)}, {"coefficient", p.coefficient}});
  }
  return {{"n_items", spec.n_items}, {"m_rows", spec.m_rows}, {"mu0", spec.mu0},
          {"planted", planted},      {"noise_sd", spec.noise_sd}, {"seed", spec.seed}};
}

PlantedSpec planted_spec_from_json(const json& doc) {
  PlantedSpec spec;
  spec.n_items = field<std::size_t>(doc, "n_items");
  spec.m_rows = field<std::size_t>(doc, "m_rows");
  spec.mu0 = field<double>(doc, "mu0");
  spec.noise_sd = doc.contains("noise_sd") ? field<double>(doc, "noise_sd") : 0.0;
  spec.seed = doc.contains("seed") ? field<std::uint64_t>(doc, "seed") : 0;
  const json planted = doc.contains("planted") ? doc.at("planted") : json::array();
  if (!planted.is_array()) throw Error(ErrorCode::Malformed, "'planted' must be an array");
  for (const auto& p : planted) {
    if (!p.is_object() || !p.contains("items")) throw Error(ErrorCode::Malformed, "planted term missing 'items'");
    try {
      spec.planted.push_back({constraint_from_json(p.at("items"), spec.n_items),
                              field<double>(p, "coefficient")});
    } catch (const Error& e) {
      if (e.code() == ErrorCode::Malformed) throw;
      throw Error(ErrorCode::InvalidSpec, e.what());
    }
  }
  spec.validate();
  return spec;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Malformed, path.string() + ": " + e.what());
  }
}

}  // namespace permreg
