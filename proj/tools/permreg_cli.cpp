// permreg: batch entry points for permutation regression.
//
//   permreg fit    --train T.csv [--val V.csv] --l 10 --learning-rate 1 [--max-len K] --out model.json
//   permreg eval   --model model.json --data D.csv
//   permreg gen    --spec planted.json --out data.csv [--seed S]
//   permreg split  --in data.csv --sizes 450,50,250 --seed S --out-prefix P
//   permreg serve  [--bind ADDR] [--port N] [--max-sessions N] [--max-rows N] [--max-len K]
//
// Machine-readable output goes to stdout, diagnostics to stderr.

#include <csignal>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "permreg/boost.hpp"
#include "permreg/data.hpp"
#include "permreg/metrics.hpp"
#include "permreg/model_io.hpp"
#include "permreg/server.hpp"

namespace {

using nlohmann::json;
using namespace permreg;

HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream in(text);
  std::string part;
  while (std::getline(in, part, ',')) {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(part, &used);
    if (used != part.size()) throw Error(ErrorCode::InvalidSpec, "bad split size '" + part + "'");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.size() != 3) throw Error(ErrorCode::InvalidSpec, "--sizes needs train,validation,test");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Permutation regression over order-constraint features"};
  app.require_subcommand(1);

  std::string train_path, val_path, out_path, model_path, data_path, spec_path, in_path, prefix, sizes;
  long long l = 10;
  double learning_rate = 1.0;
  std::size_t max_len = 0;
  std::uint64_t seed = 0;
  ServerConfig server_cfg = config_from_env();

  auto* fit = app.add_subcommand("fit", "Fit a model by boosting with full constraint search");
  fit->add_option("--train", train_path, "Training CSV")->required();
  fit->add_option("--val", val_path, "Validation CSV");
  fit->add_option("--l", l, "Number of boosting steps")->capture_default_str();
  fit->add_option("--learning-rate", learning_rate, "Step scale in [1e-6, 1]")->capture_default_str();
  fit->add_option("--max-len", max_len, "Longest constraint searched (0: n_items)");
  fit->add_option("--out", out_path, "Model JSON output")->required();

  auto* eval = app.add_subcommand("eval", "Score a model on a dataset");
  eval->add_option("--model", model_path, "Model JSON")->required();
  eval->add_option("--data", data_path, "Dataset CSV")->required();

  auto* gen = app.add_subcommand("gen", "Generate a dataset from a planted model");
  gen->add_option("--spec", spec_path, "Planted spec JSON")->required();
  gen->add_option("--out", out_path, "Dataset CSV output")->required();
  auto* seed_opt = gen->add_option("--seed", seed, "Override the spec seed");

  auto* split_cmd = app.add_subcommand("split", "Seeded train/validation/test split");
  split_cmd->add_option("--in", in_path, "Dataset CSV")->required();
  split_cmd->add_option("--sizes", sizes, "train,validation,test row counts")->required();
  split_cmd->add_option("--seed", seed, "Shuffle seed")->capture_default_str();
  split_cmd->add_option("--out-prefix", prefix, "Writes <prefix>.train.csv etc.")->required();

  auto* serve = app.add_subcommand("serve", "Run the HTTP session service");
  serve->add_option("--bind", server_cfg.bind, "Bind address")->capture_default_str();
  serve->add_option("--port", server_cfg.port, "Port")->capture_default_str();
  serve->add_option("--max-sessions", server_cfg.max_sessions, "Concurrent session limit")->capture_default_str();
  serve->add_option("--max-rows", server_cfg.max_rows, "Largest accepted dataset")->capture_default_str();
  serve->add_option("--max-len", server_cfg.default_max_len, "Default constraint length cap");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*fit) {
      const Dataset train = load_csv(train_path);
      if (l < 1) throw Error(ErrorCode::InvalidHyperparams, "--l must be at least 1");
      const Model model = fit_auto(train, {static_cast<std::size_t>(l), learning_rate, max_len});
      save_model(model, out_path);
      json report{{"terms", model.terms.size()}, {"train", metrics_to_json(evaluate(model, train))}};
      if (!val_path.empty()) report["validation"] = metrics_to_json(evaluate(model, load_csv(val_path)));
      std::cout << report.dump(2) << '\n';
    } else if (*eval) {
      const Model model = load_model(model_path);
      const Dataset data = load_csv(data_path);
      std::cout << metrics_to_json(evaluate(model, data)).dump(2) << '\n';
    } else if (*gen) {
      PlantedSpec spec = planted_spec_from_json(read_json_file(spec_path));
      if (seed_opt->count() > 0) spec.seed = seed;
      const Dataset data = generate_planted(spec);
      save_csv(data, out_path);
      std::cerr << "wrote " << data.size() << " rows to " << out_path << '\n';
    } else if (*split_cmd) {
      const auto n = parse_sizes(sizes);
      const Splits parts = split(load_csv(in_path), {n[0], n[1], n[2], seed});
      save_csv(parts.train, prefix + ".train.csv");
      save_csv(parts.validation, prefix + ".validation.csv");
      save_csv(parts.test, prefix + ".test.csv");
      std::cerr << "wrote " << prefix << ".{train,validation,test}.csv\n";
    } else if (*serve) {
      HttpServer server(server_cfg);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "listening on " << server_cfg.bind << ':' << server_cfg.port << '\n';
      server.run();
      g_server = nullptr;
    }
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
