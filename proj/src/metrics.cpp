#include "permreg/metrics.hpp"

#include <cmath>

#include "permreg/boost.hpp"

namespace permreg {
namespace {

void check(std::span<const double> y_true, std::span<const double> y_pred) {
  if (y_true.size() != y_pred.size()) {
    throw Error(ErrorCode::LengthMismatch, "prediction and target lengths differ");
  }
  if (y_true.empty()) throw Error(ErrorCode::Empty, "no values to evaluate");
}

}  // namespace

double mae(std::span<const double> y_true, std::span<const double> y_pred) {
  check(y_true, y_pred);
  double sum = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) sum += std::abs(y_true[i] - y_pred[i]);
  return sum / static_cast<double>(y_true.size());
}

double mse(std::span<const double> y_true, std::span<const double> y_pred) {
  check(y_true, y_pred);
  double sum = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const double d = y_true[i] - y_pred[i];
    sum += d * d;
  }
  return sum / static_cast<double>(y_true.size());
}

std::optional<double> r2(std::span<const double> y_true, std::span<const double> y_pred) {
  check(y_true, y_pred);
  double mean = 0.0;
  for (double y : y_true) mean += y;
  mean /= static_cast<double>(y_true.size());
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    ss_res += (y_true[i] - y_pred[i]) * (y_true[i] - y_pred[i]);
    ss_tot += (y_true[i] - mean) * (y_true[i] - mean);
  }
  if (ss_tot == 0.0) return std::nullopt;
  return 1.0 - ss_res / ss_tot;
}

MetricsReport evaluate(std::span<const double> y_true, std::span<const double> y_pred) {
  return {mae(y_true, y_pred), mse(y_true, y_pred), r2(y_true, y_pred), y_true.size()};
}

MetricsReport evaluate(const Model& model, const Dataset& dataset) {
  if (model.n_items != 0 && model.n_items != dataset.n_items()) {
    throw Error(ErrorCode::IncompatibleDatasets, "model and dataset item counts differ");
  }
  const auto targets = dataset.targets();
  const auto pred = predict_all(model, dataset);
  return evaluate(targets, pred);
}

Model naive_baseline(const Dataset& train) {
  return Model{train.n_items(), train.mean_target(), {}};
}

}  // namespace permreg
