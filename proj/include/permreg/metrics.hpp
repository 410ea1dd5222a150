#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include "permreg/core.hpp"

namespace permreg {

struct MetricsReport {
  double mae = 0.0;
  double mse = 0.0;
  std::optional<double> r2;  // empty when the evaluated targets are constant
  std::size_t n = 0;

  bool operator==(const MetricsReport&) const = default;
};

// All of these throw LengthMismatch or Empty.
double mae(std::span<const double> y_true, std::span<const double> y_pred);
double mse(std::span<const double> y_true, std::span<const double> y_pred);
/// 1 - SS_res / SS_tot around the mean of y_true; nullopt when SS_tot == 0.
std::optional<double> r2(std::span<const double> y_true, std::span<const double> y_pred);

MetricsReport evaluate(std::span<const double> y_true, std::span<const double> y_pred);
MetricsReport evaluate(const Model& model, const Dataset& dataset);

/// Constant predictor at the training mean.
Model naive_baseline(const Dataset& train);

}  // namespace permreg
