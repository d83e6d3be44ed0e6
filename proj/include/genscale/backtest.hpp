#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "genscale/fitter.hpp"

namespace genscale {

/// A model as the backtester sees it: identity, compute, and its observation.
struct BacktestInput {
  std::string model_id;
  double compute = 0.0;
  Observation obs;
};

struct BacktestPoint {
  double compute_cap = 0.0;
  double compute_ratio = 0.0;
  std::size_t n_fit_models = 0;
  /// Models admitted to this cap's fit set, in input order.
  std::vector<std::string> fit_model_ids;
  /// Empty when the fit at this cap failed; `error` then says why.
  std::optional<FitResult> fit;
  std::string error;
  double predicted_y = std::numeric_limits<double>::quiet_NaN();
  double relative_error = std::numeric_limits<double>::quiet_NaN();
};

struct BacktestReport {
  LawSpec law;
  std::string target_model_id;
  double target_compute = 0.0;
  double target_y = 0.0;
  std::vector<BacktestPoint> points;
  std::vector<std::string> warnings;
};

/// |target - predicted| / target.
double relative_error(double target_y, double predicted_y);

/// Fit on every model with compute <= cap (never the target) and extrapolate
/// to the maximum-compute target. `caps` = nullopt selects every distinct
/// non-target compute value.
BacktestReport backtest(std::span<const BacktestInput> inputs, const LawSpec& spec,
                        const FitConfig& config = {},
                        const std::optional<std::vector<double>>& caps = std::nullopt,
                        Exec exec = Exec::parallel);

BacktestReport backtest(std::span<const ModelRecord> records, const LawSpec& spec,
                        const FitConfig& config = {},
                        const std::optional<std::vector<double>>& caps = std::nullopt,
                        InsufficientSamples policy = InsufficientSamples::error,
                        Exec exec = Exec::parallel);

struct TrajectoryRow {
  double compute_cap;
  double compute_ratio;
  std::string parameter;
  double value;
};

/// Long-format (ratio, parameter, value) rows for every fitted cap.
std::vector<TrajectoryRow> parameter_trajectories(const BacktestReport& report);

}  // namespace genscale
