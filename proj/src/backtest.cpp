#include "genscale/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <stdexcept>

#include "genscale/errors.hpp"

namespace genscale {

double relative_error(double target_y, double predicted_y) {
  if (!(target_y > 0.0 && std::isfinite(target_y)))
    throw std::invalid_argument("relative_error: target must be finite and > 0");
  return std::abs(target_y - predicted_y) / target_y;
}

namespace {

std::size_t pick_target(std::span<const BacktestInput> inputs, std::vector<std::string>& warnings) {
  std::size_t target = 0;
  std::size_t ties = 1;
  for (std::size_t i = 1; i < inputs.size(); ++i) {
    const auto& a = inputs[i];
    const auto& t = inputs[target];
    if (a.compute > t.compute) {
      target = i;
      ties = 1;
    } else if (a.compute == t.compute) {
      ++ties;
      if (a.model_id < t.model_id) target = i;
    }
  }
  if (ties > 1)
    warnings.push_back(std::to_string(ties) + " models share the maximum compute; target '" +
                       inputs[target].model_id + "' chosen by model_id order");
  return target;
}

BacktestPoint run_cap(std::span<const BacktestInput> inputs, std::size_t target, double cap,
                      const BacktestReport& report, FitConfig config) {
  BacktestPoint pt;
  pt.compute_cap = cap;
  pt.compute_ratio = cap / report.target_compute;

  std::vector<Observation> fit_set;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (i == target || inputs[i].compute > cap) continue;
    fit_set.push_back(inputs[i].obs);
    pt.fit_model_ids.push_back(inputs[i].model_id);
  }
  if (std::find(pt.fit_model_ids.begin(), pt.fit_model_ids.end(), report.target_model_id) !=
      pt.fit_model_ids.end())
    throw std::logic_error("backtest: target admitted to a fit set");
  pt.n_fit_models = fit_set.size();

  try {
    FitResult fr = fit(fit_set, report.law, config);
    pt.predicted_y = evaluate(fr.params, inputs[target].obs.covariates);
    pt.relative_error = relative_error(report.target_y, pt.predicted_y);
    pt.fit = std::move(fr);
  } catch (const NonConvergenceError& e) {
    pt.error = e.what();
  } catch (const UnderdeterminedError& e) {
    pt.error = e.what();
  } catch (const std::invalid_argument& e) {
    pt.error = e.what();
  }
  return pt;
}

}  // namespace

BacktestReport backtest(std::span<const BacktestInput> inputs, const LawSpec& spec,
                        const FitConfig& config, const std::optional<std::vector<double>>& caps,
                        Exec exec) {
  if (inputs.size() < 2)
    throw std::invalid_argument("backtest: need a target plus at least one cheaper model");
  for (const auto& in : inputs)
    if (!(in.compute > 0.0 && std::isfinite(in.compute)))
      throw std::invalid_argument("backtest: model '" + in.model_id + "' has invalid compute");

  BacktestReport report;
  report.law = spec;
  const std::size_t target = pick_target(inputs, report.warnings);
  report.target_model_id = inputs[target].model_id;
  report.target_compute = inputs[target].compute;
  report.target_y = inputs[target].obs.y;
  if (!(report.target_y > 0.0 && std::isfinite(report.target_y)))
    throw std::invalid_argument("backtest: target '" + report.target_model_id +
                                "' has -log pass outside (0, inf); relative error is undefined");

  std::vector<double> cap_list;
  if (caps) {
    cap_list = *caps;
    for (double c : cap_list) {
      if (!(c > 0.0 && std::isfinite(c)))
        throw std::invalid_argument("backtest: caps must be finite and > 0");
      if (c > report.target_compute)
        throw std::invalid_argument("backtest: cap exceeds the target's compute");
    }
  } else {
    for (std::size_t i = 0; i < inputs.size(); ++i)
      if (i != target) cap_list.push_back(inputs[i].compute);
  }
  std::sort(cap_list.begin(), cap_list.end());
  cap_list.erase(std::unique(cap_list.begin(), cap_list.end()), cap_list.end());
  if (cap_list.empty()) throw std::invalid_argument("backtest: no compute caps");

  report.points.resize(cap_list.size());
  FitConfig inner = config;
  if (exec == Exec::parallel) {
    inner.exec = Exec::serial;
    const int n = static_cast<int>(cap_list.size());
    std::vector<std::exception_ptr> failures(cap_list.size());
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) {
      const auto idx = static_cast<std::size_t>(i);
      try {
        report.points[idx] = run_cap(inputs, target, cap_list[idx], report, inner);
      } catch (...) {
        failures[idx] = std::current_exception();
      }
    }
    for (const auto& f : failures)
      if (f) std::rethrow_exception(f);
  } else {
    for (std::size_t i = 0; i < cap_list.size(); ++i)
      report.points[i] = run_cap(inputs, target, cap_list[i], report, inner);
  }
  return report;
}

BacktestReport backtest(std::span<const ModelRecord> records, const LawSpec& spec,
                        const FitConfig& config, const std::optional<std::vector<double>>& caps,
                        InsufficientSamples policy, Exec exec) {
  const auto obs = observations_at_k(records, spec.family, spec.k, policy);
  std::vector<BacktestInput> inputs;
  inputs.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i)
    inputs.push_back({records[i].model_id, records[i].compute, obs[i]});
  return backtest(inputs, spec, config, caps, exec);
}

std::vector<TrajectoryRow> parameter_trajectories(const BacktestReport& report) {
  if (report.points.empty()) throw std::invalid_argument("parameter_trajectories: empty report");
  const auto& names = parameter_names(report.law.family);
  std::vector<TrajectoryRow> rows;
  for (const auto& pt : report.points) {
    if (!pt.fit) continue;
    const auto values = to_vector(pt.fit->params);
    for (std::size_t j = 0; j < values.size(); ++j)
      rows.push_back({pt.compute_cap, pt.compute_ratio, names[j], values[j]});
  }
  return rows;
}

}  // namespace genscale
