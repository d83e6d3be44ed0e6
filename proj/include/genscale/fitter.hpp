#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "genscale/dataset.hpp"
#include "genscale/estimator.hpp"
#include "genscale/laws.hpp"
#include "genscale/parallel.hpp"

namespace genscale {

/// One point of a scaling-law regression: the law's covariates and
/// y = -log pass_B@k. y = +inf marks a zero-pass point, which fit() drops.
struct Observation {
  std::vector<double> covariates;
  double y = 0.0;
};

struct LogUniformRange {
  double lo;
  double hi;
};

/// Multi-start sampling bounds. Irreducible terms start uniform on [0, y_max].
struct InitRanges {
  LogUniformRange exponent{1e-3, 1e1};
  LogUniformRange prefactor{1e-2, 1e8};
};

struct FitConfig {
  int n_starts = 64;
  int max_iters = 500;
  double rel_tol = 1e-10;
  std::uint64_t seed = 0;
  InitRanges init_ranges{};
  /// Pins the irreducible term at 0 (pure power law).
  bool fix_irreducible_zero = false;
  Exec exec = Exec::parallel;
};

struct FitResult {
  LawSpec law;
  LawParams params = ComputeLawParams(0.0, 1.0, 1.0);
  double sse = 0.0;
  std::size_t n_obs = 0;
  std::size_t n_dropped = 0;
  bool converged = false;
  int start_index = -1;
  int iterations = 0;
  /// |grad SSE| in the internal parameterization at the returned optimum.
  double gradient_norm = 0.0;
  /// 2-norm condition number of the internal Jacobian at the optimum.
  double jacobian_condition = 0.0;
};

/// Thrown when no start reaches a stationary point. Carries the lowest-SSE
/// start, flagged converged = false.
class NonConvergenceError : public std::runtime_error {
 public:
  NonConvergenceError(FitResult best, const std::string& what)
      : std::runtime_error(what), best_(std::move(best)) {}
  const FitResult& best() const noexcept { return best_; }

 private:
  FitResult best_;
};

/// Least-squares fit of `spec.family` to the observations.
///
/// Levenberg-Marquardt from `config.n_starts` seeded starts. Positive
/// parameters are optimized as logarithms (prefactors re-centred at the
/// geometric-mean covariate), the irreducible term through softplus. The
/// winner is the converged start with the lowest (SSE, start index), so the
/// result does not depend on thread scheduling.
FitResult fit(std::span<const Observation> observations, const LawSpec& spec,
              const FitConfig& config = {});

/// y_obs - y_model for each observation, in input order.
std::vector<double> residuals(std::span<const Observation> observations, const LawSpec& spec,
                              const LawParams& params);

/// The covariate vector a family reads from a record.
std::vector<double> covariates_for(const ModelRecord& record, LawFamily family);

/// One observation per record at k; zero-pass records get y = +inf.
std::vector<Observation> observations_at_k(std::span<const ModelRecord> records,
                                           LawFamily family, std::int64_t k,
                                           InsufficientSamples policy = InsufficientSamples::error);

FitResult fit_at_k(std::span<const ModelRecord> records, LawFamily family, std::int64_t k,
                   const FitConfig& config = {},
                   InsufficientSamples policy = InsufficientSamples::error);

/// One FitResult per k. Failures are rethrown as SweepError carrying k.
std::vector<FitResult> fit_sweep(std::span<const ModelRecord> records, LawFamily family,
                                 std::span<const std::int64_t> ks, const FitConfig& config = {},
                                 InsufficientSamples policy = InsufficientSamples::error);

}  // namespace genscale
