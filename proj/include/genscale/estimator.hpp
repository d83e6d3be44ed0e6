#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>

namespace genscale {

/// Sample tally for one problem: `n` draws, `s` of them successful.
struct ProblemOutcome {
  std::string problem_id;
  std::int64_t n = 0;
  std::int64_t s = 0;

  bool operator==(const ProblemOutcome&) const = default;
};

struct PassEstimate {
  std::int64_t k = 0;
  double value = 0.0;
};

/// Unbiased pass@k for a single problem, 1 - C(n-s, k) / C(n, k).
///
/// Evaluated as a running product in log space, so n in the millions is fine.
/// k == n is accepted; k > n or k < 1 throws std::invalid_argument.
PassEstimate pass_at_k(const ProblemOutcome& outcome, std::int64_t k);

enum class InsufficientSamples { error, skip };

struct BenchmarkPass {
  double value = 0.0;
  std::size_t n_included = 0;
  std::size_t n_skipped = 0;
};

/// Mean of per-problem pass@k. Under `skip`, problems with n < k are left out
/// and counted; under `error` they throw. Throws EmptyBenchmarkError when
/// nothing remains.
BenchmarkPass benchmark_pass_at_k(std::span<const ProblemOutcome> outcomes, std::int64_t k,
                                  InsufficientSamples policy = InsufficientSamples::error);

/// -ln(value). Returns nullopt for a zero pass rate; the caller decides what a
/// zero-pass point means.
std::optional<double> neg_log_pass(double value);

}  // namespace genscale
