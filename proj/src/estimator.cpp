#include "genscale/estimator.hpp"

#include <cmath>
#include <stdexcept>

#include "genscale/errors.hpp"

namespace genscale {

namespace {

void check_outcome(const ProblemOutcome& o) {
  if (o.n < 1) throw std::invalid_argument("problem '" + o.problem_id + "': n must be >= 1");
  if (o.s < 0 || o.s > o.n)
    throw std::invalid_argument("problem '" + o.problem_id + "': s must lie in [0, n]");
}

}  // namespace

PassEstimate pass_at_k(const ProblemOutcome& outcome, std::int64_t k) {
  check_outcome(outcome);
  if (k < 1) throw std::invalid_argument("problem '" + outcome.problem_id + "': k must be >= 1");
  if (k > outcome.n)
    throw std::invalid_argument("problem '" + outcome.problem_id + "': k=" + std::to_string(k) +
                                " exceeds n=" + std::to_string(outcome.n));

  if (outcome.s == 0) return {k, 0.0};
  if (outcome.n - outcome.s < k) return {k, 1.0};

  // C(n-s, k) / C(n, k) = prod_{j<k} (n-s-j)/(n-j) = prod_{j<k} (1 - s/(n-j))
  const double s = static_cast<double>(outcome.s);
  double log_ratio = 0.0;
  for (std::int64_t j = 0; j < k; ++j) {
    log_ratio += std::log1p(-s / static_cast<double>(outcome.n - j));
  }
  return {k, -std::expm1(log_ratio)};
}

BenchmarkPass benchmark_pass_at_k(std::span<const ProblemOutcome> outcomes, std::int64_t k,
                                  InsufficientSamples policy) {
  if (outcomes.empty()) throw std::invalid_argument("benchmark has no problems");
  if (k < 1) throw std::invalid_argument("k must be >= 1");

  BenchmarkPass out;
  double sum = 0.0;
  for (const auto& o : outcomes) {
    if (o.n < k && policy == InsufficientSamples::skip) {
      check_outcome(o);
      ++out.n_skipped;
      continue;
    }
    sum += pass_at_k(o, k).value;
    ++out.n_included;
  }
  if (out.n_included == 0)
    throw EmptyBenchmarkError("all " + std::to_string(out.n_skipped) +
                              " problems have fewer than k=" + std::to_string(k) + " samples");
  out.value = sum / static_cast<double>(out.n_included);
  return out;
}

std::optional<double> neg_log_pass(double value) {
  if (!(value >= 0.0 && value <= 1.0))
    throw std::invalid_argument("pass rate must lie in [0, 1]");
  if (value == 0.0) return std::nullopt;
  return -std::log(value);
}

}  // namespace genscale
