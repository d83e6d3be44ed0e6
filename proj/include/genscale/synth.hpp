#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "genscale/dataset.hpp"
#include "genscale/fitter.hpp"
#include "genscale/laws.hpp"
#include "genscale/parallel.hpp"

namespace genscale {

struct GridPoint {
  double n_params;
  double n_tokens;
};

/// samples_per_problem = Budgeted{} draws sample_budget(C) per problem.
struct Budgeted {};
using SampleCount = std::variant<std::int64_t, Budgeted>;

struct SynthSpec {
  /// The pass@1 law. Its family decides which covariate drives generation.
  LawParams ground_truth = ComputeLawParams(0.0, 1.0, 1.0);
  std::vector<GridPoint> model_grid;
  /// Per-grid-point -log GoldProb; required for the gold family, optional
  /// otherwise (emitted as gold_logprobs when present).
  std::vector<double> gold_nll;
  double noise_sigma = 0.0;
  std::int64_t n_problems = 128;
  SampleCount samples_per_problem = std::int64_t{1000};
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument when the spec is infeasible.
  void validate() const;
};

/// Seed for the (model, problem) stream: seed ^ mix64(model, problem).
/// The per-model noise draw uses problem index kNoiseStream.
std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t model_index, std::uint64_t problem_index);
inline constexpr std::uint64_t kNoiseStream = ~std::uint64_t{0};

/// Homogeneous corpus: every problem of a model shares the success
/// probability p = exp(-y), y = ground-truth law value (+ noise, floored at 0).
std::vector<ModelRecord> generate_benchmark_corpus(const SynthSpec& spec,
                                                   Exec exec = Exec::parallel);

/// As generate_benchmark_corpus, but per-problem p_i ~ Beta with mean p and
/// variance spread * p (1 - p). spread must lie in [0, 1); 0 reproduces the
/// homogeneous corpus exactly.
std::vector<ModelRecord> heterogeneous_difficulty_corpus(const SynthSpec& spec,
                                                         double difficulty_spread,
                                                         Exec exec = Exec::parallel);

/// Law values at each grid point plus seeded N(0, sigma) noise, without the
/// binomial sampling step. Covariates follow the law's family.
std::vector<Observation> law_observations(const LawParams& law, const std::vector<GridPoint>& grid,
                                          const std::vector<double>& gold_nll, double noise_sigma,
                                          std::uint64_t seed);

/// The same geometric (N, D) grid the CLI uses by default: `count` points with
/// N and D log-spaced between the given bounds.
std::vector<GridPoint> diagonal_grid(std::size_t count, double n_lo, double n_hi, double d_lo,
                                     double d_hi);

}  // namespace genscale
