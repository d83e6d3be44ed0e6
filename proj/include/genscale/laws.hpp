#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace genscale {

enum class LawFamily { compute, params_tokens, gold_likelihood };

std::string_view to_string(LawFamily family);
/// Accepts "compute", "params-tokens" / "params_tokens", "gold" / "gold_likelihood".
LawFamily parse_family(std::string_view name);

struct LawSpec {
  LawFamily family = LawFamily::compute;
  std::int64_t k = 1;

  LawSpec() = default;
  LawSpec(LawFamily f, std::int64_t k_);
  bool operator==(const LawSpec&) const = default;
};

/// -log pass@k = e0 + c0 * C^-alpha, with C in FLOP.
class ComputeLawParams {
 public:
  ComputeLawParams(double e0, double c0, double alpha);

  double e0() const noexcept { return e0_; }
  double c0() const noexcept { return c0_; }
  double alpha() const noexcept { return alpha_; }
  bool operator==(const ComputeLawParams&) const = default;

 private:
  double e0_, c0_, alpha_;
};

/// -log pass@k = e0 + n0 * N^-beta + d0 * D^-gamma.
class ParamsTokensLawParams {
 public:
  ParamsTokensLawParams(double e0, double n0, double beta, double d0, double gamma);

  double e0() const noexcept { return e0_; }
  double n0() const noexcept { return n0_; }
  double beta() const noexcept { return beta_; }
  double d0() const noexcept { return d0_; }
  double gamma() const noexcept { return gamma_; }
  bool operator==(const ParamsTokensLawParams&) const = default;

 private:
  double e0_, n0_, beta_, d0_, gamma_;
};

/// -log pass@k = xi0 + k0 * x^kappa, where x = -log GoldProb.
class GoldLikelihoodLawParams {
 public:
  GoldLikelihoodLawParams(double xi0, double k0, double kappa);

  double xi0() const noexcept { return xi0_; }
  double k0() const noexcept { return k0_; }
  double kappa() const noexcept { return kappa_; }
  bool operator==(const GoldLikelihoodLawParams&) const = default;

 private:
  double xi0_, k0_, kappa_;
};

using LawParams = std::variant<ComputeLawParams, ParamsTokensLawParams, GoldLikelihoodLawParams>;

double eval_compute_law(const ComputeLawParams& p, double compute);
double eval_params_tokens_law(const ParamsTokensLawParams& p, double n_params, double n_tokens);
double eval_gold_law(const GoldLikelihoodLawParams& p, double neg_log_goldprob);

/// Dispatches on the held law; `covariates` must have the family's arity.
double evaluate(const LawParams& params, std::span<const double> covariates);

LawFamily family_of(const LawParams& params);
/// Covariates per observation: 1 for compute and gold, 2 for params+tokens.
std::size_t covariate_arity(LawFamily family);
std::size_t parameter_count(LawFamily family);
/// Parameter names in vector order; the irreducible term is always first.
const std::vector<std::string>& parameter_names(LawFamily family);
std::vector<double> to_vector(const LawParams& params);
LawParams from_vector(LawFamily family, std::span<const double> values);

/// -log of the benchmark-mean gold-reference probability, via log-sum-exp.
/// Entries are per-problem log-probabilities and must be <= 0.
double aggregate_goldprob(std::span<const double> per_problem_logprobs);

}  // namespace genscale
