#include "genscale/laws.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace genscale {

namespace {

void require_nonneg(double v, const char* name) {
  if (!(std::isfinite(v) && v >= 0.0))
    throw std::invalid_argument(std::string(name) + " must be finite and >= 0");
}

void require_pos(double v, const char* name) {
  if (!(std::isfinite(v) && v > 0.0))
    throw std::invalid_argument(std::string(name) + " must be finite and > 0");
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

}  // namespace

std::string_view to_string(LawFamily family) {
  switch (family) {
    case LawFamily::compute: return "compute";
    case LawFamily::params_tokens: return "params-tokens";
    case LawFamily::gold_likelihood: return "gold";
  }
  return "unknown";
}

LawFamily parse_family(std::string_view name) {
  if (name == "compute") return LawFamily::compute;
  if (name == "params-tokens" || name == "params_tokens") return LawFamily::params_tokens;
  if (name == "gold" || name == "gold_likelihood" || name == "gold-likelihood")
    return LawFamily::gold_likelihood;
  throw std::invalid_argument("unknown law family '" + std::string(name) + "'");
}

LawSpec::LawSpec(LawFamily f, std::int64_t k_) : family(f), k(k_) {
  if (k < 1) throw std::invalid_argument("LawSpec: k must be >= 1");
}

ComputeLawParams::ComputeLawParams(double e0, double c0, double alpha)
    : e0_(e0), c0_(c0), alpha_(alpha) {
  require_nonneg(e0, "e0");
  require_pos(c0, "c0");
  require_pos(alpha, "alpha");
}

ParamsTokensLawParams::ParamsTokensLawParams(double e0, double n0, double beta, double d0,
                                             double gamma)
    : e0_(e0), n0_(n0), beta_(beta), d0_(d0), gamma_(gamma) {
  require_nonneg(e0, "e0");
  require_pos(n0, "n0");
  require_pos(beta, "beta");
  require_pos(d0, "d0");
  require_pos(gamma, "gamma");
}

GoldLikelihoodLawParams::GoldLikelihoodLawParams(double xi0, double k0, double kappa)
    : xi0_(xi0), k0_(k0), kappa_(kappa) {
  require_nonneg(xi0, "xi0");
  require_pos(k0, "k0");
  require_pos(kappa, "kappa");
}

double eval_compute_law(const ComputeLawParams& p, double compute) {
  require_pos(compute, "compute");
  return p.e0() + p.c0() * std::pow(compute, -p.alpha());
}

double eval_params_tokens_law(const ParamsTokensLawParams& p, double n_params, double n_tokens) {
  require_pos(n_params, "n_params");
  require_pos(n_tokens, "n_tokens");
  return p.e0() + p.n0() * std::pow(n_params, -p.beta()) + p.d0() * std::pow(n_tokens, -p.gamma());
}

double eval_gold_law(const GoldLikelihoodLawParams& p, double neg_log_goldprob) {
  require_pos(neg_log_goldprob, "neg_log_goldprob");
  return p.xi0() + p.k0() * std::pow(neg_log_goldprob, p.kappa());
}

LawFamily family_of(const LawParams& params) {
  return std::visit(overloaded{
                        [](const ComputeLawParams&) { return LawFamily::compute; },
                        [](const ParamsTokensLawParams&) { return LawFamily::params_tokens; },
                        [](const GoldLikelihoodLawParams&) { return LawFamily::gold_likelihood; },
                    },
                    params);
}

std::size_t covariate_arity(LawFamily family) {
  return family == LawFamily::params_tokens ? 2 : 1;
}

std::size_t parameter_count(LawFamily family) {
  return family == LawFamily::params_tokens ? 5 : 3;
}

const std::vector<std::string>& parameter_names(LawFamily family) {
  static const std::vector<std::string> compute{"e0", "c0", "alpha"};
  static const std::vector<std::string> params_tokens{"e0", "n0", "beta", "d0", "gamma"};
  static const std::vector<std::string> gold{"xi0", "k0", "kappa"};
  switch (family) {
    case LawFamily::compute: return compute;
    case LawFamily::params_tokens: return params_tokens;
    case LawFamily::gold_likelihood: return gold;
  }
  return compute;
}

double evaluate(const LawParams& params, std::span<const double> covariates) {
  const LawFamily family = family_of(params);
  if (covariates.size() != covariate_arity(family))
    throw std::invalid_argument("law '" + std::string(to_string(family)) + "' expects " +
                                std::to_string(covariate_arity(family)) + " covariate(s), got " +
                                std::to_string(covariates.size()));
  return std::visit(overloaded{
                        [&](const ComputeLawParams& p) { return eval_compute_law(p, covariates[0]); },
                        [&](const ParamsTokensLawParams& p) {
                          return eval_params_tokens_law(p, covariates[0], covariates[1]);
                        },
                        [&](const GoldLikelihoodLawParams& p) { return eval_gold_law(p, covariates[0]); },
                    },
                    params);
}

std::vector<double> to_vector(const LawParams& params) {
  return std::visit(overloaded{
                        [](const ComputeLawParams& p) {
                          return std::vector<double>{p.e0(), p.c0(), p.alpha()};
                        },
                        [](const ParamsTokensLawParams& p) {
                          return std::vector<double>{p.e0(), p.n0(), p.beta(), p.d0(), p.gamma()};
                        },
                        [](const GoldLikelihoodLawParams& p) {
                          return std::vector<double>{p.xi0(), p.k0(), p.kappa()};
                        },
                    },
                    params);
}

LawParams from_vector(LawFamily family, std::span<const double> v) {
  if (v.size() != parameter_count(family))
    throw std::invalid_argument("wrong parameter count for law '" +
                                std::string(to_string(family)) + "'");
  switch (family) {
    case LawFamily::compute: return ComputeLawParams(v[0], v[1], v[2]);
    case LawFamily::params_tokens: return ParamsTokensLawParams(v[0], v[1], v[2], v[3], v[4]);
    case LawFamily::gold_likelihood: return GoldLikelihoodLawParams(v[0], v[1], v[2]);
  }
  throw std::invalid_argument("unknown law family");
}

double aggregate_goldprob(std::span<const double> lp) {
  if (lp.empty()) throw std::invalid_argument("aggregate_goldprob: no log-probabilities");
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : lp) {
    if (std::isnan(v) || v > 0.0)
      throw std::invalid_argument("aggregate_goldprob: log-probabilities must be <= 0");
    hi = std::max(hi, v);
  }
  if (hi == -std::numeric_limits<double>::infinity())
    throw std::invalid_argument("aggregate_goldprob: every gold reference has probability 0");
  double sum = 0.0;
  for (double v : lp) sum += std::exp(v - hi);
  const double log_mean = hi + std::log(sum) - std::log(static_cast<double>(lp.size()));
  return std::max(0.0, -log_mean);
}

}  // namespace genscale
