#include "genscale/fitter.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

#include <Eigen/Dense>

#include "genscale/errors.hpp"
#include "rng.hpp"

namespace genscale {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kIrreducibleClamp = 1e-10;
constexpr double kGradientTol = 1e-6;
constexpr double kLambdaInit = 1e-3;
constexpr double kLambdaMax = 1e16;

double softplus(double u) { return u > 0.0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u)); }

double softplus_inv(double e) {
  e = std::max(e, 1e-12);
  return e > 30.0 ? e + std::log(-std::expm1(-e)) : std::log(std::expm1(e));
}

// The regression problem in internal coordinates. Each power-law term is
// stored as (log prefactor at the reference covariate, log exponent), so the
// term reads exp(v -/+ exp(w) * (log x - log x_ref)).
class Model {
 public:
  Model(LawFamily family, bool fix_e0) : family_(family), fix_e0_(fix_e0) {}

  void add(std::span<const double> cov, double y) {
    std::array<double, 2> lx{};
    for (std::size_t j = 0; j < cov.size(); ++j) lx[j] = std::log(cov[j]);
    logx_.push_back(lx);
    y_.push_back(y);
  }

  void centre() {
    log_ref_ = {0.0, 0.0};
    const std::size_t arity = covariate_arity(family_);
    for (const auto& lx : logx_)
      for (std::size_t j = 0; j < arity; ++j) log_ref_[j] += lx[j];
    for (std::size_t j = 0; j < arity; ++j) log_ref_[j] /= static_cast<double>(logx_.size());
    for (auto& lx : logx_)
      for (std::size_t j = 0; j < arity; ++j) lx[j] -= log_ref_[j];
  }

  std::size_t size() const { return y_.size(); }
  int dim() const { return static_cast<int>(parameter_count(family_)) - (fix_e0_ ? 1 : 0); }
  double y_max() const { return *std::max_element(y_.begin(), y_.end()); }

  double predict(const Eigen::VectorXd& t, std::size_t i) const {
    const int o = fix_e0_ ? 0 : 1;
    const double e0 = fix_e0_ ? 0.0 : softplus(t[0]);
    const auto& lx = logx_[i];
    switch (family_) {
      case LawFamily::compute: return e0 + std::exp(t[o] - std::exp(t[o + 1]) * lx[0]);
      case LawFamily::gold_likelihood: return e0 + std::exp(t[o] + std::exp(t[o + 1]) * lx[0]);
      case LawFamily::params_tokens:
        return e0 + std::exp(t[o] - std::exp(t[o + 1]) * lx[0]) +
               std::exp(t[o + 2] - std::exp(t[o + 3]) * lx[1]);
    }
    return kInf;
  }

  void residuals(const Eigen::VectorXd& t, Eigen::VectorXd& r) const {
    for (std::size_t i = 0; i < y_.size(); ++i) r[static_cast<Eigen::Index>(i)] = y_[i] - predict(t, i);
  }

  double sse(const Eigen::VectorXd& t) const {
    double s = 0.0;
    for (std::size_t i = 0; i < y_.size(); ++i) {
      const double d = y_[i] - predict(t, i);
      s += d * d;
    }
    return std::isfinite(s) ? s : kInf;
  }

  // Central differences, h = 1e-6 (1 + |theta_j|). J holds d(model)/d(theta).
  void jacobian(const Eigen::VectorXd& t, Eigen::MatrixXd& jac) const {
    Eigen::VectorXd tp = t;
    for (int j = 0; j < t.size(); ++j) {
      const double h = 1e-6 * (1.0 + std::abs(t[j]));
      tp[j] = t[j] + h;
      const double hp = tp[j] - t[j];
      for (std::size_t i = 0; i < y_.size(); ++i) jac(static_cast<Eigen::Index>(i), j) = predict(tp, i);
      tp[j] = t[j] - h;
      const double hm = t[j] - tp[j];
      for (std::size_t i = 0; i < y_.size(); ++i) {
        auto& cell = jac(static_cast<Eigen::Index>(i), j);
        cell = (cell - predict(tp, i)) / (hp + hm);
      }
      tp[j] = t[j];
    }
  }

  Eigen::VectorXd to_internal(std::span<const double> natural) const {
    Eigen::VectorXd t(dim());
    int o = 0;
    if (!fix_e0_) t[o++] = softplus_inv(natural[0]);
    const auto term = [&](double pref, double expo, double log_ref, double sign) {
      t[o++] = std::log(pref) - sign * expo * log_ref;
      t[o++] = std::log(expo);
    };
    switch (family_) {
      case LawFamily::compute: term(natural[1], natural[2], log_ref_[0], 1.0); break;
      case LawFamily::gold_likelihood: term(natural[1], natural[2], log_ref_[0], -1.0); break;
      case LawFamily::params_tokens:
        term(natural[1], natural[2], log_ref_[0], 1.0);
        term(natural[3], natural[4], log_ref_[1], 1.0);
        break;
    }
    return t;
  }

  std::vector<double> to_natural(const Eigen::VectorXd& t) const {
    std::vector<double> v;
    int o = 0;
    double e0 = fix_e0_ ? 0.0 : softplus(t[o++]);
    if (e0 < kIrreducibleClamp) e0 = 0.0;
    v.push_back(e0);
    const auto term = [&](double log_ref, double sign) {
      const double expo = std::exp(t[o + 1]);
      v.push_back(std::exp(t[o] + sign * expo * log_ref));
      v.push_back(expo);
      o += 2;
    };
    switch (family_) {
      case LawFamily::compute: term(log_ref_[0], 1.0); break;
      case LawFamily::gold_likelihood: term(log_ref_[0], -1.0); break;
      case LawFamily::params_tokens:
        term(log_ref_[0], 1.0);
        term(log_ref_[1], 1.0);
        break;
    }
    return v;
  }

 private:
  LawFamily family_;
  bool fix_e0_;
  std::vector<std::array<double, 2>> logx_;
  std::vector<double> y_;
  std::array<double, 2> log_ref_{};
};

struct StartOutcome {
  Eigen::VectorXd theta;
  double sse = kInf;
  double gradient_norm = kInf;
  int iterations = 0;
  bool stationary = false;
};

std::vector<double> sample_start(const Model& model, LawFamily family, const FitConfig& cfg,
                                 int index) {
  detail::SplitMix rng(cfg.seed ^ detail::splitmix64(static_cast<std::uint64_t>(index) + 1));
  std::vector<double> v;
  v.push_back(cfg.fix_irreducible_zero ? 0.0 : rng.uniform(0.0, model.y_max()));
  const int terms = family == LawFamily::params_tokens ? 2 : 1;
  for (int i = 0; i < terms; ++i) {
    v.push_back(rng.log_uniform(cfg.init_ranges.prefactor.lo, cfg.init_ranges.prefactor.hi));
    v.push_back(rng.log_uniform(cfg.init_ranges.exponent.lo, cfg.init_ranges.exponent.hi));
  }
  return v;
}

StartOutcome levenberg_marquardt(const Model& model, Eigen::VectorXd theta, const FitConfig& cfg) {
  const auto n = static_cast<Eigen::Index>(model.size());
  const int p = model.dim();
  StartOutcome out;
  Eigen::VectorXd r(n);
  Eigen::MatrixXd jac(n, p);

  double sse = model.sse(theta);
  if (!std::isfinite(sse)) return out;

  double lambda = kLambdaInit;
  const auto gradient_ok = [&](double g, double s) { return g <= kGradientTol * (1.0 + s); };

  int it = 0;
  for (; it < cfg.max_iters; ++it) {
    model.residuals(theta, r);
    model.jacobian(theta, jac);
    const Eigen::VectorXd g = jac.transpose() * r;
    const double gnorm = 2.0 * g.norm();
    if (!std::isfinite(gnorm)) break;
    // Effectively exact stationary point; further steps only chase rounding.
    if (gnorm <= 1e-14 * (1.0 + sse)) break;

    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    Eigen::VectorXd scale = jtj.diagonal();
    const double floor = std::max(scale.maxCoeff() * 1e-12, 1e-300);
    scale = scale.cwiseMax(floor);

    bool accepted = false;
    double rel_drop = 0.0;
    while (lambda <= kLambdaMax) {
      Eigen::MatrixXd lhs = jtj;
      lhs.diagonal() += lambda * scale;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(lhs);
      if (ldlt.info() == Eigen::Success) {
        const Eigen::VectorXd step = ldlt.solve(g);
        const Eigen::VectorXd trial = theta + step;
        const double trial_sse = step.allFinite() ? model.sse(trial) : kInf;
        if (trial_sse < sse) {
          rel_drop = (sse - trial_sse) / std::max(sse, std::numeric_limits<double>::min());
          theta = trial;
          sse = trial_sse;
          lambda = std::max(lambda * 0.1, 1e-15);
          accepted = true;
          break;
        }
      }
      lambda *= 10.0;
    }
    if (!accepted) break;
    if (rel_drop <= cfg.rel_tol && gradient_ok(gnorm, sse)) {
      ++it;
      break;
    }
  }

  model.residuals(theta, r);
  model.jacobian(theta, jac);
  out.theta = theta;
  out.sse = sse;
  out.iterations = it;
  out.gradient_norm = 2.0 * (jac.transpose() * r).norm();
  out.stationary = std::isfinite(out.gradient_norm) && gradient_ok(out.gradient_norm, sse);
  return out;
}

void check_observations(std::span<const Observation> obs, LawFamily family) {
  const std::size_t arity = covariate_arity(family);
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const auto& o = obs[i];
    if (o.covariates.size() != arity)
      throw std::invalid_argument("observation " + std::to_string(i) + ": expected " +
                                  std::to_string(arity) + " covariate(s), got " +
                                  std::to_string(o.covariates.size()));
    for (double c : o.covariates)
      if (!(c > 0.0 && std::isfinite(c)))
        throw std::invalid_argument("observation " + std::to_string(i) +
                                    ": covariates must be finite and > 0");
    if (!(o.y >= 0.0))
      throw std::invalid_argument("observation " + std::to_string(i) + ": y must be >= 0");
  }
}

double jacobian_condition(const Model& model, const Eigen::VectorXd& theta) {
  Eigen::MatrixXd jac(static_cast<Eigen::Index>(model.size()), model.dim());
  model.jacobian(theta, jac);
  if (!jac.allFinite()) return kInf;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac);
  const auto& sv = svd.singularValues();
  const double lo = sv[sv.size() - 1];
  return lo > 0.0 ? sv[0] / lo : kInf;
}

}  // namespace

FitResult fit(std::span<const Observation> observations, const LawSpec& spec,
              const FitConfig& config) {
  if (config.n_starts < 1) throw std::invalid_argument("FitConfig: n_starts must be >= 1");
  if (config.max_iters < 1) throw std::invalid_argument("FitConfig: max_iters must be >= 1");
  if (!(config.rel_tol > 0.0)) throw std::invalid_argument("FitConfig: rel_tol must be > 0");
  const auto& ir = config.init_ranges;
  for (const auto& range : {ir.exponent, ir.prefactor})
    if (!(range.lo > 0.0 && range.hi >= range.lo && std::isfinite(range.hi)))
      throw std::invalid_argument("FitConfig: init ranges must satisfy 0 < lo <= hi");
  check_observations(observations, spec.family);

  Model model(spec.family, config.fix_irreducible_zero);
  std::size_t dropped = 0;
  for (const auto& o : observations) {
    if (std::isinf(o.y)) {
      ++dropped;
      continue;
    }
    model.add(o.covariates, o.y);
  }
  if (model.size() < static_cast<std::size_t>(model.dim()))
    throw UnderdeterminedError("law '" + std::string(to_string(spec.family)) + "' at k=" +
                               std::to_string(spec.k) + " has " + std::to_string(model.dim()) +
                               " free parameters but only " + std::to_string(model.size()) +
                               " usable observations");
  model.centre();

  std::vector<StartOutcome> starts(static_cast<std::size_t>(config.n_starts));
  const auto run = [&](int i) {
    const auto natural = sample_start(model, spec.family, config, i);
    starts[static_cast<std::size_t>(i)] = levenberg_marquardt(model, model.to_internal(natural), config);
  };
  if (config.exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < config.n_starts; ++i) run(i);
  } else {
    for (int i = 0; i < config.n_starts; ++i) run(i);
  }

  // Ordered reduction: lowest SSE, then lowest index, among usable starts.
  struct Pick {
    int index = -1;
    double sse = kInf;
    std::optional<LawParams> params;
  };
  Pick best_stationary, best_any;
  for (int i = 0; i < config.n_starts; ++i) {
    const auto& s = starts[static_cast<std::size_t>(i)];
    if (!std::isfinite(s.sse)) continue;
    std::optional<LawParams> params;
    try {
      params = from_vector(spec.family, model.to_natural(s.theta));
    } catch (const std::invalid_argument&) {
      continue;  // exponent or prefactor left the representable range
    }
    if (s.sse < best_any.sse) best_any = {i, s.sse, params};
    if (s.stationary && s.sse < best_stationary.sse) best_stationary = {i, s.sse, params};
  }

  const bool converged = best_stationary.index >= 0;
  const Pick& pick = converged ? best_stationary : best_any;

  FitResult result;
  result.law = spec;
  result.n_obs = model.size();
  result.n_dropped = dropped;
  result.converged = converged;
  result.start_index = pick.index;
  if (pick.index >= 0) {
    const auto& s = starts[static_cast<std::size_t>(pick.index)];
    result.params = *pick.params;
    result.iterations = s.iterations;
    result.gradient_norm = s.gradient_norm;
    result.jacobian_condition = jacobian_condition(model, s.theta);
    double sse = 0.0;
    for (double d : residuals(observations, spec, result.params))
      if (std::isfinite(d)) sse += d * d;
    result.sse = sse;
  } else {
    result.sse = kInf;
  }
  if (!converged)
    throw NonConvergenceError(result, "no start of '" + std::string(to_string(spec.family)) +
                                          "' at k=" + std::to_string(spec.k) +
                                          " reached a stationary point");
  return result;
}

std::vector<double> residuals(std::span<const Observation> observations, const LawSpec& spec,
                              const LawParams& params) {
  if (family_of(params) != spec.family)
    throw std::invalid_argument("residuals: parameters do not match the law family");
  std::vector<double> out;
  out.reserve(observations.size());
  for (const auto& o : observations) out.push_back(o.y - evaluate(params, o.covariates));
  return out;
}

std::vector<double> covariates_for(const ModelRecord& record, LawFamily family) {
  switch (family) {
    case LawFamily::compute: return {record.compute};
    case LawFamily::params_tokens: return {record.n_params, record.n_tokens};
    case LawFamily::gold_likelihood:
      if (!record.gold_nll)
        throw std::invalid_argument("record '" + record.model_id + "' has no gold_logprobs");
      return {*record.gold_nll};
  }
  throw std::invalid_argument("unknown law family");
}

std::vector<Observation> observations_at_k(std::span<const ModelRecord> records, LawFamily family,
                                           std::int64_t k, InsufficientSamples policy) {
  std::vector<Observation> obs;
  obs.reserve(records.size());
  for (const auto& r : records) {
    const double pass = benchmark_pass_at_k(r.outcomes, k, policy).value;
    obs.push_back({covariates_for(r, family), neg_log_pass(pass).value_or(kInf)});
  }
  return obs;
}

FitResult fit_at_k(std::span<const ModelRecord> records, LawFamily family, std::int64_t k,
                   const FitConfig& config, InsufficientSamples policy) {
  const auto obs = observations_at_k(records, family, k, policy);
  return fit(obs, LawSpec(family, k), config);
}

std::vector<FitResult> fit_sweep(std::span<const ModelRecord> records, LawFamily family,
                                 std::span<const std::int64_t> ks, const FitConfig& config,
                                 InsufficientSamples policy) {
  if (ks.empty()) throw std::invalid_argument("fit_sweep: no k values");
  std::vector<FitResult> out;
  out.reserve(ks.size());
  for (std::int64_t k : ks) {
    try {
      out.push_back(fit_at_k(records, family, k, config, policy));
    } catch (const std::exception& e) {
      throw SweepError(k, e.what());
    }
  }
  return out;
}

}  // namespace genscale
