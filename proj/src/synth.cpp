#include "genscale/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <random>
#include <stdexcept>

#include "genscale/errors.hpp"
#include "rng.hpp"

namespace genscale {

namespace {

std::string padded(const char* prefix, std::size_t i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, i);
  return buf;
}

std::vector<double> grid_covariates(LawFamily family, const GridPoint& g, const std::vector<double>& gold_nll,
                                    std::size_t index) {
  switch (family) {
    case LawFamily::compute: return {derive_compute(g.n_params, g.n_tokens)};
    case LawFamily::params_tokens: return {g.n_params, g.n_tokens};
    case LawFamily::gold_likelihood: return {gold_nll.at(index)};
  }
  return {};
}

std::int64_t draw_successes(std::int64_t n, double p, detail::SplitMix& rng) {
  if (p >= 1.0) return n;
  if (p <= 0.0) return 0;
  std::binomial_distribution<std::int64_t> binom(n, p);
  return binom(rng);
}

ModelRecord generate_model(const SynthSpec& spec, std::size_t m, double beta_concentration) {
  const GridPoint& g = spec.model_grid[m];
  const LawFamily family = family_of(spec.ground_truth);
  const double y_true = evaluate(spec.ground_truth, grid_covariates(family, g, spec.gold_nll, m));
  if (!(std::isfinite(y_true) && std::exp(-y_true) > 0.0))
    throw GenerationError(m, "ground-truth pass@1 underflows to 0 (y=" + std::to_string(y_true) + ")");

  double y = y_true;
  if (spec.noise_sigma > 0.0) {
    detail::SplitMix noise(sub_seed(spec.seed, m, kNoiseStream));
    y = std::max(0.0, y + spec.noise_sigma * noise.normal());
  }
  const double p = std::exp(-y);
  if (!(p > 0.0)) throw GenerationError(m, "noisy pass@1 underflows to 0");

  ModelRecord rec;
  rec.model_id = padded("synth-", m, 3);
  rec.n_params = g.n_params;
  rec.n_tokens = g.n_tokens;
  rec.compute = derive_compute(g.n_params, g.n_tokens);
  const std::int64_t n = std::holds_alternative<Budgeted>(spec.samples_per_problem)
                             ? sample_budget(rec.compute)
                             : std::get<std::int64_t>(spec.samples_per_problem);

  rec.outcomes.reserve(static_cast<std::size_t>(spec.n_problems));
  for (std::int64_t i = 0; i < spec.n_problems; ++i) {
    detail::SplitMix rng(sub_seed(spec.seed, m, static_cast<std::uint64_t>(i)));
    double p_i = p;
    if (beta_concentration > 0.0 && p < 1.0) {
      std::gamma_distribution<double> ga(p * beta_concentration, 1.0);
      std::gamma_distribution<double> gb((1.0 - p) * beta_concentration, 1.0);
      const double xa = ga(rng);
      const double xb = gb(rng);
      if (xa + xb > 0.0) p_i = xa / (xa + xb);
    }
    rec.outcomes.push_back({padded("p", static_cast<std::size_t>(i), 4), n, draw_successes(n, p_i, rng)});
  }
  if (!spec.gold_nll.empty()) {
    std::vector<GoldLogprob> gold;
    gold.reserve(rec.outcomes.size());
    for (const auto& o : rec.outcomes) gold.push_back({o.problem_id, -spec.gold_nll[m]});
    rec.gold_logprobs = std::move(gold);
  }
  validate_record(rec);
  return rec;
}

std::vector<ModelRecord> generate(const SynthSpec& spec, double beta_concentration, Exec exec) {
  spec.validate();
  const std::size_t count = spec.model_grid.size();
  std::vector<ModelRecord> out(count);
  std::vector<std::exception_ptr> failures(count);
  const auto one = [&](std::size_t m) {
    try {
      out[m] = generate_model(spec, m, beta_concentration);
    } catch (...) {
      failures[m] = std::current_exception();
    }
  };
  if (exec == Exec::parallel) {
    const int n = static_cast<int>(count);
#pragma omp parallel for schedule(dynamic)
    for (int m = 0; m < n; ++m) one(static_cast<std::size_t>(m));
  } else {
    for (std::size_t m = 0; m < count; ++m) one(m);
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);
  return out;
}

}  // namespace

void SynthSpec::validate() const {
  if (model_grid.empty()) throw std::invalid_argument("synth: model grid is empty");
  for (const auto& g : model_grid)
    if (!(g.n_params > 0.0 && g.n_tokens > 0.0 && std::isfinite(g.n_params) && std::isfinite(g.n_tokens)))
      throw std::invalid_argument("synth: grid N and D must be finite and > 0");
  if (!(noise_sigma >= 0.0 && std::isfinite(noise_sigma)))
    throw std::invalid_argument("synth: noise_sigma must be finite and >= 0");
  if (n_problems < 1) throw std::invalid_argument("synth: n_problems must be >= 1");
  if (const auto* n = std::get_if<std::int64_t>(&samples_per_problem); n && *n < 1)
    throw std::invalid_argument("synth: samples_per_problem must be >= 1");
  if (!gold_nll.empty() && gold_nll.size() != model_grid.size())
    throw std::invalid_argument("synth: gold_nll needs one entry per grid point");
  for (double x : gold_nll)
    if (!(x > 0.0 && std::isfinite(x))) throw std::invalid_argument("synth: gold_nll entries must be > 0");
  if (family_of(ground_truth) == LawFamily::gold_likelihood && gold_nll.empty())
    throw std::invalid_argument("synth: the gold family needs gold_nll per grid point");
}

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t model_index, std::uint64_t problem_index) {
  return seed ^ detail::splitmix64(detail::splitmix64(model_index) + problem_index);
}

std::vector<ModelRecord> generate_benchmark_corpus(const SynthSpec& spec, Exec exec) {
  return generate(spec, 0.0, exec);
}

std::vector<ModelRecord> heterogeneous_difficulty_corpus(const SynthSpec& spec, double difficulty_spread,
                                                         Exec exec) {
  if (!(difficulty_spread >= 0.0 && difficulty_spread < 1.0))
    throw std::invalid_argument("synth: difficulty spread must lie in [0, 1)");
  if (difficulty_spread == 0.0) return generate(spec, 0.0, exec);
  // Var[p_i] = spread * p (1 - p)  <=>  Beta(p kappa, (1 - p) kappa), kappa = 1/spread - 1.
  const double concentration = 1.0 / difficulty_spread - 1.0;
  return generate(spec, concentration, exec);
}

std::vector<Observation> law_observations(const LawParams& law, const std::vector<GridPoint>& grid,
                                          const std::vector<double>& gold_nll, double noise_sigma,
                                          std::uint64_t seed) {
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("law_observations: noise_sigma must be >= 0");
  const LawFamily family = family_of(law);
  std::vector<Observation> out;
  out.reserve(grid.size());
  for (std::size_t m = 0; m < grid.size(); ++m) {
    Observation o{grid_covariates(family, grid[m], gold_nll, m), 0.0};
    o.y = evaluate(law, o.covariates);
    if (noise_sigma > 0.0) {
      detail::SplitMix noise(sub_seed(seed, m, kNoiseStream));
      o.y = std::max(0.0, o.y + noise_sigma * noise.normal());
    }
    out.push_back(std::move(o));
  }
  return out;
}

std::vector<GridPoint> diagonal_grid(std::size_t count, double n_lo, double n_hi, double d_lo, double d_hi) {
  if (count == 0) throw std::invalid_argument("diagonal_grid: count must be >= 1");
  if (!(n_lo > 0.0 && n_hi >= n_lo && d_lo > 0.0 && d_hi >= d_lo))
    throw std::invalid_argument("diagonal_grid: bounds must satisfy 0 < lo <= hi");
  std::vector<GridPoint> grid;
  grid.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double f = count == 1 ? 1.0 : static_cast<double>(i) / static_cast<double>(count - 1);
    grid.push_back({n_lo * std::pow(n_hi / n_lo, f), d_lo * std::pow(d_hi / d_lo, f)});
  }
  return grid;
}

}  // namespace genscale
