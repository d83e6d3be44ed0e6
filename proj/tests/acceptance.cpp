// Acceptance suite: one line per criterion, each with its own runtime budget.
// Exit status is non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "genscale/backtest.hpp"
#include "genscale/dataset.hpp"
#include "genscale/envelope.hpp"
#include "genscale/estimator.hpp"
#include "genscale/fitter.hpp"
#include "genscale/synth.hpp"
#include "oracles/envelope_numeric.hpp"
#include "oracles/exact_passk.hpp"
#include "oracles/loglog_regression.hpp"

using namespace genscale;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok;
  std::string detail;
};

double rel(double got, double want) { return std::abs(got - want) / std::abs(want); }

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// pass_at_k vs big-integer rationals on every small (n, s, k).
Outcome estimator_exactness() {
  double worst = 0;
  int cases = 0;
  for (int n = 1; n <= 12; ++n)
    for (int s = 0; s <= n; ++s)
      for (int k = 1; k <= n; ++k) {
        const double exact = static_cast<double>(oracle::pass_at_k_exact(n, s, k));
        worst = std::max(worst, std::abs(pass_at_k({"p", n, s}, k).value - exact));
        ++cases;
      }
  return {worst <= 1e-12, fmt("%.0f cases, max abs error %.2e", cases, worst)};
}

Outcome estimator_unbiasedness() {
  const int n = 50, k = 5, trials = 100000;
  std::mt19937_64 rng(20240501);
  std::string detail;
  bool ok = true;
  for (double p : {0.05, 0.3, 0.7}) {
    std::binomial_distribution<int> binom(n, p);
    double sum = 0, sum2 = 0;
    for (int t = 0; t < trials; ++t) {
      const double v = pass_at_k({"p", n, binom(rng)}, k).value;
      sum += v;
      sum2 += v * v;
    }
    const double mean = sum / trials;
    const double se = std::sqrt(std::max(0.0, sum2 / trials - mean * mean) / trials);
    const double z = std::abs(mean - (1 - std::pow(1 - p, k))) / se;
    ok = ok && z < 3.0;
    detail += fmt("p=%.2f |z|=%.2f; ", p, z);
  }
  return {ok, detail};
}

Outcome envelope_identity() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    const double beta = 0.05 + 2.95 * u(rng), gamma = 0.05 + 2.95 * u(rng);
    const double a = std::pow(10.0, -2 + 10 * u(rng)), b = std::pow(10.0, -2 + 10 * u(rng));
    const double c = 1 + 9 * u(rng);
    const auto got = envelope_map({beta, gamma, a, b, c, 0});
    const auto num = oracle::numeric_envelope(beta, gamma, a, b, c, 1e18, 1e22);
    worst = std::max({worst, rel(got.alpha, num.alpha), rel(got.c0, num.c0)});
  }
  const auto sym = envelope_map({1, 1, 1, 1, 1, 0});
  const double sym_err = std::max(std::abs(sym.alpha - 0.5), std::abs(sym.c0 - 2.0));
  return {worst < 1e-6 && sym_err <= 1e-12,
          fmt("1000 draws, max rel error %.2e; symmetric case error %.1e", worst, sym_err)};
}

Outcome misallocation_penalty_props() {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.05, 3.0);
  bool one = true, above = true, shrink = true;
  double min_ratio = INFINITY;
  for (int i = 0; i < 50; ++i) {
    const double b = u(rng), g = u(rng);
    one = one && std::abs(misallocation_penalty(b, g, 1.0) - 1.0) <= 1e-14;
    for (int j = 0; j < 200; ++j) {
      const double r = std::pow(10.0, -3 + 6.0 * j / 199);
      above = above && misallocation_penalty(b, g, r) >= 1.0;
    }
    const auto remainder = [&](double t) {
      return std::abs(misallocation_penalty(b, g, std::exp(t)) - (1 + b * g / 2 * t * t));
    };
    const double ratio = remainder(1e-2) / remainder(1e-3);
    min_ratio = std::min(min_ratio, ratio);
    shrink = shrink && ratio >= 10.0;
  }
  return {one && above && shrink,
          fmt("phi(1)=1: %.0f, phi>=1: %.0f, min remainder shrink %.1fx", one, above, min_ratio)};
}

Outcome off_envelope_consistency() {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    const EnvelopeInputs in{0.05 + 2.95 * u(rng), 0.05 + 2.95 * u(rng), std::pow(10.0, -2 + 10 * u(rng)),
                            std::pow(10.0, -2 + 10 * u(rng)), 1 + 9 * u(rng), 3 * u(rng)};
    const double compute = std::pow(10.0, 16 + 8 * u(rng));
    const double r = std::pow(10.0, -3 + 6 * u(rng));
    const auto al = optimal_allocation(in, compute);
    const double n = r * al.n_star, d = al.d_star / r;
    const double direct = in.e0 + in.a * std::pow(n, -in.beta) + in.b * std::pow(d, -in.gamma);
    worst = std::max(worst, rel(off_envelope_loss(in, compute, r), direct));
  }
  return {worst <= 1e-10, fmt("1000 draws, max rel error %.2e", worst)};
}

Outcome fixed_ratio_degradation() {
  const EnvelopeInputs in{0.4, 1.2, 1, 1, 6, 0};
  std::vector<double> cs, ys;
  // 6 decades, 25 points per decade; the slope is read off the last 2.
  for (int i = 0; i <= 150; ++i) {
    const double compute = 1e16 * std::pow(10.0, i / 25.0);
    if (compute < 1e20 * (1 - 1e-12)) continue;
    const double n = std::sqrt(compute / in.c);
    cs.push_back(compute);
    ys.push_back(in.e0 + in.a * std::pow(n, -in.beta) + in.b * std::pow(n, -in.gamma));
  }
  const double slope = -oracle::loglog_ols(cs, ys).slope;
  const double err = rel(slope, 0.2);
  return {err <= 0.02 && rel(fixed_ratio_path_slope(0.4, 1.2), 0.2) < 1e-15,
          fmt("empirical slope %.6f, rel error %.2e", slope, err)};
}

std::vector<GridPoint> compute_checkpoints(int count, double lo, double hi) {
  // Checkpoints at a fixed 20 tokens per parameter, compute log-spaced over [lo, hi].
  std::vector<GridPoint> grid;
  for (int i = 0; i < count; ++i) {
    const double c = lo * std::pow(hi / lo, i / double(count - 1));
    const double n = std::sqrt(c / kFlopsPerParamToken / 20.0);
    grid.push_back({n, 20.0 * n});
  }
  return grid;
}

const ComputeLawParams kTruth{2.0, 1e3, 0.12};

// Asymptotic standard deviations of (e0, alpha) for unweighted least squares
// with N(0, sigma^2) noise: sigma^2 (J^T J)^-1 at the truth.
std::pair<double, double> information_bound(const ComputeLawParams& p, const std::vector<Observation>& obs,
                                            double sigma) {
  double m[3][3] = {};
  for (const auto& o : obs) {
    const double c = o.covariates[0];
    const double g[3] = {1.0, std::pow(c, -p.alpha()), -p.c0() * std::log(c) * std::pow(c, -p.alpha())};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) m[i][j] += g[i] * g[j];
  }
  const auto cof = [&](int r, int c) {
    const int r0 = (r + 1) % 3, r1 = (r + 2) % 3, c0 = (c + 1) % 3, c1 = (c + 2) % 3;
    return m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
  };
  const double det = m[0][0] * cof(0, 0) + m[0][1] * cof(0, 1) + m[0][2] * cof(0, 2);
  return {sigma * std::sqrt(cof(0, 0) / det), sigma * std::sqrt(cof(2, 2) / det)};
}

Outcome fit_round_trip() {
  const auto grid = compute_checkpoints(20, 1e17, 1e22);
  const auto clean = law_observations(kTruth, grid, {}, 0.0, 0);
  const auto fr = fit(clean, {LawFamily::compute, 1});
  const auto& p = std::get<ComputeLawParams>(fr.params);
  const double worst = std::max({rel(p.e0(), kTruth.e0()), rel(p.c0(), kTruth.c0()), rel(p.alpha(), kTruth.alpha())});

  int alpha_ok = 0, e0_ok = 0, both_ok = 0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    const auto noisy = law_observations(kTruth, grid, {}, 0.02, 1000 + trial);
    FitConfig cfg;
    cfg.seed = trial;
    try {
      const auto q = std::get<ComputeLawParams>(fit(noisy, {LawFamily::compute, 1}, cfg).params);
      const bool a = rel(q.alpha(), kTruth.alpha()) <= 0.05, e = std::abs(q.e0() - kTruth.e0()) <= 0.05;
      alpha_ok += a;
      e0_ok += e;
      both_ok += a && e;
    } catch (const NonConvergenceError&) {
    }
  }
  const auto [sd_e0, sd_alpha] = information_bound(kTruth, clean, 0.02);
  return {fr.converged && worst <= 1e-4 && both_ok >= 95,
          fmt("noiseless max rel error %.2e; noisy trials within tolerance %.0f/100", worst, both_ok) +
              fmt(" (alpha %.0f, E0 %.0f", alpha_ok, e0_ok) +
              fmt("; information bound sd(E0)=%.3f, sd(alpha)/alpha=%.3f)", sd_e0, sd_alpha / kTruth.alpha())};
}

Outcome backtest_round_trip() {
  const auto grid = compute_checkpoints(13, 1e16, 1e22);
  const auto obs = law_observations(kTruth, grid, {}, 0.0, 0);
  std::vector<BacktestInput> in;
  for (std::size_t i = 0; i < obs.size(); ++i)
    in.push_back({"ckpt-" + std::to_string(i), obs[i].covariates[0], obs[i]});
  const auto rep = backtest(in, {LawFamily::compute, 1});
  double worst = 0;
  int determined = 0;
  for (const auto& pt : rep.points) {
    if (!pt.fit) continue;
    ++determined;
    worst = std::max(worst, pt.relative_error);
  }
  double traj = INFINITY;
  if (!rep.points.empty() && rep.points.back().fit) {
    const auto got = to_vector(rep.points.back().fit->params);
    const auto want = to_vector(LawParams(kTruth));
    traj = 0;
    for (std::size_t j = 0; j < got.size(); ++j) traj = std::max(traj, rel(got[j], want[j]));
  }
  return {determined >= 10 && worst < 1e-6 && traj <= 1e-4,
          fmt("%.0f determined caps, max rel error %.2e; final-cap parameter rel error %.2e", determined, worst, traj)};
}

Outcome qualitative_trend() {
  // Ground truth per k: E0 decays exponentially, C0 and alpha grow with log k.
  const std::vector<std::int64_t> ks{1, 10, 100, 1000};
  const auto grid = compute_checkpoints(20, 1e17, 1e22);
  std::vector<double> e0_hat;
  bool converged = true;
  for (std::int64_t k : ks) {
    const double lk = std::log10(double(k));
    const ComputeLawParams truth{2.0 * std::exp(-double(k) / 20.0), 1e3 * std::pow(10.0, 0.72 * lk), 0.12 + 0.05 * lk};
    const auto obs = law_observations(truth, grid, {}, 0.0, 0);
    try {
      e0_hat.push_back(std::get<ComputeLawParams>(fit(obs, {LawFamily::compute, k}).params).e0());
    } catch (const NonConvergenceError& e) {
      converged = false;
      e0_hat.push_back(std::get<ComputeLawParams>(e.best().params).e0());
    }
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < e0_hat.size(); ++i) decreasing = decreasing && e0_hat[i] < e0_hat[i - 1];
  // Equality is allowed once E0 has been clamped to exactly 0.
  if (!decreasing) {
    decreasing = true;
    for (std::size_t i = 1; i < e0_hat.size(); ++i)
      decreasing = decreasing && (e0_hat[i] < e0_hat[i - 1] || (e0_hat[i] == 0 && e0_hat[i - 1] == 0));
  }
  return {converged && decreasing && e0_hat.back() < 0.05,
          fmt("E0_hat at k=1,10,100: %.4g, %.4g, %.4g", e0_hat[0], e0_hat[1], e0_hat[2]) +
              fmt("; k=1000: %.3g", e0_hat[3])};
}

Outcome budget_planner() {
  const auto hi = sample_budget(1e23), lo = sample_budget(1e18);
  return {hi == 32000 && lo == 1000000, fmt("C=1e23 -> %.0f, C=1e18 -> %.0f", double(hi), double(lo))};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int shell(const fs::path& dir, const std::string& cmd) {
  const std::string line = "cd '" + dir.string() + "' && '" GENSCALE_TOOL_PATH "' " + cmd + " > /dev/null 2>&1";
  return std::system(line.c_str());
}

Outcome cli_determinism() {
  const fs::path root = fs::temp_directory_path() / "genscale_acceptance";
  fs::remove_all(root);
  const std::vector<std::string> pipeline{
      "synth --out . --seed 31 --noise 0.02 --problems 64",
      "estimate --input corpus.jsonl --out .",
      "fit --input corpus.jsonl --out . --seed 31 --ks 1,10,100",
      "backtest --input corpus.jsonl --out . --seed 31 --ks 1,100",
  };
  std::vector<fs::path> dirs{root / "a", root / "b"};
  for (const auto& d : dirs) {
    fs::create_directories(d);
    for (const auto& step : pipeline)
      if (shell(d, step) != 0) return {false, "pipeline step failed: " + step};
  }
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(dirs[0])) {
    const auto other = dirs[1] / entry.path().filename();
    if (!fs::exists(other) || slurp(entry.path()) != slurp(other))
      return {false, "differs: " + entry.path().filename().string()};
    ++files;
  }
  const std::size_t files_b = std::distance(fs::directory_iterator(dirs[1]), fs::directory_iterator{});
  fs::remove_all(root);
  return {files == files_b && files >= 10, fmt("%.0f output files byte-identical across two runs", double(files))};
}

struct Criterion {
  const char* id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"AC1", "estimator exactness", 1, estimator_exactness},
      {"AC2", "estimator unbiasedness", 10, estimator_unbiasedness},
      {"AC3", "envelope identity", 30, envelope_identity},
      {"AC4", "misallocation penalty", 5, misallocation_penalty_props},
      {"AC5", "off-envelope consistency", 5, off_envelope_consistency},
      {"AC6", "fixed-ratio degradation", 5, fixed_ratio_degradation},
      {"AC7", "fit round trip", 120, fit_round_trip},
      {"AC8", "backtest round trip", 120, backtest_round_trip},
      {"AC9", "qualitative k trend", 120, qualitative_trend},
      {"AC10", "budget planner clip bounds", 1, budget_planner},
      {"AC11", "end-to-end CLI determinism", 180, cli_determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.budget_s;
    const bool pass = o.ok && in_time;
    failures += !pass;
    std::printf("[%s] %-5s %-28s %8.3fs / %4.0fs  %s%s\n", pass ? "PASS" : "FAIL", c.id, c.name, secs, c.budget_s,
                o.detail.c_str(), in_time ? "" : "  (over time budget)");
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
