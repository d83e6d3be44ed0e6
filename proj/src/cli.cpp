#include "genscale/cli.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "genscale/backtest.hpp"
#include "genscale/dataset.hpp"
#include "genscale/envelope.hpp"
#include "genscale/errors.hpp"
#include "genscale/estimator.hpp"
#include "genscale/fitter.hpp"
#include "genscale/laws.hpp"
#include "genscale/synth.hpp"
#include "table.hpp"

namespace genscale::cli {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr const char* kDefaultKs = "1,10,100,1000,10000";

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, ',')) {
    const auto b = cur.find_first_not_of(" \t");
    const auto e = cur.find_last_not_of(" \t");
    if (b != std::string::npos) parts.push_back(cur.substr(b, e - b + 1));
  }
  return parts;
}

double parse_double(const std::string& s, const char* what) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw UsageError(std::string("invalid number '") + s + "' for " + what);
  return v;
}

std::vector<double> parse_doubles(const std::string& s, const char* what) {
  std::vector<double> out;
  for (const auto& p : split_csv(s)) out.push_back(parse_double(p, what));
  return out;
}

std::vector<std::int64_t> parse_ks(const std::string& s) {
  std::vector<std::int64_t> ks;
  for (const auto& p : split_csv(s)) {
    std::int64_t k = 0;
    const auto res = std::from_chars(p.data(), p.data() + p.size(), k);
    if (res.ec != std::errc() || res.ptr != p.data() + p.size() || k < 1)
      throw UsageError("k values must be integers >= 1, got '" + p + "'");
    ks.push_back(k);
  }
  if (ks.empty()) throw UsageError("--ks needs at least one value");
  return ks;
}

std::vector<double> positive_list(const std::string& s, const char* what) {
  auto v = parse_doubles(s, what);
  if (v.empty()) throw UsageError(std::string(what) + " needs at least one value");
  for (double x : v)
    if (!(x > 0.0 && std::isfinite(x))) throw UsageError(std::string(what) + " values must be > 0");
  return v;
}

// Flags shared by the subcommands; only the ones a subcommand registers are used.
struct Options {
  std::string input;
  std::string out = ".";
  std::string ks = kDefaultKs;
  std::string family = "compute";
  std::uint64_t seed = 0;
  std::string format = "csv";
  std::string policy = "error";
  std::string mode = "strict";
  // fitting
  int starts = 64;
  int max_iters = 500;
  double rel_tol = 1e-10;
  bool fix_e0 = false;
  bool serial = false;
  std::string caps = "auto";
  // envelope
  double beta = 0.0, gamma = 0.0, n0 = 0.0, d0 = 0.0, c = kFlopsPerParamToken, e0 = 0.0;
  std::string compute_grid = "1e18,1e19,1e20,1e21,1e22,1e23,1e24";
  std::string r_grid = "0.1,0.5,1,2,10";
  // plan
  std::string compute_list;
  // synth
  std::string truth;
  std::size_t models = 8;
  std::string n_range = "1.4e7,1.2e10";
  std::string d_range = "3e9,3e11";
  std::string grid_n, grid_d;
  double gold_scale = 2.0, gold_exponent = 0.08;
  double noise = 0.0;
  std::int64_t problems = 128;
  std::string samples = "budgeted";
  double spread = 0.0;
};

struct Context {
  std::string command;
  std::vector<std::string> args;
  const Options& opt;
  std::ostream& err;
};

InsufficientSamples policy_of(const Options& o) {
  return o.policy == "skip" ? InsufficientSamples::skip : InsufficientSamples::error;
}

LoadMode mode_of(const Options& o) { return o.mode == "lenient" ? LoadMode::lenient : LoadMode::strict; }

FitConfig fit_config(const Options& o) {
  FitConfig cfg;
  cfg.n_starts = o.starts;
  cfg.max_iters = o.max_iters;
  cfg.rel_tol = o.rel_tol;
  cfg.seed = o.seed;
  cfg.fix_irreducible_zero = o.fix_e0;
  cfg.exec = o.serial ? Exec::serial : Exec::parallel;
  if (cfg.n_starts < 1 || cfg.max_iters < 1 || !(cfg.rel_tol > 0.0))
    throw UsageError("--starts, --max-iters and --rel-tol must be positive");
  return cfg;
}

fs::path prepare_out(const Options& o) {
  fs::path dir(o.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw UsageError("output directory '" + o.out + "' is not usable");
  return dir;
}

ojson metadata(const Context& ctx) {
  ojson meta;
  meta["tool"] = "genscale";
  meta["version"] = kToolVersion;
  meta["command"] = ctx.command;
  meta["seed"] = ctx.opt.seed;
  meta["flags"] = ctx.args;
  return meta;
}

void emit(const Context& ctx, const fs::path& dir, const std::string& stem, const Table& table,
          ojson extra = ojson::object()) {
  const bool json = ctx.opt.format == "json";
  const std::string name = stem + (json ? ".json" : ".csv");
  write_atomic(dir / name, json ? table.to_json() : table.to_csv());
  ojson meta = metadata(ctx);
  meta["table"] = name;
  meta["columns"] = table.header;
  meta["rows"] = table.rows.size();
  for (auto& [k, v] : extra.items()) meta[k] = v;
  write_atomic(dir / (stem + ".meta.json"), meta.dump(2) + "\n");
}

Dataset load(const Options& o) {
  if (o.input.empty()) throw UsageError("--input is required");
  return load_dataset(o.input, mode_of(o));
}

void report_warnings(const Context& ctx, const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) ctx.err << "warning: " << w << '\n';
}

std::vector<std::string> covariate_columns(LawFamily f) {
  switch (f) {
    case LawFamily::compute: return {"compute"};
    case LawFamily::params_tokens: return {"n_params", "n_tokens"};
    case LawFamily::gold_likelihood: return {"gold_nll"};
  }
  return {};
}

// ---- estimate ---------------------------------------------------------------

int cmd_estimate(const Context& ctx) {
  const Options& o = ctx.opt;
  const auto ks = parse_ks(o.ks);
  const auto dir = prepare_out(o);
  const Dataset ds = load(o);
  report_warnings(ctx, ds.warnings);

  Table t{{"model_id", "n_params", "n_tokens", "compute", "k", "pass_at_k", "neg_log_pass", "n_dropped"}, {}};
  for (const auto& r : ds.records) {
    for (std::int64_t k : ks) {
      const auto bp = benchmark_pass_at_k(r.outcomes, k, policy_of(o));
      const double nlp = neg_log_pass(bp.value).value_or(std::numeric_limits<double>::infinity());
      t.add({r.model_id, r.n_params, r.n_tokens, r.compute, k, bp.value, nlp,
             static_cast<std::int64_t>(bp.n_skipped)});
    }
  }
  emit(ctx, dir, "estimates", t);
  return kOk;
}

// ---- fit --------------------------------------------------------------------

int cmd_fit(const Context& ctx) {
  const Options& o = ctx.opt;
  const auto ks = parse_ks(o.ks);
  const LawFamily family = parse_family(o.family);
  const FitConfig cfg = fit_config(o);
  const auto dir = prepare_out(o);
  const Dataset ds = load(o);
  report_warnings(ctx, ds.warnings);

  const auto& names = parameter_names(family);
  Table params{{"k", "family"}, {}};
  for (const auto& n : names) params.header.push_back(n);
  for (const char* col : {"sse", "n_obs", "n_dropped", "converged", "start_index", "iterations",
                          "gradient_norm", "jacobian_condition", "error"})
    params.header.push_back(col);

  Table preds{{"k", "model_id"}, {}};
  for (const auto& c : covariate_columns(family)) preds.header.push_back(c);
  preds.header.push_back("observed_y");
  preds.header.push_back("fitted_y");

  std::size_t succeeded = 0;
  for (std::int64_t k : ks) {
    std::optional<FitResult> fr;
    std::string error;
    std::vector<Observation> obs;
    try {
      obs = observations_at_k(ds.records, family, k, policy_of(o));
      fr = fit(obs, LawSpec(family, k), cfg);
      ++succeeded;
    } catch (const NonConvergenceError& e) {
      fr = e.best();
      error = e.what();
    } catch (const std::exception& e) {
      error = e.what();
    }
    if (!error.empty()) ctx.err << "fit k=" << k << ": " << error << '\n';

    std::vector<Cell> row{k, std::string(to_string(family))};
    const bool have_params = fr && fr->start_index >= 0;
    const auto values = have_params ? to_vector(fr->params) : std::vector<double>(names.size(), NAN);
    for (double v : values) row.emplace_back(v);
    row.emplace_back(fr ? fr->sse : NAN);
    row.emplace_back(static_cast<std::int64_t>(fr ? fr->n_obs : 0));
    row.emplace_back(static_cast<std::int64_t>(fr ? fr->n_dropped : 0));
    row.emplace_back(fr ? fr->converged : false);
    row.emplace_back(static_cast<std::int64_t>(fr ? fr->start_index : -1));
    row.emplace_back(static_cast<std::int64_t>(fr ? fr->iterations : 0));
    row.emplace_back(fr ? fr->gradient_norm : NAN);
    row.emplace_back(fr ? fr->jacobian_condition : NAN);
    row.emplace_back(error);
    params.add(std::move(row));

    for (std::size_t i = 0; i < obs.size(); ++i) {
      std::vector<Cell> prow{k, ds.records[i].model_id};
      for (double c : obs[i].covariates) prow.emplace_back(c);
      prow.emplace_back(obs[i].y);
      prow.emplace_back(have_params ? evaluate(fr->params, obs[i].covariates) : NAN);
      preds.add(std::move(prow));
    }
  }
  emit(ctx, dir, "fit_params", params);
  emit(ctx, dir, "fit_predictions", preds);
  return succeeded > 0 ? kOk : kComputeFailure;
}

// ---- backtest ---------------------------------------------------------------

int cmd_backtest(const Context& ctx) {
  const Options& o = ctx.opt;
  const auto ks = parse_ks(o.ks);
  const LawFamily family = parse_family(o.family);
  const FitConfig cfg = fit_config(o);
  std::optional<std::vector<double>> caps;
  if (o.caps != "auto") caps = positive_list(o.caps, "--caps");
  const auto dir = prepare_out(o);
  const Dataset ds = load(o);
  report_warnings(ctx, ds.warnings);

  Table errors{{"k", "target_model_id", "target_compute", "target_y", "compute_cap", "compute_ratio",
                "n_fit_models", "predicted_y", "relative_error", "error"},
               {}};
  Table traj{{"k", "compute_cap", "compute_ratio", "parameter", "value"}, {}};

  std::size_t succeeded = 0;
  for (std::int64_t k : ks) {
    try {
      const auto report = backtest(ds.records, LawSpec(family, k), cfg, caps, policy_of(o),
                                   o.serial ? Exec::serial : Exec::parallel);
      report_warnings(ctx, report.warnings);
      for (const auto& pt : report.points)
        errors.add({k, report.target_model_id, report.target_compute, report.target_y, pt.compute_cap,
                    pt.compute_ratio, static_cast<std::int64_t>(pt.n_fit_models), pt.predicted_y,
                    pt.relative_error, pt.error});
      for (const auto& row : parameter_trajectories(report))
        traj.add({k, row.compute_cap, row.compute_ratio, row.parameter, row.value});
      ++succeeded;
    } catch (const std::invalid_argument& e) {
      ctx.err << "backtest k=" << k << ": " << e.what() << '\n';
    } catch (const EmptyBenchmarkError& e) {
      ctx.err << "backtest k=" << k << ": " << e.what() << '\n';
    }
  }
  emit(ctx, dir, "backtest_errors", errors);
  emit(ctx, dir, "backtest_trajectories", traj);
  return succeeded > 0 ? kOk : kComputeFailure;
}

// ---- envelope ---------------------------------------------------------------

int cmd_envelope(const Context& ctx) {
  const Options& o = ctx.opt;
  EnvelopeInputs inp{o.beta, o.gamma, o.n0, o.d0, o.c, o.e0};
  try {
    inp.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto grid = positive_list(o.compute_grid, "--compute");
  const auto rs = positive_list(o.r_grid, "--r-grid");
  const auto dir = prepare_out(o);

  const auto env = envelope_map(inp);
  Table summary{{"alpha", "c0", "e0", "beta", "gamma", "n0", "d0", "c", "fixed_ratio_slope"}, {}};
  summary.add({env.alpha, env.c0, env.e, inp.beta, inp.gamma, inp.a, inp.b, inp.c,
               fixed_ratio_path_slope(inp.beta, inp.gamma)});

  Table alloc{{"compute", "n_star", "d_star", "loss"}, {}};
  for (double cmp : grid) {
    const auto a = optimal_allocation(inp, cmp);
    alloc.add({cmp, a.n_star, a.d_star, off_envelope_loss(inp, cmp, 1.0)});
  }
  Table penalty{{"r", "phi"}, {}};
  for (double r : rs) penalty.add({r, misallocation_penalty(inp.beta, inp.gamma, r)});

  emit(ctx, dir, "envelope_summary", summary);
  emit(ctx, dir, "envelope_allocation", alloc);
  emit(ctx, dir, "envelope_penalty", penalty);
  return kOk;
}

// ---- plan -------------------------------------------------------------------

int cmd_plan(const Context& ctx) {
  const Options& o = ctx.opt;
  if (o.compute_list.empty()) throw UsageError("--compute is required");
  const auto cs = positive_list(o.compute_list, "--compute");
  const auto dir = prepare_out(o);
  Table t{{"compute", "samples_per_problem"}, {}};
  for (double c : cs) t.add({c, sample_budget(c)});
  emit(ctx, dir, "plan", t);
  return kOk;
}

// ---- synth ------------------------------------------------------------------

std::vector<double> default_truth(LawFamily f) {
  switch (f) {
    case LawFamily::compute: return {2.0, 1e3, 0.12};
    case LawFamily::params_tokens: return {2.0, 400.0, 0.3, 800.0, 0.3};
    case LawFamily::gold_likelihood: return {0.0, 3.0, 2.0};
  }
  return {};
}

int cmd_synth(const Context& ctx) {
  const Options& o = ctx.opt;
  const LawFamily family = parse_family(o.family);
  SynthSpec spec;
  try {
    const auto truth = o.truth.empty() ? default_truth(family) : parse_doubles(o.truth, "--truth");
    spec.ground_truth = from_vector(family, truth);

    if (!o.grid_n.empty() || !o.grid_d.empty()) {
      const auto ns = positive_list(o.grid_n, "--grid-n");
      const auto ds = positive_list(o.grid_d, "--grid-d");
      if (ns.size() != ds.size()) throw UsageError("--grid-n and --grid-d must have equal length");
      for (std::size_t i = 0; i < ns.size(); ++i) spec.model_grid.push_back({ns[i], ds[i]});
    } else {
      const auto nr = positive_list(o.n_range, "--n-range");
      const auto dr = positive_list(o.d_range, "--d-range");
      if (nr.size() != 2 || dr.size() != 2) throw UsageError("--n-range and --d-range take lo,hi");
      spec.model_grid = diagonal_grid(o.models, nr[0], nr[1], dr[0], dr[1]);
    }
    if (!(o.gold_scale > 0.0) || !std::isfinite(o.gold_exponent))
      throw UsageError("--gold-scale must be > 0");
    for (const auto& g : spec.model_grid)
      spec.gold_nll.push_back(o.gold_scale *
                              std::pow(derive_compute(g.n_params, g.n_tokens) / 1e17, -o.gold_exponent));
    spec.noise_sigma = o.noise;
    spec.n_problems = o.problems;
    if (o.samples == "budgeted") {
      spec.samples_per_problem = Budgeted{};
    } else {
      const double n = parse_double(o.samples, "--samples");
      if (!(n >= 1.0) || n != std::floor(n)) throw UsageError("--samples must be an integer >= 1 or 'budgeted'");
      spec.samples_per_problem = static_cast<std::int64_t>(n);
    }
    spec.seed = o.seed;
    spec.validate();
    if (!(o.spread >= 0.0 && o.spread < 1.0)) throw UsageError("--spread must lie in [0, 1)");
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  const auto dir = prepare_out(o);
  const auto records = heterogeneous_difficulty_corpus(spec, o.spread, o.serial ? Exec::serial : Exec::parallel);
  std::ostringstream body;
  write_jsonl(body, records);
  write_atomic(dir / "corpus.jsonl", body.str());

  ojson side = metadata(ctx);
  side["corpus"] = "corpus.jsonl";
  side["family"] = std::string(to_string(family));
  ojson truth;
  const auto values = to_vector(spec.ground_truth);
  const auto& names = parameter_names(family);
  for (std::size_t i = 0; i < values.size(); ++i) truth[names[i]] = values[i];
  side["ground_truth_pass_at_1"] = truth;
  side["noise_sigma"] = spec.noise_sigma;
  side["n_problems"] = spec.n_problems;
  side["samples_per_problem"] = o.samples;
  side["difficulty_spread"] = o.spread;
  auto grid = ojson::array();
  for (std::size_t i = 0; i < spec.model_grid.size(); ++i) {
    ojson g;
    g["model_id"] = records[i].model_id;
    g["n_params"] = spec.model_grid[i].n_params;
    g["n_tokens"] = spec.model_grid[i].n_tokens;
    g["compute"] = records[i].compute;
    g["gold_nll"] = spec.gold_nll[i];
    grid.push_back(std::move(g));
  }
  side["grid"] = std::move(grid);
  side["sub_seed_rule"] = "seed ^ splitmix64(splitmix64(model_index) + problem_index)";
  write_atomic(dir / "corpus.truth.json", side.dump(2) + "\n");
  return kOk;
}

void add_common(CLI::App* app, Options& o, bool input, bool ks) {
  if (input) app->add_option("--input", o.input, "JSONL corpus")->required();
  app->add_option("--out", o.out, "Output directory")->capture_default_str();
  if (ks) app->add_option("--ks", o.ks, "Comma-separated k values")->capture_default_str();
  app->add_option("--format", o.format, "Table format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  app->add_option("--seed", o.seed, "Seed")->capture_default_str();
  if (input) {
    app->add_option("--policy", o.policy, "Problems with n < k")->check(CLI::IsMember({"error", "skip"}))
        ->capture_default_str();
    app->add_option("--mode", o.mode, "Problem-set agreement")->check(CLI::IsMember({"strict", "lenient"}))
        ->capture_default_str();
  }
}

void add_family(CLI::App* app, Options& o) {
  app->add_option("--family", o.family, "Scaling law")
      ->check(CLI::IsMember({"compute", "params-tokens", "gold"}))
      ->capture_default_str();
}

void add_fit_flags(CLI::App* app, Options& o) {
  app->add_option("--starts", o.starts, "Multi-start count")->capture_default_str();
  app->add_option("--max-iters", o.max_iters, "LM iterations per start")->capture_default_str();
  app->add_option("--rel-tol", o.rel_tol, "Relative SSE tolerance")->capture_default_str();
  app->add_flag("--fix-e0", o.fix_e0, "Pin the irreducible term at 0");
  app->add_flag("--serial", o.serial, "Use the serial reference kernels");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Pass@k scaling-law toolkit", "genscale"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  auto* estimate = app.add_subcommand("estimate", "Benchmark pass@k per model and k");
  add_common(estimate, o, true, true);

  auto* fit_cmd = app.add_subcommand("fit", "Fit a scaling law per k");
  add_common(fit_cmd, o, true, true);
  add_family(fit_cmd, o);
  add_fit_flags(fit_cmd, o);

  auto* backtest_cmd = app.add_subcommand("backtest", "Backtest extrapolation to the largest model");
  add_common(backtest_cmd, o, true, true);
  add_family(backtest_cmd, o);
  add_fit_flags(backtest_cmd, o);
  backtest_cmd->add_option("--caps", o.caps, "'auto' or comma-separated FLOP caps")->capture_default_str();

  auto* envelope = app.add_subcommand("envelope", "Compute-optimal envelope of the params+tokens law");
  add_common(envelope, o, false, false);
  envelope->add_option("--beta", o.beta, "Parameter exponent")->required();
  envelope->add_option("--gamma", o.gamma, "Token exponent")->required();
  envelope->add_option("--n0", o.n0, "Parameter prefactor")->required();
  envelope->add_option("--d0", o.d0, "Token prefactor")->required();
  envelope->add_option("--c", o.c, "FLOP per parameter-token")->capture_default_str();
  envelope->add_option("--e0", o.e0, "Irreducible term")->capture_default_str();
  envelope->add_option("--compute", o.compute_grid, "Compute grid")->capture_default_str();
  envelope->add_option("--r-grid", o.r_grid, "Misallocation ratios")->capture_default_str();

  auto* plan = app.add_subcommand("plan", "Samples per problem from pretraining compute");
  add_common(plan, o, false, false);
  plan->add_option("--compute", o.compute_list, "Comma-separated FLOP values")->required();

  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus with known ground truth");
  add_common(synth, o, false, false);
  add_family(synth, o);
  synth->add_option("--truth", o.truth, "pass@1 law parameters in canonical order");
  synth->add_option("--models", o.models, "Grid size when no explicit grid is given")->capture_default_str();
  synth->add_option("--n-range", o.n_range, "lo,hi parameters")->capture_default_str();
  synth->add_option("--d-range", o.d_range, "lo,hi tokens")->capture_default_str();
  synth->add_option("--grid-n", o.grid_n, "Explicit N per model");
  synth->add_option("--grid-d", o.grid_d, "Explicit D per model");
  synth->add_option("--gold-scale", o.gold_scale, "-log GoldProb at 1e17 FLOP")->capture_default_str();
  synth->add_option("--gold-exponent", o.gold_exponent, "Decay of -log GoldProb with compute")
      ->capture_default_str();
  synth->add_option("--noise", o.noise, "Gaussian sigma on -log pass@1")->capture_default_str();
  synth->add_option("--problems", o.problems, "Problems per model")->capture_default_str();
  synth->add_option("--samples", o.samples, "Samples per problem or 'budgeted'")->capture_default_str();
  synth->add_option("--spread", o.spread, "Beta difficulty spread in [0, 1)")->capture_default_str();
  synth->add_flag("--serial", o.serial, "Use the serial reference kernels");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion& e) {
    out << kToolVersion << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsageError;
  }

  const auto* sub = app.get_subcommands().front();
  Context ctx{sub->get_name(), args, o, err};
  try {
    if (sub == estimate) return cmd_estimate(ctx);
    if (sub == fit_cmd) return cmd_fit(ctx);
    if (sub == backtest_cmd) return cmd_backtest(ctx);
    if (sub == envelope) return cmd_envelope(ctx);
    if (sub == plan) return cmd_plan(ctx);
    return cmd_synth(ctx);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kComputeFailure;
  }
}

}  // namespace genscale::cli
