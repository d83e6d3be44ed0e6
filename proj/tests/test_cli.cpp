#include "doctest.h"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "genscale/backtest.hpp"
#include "genscale/cli.hpp"
#include "genscale/dataset.hpp"
#include "genscale/fitter.hpp"

using namespace genscale;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("genscale_cli_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& leaf) const { return (path / leaf).string(); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

using Csv = std::vector<std::vector<std::string>>;

Csv read_csv(const fs::path& p) {
  Csv rows;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (char ch : line) {
      if (ch == '"') quoted = !quoted;
      else if (ch == ',' && !quoted) cells.push_back(std::exchange(cell, {}));
      else cell += ch;
    }
    cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

double num(const std::string& s) {
  if (s == "inf") return INFINITY;
  if (s == "nan") return NAN;
  double v = 0;
  std::from_chars(s.data(), s.data() + s.size(), v);
  return v;
}

std::size_t col(const Csv& t, const std::string& name) {
  for (std::size_t i = 0; i < t.at(0).size(); ++i)
    if (t[0][i] == name) return i;
  FAIL("missing column " << name);
  return 0;
}

void synth(const TempDir& dir, std::vector<std::string> extra = {}, const std::string& samples = "4000",
           const std::string& truth = "1.0,1000,0.12") {
  std::vector<std::string> args{"synth", "--out", dir.path.string(), "--seed", "11", "--problems", "32",
                                "--samples", samples, "--truth", truth};
  args.insert(args.end(), extra.begin(), extra.end());
  const auto r = run(args);
  REQUIRE_MESSAGE(r.code == 0, r.err);
}

}  // namespace

TEST_CASE("estimate: table shape and library equality") {
  TempDir dir("estimate");
  synth(dir, {"--models", "2"});
  const auto r = run({"estimate", "--input", dir / "corpus.jsonl", "--out", dir.path.string(), "--ks", "1,10,100"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto t = read_csv(dir.path / "estimates.csv");
  REQUIRE(t.size() == 7);

  const auto ds = load_dataset(dir / "corpus.jsonl");
  const auto k_col = col(t, "k"), v_col = col(t, "pass_at_k"), id_col = col(t, "model_id");
  for (std::size_t i = 1; i < t.size(); ++i) {
    const auto& rec = ds.records[(i - 1) / 3];
    CHECK(t[i][id_col] == rec.model_id);
    const std::int64_t k = std::stoll(t[i][k_col]);
    CHECK(num(t[i][v_col]) == benchmark_pass_at_k(rec.outcomes, k).value);
    CHECK(num(t[i][col(t, "compute")]) == rec.compute);
  }

  const auto meta = nlohmann::json::parse(slurp(dir.path / "estimates.meta.json"));
  CHECK(meta["tool"] == "genscale");
  CHECK(meta["version"] == cli::kToolVersion);
  CHECK(meta["seed"] == 0);
  CHECK(meta["flags"].size() == 7);
}

TEST_CASE("json output mirrors csv") {
  TempDir dir("json");
  synth(dir, {"--models", "2"});
  REQUIRE(run({"estimate", "--input", dir / "corpus.jsonl", "--out", dir.path.string(), "--ks", "1,10"}).code == 0);
  REQUIRE(run({"estimate", "--input", dir / "corpus.jsonl", "--out", dir.path.string(), "--ks", "1,10", "--format",
               "json"})
              .code == 0);
  const auto csv = read_csv(dir.path / "estimates.csv");
  const auto js = nlohmann::json::parse(slurp(dir.path / "estimates.json"));
  REQUIRE(js.size() == csv.size() - 1);
  for (std::size_t i = 1; i < csv.size(); ++i) {
    CHECK(js[i - 1]["model_id"] == csv[i][0]);
    CHECK(js[i - 1]["pass_at_k"].get<double>() == num(csv[i][col(csv, "pass_at_k")]));
  }
}

TEST_CASE("usage errors exit 2") {
  TempDir dir("usage");
  synth(dir, {"--models", "3"});
  const std::string in = dir / "corpus.jsonl";
  CHECK(run({"estimate", "--input", in, "--out", dir.path.string(), "--ks", ""}).code == cli::kUsageError);
  CHECK(run({"estimate", "--input", in, "--out", dir.path.string(), "--ks", "0,3"}).code == cli::kUsageError);
  CHECK(run({"fit", "--input", in, "--out", dir.path.string(), "--family", "chinchilla"}).code == cli::kUsageError);
  CHECK(run({"estimate", "--out", dir.path.string()}).code == cli::kUsageError);
  CHECK(run({"frobnicate"}).code == cli::kUsageError);
  CHECK(run({"plan", "--compute", "-1", "--out", dir.path.string()}).code == cli::kUsageError);
  CHECK(run({"envelope", "--beta", "-1", "--gamma", "1", "--n0", "1", "--d0", "1", "--out", dir.path.string()}).code ==
        cli::kUsageError);
  CHECK(run({"synth", "--out", dir.path.string(), "--spread", "1.5"}).code == cli::kUsageError);
  CHECK(run({"synth", "--out", dir.path.string(), "--truth", "1,2"}).code == cli::kUsageError);
  CHECK(run({"--version"}).code == cli::kOk);
}

TEST_CASE("fit matches fit_sweep") {
  TempDir dir("fit");
  // pass@1 between 0.35 and 0.5 keeps binomial noise on -log pass small.
  synth(dir, {}, "100000", "0.5,30,0.1");
  const auto r = run({"fit", "--input", dir / "corpus.jsonl", "--out", dir.path.string(), "--ks", "1,100,10000",
                      "--seed", "3", "--starts", "24"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto t = read_csv(dir.path / "fit_params.csv");
  REQUIRE(t.size() == 4);

  const auto ds = load_dataset(dir / "corpus.jsonl");
  FitConfig cfg;
  cfg.seed = 3;
  cfg.n_starts = 24;
  const std::vector<std::int64_t> ks{1, 100, 10000};
  const auto fits = fit_sweep(ds.records, LawFamily::compute, ks, cfg);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto v = to_vector(fits[i].params);
    CHECK(num(t[i + 1][col(t, "e0")]) == v[0]);
    CHECK(num(t[i + 1][col(t, "c0")]) == v[1]);
    CHECK(num(t[i + 1][col(t, "alpha")]) == v[2]);
    CHECK(t[i + 1][col(t, "converged")] == "true");
  }
  // Re-ingested noiseless corpus recovers the generating law up to sampling error.
  CHECK(std::abs(num(t[1][col(t, "e0")]) - 0.5) < 0.05);
  CHECK(num(t[1][col(t, "alpha")]) == doctest::Approx(0.1).epsilon(0.1));
  CHECK(read_csv(dir.path / "fit_predictions.csv").size() == 1 + 3 * 8);
}

TEST_CASE("backtest on an 8-model corpus") {
  TempDir dir("backtest");
  synth(dir);
  const auto r = run({"backtest", "--input", dir / "corpus.jsonl", "--out", dir.path.string(), "--ks", "1"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto t = read_csv(dir.path / "backtest_errors.csv");
  REQUIRE(t.size() == 8);
  for (std::size_t i = 1; i < t.size(); ++i) CHECK(t[i][col(t, "target_model_id")] == "synth-007");
  CHECK(t[1][col(t, "error")].find("observations") != std::string::npos);
  CHECK(num(t.back()[col(t, "relative_error")]) < 0.05);
  const auto traj = read_csv(dir.path / "backtest_trajectories.csv");
  // The two smallest caps hold fewer models than parameters.
  CHECK(traj.size() == 1 + 3 * 5);
}

TEST_CASE("single-model corpus fails with exit 1") {
  TempDir dir("single");
  synth(dir, {"--models", "1"});
  const auto r = run({"backtest", "--input", dir / "corpus.jsonl", "--out", dir.path.string(), "--ks", "1"});
  CHECK(r.code == cli::kComputeFailure);
  CHECK(run({"fit", "--input", dir / "corpus.jsonl", "--out", dir.path.string(), "--ks", "1,10"}).code ==
        cli::kComputeFailure);
}

TEST_CASE("envelope output identities") {
  TempDir dir("envelope");
  const auto r = run({"envelope", "--beta", "0.7", "--gamma", "0.7", "--n0", "5", "--d0", "5", "--c", "6", "--out",
                      dir.path.string(), "--r-grid", "0.5,1,3"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto s = read_csv(dir.path / "envelope_summary.csv");
  CHECK(num(s[1][col(s, "alpha")]) == doctest::Approx(0.35).epsilon(1e-15));
  const auto a = read_csv(dir.path / "envelope_allocation.csv");
  REQUIRE(a.size() == 8);
  for (std::size_t i = 1; i < a.size(); ++i) {
    const double c = num(a[i][0]), n = num(a[i][1]), d = num(a[i][2]);
    CHECK(std::abs(n * d * 6 - c) / c < 1e-9);
  }
  const auto p = read_csv(dir.path / "envelope_penalty.csv");
  CHECK(num(p[2][1]) == 1.0);
  CHECK(num(p[1][1]) > 1.0);
}

TEST_CASE("plan") {
  TempDir dir("plan");
  REQUIRE(run({"plan", "--compute", "1e23,1e18,1e20", "--out", dir.path.string()}).code == 0);
  const auto t = read_csv(dir.path / "plan.csv");
  REQUIRE(t.size() == 4);
  CHECK(t[1][1] == "32000");
  CHECK(t[2][1] == "1000000");
  CHECK(t[3][1] == "100000");
}

TEST_CASE("synth is byte-identical under a fixed seed") {
  TempDir a("synth_a"), b("synth_b");
  synth(a, {"--noise", "0.02", "--spread", "0.2"});
  synth(b, {"--noise", "0.02", "--spread", "0.2"});
  const auto body = slurp(a.path / "corpus.jsonl");
  CHECK(body == slurp(b.path / "corpus.jsonl"));
  CHECK(std::count(body.begin(), body.end(), '\n') == 8);
  const auto truth = nlohmann::json::parse(slurp(a.path / "corpus.truth.json"));
  CHECK(truth["ground_truth_pass_at_1"]["alpha"].get<double>() == 0.12);
  CHECK(truth["grid"].size() == 8);
}
