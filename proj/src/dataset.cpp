#include "genscale/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "genscale/errors.hpp"
#include "genscale/laws.hpp"

namespace genscale {

using nlohmann::json;

namespace {

const std::set<std::string> kRecordKeys{"model_id", "n_params",         "n_tokens",    "compute",
                                        "compute_override", "outcomes", "gold_logprobs"};
const std::set<std::string> kOutcomeKeys{"problem_id", "n", "s"};
const std::set<std::string> kGoldKeys{"problem_id", "logprob"};

void reject_unknown(const json& obj, const std::set<std::string>& allowed, std::size_t line,
                    const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.contains(key)) throw ParseError(line, "unknown field '" + key + "' in " + where);
  }
}

const json& require(const json& obj, const char* key, std::size_t line, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(line, std::string("missing field '") + key + "' in " + where);
  return *it;
}

double get_number(const json& v, const char* key, std::size_t line) {
  if (!v.is_number()) throw ParseError(line, std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

std::int64_t get_integer(const json& v, const char* key, std::size_t line) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::isfinite(d) && d == std::floor(d) && std::abs(d) < 9.0e15)
      return static_cast<std::int64_t>(d);
  }
  throw ParseError(line, std::string("field '") + key + "' must be an integer");
}

std::string get_string(const json& v, const char* key, std::size_t line) {
  if (!v.is_string()) throw ParseError(line, std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

ModelRecord parse_record(const json& j, std::size_t line, LoadMode mode) {
  if (!j.is_object()) throw ParseError(line, "expected a JSON object");
  if (mode == LoadMode::strict) reject_unknown(j, kRecordKeys, line, "record");

  ModelRecord r;
  r.model_id = get_string(require(j, "model_id", line, "record"), "model_id", line);
  r.n_params = get_number(require(j, "n_params", line, "record"), "n_params", line);
  r.n_tokens = get_number(require(j, "n_tokens", line, "record"), "n_tokens", line);
  if (auto it = j.find("compute"); it != j.end() && !it->is_null())
    r.compute = get_number(*it, "compute", line);
  if (auto it = j.find("compute_override"); it != j.end() && !it->is_null()) {
    if (!it->is_boolean()) throw ParseError(line, "field 'compute_override' must be a boolean");
    r.compute_override = it->get<bool>();
  }

  const json& outcomes = require(j, "outcomes", line, "record");
  if (!outcomes.is_array()) throw ParseError(line, "field 'outcomes' must be an array");
  r.outcomes.reserve(outcomes.size());
  for (const auto& o : outcomes) {
    if (!o.is_object()) throw ParseError(line, "outcome entries must be objects");
    if (mode == LoadMode::strict) reject_unknown(o, kOutcomeKeys, line, "outcome");
    r.outcomes.push_back({get_string(require(o, "problem_id", line, "outcome"), "problem_id", line),
                          get_integer(require(o, "n", line, "outcome"), "n", line),
                          get_integer(require(o, "s", line, "outcome"), "s", line)});
  }

  if (auto it = j.find("gold_logprobs"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) throw ParseError(line, "field 'gold_logprobs' must be an array");
    std::vector<GoldLogprob> gold;
    for (const auto& g : *it) {
      if (!g.is_object()) throw ParseError(line, "gold_logprobs entries must be objects");
      if (mode == LoadMode::strict) reject_unknown(g, kGoldKeys, line, "gold_logprobs entry");
      gold.push_back({get_string(require(g, "problem_id", line, "gold_logprobs entry"),
                                 "problem_id", line),
                      get_number(require(g, "logprob", line, "gold_logprobs entry"), "logprob",
                                 line)});
    }
    r.gold_logprobs = std::move(gold);
  }
  return r;
}

std::vector<std::string> problem_set(const ModelRecord& r) {
  std::vector<std::string> ids;
  ids.reserve(r.outcomes.size());
  for (const auto& o : r.outcomes) ids.push_back(o.problem_id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

void restrict_to(ModelRecord& r, const std::set<std::string>& keep) {
  std::erase_if(r.outcomes, [&](const ProblemOutcome& o) { return !keep.contains(o.problem_id); });
  if (r.gold_logprobs)
    std::erase_if(*r.gold_logprobs, [&](const GoldLogprob& g) { return !keep.contains(g.problem_id); });
  r.gold_nll.reset();
}

}  // namespace

double derive_compute(double n_params, double n_tokens) {
  if (!(n_params > 0.0 && std::isfinite(n_params)) || !(n_tokens > 0.0 && std::isfinite(n_tokens)))
    throw std::invalid_argument("derive_compute: N and D must be finite and > 0");
  return kFlopsPerParamToken * n_params * n_tokens;
}

void validate_record(ModelRecord& r) {
  const std::string& id = r.model_id;
  if (id.empty()) throw ValidationError(id, "model_id", "must be non-empty");
  if (!(r.n_params > 0.0 && std::isfinite(r.n_params)))
    throw ValidationError(id, "n_params", "must be finite and > 0");
  if (!(r.n_tokens > 0.0 && std::isfinite(r.n_tokens)))
    throw ValidationError(id, "n_tokens", "must be finite and > 0");

  const double derived = derive_compute(r.n_params, r.n_tokens);
  if (r.compute == 0.0 && !r.compute_override) {
    r.compute = derived;
  } else {
    if (!(r.compute > 0.0 && std::isfinite(r.compute)))
      throw ValidationError(id, "compute", "must be finite and > 0");
    if (!r.compute_override && std::abs(r.compute - derived) > 1e-6 * derived)
      throw ValidationError(id, "compute",
                            "differs from 6*N*D by more than 1e-6 relative; set compute_override");
  }

  if (r.outcomes.empty()) throw ValidationError(id, "outcomes", "must be non-empty");
  std::set<std::string> seen;
  for (const auto& o : r.outcomes) {
    if (!seen.insert(o.problem_id).second)
      throw ValidationError(id, "outcomes.problem_id", "duplicate problem '" + o.problem_id + "'");
    if (o.n < 1)
      throw ValidationError(id, "outcomes.n", "problem '" + o.problem_id + "' has n < 1");
    if (o.s < 0 || o.s > o.n)
      throw ValidationError(id, "outcomes.s",
                            "problem '" + o.problem_id + "' has s outside [0, n]");
  }

  r.gold_nll.reset();
  if (r.gold_logprobs) {
    if (r.gold_logprobs->empty()) throw ValidationError(id, "gold_logprobs", "must be non-empty");
    std::set<std::string> gold_seen;
    std::vector<double> lp;
    lp.reserve(r.gold_logprobs->size());
    for (const auto& g : *r.gold_logprobs) {
      if (!seen.contains(g.problem_id))
        throw ValidationError(id, "gold_logprobs.problem_id",
                              "problem '" + g.problem_id + "' has no outcome");
      if (!gold_seen.insert(g.problem_id).second)
        throw ValidationError(id, "gold_logprobs.problem_id",
                              "duplicate problem '" + g.problem_id + "'");
      if (!(g.logprob <= 0.0))
        throw ValidationError(id, "gold_logprobs.logprob",
                              "problem '" + g.problem_id + "' has logprob > 0");
      lp.push_back(g.logprob);
    }
    r.gold_nll = aggregate_goldprob(lp);
  }
}

Dataset parse_dataset(std::istream& in, LoadMode mode, std::string benchmark_name) {
  Dataset ds;
  ds.benchmark_name = std::move(benchmark_name);
  std::vector<std::size_t> lines;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(line, std::string("invalid JSON: ") + e.what());
    }
    ds.records.push_back(parse_record(j, line, mode));
    lines.push_back(line);
  }
  if (ds.records.empty()) throw ParseError(line, "corpus contains no records");

  std::set<std::string> ids;
  for (auto& r : ds.records) {
    validate_record(r);
    if (!ids.insert(r.model_id).second)
      throw ValidationError(r.model_id, "model_id", "duplicate model");
  }

  ds.problem_ids = problem_set(ds.records.front());
  bool mismatch = false;
  for (const auto& r : ds.records) mismatch |= problem_set(r) != ds.problem_ids;
  if (mismatch) {
    if (mode == LoadMode::strict) {
      for (const auto& r : ds.records) {
        if (problem_set(r) != ds.problem_ids)
          throw ValidationError(r.model_id, "outcomes",
                                "problem set differs from record '" +
                                    ds.records.front().model_id + "'");
      }
    }
    std::set<std::string> common(ds.problem_ids.begin(), ds.problem_ids.end());
    for (const auto& r : ds.records) {
      std::set<std::string> mine;
      for (const auto& o : r.outcomes) mine.insert(o.problem_id);
      std::erase_if(common, [&](const std::string& p) { return !mine.contains(p); });
    }
    if (common.empty()) throw ValidationError("*", "outcomes", "records share no problems");
    for (auto& r : ds.records) {
      const std::size_t before = r.outcomes.size();
      restrict_to(r, common);
      if (r.outcomes.size() != before)
        ds.warnings.push_back("record '" + r.model_id + "': dropped " +
                              std::to_string(before - r.outcomes.size()) +
                              " problems outside the shared set");
      if (r.gold_logprobs && r.gold_logprobs->empty()) r.gold_logprobs.reset();
      validate_record(r);
    }
    ds.problem_ids.assign(common.begin(), common.end());
  }
  return ds;
}

Dataset load_dataset(const std::filesystem::path& path, LoadMode mode) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open corpus '" + path.string() + "'");
  return parse_dataset(in, mode, path.stem().string());
}

std::string to_jsonl_line(const ModelRecord& r) {
  // ordered_json keeps the schema's field order in the output.
  nlohmann::ordered_json j;
  j["model_id"] = r.model_id;
  j["n_params"] = r.n_params;
  j["n_tokens"] = r.n_tokens;
  j["compute"] = r.compute;
  if (r.compute_override) j["compute_override"] = true;
  auto outcomes = nlohmann::ordered_json::array();
  for (const auto& o : r.outcomes) {
    nlohmann::ordered_json e;
    e["problem_id"] = o.problem_id;
    e["n"] = o.n;
    e["s"] = o.s;
    outcomes.push_back(std::move(e));
  }
  j["outcomes"] = std::move(outcomes);
  if (r.gold_logprobs) {
    auto gold = nlohmann::ordered_json::array();
    for (const auto& g : *r.gold_logprobs) {
      nlohmann::ordered_json e;
      e["problem_id"] = g.problem_id;
      e["logprob"] = g.logprob;
      gold.push_back(std::move(e));
    }
    j["gold_logprobs"] = std::move(gold);
  }
  return j.dump();
}

void write_jsonl(std::ostream& out, const std::vector<ModelRecord>& records) {
  for (const auto& r : records) out << to_jsonl_line(r) << '\n';
}

std::int64_t sample_budget(double compute) {
  if (!(compute > 0.0 && std::isfinite(compute)))
    throw std::invalid_argument("sample_budget: compute must be finite and > 0");
  const double raw = 100.0 * std::pow(10.0, 23.0 - std::log10(compute));
  return std::llround(std::clamp(raw, 3.2e4, 1e6));
}

}  // namespace genscale
