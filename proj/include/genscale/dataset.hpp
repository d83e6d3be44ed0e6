#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "genscale/estimator.hpp"

namespace genscale {

/// Default FLOP-per-parameter-token constant in C ~ 6 * N * D.
inline constexpr double kFlopsPerParamToken = 6.0;

struct GoldLogprob {
  std::string problem_id;
  double logprob = 0.0;

  bool operator==(const GoldLogprob&) const = default;
};

struct ModelRecord {
  std::string model_id;
  double n_params = 0.0;
  double n_tokens = 0.0;
  double compute = 0.0;
  bool compute_override = false;
  std::vector<ProblemOutcome> outcomes;
  std::optional<std::vector<GoldLogprob>> gold_logprobs;
  /// -log GoldProb over the benchmark; filled by validate_record when
  /// gold_logprobs is present.
  std::optional<double> gold_nll;

  bool operator==(const ModelRecord&) const = default;
};

enum class LoadMode { strict, lenient };

struct Dataset {
  std::vector<ModelRecord> records;
  std::string benchmark_name;
  /// Sorted problem ids shared by every record.
  std::vector<std::string> problem_ids;
  std::vector<std::string> warnings;
};

double derive_compute(double n_params, double n_tokens);

/// Checks record invariants, derives compute when it is zero, and fills
/// gold_nll. Throws ValidationError naming the offending field.
void validate_record(ModelRecord& record);

/// Reads the JSONL corpus format, one model per line. Blank lines are ignored.
Dataset load_dataset(const std::filesystem::path& path, LoadMode mode = LoadMode::strict);
Dataset parse_dataset(std::istream& in, LoadMode mode = LoadMode::strict,
                      std::string benchmark_name = "benchmark");

/// One JSONL line per record, in the same schema load_dataset reads.
void write_jsonl(std::ostream& out, const std::vector<ModelRecord>& records);
std::string to_jsonl_line(const ModelRecord& record);

/// Samples per problem for a model of `compute` FLOP:
/// clip(100 * 10^(23 - log10 C), 3.2e4, 1e6), rounded.
std::int64_t sample_budget(double compute);

}  // namespace genscale
