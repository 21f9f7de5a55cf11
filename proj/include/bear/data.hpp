#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bear/loss.hpp"
#include "bear/svec.hpp"
#include "bear/trainer.hpp"

namespace bear {

/// Malformed input line. `line()` is 1-based, 0 when unknown.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what
                                : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Seed of the hash that turns string feature names into ids. Independent of
/// any sketch seed so ingestion collisions can be measured on their own.
inline constexpr std::uint64_t kDefaultIngestSeed = 0x5eed1e55ULL;

/// Parses one line of the form `label ['|' [namespace]] (feature[:value])*`.
///
/// Integer feature tokens are used as ids; any other token is hashed with
/// MurmurHash3-32 under `ingest_seed`. A missing value means 1.0 and repeated
/// features are summed. Binary labels -1/0 map to 0 and 1 stays 1;
/// multi-class labels must be integers in [0, C).
Example parse_vw(std::string_view line, const Task& task,
                 std::uint64_t ingest_seed = kDefaultIngestSeed,
                 std::size_t line_no = 0);

/// Inverse of parse_vw for numeric ids: "label | id:value ...", values in
/// round-trip precision.
std::string format_vw(const Example& ex);

struct DatasetStats {
  std::uint64_t p_observed = 0;  // max feature id + 1
  std::uint64_t n = 0;
  double avg_active = 0.0;
};

/// Streams examples from a VW-format text file, one per call.
class VwReader {
 public:
  VwReader(const std::filesystem::path& path, Task task,
           std::uint64_t ingest_seed = kDefaultIngestSeed);
  /// Next example, or nullopt at end of file. Blank lines are skipped.
  std::optional<Example> next();
  std::size_t line_number() const { return line_no_; }

 private:
  std::ifstream in_;
  Task task_;
  std::uint64_t ingest_seed_;
  std::size_t line_no_ = 0;
  std::string line_;
};

struct Dataset {
  Task task;
  std::vector<Example> examples;
  DatasetStats stats;
};

DatasetStats compute_stats(std::span<const Example> examples);

/// Reads at most `limit` examples (0 = all).
Dataset read_vw_file(const std::filesystem::path& path, Task task,
                     std::size_t limit = 0,
                     std::uint64_t ingest_seed = kDefaultIngestSeed);

/// CSV row "name,p_observed,n,avg_active".
std::string stats_csv_row(std::string_view name, const DatasetStats& stats);

struct SyntheticSpec {
  std::uint64_t p = 1000;
  std::uint64_t n = 900;
  std::uint64_t k = 8;
  std::uint64_t seed = 0;
  double weight_lo = 0.8;
  double weight_hi = 1.2;
  // Standard deviation of additive Gaussian label noise.
  double noise_sd = 0.0;
};

/// Sparse linear model y = x . beta* + noise_sd * e with standard normal x
/// and e. Noiseless by default.
///
/// Rows are generated on demand from (seed, row index); the n x p design is
/// never held in memory.
class SyntheticProblem {
 public:
  explicit SyntheticProblem(SyntheticSpec spec);

  const SyntheticSpec& spec() const { return spec_; }
  const SparseVec& beta_star() const { return beta_star_; }
  FeatureSet support() const { return beta_star_.support(); }

  /// Row `i` in [0, n). Feature ids run from 1 to p.
  Example row(std::uint64_t i) const;

 private:
  SyntheticSpec spec_;
  SparseVec beta_star_;
};

}  // namespace bear
