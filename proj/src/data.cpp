#include "bear/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>

#include "bear/random.hpp"

namespace bear {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

std::vector<std::string_view> tokenize(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    const std::size_t start = i;
    while (i < line.size() && !is_space(line[i])) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  // from_chars rejects a leading '+'.
  if (s.front() == '+') s.remove_prefix(1);
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size() && std::isfinite(out);
}

bool all_digits(std::string_view s) {
  return !s.empty() &&
         std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

double parse_label(std::string_view tok, const Task& task, std::size_t line_no) {
  double y = 0.0;
  if (!parse_double(tok, y)) {
    throw ParseError(line_no, "bad label '" + std::string(tok) + "'");
  }
  switch (task.kind) {
    case TaskKind::kRegression:
      return y;
    case TaskKind::kBinary:
      if (y == 1.0) return 1.0;
      if (y == 0.0 || y == -1.0) return 0.0;
      throw ParseError(line_no, "binary label must be -1, 0 or 1, got '" +
                                    std::string(tok) + "'");
    case TaskKind::kMulticlass:
      if (y != std::floor(y) || y < 0 || y >= static_cast<double>(task.num_classes)) {
        throw ParseError(line_no, "class label '" + std::string(tok) +
                                      "' outside [0, " +
                                      std::to_string(task.num_classes) + ")");
      }
      return y;
  }
  return y;
}

}  // namespace

Example parse_vw(std::string_view line, const Task& task,
                 std::uint64_t ingest_seed, std::size_t line_no) {
  const auto tokens = tokenize(line);
  if (tokens.empty()) throw ParseError(line_no, "missing label");
  if (tokens.front().front() == '|') throw ParseError(line_no, "missing label");

  Example ex;
  ex.y = parse_label(tokens.front(), task, line_no);

  const std::uint32_t name_seed =
      derive_seed(ingest_seed, 0, HashPurpose::kIndex);
  std::vector<Entry> entries;
  entries.reserve(tokens.size());
  for (std::size_t t = 1; t < tokens.size(); ++t) {
    const std::string_view tok = tokens[t];
    if (tok.front() == '|') continue;  // namespace marker; namespaces are flat

    std::string_view name = tok;
    double value = 1.0;
    if (const auto colon = tok.rfind(':'); colon != std::string_view::npos) {
      name = tok.substr(0, colon);
      if (!parse_double(tok.substr(colon + 1), value)) {
        throw ParseError(line_no, "bad feature value in '" + std::string(tok) + "'");
      }
    }
    if (name.empty()) {
      throw ParseError(line_no, "empty feature name in '" + std::string(tok) + "'");
    }
    FeatureId id = 0;
    if (all_digits(name)) {
      auto [p, ec] = std::from_chars(name.data(), name.data() + name.size(), id);
      if (ec != std::errc()) {
        throw ParseError(line_no, "feature id out of range '" + std::string(name) + "'");
      }
    } else {
      id = murmur3_32(name, name_seed);
    }
    entries.push_back({id, value});
  }
  ex.x = SparseVec::from_unsorted(std::move(entries));
  return ex;
}

std::string format_vw(const Example& ex) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", ex.y);
  std::string out = buf;
  out += " |";
  for (const Entry& e : ex.x) {
    std::snprintf(buf, sizeof(buf), "%.17g", e.value);
    out += ' ';
    out += std::to_string(e.id);
    out += ':';
    out += buf;
  }
  return out;
}

VwReader::VwReader(const std::filesystem::path& path, Task task,
                   std::uint64_t ingest_seed)
    : in_(path), task_(task), ingest_seed_(ingest_seed) {
  if (!in_) throw std::runtime_error("cannot open " + path.string());
}

std::optional<Example> VwReader::next() {
  while (std::getline(in_, line_)) {
    ++line_no_;
    if (std::all_of(line_.begin(), line_.end(), is_space)) continue;
    return parse_vw(line_, task_, ingest_seed_, line_no_);
  }
  return std::nullopt;
}

DatasetStats compute_stats(std::span<const Example> examples) {
  DatasetStats st;
  std::uint64_t total = 0;
  for (const Example& ex : examples) {
    total += ex.x.nnz();
    if (!ex.x.empty()) {
      st.p_observed = std::max<std::uint64_t>(st.p_observed, ex.x.entries().back().id + 1);
    }
  }
  st.n = examples.size();
  st.avg_active = st.n ? static_cast<double>(total) / static_cast<double>(st.n) : 0.0;
  return st;
}

Dataset read_vw_file(const std::filesystem::path& path, Task task,
                     std::size_t limit, std::uint64_t ingest_seed) {
  VwReader reader(path, task, ingest_seed);
  Dataset ds;
  ds.task = task;
  while (auto ex = reader.next()) {
    ds.examples.push_back(std::move(*ex));
    if (limit && ds.examples.size() >= limit) break;
  }
  ds.stats = compute_stats(ds.examples);
  return ds;
}

std::string stats_csv_row(std::string_view name, const DatasetStats& stats) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", stats.avg_active);
  return std::string(name) + "," + std::to_string(stats.p_observed) + "," +
         std::to_string(stats.n) + "," + buf;
}

SyntheticProblem::SyntheticProblem(SyntheticSpec spec) : spec_(spec) {
  if (spec_.p == 0 || spec_.n == 0) {
    throw std::invalid_argument("synthetic problem needs p >= 1 and n >= 1");
  }
  if (spec_.k > spec_.p) {
    throw std::invalid_argument("synthetic support size k exceeds p");
  }
  Rng rng(spec_.seed ^ 0xb5ad4eceda1ce2a9ULL);
  // Floyd's sampling of k distinct ids from [1, p].
  std::set<FeatureId> chosen;
  for (std::uint64_t j = spec_.p - spec_.k + 1; j <= spec_.p; ++j) {
    const FeatureId t = 1 + rng.below(j);
    if (!chosen.insert(t).second) chosen.insert(j);
  }
  std::vector<Entry> entries;
  for (FeatureId id : chosen) {
    entries.push_back({id, rng.uniform(spec_.weight_lo, spec_.weight_hi)});
  }
  beta_star_ = SparseVec::from_sorted(std::move(entries));
}

Example SyntheticProblem::row(std::uint64_t i) const {
  if (i >= spec_.n) throw std::out_of_range("synthetic row index out of range");
  Rng rng(mix64(spec_.seed) ^ mix64(i + 1));
  std::vector<Entry> entries(spec_.p);
  for (std::uint64_t j = 0; j < spec_.p; ++j) entries[j] = {j + 1, rng.normal()};
  Example ex;
  ex.x = SparseVec::from_sorted(std::move(entries));
  ex.y = dot(ex.x, beta_star_);
  if (spec_.noise_sd != 0.0) ex.y += spec_.noise_sd * rng.normal();
  return ex;
}

}  // namespace bear
