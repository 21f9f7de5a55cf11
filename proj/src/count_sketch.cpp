#include "bear/count_sketch.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "bear/binary_io.hpp"

namespace bear {

namespace {

constexpr char kMagic[4] = {'C', 'S', 'K', 'T'};
constexpr std::uint32_t kVersion = 1;

double median_inplace(std::span<double> v) {
  const std::size_t n = v.size();
  const std::size_t mid = n / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  if (n % 2 == 1) return v[mid];
  const double upper = v[mid];
  const double lower = *std::max_element(v.begin(), v.begin() + mid);
  return 0.5 * (lower + upper);
}

}  // namespace

CountSketch::CountSketch(std::size_t rows, std::size_t width, std::uint64_t seed)
    : rows_(rows), width_(width), seed_(seed) {
  if (rows == 0 || width == 0) {
    throw std::invalid_argument("CountSketch: rows and width must be positive");
  }
  index_seeds_.reserve(rows);
  sign_seeds_.reserve(rows);
  for (std::size_t j = 0; j < rows; ++j) {
    index_seeds_.push_back(derive_seed(seed, j, HashPurpose::kIndex));
    sign_seeds_.push_back(derive_seed(seed, j, HashPurpose::kSign));
  }
  counters_.assign(rows * width, 0.0);
}

std::size_t CountSketch::bucket(std::size_t row, FeatureId feature) const {
  if (row >= rows_) {
    throw std::out_of_range("CountSketch: row " + std::to_string(row) +
                            " out of range");
  }
  return hash_feature(feature, index_seeds_[row]) % width_;
}

int CountSketch::sign(std::size_t row, FeatureId feature) const {
  if (row >= rows_) {
    throw std::out_of_range("CountSketch: row " + std::to_string(row) +
                            " out of range");
  }
  return (hash_feature(feature, sign_seeds_[row]) & 1U) ? 1 : -1;
}

void CountSketch::add(FeatureId feature, double delta) {
  if (!std::isfinite(delta)) {
    throw std::invalid_argument("CountSketch::add: non-finite delta");
  }
  if (delta == 0.0) return;
  for (std::size_t j = 0; j < rows_; ++j) {
    counters_[j * width_ + bucket(j, feature)] += sign(j, feature) * delta;
  }
}

void CountSketch::add_sparse(const SparseVec& v, UndoLog* undo) {
  if (!v.all_finite()) {
    throw std::invalid_argument("CountSketch::add_sparse: non-finite value");
  }
  for (const Entry& e : v) {
    if (e.value == 0.0) continue;
    for (std::size_t j = 0; j < rows_; ++j) {
      const std::size_t cell = j * width_ + bucket(j, e.id);
      if (undo) undo->cells.emplace_back(cell, counters_[cell]);
      counters_[cell] += sign(j, e.id) * e.value;
    }
  }
}

void CountSketch::rollback(const UndoLog& undo) {
  for (auto it = undo.cells.rbegin(); it != undo.cells.rend(); ++it) {
    counters_[it->first] = it->second;
  }
}

double CountSketch::query(FeatureId feature) const {
  constexpr std::size_t kStack = 16;
  std::array<double, kStack> small{};
  std::vector<double> large;
  std::span<double> vals;
  if (rows_ <= kStack) {
    vals = std::span<double>(small.data(), rows_);
  } else {
    large.resize(rows_);
    vals = large;
  }
  for (std::size_t j = 0; j < rows_; ++j) {
    vals[j] = sign(j, feature) * counters_[j * width_ + bucket(j, feature)];
  }
  return median_inplace(vals);
}

std::vector<CountSketch::Slot> CountSketch::locate(
    std::span<const FeatureId> features) const {
  std::vector<Slot> out;
  out.reserve(features.size() * rows_);
  for (FeatureId f : features) {
    for (std::size_t j = 0; j < rows_; ++j) {
      out.push_back({j * width_ + hash_feature(f, index_seeds_[j]) % width_,
                     (hash_feature(f, sign_seeds_[j]) & 1U) ? 1.0 : -1.0});
    }
  }
  return out;
}

void CountSketch::add_at(std::span<const Slot> slots, double delta, UndoLog* undo) {
  if (!std::isfinite(delta)) {
    throw std::invalid_argument("CountSketch::add_at: non-finite delta");
  }
  if (delta == 0.0) return;
  for (const Slot& s : slots) {
    if (undo) undo->cells.emplace_back(s.cell, counters_[s.cell]);
    counters_[s.cell] += s.sign * delta;
  }
}

double CountSketch::query_at(std::span<const Slot> slots) const {
  constexpr std::size_t kStack = 16;
  std::array<double, kStack> small{};
  std::vector<double> large;
  std::span<double> vals;
  if (slots.size() <= kStack) {
    vals = std::span<double>(small.data(), slots.size());
  } else {
    large.resize(slots.size());
    vals = large;
  }
  for (std::size_t j = 0; j < slots.size(); ++j) {
    vals[j] = slots[j].sign * counters_[slots[j].cell];
  }
  return median_inplace(vals);
}

void CountSketch::save(std::ostream& out) const {
  out.write(kMagic, sizeof(kMagic));
  io::write_u32(out, kVersion);
  io::write_u64(out, rows_);
  io::write_u64(out, width_);
  io::write_u64(out, seed_);
  for (double c : counters_) io::write_f64(out, c);
  if (!out) throw std::runtime_error("CountSketch::save: write failed");
}

CountSketch CountSketch::load(std::istream& in) {
  char magic[4];
  if (!in.read(magic, sizeof(magic)) ||
      !std::equal(magic, magic + 4, kMagic)) {
    throw std::runtime_error("CountSketch::load: bad magic");
  }
  const std::uint32_t version = io::read_u32(in);
  if (version != kVersion) {
    throw std::runtime_error("CountSketch::load: unsupported version " +
                             std::to_string(version));
  }
  const std::uint64_t rows = io::read_u64(in);
  const std::uint64_t width = io::read_u64(in);
  const std::uint64_t seed = io::read_u64(in);
  CountSketch sketch(rows, width, seed);
  for (double& c : sketch.counters_) {
    c = io::read_f64(in);
    if (!std::isfinite(c)) {
      throw std::runtime_error("CountSketch::load: non-finite counter");
    }
  }
  return sketch;
}

}  // namespace bear
