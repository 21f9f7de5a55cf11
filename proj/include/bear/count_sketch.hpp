#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "bear/hash.hpp"
#include "bear/svec.hpp"

namespace bear {

/// Count Sketch: `rows` signed-hash rows of `width` real counters each.
///
/// ADD(i, delta) adds sign_j(i) * delta to cell (j, bucket_j(i)) of every row
/// j; QUERY(i) is the median over rows of the signed cell. Hash functions are
/// MurmurHash3-32 keyed by seeds derived from a single 64-bit seed, so two
/// tables built with the same (rows, width, seed) hash identically on every
/// platform. Memory is rows * width doubles regardless of the id space.
///
/// Single writer. Concurrent const access between mutations is safe.
class CountSketch {
 public:
  /// Log of overwritten cells, used to roll back a partial update exactly.
  struct UndoLog {
    std::vector<std::pair<std::size_t, double>> cells;
  };

  CountSketch(std::size_t rows, std::size_t width, std::uint64_t seed);

  std::size_t rows() const { return rows_; }
  std::size_t width() const { return width_; }
  std::size_t size() const { return counters_.size(); }
  std::uint64_t seed() const { return seed_; }

  /// Bucket of `feature` in `row`, in [0, width). Throws std::out_of_range
  /// for a bad row.
  std::size_t bucket(std::size_t row, FeatureId feature) const;
  /// +1 or -1.
  int sign(std::size_t row, FeatureId feature) const;

  /// Throws std::invalid_argument on a non-finite delta, before mutating.
  void add(FeatureId feature, double delta);
  /// Adds every entry of `v`. When `undo` is given, the previous value of
  /// each touched cell is appended to it.
  void add_sparse(const SparseVec& v, UndoLog* undo = nullptr);
  /// Restores cells recorded in `undo` (latest first).
  void rollback(const UndoLog& undo);

  double query(FeatureId feature) const;

  /// Cell index and sign of one feature in one row. Locating a feature once
  /// and reusing its slots avoids rehashing it for every add and query.
  struct Slot {
    std::size_t cell;
    double sign;
  };
  /// rows() slots per feature, feature-major.
  std::vector<Slot> locate(std::span<const FeatureId> features) const;
  /// Same as add() and query() for the feature whose rows() slots are given.
  void add_at(std::span<const Slot> slots, double delta, UndoLog* undo = nullptr);
  double query_at(std::span<const Slot> slots) const;

  double cell(std::size_t row, std::size_t col) const {
    return counters_[row * width_ + col];
  }
  std::span<const double> counters() const { return counters_; }

  /// Binary layout: magic "CSKT", u32 version, u64 rows, u64 width, u64
  /// seed, then rows*width little-endian IEEE-754 doubles, row-major.
  void save(std::ostream& out) const;
  static CountSketch load(std::istream& in);

  friend bool operator==(const CountSketch& a, const CountSketch& b) {
    return a.rows_ == b.rows_ && a.width_ == b.width_ && a.seed_ == b.seed_ &&
           a.counters_ == b.counters_;
  }

 private:
  std::size_t rows_;
  std::size_t width_;
  std::uint64_t seed_;
  std::vector<std::uint32_t> index_seeds_;
  std::vector<std::uint32_t> sign_seeds_;
  std::vector<double> counters_;
};

}  // namespace bear
