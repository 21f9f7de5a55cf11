#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "bear/hash.hpp"

namespace bear {

struct Entry {
  FeatureId id;
  double value;

  friend bool operator==(const Entry&, const Entry&) = default;
};

/// Sorted, duplicate-free set of feature ids.
class FeatureSet {
 public:
  FeatureSet() = default;
  FeatureSet(std::initializer_list<FeatureId> ids);
  /// Sorts and deduplicates.
  explicit FeatureSet(std::vector<FeatureId> ids);

  bool contains(FeatureId id) const;
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  std::span<const FeatureId> ids() const { return ids_; }
  auto begin() const { return ids_.begin(); }
  auto end() const { return ids_.end(); }

  friend bool operator==(const FeatureSet&, const FeatureSet&) = default;

 private:
  std::vector<FeatureId> ids_;
};

FeatureSet set_union(const FeatureSet& a, const FeatureSet& b);
FeatureSet set_intersection(const FeatureSet& a, const FeatureSet& b);
bool is_subset(const FeatureSet& sub, const FeatureSet& super);

/// Sparse real vector over an unbounded feature-id space.
///
/// Entries are strictly increasing by id and carry finite values. Stored
/// zeros are allowed but equal to absence; the arithmetic helpers below drop
/// them from their results.
class SparseVec {
 public:
  SparseVec() = default;
  SparseVec(std::initializer_list<Entry> entries);

  /// Validates ordering and finiteness; throws std::invalid_argument.
  /// Zero values are dropped here and by from_unsorted.
  static SparseVec from_sorted(std::vector<Entry> entries);
  /// Sorts by id and sums values of repeated ids. Values must be finite.
  static SparseVec from_unsorted(std::vector<Entry> entries);

  std::span<const Entry> entries() const { return entries_; }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }
  std::size_t nnz() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  /// Value at `id`, zero when absent.
  double get(FeatureId id) const;
  double squared_norm() const;
  double norm() const;
  bool all_finite() const;
  FeatureSet support() const;

  friend bool operator==(const SparseVec&, const SparseVec&) = default;

 private:
  explicit SparseVec(std::vector<Entry> entries, int /*trusted*/)
      : entries_(std::move(entries)) {}

  friend SparseVec axpy(double, const SparseVec&, const SparseVec&);
  friend SparseVec scale(double, const SparseVec&);
  friend SparseVec restrict_to(const SparseVec&, const FeatureSet&);
  friend void accumulate(SparseVec&, double, const SparseVec&);
  friend SparseVec linear_combination(std::span<const double>,
                                      std::span<const SparseVec* const>);

  std::vector<Entry> entries_;
};

double dot(const SparseVec& a, const SparseVec& b);

/// alpha * x + y over the merged support, exact zeros dropped.
SparseVec axpy(double alpha, const SparseVec& x, const SparseVec& y);
SparseVec scale(double alpha, const SparseVec& x);
inline SparseVec operator-(const SparseVec& a, const SparseVec& b) {
  return axpy(-1.0, b, a);
}
inline SparseVec operator+(const SparseVec& a, const SparseVec& b) {
  return axpy(1.0, b, a);
}

/// Entries of `v` whose id is in `keep`.
SparseVec restrict_to(const SparseVec& v, const FeatureSet& keep);

/// acc <- acc + alpha * x, reusing acc's storage where possible.
void accumulate(SparseVec& acc, double alpha, const SparseVec& x);

/// sum_i coef[i] * rows[i], reduced pairwise so rounding does not depend on
/// row order within a pair level. Exact zeros dropped.
SparseVec linear_combination(std::span<const double> coef,
                             std::span<const SparseVec* const> rows);

}  // namespace bear
