#pragma once

#include <cstddef>
#include <iosfwd>
#include <unordered_map>
#include <vector>

#include "bear/svec.hpp"

namespace bear {

/// Fixed-capacity heap holding the k features with the largest |weight|,
/// updated in place.
///
/// Entries are ranked by |weight| descending, then by smaller id. The root is
/// the worst-ranked entry, so offers cost O(log k). A newcomer enters a full
/// heap only if it outranks the root. Weights of retained features are
/// whatever was last offered for them; the heap never sees features it has
/// evicted, so after a retained feature's weight shrinks an evicted one may
/// outrank it until that feature is offered again.
class TopKHeap {
 public:
  explicit TopKHeap(std::size_t capacity);

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return heap_.size(); }
  bool contains(FeatureId id) const { return slot_.count(id) != 0; }

  void offer(FeatureId id, double weight);
  FeatureSet members() const;
  /// Entries sorted by descending |weight| (ties: smaller id first).
  std::vector<Entry> snapshot() const;

  /// CSV rows "feature,weight" in snapshot order, with a header line.
  void write_csv(std::ostream& out) const;
  static TopKHeap read_csv(std::istream& in, std::size_t capacity);

 private:
  static bool worse(const Entry& a, const Entry& b);
  void sift_up(std::size_t i);
  void sift_down(std::size_t i);
  void place(std::size_t i, const Entry& e);

  std::size_t capacity_;
  std::vector<Entry> heap_;
  std::unordered_map<FeatureId, std::size_t> slot_;
};

}  // namespace bear
