#pragma once

#include <cstddef>
#include <deque>
#include <iosfwd>

#include "bear/svec.hpp"

namespace bear {

/// Pairs with r.s at or below this multiple of |s|^2 are skipped.
inline constexpr double kCurvatureFloor = 1e-10;

struct CurvaturePair {
  SparseVec s;  // iterate difference
  SparseVec r;  // gradient difference on the same minibatch
  double rho;   // 1 / (r . s)
};

/// The last `capacity` accepted curvature pairs, oldest first.
class CurvatureHistory {
 public:
  explicit CurvatureHistory(std::size_t capacity);

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }
  const std::deque<CurvaturePair>& pairs() const { return pairs_; }

  /// Appends (s, r) if s is nonzero and r.s > kCurvatureFloor * |s|^2,
  /// evicting the oldest pair when full. Returns whether it was stored.
  bool push(SparseVec s, SparseVec r);

  /// Total stored nonzeros across all s and r.
  std::size_t nnz() const;

  /// u64 count, then per pair: s, r (each u64 nnz followed by nnz
  /// (u64 id, f64 value) records), all little-endian.
  void save(std::ostream& out) const;
  static CurvatureHistory load(std::istream& in, std::size_t capacity);

 private:
  std::size_t capacity_;
  std::deque<CurvaturePair> pairs_;
};

/// Two-loop recursion: returns H g where H is the L-BFGS inverse-Hessian
/// approximation built from `history` with initial scaling (r.s)/(r.r) of
/// the newest pair. Returns g unchanged for an empty history.
SparseVec lbfgs_direction(const SparseVec& g, const CurvatureHistory& history);

void write_sparse(std::ostream& out, const SparseVec& v);
SparseVec read_sparse(std::istream& in);

}  // namespace bear
