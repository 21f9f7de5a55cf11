#include "bear/lbfgs.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "bear/binary_io.hpp"

namespace bear {

CurvatureHistory::CurvatureHistory(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) {
    throw std::invalid_argument("CurvatureHistory: capacity must be > 0");
  }
}

bool CurvatureHistory::push(SparseVec s, SparseVec r) {
  const double ss = s.squared_norm();
  if (ss == 0.0) return false;
  const double rs = dot(r, s);
  if (!(rs > kCurvatureFloor * ss)) return false;
  if (pairs_.size() == capacity_) pairs_.pop_front();
  pairs_.push_back({std::move(s), std::move(r), 1.0 / rs});
  return true;
}

std::size_t CurvatureHistory::nnz() const {
  std::size_t n = 0;
  for (const auto& p : pairs_) n += p.s.nnz() + p.r.nnz();
  return n;
}

SparseVec lbfgs_direction(const SparseVec& g, const CurvatureHistory& history) {
  const auto& pairs = history.pairs();
  if (pairs.empty()) return g;

  std::vector<double> alpha(pairs.size());
  SparseVec q = g;
  for (std::size_t i = pairs.size(); i-- > 0;) {
    const CurvaturePair& p = pairs[i];
    alpha[i] = p.rho * dot(p.s, q);
    accumulate(q, -alpha[i], p.r);
  }

  const CurvaturePair& newest = pairs.back();
  const double gamma0 = dot(newest.r, newest.s) / newest.r.squared_norm();
  SparseVec z = scale(gamma0, q);

  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const CurvaturePair& p = pairs[i];
    const double gamma = p.rho * dot(p.r, z);
    accumulate(z, alpha[i] - gamma, p.s);
  }
  return z;
}

void write_sparse(std::ostream& out, const SparseVec& v) {
  io::write_u64(out, v.nnz());
  for (const Entry& e : v) {
    io::write_u64(out, e.id);
    io::write_f64(out, e.value);
  }
}

SparseVec read_sparse(std::istream& in) {
  const std::uint64_t n = io::read_u64(in);
  std::vector<Entry> entries;
  entries.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(n, 1 << 20)));
  for (std::uint64_t i = 0; i < n; ++i) {
    const FeatureId id = io::read_u64(in);
    const double v = io::read_f64(in);
    entries.push_back({id, v});
  }
  return SparseVec::from_sorted(std::move(entries));
}

void CurvatureHistory::save(std::ostream& out) const {
  io::write_u64(out, pairs_.size());
  for (const auto& p : pairs_) {
    write_sparse(out, p.s);
    write_sparse(out, p.r);
  }
  if (!out) throw std::runtime_error("CurvatureHistory::save: write failed");
}

CurvatureHistory CurvatureHistory::load(std::istream& in, std::size_t capacity) {
  CurvatureHistory h(capacity);
  const std::uint64_t n = io::read_u64(in);
  if (n > capacity) {
    throw std::runtime_error("CurvatureHistory::load: more pairs than capacity");
  }
  for (std::uint64_t i = 0; i < n; ++i) {
    SparseVec s = read_sparse(in);
    SparseVec r = read_sparse(in);
    if (!h.push(std::move(s), std::move(r))) {
      throw std::runtime_error("CurvatureHistory::load: inadmissible pair");
    }
  }
  return h;
}

}  // namespace bear
