#include "bear/svec.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

namespace bear {

FeatureSet::FeatureSet(std::initializer_list<FeatureId> ids)
    : FeatureSet(std::vector<FeatureId>(ids)) {}

FeatureSet::FeatureSet(std::vector<FeatureId> ids) : ids_(std::move(ids)) {
  if (std::adjacent_find(ids_.begin(), ids_.end(), std::greater_equal<>()) ==
      ids_.end()) {
    return;
  }
  std::sort(ids_.begin(), ids_.end());
  ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
}

bool FeatureSet::contains(FeatureId id) const {
  return std::binary_search(ids_.begin(), ids_.end(), id);
}

FeatureSet set_union(const FeatureSet& a, const FeatureSet& b) {
  std::vector<FeatureId> out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(),
                 std::back_inserter(out));
  return FeatureSet(std::move(out));
}

FeatureSet set_intersection(const FeatureSet& a, const FeatureSet& b) {
  std::vector<FeatureId> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(out));
  return FeatureSet(std::move(out));
}

bool is_subset(const FeatureSet& sub, const FeatureSet& super) {
  return std::includes(super.begin(), super.end(), sub.begin(), sub.end());
}

SparseVec::SparseVec(std::initializer_list<Entry> entries)
    : SparseVec(from_sorted(std::vector<Entry>(entries))) {}

SparseVec SparseVec::from_sorted(std::vector<Entry> entries) {
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!std::isfinite(entries[i].value)) {
      throw std::invalid_argument("SparseVec: non-finite value at id " +
                                  std::to_string(entries[i].id));
    }
    if (i > 0 && entries[i - 1].id >= entries[i].id) {
      throw std::invalid_argument(
          "SparseVec: ids must be strictly increasing (id " +
          std::to_string(entries[i].id) + ")");
    }
  }
  std::erase_if(entries, [](const Entry& e) { return e.value == 0.0; });
  return SparseVec(std::move(entries), 0);
}

SparseVec SparseVec::from_unsorted(std::vector<Entry> entries) {
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Entry& a, const Entry& b) { return a.id < b.id; });
  std::vector<Entry> merged;
  merged.reserve(entries.size());
  for (const Entry& e : entries) {
    if (!std::isfinite(e.value)) {
      throw std::invalid_argument("SparseVec: non-finite value at id " +
                                  std::to_string(e.id));
    }
    if (!merged.empty() && merged.back().id == e.id) {
      merged.back().value += e.value;
    } else {
      merged.push_back(e);
    }
  }
  std::erase_if(merged, [](const Entry& e) { return e.value == 0.0; });
  return SparseVec(std::move(merged), 0);
}

double SparseVec::get(FeatureId id) const {
  auto it = std::lower_bound(
      entries_.begin(), entries_.end(), id,
      [](const Entry& e, FeatureId key) { return e.id < key; });
  return (it != entries_.end() && it->id == id) ? it->value : 0.0;
}

double SparseVec::squared_norm() const {
  double s = 0.0;
  for (const Entry& e : entries_) s += e.value * e.value;
  return s;
}

double SparseVec::norm() const { return std::sqrt(squared_norm()); }

bool SparseVec::all_finite() const {
  return std::all_of(entries_.begin(), entries_.end(),
                     [](const Entry& e) { return std::isfinite(e.value); });
}

FeatureSet SparseVec::support() const {
  std::vector<FeatureId> ids;
  ids.reserve(entries_.size());
  for (const Entry& e : entries_) ids.push_back(e.id);
  return FeatureSet(std::move(ids));
}

namespace {

// Position of each id of `x` in `y`, or false if some id is missing. Uses
// binary search from a moving cursor when `x` is much shorter than `y`.
bool find_all(std::span<const Entry> x, std::span<const Entry> y,
              std::vector<std::size_t>& pos) {
  pos.clear();
  if (x.size() > y.size()) return false;
  const bool gallop = x.size() * 16 < y.size();
  auto less = [](const Entry& e, FeatureId key) { return e.id < key; };
  auto cursor = y.begin();
  for (const Entry& e : x) {
    if (gallop) {
      cursor = std::lower_bound(cursor, y.end(), e.id, less);
    } else {
      while (cursor != y.end() && cursor->id < e.id) ++cursor;
    }
    if (cursor == y.end() || cursor->id != e.id) return false;
    pos.push_back(static_cast<std::size_t>(cursor - y.begin()));
    ++cursor;
  }
  return true;
}

}  // namespace

double dot(const SparseVec& a, const SparseVec& b) {
  const SparseVec& small = a.nnz() <= b.nnz() ? a : b;
  const SparseVec& large = a.nnz() <= b.nnz() ? b : a;
  double s = 0.0;
  if (small.nnz() * 16 < large.nnz()) {
    auto less = [](const Entry& e, FeatureId key) { return e.id < key; };
    auto cursor = large.begin();
    for (const Entry& e : small) {
      cursor = std::lower_bound(cursor, large.end(), e.id, less);
      if (cursor == large.end()) break;
      if (cursor->id == e.id) s += e.value * cursor->value;
    }
    return s;
  }
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (ia->id < ib->id) {
      ++ia;
    } else if (ib->id < ia->id) {
      ++ib;
    } else {
      s += ia->value * ib->value;
      ++ia;
      ++ib;
    }
  }
  return s;
}

namespace {

void merge_axpy(double alpha, std::span<const Entry> x,
                std::span<const Entry> y, std::vector<Entry>& out) {
  out.clear();
  out.reserve(x.size() + y.size());
  std::size_t i = 0;
  std::size_t j = 0;
  auto emit = [&out](FeatureId id, double v) {
    if (v != 0.0) out.push_back({id, v});
  };
  while (i < x.size() && j < y.size()) {
    if (x[i].id < y[j].id) {
      emit(x[i].id, alpha * x[i].value);
      ++i;
    } else if (y[j].id < x[i].id) {
      emit(y[j].id, y[j].value);
      ++j;
    } else {
      emit(x[i].id, alpha * x[i].value + y[j].value);
      ++i;
      ++j;
    }
  }
  for (; i < x.size(); ++i) emit(x[i].id, alpha * x[i].value);
  for (; j < y.size(); ++j) emit(y[j].id, y[j].value);
}

}  // namespace

SparseVec axpy(double alpha, const SparseVec& x, const SparseVec& y) {
  if (alpha == 0.0) return scale(1.0, y);
  std::vector<Entry> out;
  merge_axpy(alpha, x.entries_, y.entries_, out);
  return SparseVec(std::move(out), 0);
}

SparseVec scale(double alpha, const SparseVec& x) {
  std::vector<Entry> out;
  out.reserve(x.nnz());
  if (alpha != 0.0) {
    for (const Entry& e : x) {
      const double v = alpha * e.value;
      if (v != 0.0) out.push_back({e.id, v});
    }
  }
  return SparseVec(std::move(out), 0);
}

SparseVec restrict_to(const SparseVec& v, const FeatureSet& keep) {
  std::vector<Entry> out;
  auto k = keep.begin();
  for (const Entry& e : v) {
    while (k != keep.end() && *k < e.id) ++k;
    if (k == keep.end()) break;
    if (*k == e.id) out.push_back(e);
  }
  return SparseVec(std::move(out), 0);
}

void accumulate(SparseVec& acc, double alpha, const SparseVec& x) {
  if (alpha == 0.0 || x.empty()) return;
  thread_local std::vector<std::size_t> pos;
  if (find_all(x.entries_, acc.entries_, pos)) {
    bool zeroed = false;
    for (std::size_t i = 0; i < pos.size(); ++i) {
      double& v = acc.entries_[pos[i]].value;
      v = alpha * x.entries_[i].value + v;
      zeroed = zeroed || v == 0.0;
    }
    if (zeroed) {
      std::erase_if(acc.entries_, [](const Entry& e) { return e.value == 0.0; });
    }
    return;
  }
  thread_local std::vector<Entry> scratch;
  merge_axpy(alpha, x.entries_, acc.entries_, scratch);
  acc.entries_.swap(scratch);
}

namespace {

bool same_support(std::span<const SparseVec* const> rows) {
  const auto first = rows.front()->entries();
  for (const SparseVec* r : rows.subspan(1)) {
    const auto e = r->entries();
    if (e.size() != first.size()) return false;
    for (std::size_t j = 0; j < e.size(); ++j) {
      if (e[j].id != first[j].id) return false;
    }
  }
  return true;
}

}  // namespace

SparseVec linear_combination(std::span<const double> coef,
                             std::span<const SparseVec* const> rows) {
  if (coef.size() != rows.size()) {
    throw std::invalid_argument("linear_combination: size mismatch");
  }
  if (rows.empty()) return {};
  if (same_support(rows)) {
    // Dense row buffers reduced with the same pairing as the merge path.
    const auto first = rows.front()->entries();
    const std::size_t n = first.size();
    thread_local std::vector<std::vector<double>> buf;
    if (buf.size() < rows.size()) buf.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      buf[i].resize(n);
      const auto& e = rows[i]->entries_;
      double* dst = buf[i].data();
      for (std::size_t j = 0; j < n; ++j) dst[j] = coef[i] * e[j].value;
    }
    for (std::size_t stride = 1; stride < rows.size(); stride *= 2) {
      for (std::size_t i = 0; i + stride < rows.size(); i += 2 * stride) {
        double* dst = buf[i].data();
        const double* src = buf[i + stride].data();
        for (std::size_t j = 0; j < n; ++j) dst[j] = src[j] + dst[j];
      }
    }
    std::vector<Entry> out;
    out.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
      if (buf[0][j] != 0.0) out.push_back({first[j].id, buf[0][j]});
    }
    return SparseVec(std::move(out), 0);
  }
  std::vector<SparseVec> parts;
  parts.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) parts.push_back(scale(coef[i], *rows[i]));
  for (std::size_t stride = 1; stride < parts.size(); stride *= 2) {
    for (std::size_t i = 0; i + stride < parts.size(); i += 2 * stride) {
      accumulate(parts[i], 1.0, parts[i + stride]);
    }
  }
  return std::move(parts.front());
}

}  // namespace bear
