#include "bear/topk_heap.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace bear {

TopKHeap::TopKHeap(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("TopKHeap: capacity must be > 0");
  heap_.reserve(capacity);
  slot_.reserve(capacity);
}

bool TopKHeap::worse(const Entry& a, const Entry& b) {
  const double ma = std::fabs(a.value);
  const double mb = std::fabs(b.value);
  if (ma != mb) return ma < mb;
  return a.id > b.id;
}

void TopKHeap::place(std::size_t i, const Entry& e) {
  heap_[i] = e;
  slot_[e.id] = i;
}

void TopKHeap::sift_up(std::size_t i) {
  const Entry e = heap_[i];
  while (i > 0) {
    const std::size_t parent = (i - 1) / 2;
    if (!worse(e, heap_[parent])) break;
    place(i, heap_[parent]);
    i = parent;
  }
  place(i, e);
}

void TopKHeap::sift_down(std::size_t i) {
  const Entry e = heap_[i];
  const std::size_t n = heap_.size();
  while (true) {
    std::size_t child = 2 * i + 1;
    if (child >= n) break;
    if (child + 1 < n && worse(heap_[child + 1], heap_[child])) ++child;
    if (!worse(heap_[child], e)) break;
    place(i, heap_[child]);
    i = child;
  }
  place(i, e);
}

void TopKHeap::offer(FeatureId id, double weight) {
  if (!std::isfinite(weight)) {
    throw std::invalid_argument("TopKHeap::offer: non-finite weight");
  }
  const Entry e{id, weight};
  if (auto it = slot_.find(id); it != slot_.end()) {
    const std::size_t i = it->second;
    const Entry old = heap_[i];
    heap_[i] = e;
    if (worse(e, old)) {
      sift_up(i);
    } else {
      sift_down(i);
    }
    return;
  }
  if (heap_.size() < capacity_) {
    heap_.push_back(e);
    sift_up(heap_.size() - 1);
    return;
  }
  if (worse(heap_.front(), e)) {
    slot_.erase(heap_.front().id);
    heap_.front() = e;
    sift_down(0);
  }
}

FeatureSet TopKHeap::members() const {
  std::vector<FeatureId> ids;
  ids.reserve(heap_.size());
  for (const Entry& e : heap_) ids.push_back(e.id);
  return FeatureSet(std::move(ids));
}

std::vector<Entry> TopKHeap::snapshot() const {
  std::vector<Entry> out = heap_;
  std::sort(out.begin(), out.end(),
            [](const Entry& a, const Entry& b) { return worse(b, a); });
  return out;
}

void TopKHeap::write_csv(std::ostream& out) const {
  out << "feature,weight\n";
  char buf[64];
  for (const Entry& e : snapshot()) {
    std::snprintf(buf, sizeof(buf), "%.17g", e.value);
    out << e.id << ',' << buf << '\n';
  }
}

TopKHeap TopKHeap::read_csv(std::istream& in, std::size_t capacity) {
  TopKHeap heap(capacity);
  std::string line;
  if (!std::getline(in, line) || line != "feature,weight") {
    throw std::runtime_error("TopKHeap::read_csv: missing header");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw std::runtime_error("TopKHeap::read_csv: malformed row '" + line + "'");
    }
    FeatureId id = 0;
    const char* first = line.data();
    auto [p, ec] = std::from_chars(first, first + comma, id);
    if (ec != std::errc() || p != first + comma) {
      throw std::runtime_error("TopKHeap::read_csv: bad feature id '" + line + "'");
    }
    const double w = std::stod(line.substr(comma + 1));
    heap.offer(id, w);
  }
  return heap;
}

}  // namespace bear
