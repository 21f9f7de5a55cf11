#include "bear/loss.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <stdexcept>
#include <vector>

namespace bear {

namespace {

SparseVec weighted_sum(Minibatch batch, std::span<const double> coef) {
  std::vector<const SparseVec*> rows;
  rows.reserve(batch.size());
  for (const Example& ex : batch) rows.push_back(&ex.x);
  return linear_combination(coef, rows);
}

void require_nonempty(Minibatch batch) {
  if (batch.empty()) throw std::invalid_argument("empty minibatch");
}

// log(1 + e^z) without overflow.
double log1p_exp(double z) {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

}  // namespace

FeatureSet active_set(Minibatch batch) {
  if (batch.empty()) return {};
  const auto first = batch.front().x.entries();
  const bool shared = std::all_of(batch.begin() + 1, batch.end(), [&](const Example& ex) {
    const auto e = ex.x.entries();
    return e.size() == first.size() &&
           std::equal(e.begin(), e.end(), first.begin(),
                      [](const Entry& a, const Entry& b) { return a.id == b.id; });
  });
  if (shared) return batch.front().x.support();

  // Pairwise merge of the already sorted supports.
  std::vector<std::vector<FeatureId>> parts;
  parts.reserve(batch.size());
  for (const Example& ex : batch) {
    auto& ids = parts.emplace_back();
    ids.reserve(ex.x.nnz());
    for (const Entry& e : ex.x) ids.push_back(e.id);
  }
  if (parts.empty()) return {};
  std::vector<FeatureId> merged;
  for (std::size_t stride = 1; stride < parts.size(); stride *= 2) {
    for (std::size_t i = 0; i + stride < parts.size(); i += 2 * stride) {
      merged.clear();
      std::set_union(parts[i].begin(), parts[i].end(), parts[i + stride].begin(),
                     parts[i + stride].end(), std::back_inserter(merged));
      parts[i].swap(merged);
    }
  }
  return FeatureSet(std::move(parts.front()));
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double loss_mse(const SparseVec& beta, Minibatch batch) {
  require_nonempty(batch);
  double s = 0.0;
  for (const Example& ex : batch) {
    const double r = dot(ex.x, beta) - ex.y;
    s += r * r;
  }
  return 0.5 * s / static_cast<double>(batch.size());
}

SparseVec grad_mse(const SparseVec& beta, Minibatch batch) {
  require_nonempty(batch);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  std::vector<double> coef(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    coef[i] = (dot(batch[i].x, beta) - batch[i].y) * inv_b;
  }
  return weighted_sum(batch, coef);
}

double loss_logistic(const SparseVec& beta, Minibatch batch) {
  require_nonempty(batch);
  double s = 0.0;
  for (const Example& ex : batch) {
    const double z = dot(ex.x, beta);
    s += log1p_exp(z) - ex.y * z;
  }
  return s / static_cast<double>(batch.size());
}

SparseVec grad_logistic(const SparseVec& beta, Minibatch batch) {
  require_nonempty(batch);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  std::vector<double> coef(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    coef[i] = (sigmoid(dot(batch[i].x, beta)) - batch[i].y) * inv_b;
  }
  return weighted_sum(batch, coef);
}

std::vector<double> softmax(std::span<const double> scores) {
  std::vector<double> p(scores.begin(), scores.end());
  if (p.empty()) return p;
  const double mx = *std::max_element(p.begin(), p.end());
  double z = 0.0;
  for (double& v : p) {
    v = std::exp(v - mx);
    z += v;
  }
  for (double& v : p) v /= z;
  return p;
}

namespace {

std::size_t class_of(const Example& ex, std::size_t num_classes) {
  const double y = ex.y;
  if (!(y >= 0) || y != std::floor(y) || y >= static_cast<double>(num_classes)) {
    throw std::invalid_argument("multi-class label out of range");
  }
  return static_cast<std::size_t>(y);
}

}  // namespace

double loss_softmax(std::span<const SparseVec> betas, Minibatch batch) {
  require_nonempty(batch);
  const std::size_t C = betas.size();
  std::vector<double> scores(C);
  double s = 0.0;
  for (const Example& ex : batch) {
    for (std::size_t c = 0; c < C; ++c) scores[c] = dot(ex.x, betas[c]);
    const double mx = *std::max_element(scores.begin(), scores.end());
    double z = 0.0;
    for (double v : scores) z += std::exp(v - mx);
    s += mx + std::log(z) - scores[class_of(ex, C)];
  }
  return s / static_cast<double>(batch.size());
}

std::vector<SparseVec> grad_softmax_all(std::span<const SparseVec> betas,
                                        Minibatch batch) {
  require_nonempty(batch);
  const std::size_t C = betas.size();
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  std::vector<std::vector<double>> coef(C, std::vector<double>(batch.size()));
  std::vector<double> scores(C);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    for (std::size_t c = 0; c < C; ++c) scores[c] = dot(batch[i].x, betas[c]);
    const auto p = softmax(scores);
    const std::size_t y = class_of(batch[i], C);
    for (std::size_t c = 0; c < C; ++c) {
      coef[c][i] = (p[c] - (c == y ? 1.0 : 0.0)) * inv_b;
    }
  }
  std::vector<SparseVec> out;
  out.reserve(C);
  for (std::size_t c = 0; c < C; ++c) out.push_back(weighted_sum(batch, coef[c]));
  return out;
}

SparseVec grad_softmax(std::span<const SparseVec> betas, Minibatch batch,
                       std::size_t cls) {
  if (cls >= betas.size()) throw std::out_of_range("grad_softmax: class index");
  return std::move(grad_softmax_all(betas, batch)[cls]);
}

}  // namespace bear
