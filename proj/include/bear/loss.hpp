#pragma once

#include <span>
#include <vector>

#include "bear/svec.hpp"

namespace bear {

/// One labelled data point. Labels are real for regression, 0/1 for binary
/// and a zero-based class index for multi-class tasks.
struct Example {
  SparseVec x;
  double y = 0.0;
};

using Minibatch = std::span<const Example>;

/// Union of the example supports.
FeatureSet active_set(Minibatch batch);

double sigmoid(double z);

// Losses are means over the batch; gradients are their exact derivatives.

/// (1/2b) sum (x.beta - y)^2
double loss_mse(const SparseVec& beta, Minibatch batch);
SparseVec grad_mse(const SparseVec& beta, Minibatch batch);

/// (1/b) sum log(1 + e^s) - y s, with s = x.beta
double loss_logistic(const SparseVec& beta, Minibatch batch);
SparseVec grad_logistic(const SparseVec& beta, Minibatch batch);

/// Multinomial cross-entropy with one weight vector per class.
double loss_softmax(std::span<const SparseVec> betas, Minibatch batch);
SparseVec grad_softmax(std::span<const SparseVec> betas, Minibatch batch,
                       std::size_t cls);
/// Gradients for every class in one pass.
std::vector<SparseVec> grad_softmax_all(std::span<const SparseVec> betas,
                                        Minibatch batch);

/// Softmax of `scores` computed with the max-shift.
std::vector<double> softmax(std::span<const double> scores);

}  // namespace bear
