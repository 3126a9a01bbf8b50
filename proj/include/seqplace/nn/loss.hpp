#pragma once

#include "seqplace/core.hpp"

#include <span>

namespace seqplace::nn {

/// Column-wise softmax with max subtraction.
template <class T>
Matrix<T> softmax(const Matrix<T>& logits) {
  Matrix<T> p(logits.rows(), logits.cols());
  for (Eigen::Index b = 0; b < logits.cols(); ++b) {
    const T m = logits.col(b).maxCoeff();
    p.col(b) = (logits.col(b).array() - m).exp().matrix();
    p.col(b) /= p.col(b).sum();
  }
  return p;
}

template <class T>
struct CrossEntropy {
  Vector<T> losses;   // one per column
  Matrix<T> grad;     // softmax - one_hot, per column, unscaled
};

template <class T>
CrossEntropy<T> softmax_cross_entropy(const Matrix<T>& logits, std::span<const int> targets) {
  require(static_cast<Eigen::Index>(targets.size()) == logits.cols(), "softmax_cross_entropy: target count mismatch");
  CrossEntropy<T> out;
  out.losses.resize(logits.cols());
  out.grad.resize(logits.rows(), logits.cols());
  for (Eigen::Index b = 0; b < logits.cols(); ++b) {
    const int t = targets[static_cast<std::size_t>(b)];
    if (t < 0 || t >= logits.rows())
      throw ValidationError("softmax_cross_entropy: target " + std::to_string(t) + " outside [0, " +
                            std::to_string(logits.rows()) + ")");
    const T m = logits.col(b).maxCoeff();
    const auto shifted = (logits.col(b).array() - m).eval();
    const auto e = shifted.exp().eval();
    const T sum = e.sum();
    out.losses[b] = std::log(sum) - shifted[t];
    out.grad.col(b) = (e / sum).matrix();
    out.grad(t, b) -= T(1);
  }
  return out;
}

/// Single-sample convenience form.
template <class T>
std::pair<T, Vector<T>> softmax_cross_entropy(const Vector<T>& logits, int target) {
  const int targets[] = {target};
  const Matrix<T> as_matrix = logits;
  auto ce = softmax_cross_entropy<T>(as_matrix, targets);
  return {ce.losses[0], ce.grad.col(0)};
}

}  // namespace seqplace::nn
