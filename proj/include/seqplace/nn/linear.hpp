#pragma once

#include "seqplace/core.hpp"

namespace seqplace::nn {

template <class T>
struct LinearParams {
  Matrix<T> weight;  // N_out x H_in
  Vector<T> bias;    // N_out

  Eigen::Index in_dim() const { return weight.cols(); }
  Eigen::Index out_dim() const { return weight.rows(); }

  static LinearParams zeros(Eigen::Index in, Eigen::Index out) {
    return {Matrix<T>::Zero(out, in), Vector<T>::Zero(out)};
  }

  /// uniform(-1/sqrt(H_in), 1/sqrt(H_in)) for weights and bias.
  static LinearParams init(Eigen::Index in, Eigen::Index out, Rng& rng) {
    auto p = zeros(in, out);
    const double k = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> u(-k, k);
    for (Eigen::Index i = 0; i < p.weight.size(); ++i) p.weight.data()[i] = static_cast<T>(u(rng));
    for (Eigen::Index i = 0; i < p.bias.size(); ++i) p.bias[i] = static_cast<T>(u(rng));
    return p;
  }

  template <class U>
  LinearParams<U> cast() const {
    return {weight.template cast<U>(), bias.template cast<U>()};
  }

  template <class F>
  void for_each_tensor(F&& f) {
    f(weight);
    f(bias);
  }
  template <class F>
  void for_each_tensor(F&& f) const {
    f(weight);
    f(bias);
  }
};

template <class T>
Matrix<T> linear_forward(const Matrix<T>& x, const LinearParams<T>& p) {
  if (x.rows() != p.in_dim())
    throw ValidationError("linear_forward: input " + shape_str(x.rows(), x.cols()) + " vs weight " +
                          shape_str(p.weight.rows(), p.weight.cols()));
  Matrix<T> y = p.weight * x;
  y.colwise() += p.bias;
  return y;
}

template <class T>
struct LinearBackward {
  LinearParams<T> grads;
  Matrix<T> grad_x;
};

template <class T>
LinearBackward<T> linear_backward(const Matrix<T>& grad_out, const Matrix<T>& x, const LinearParams<T>& p) {
  if (grad_out.rows() != p.out_dim() || grad_out.cols() != x.cols() || x.rows() != p.in_dim())
    throw ValidationError("linear_backward: shape mismatch");
  LinearBackward<T> out;
  out.grads.weight = grad_out * x.transpose();
  out.grads.bias = grad_out.rowwise().sum();
  out.grad_x = p.weight.transpose() * grad_out;
  return out;
}

}  // namespace seqplace::nn
