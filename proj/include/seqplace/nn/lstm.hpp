#pragma once

// Vanilla single-cell LSTM with hand-derived backpropagation through time.
// Inputs are column-batched: x is D x B, states are H x B.
// Gate rows are stacked as [input i; forget f; candidate g; output o].

#include "seqplace/core.hpp"

#include <functional>
#include <span>
#include <vector>

namespace seqplace::nn {

/// Pre-activations are clamped to this magnitude before the nonlinearity.
inline constexpr double kGateClamp = 60.0;

template <class T>
struct LstmParams {
  Matrix<T> w_input;   // 4H x D
  Matrix<T> w_hidden;  // 4H x H
  Vector<T> bias;      // 4H

  Eigen::Index input_dim() const { return w_input.cols(); }
  Eigen::Index hidden_size() const { return w_hidden.cols(); }

  static LstmParams zeros(Eigen::Index input_dim, Eigen::Index hidden) {
    return {Matrix<T>::Zero(4 * hidden, input_dim), Matrix<T>::Zero(4 * hidden, hidden), Vector<T>::Zero(4 * hidden)};
  }

  /// uniform(-1/sqrt(H), 1/sqrt(H)) weights, forget bias 1, other biases 0.
  static LstmParams init(Eigen::Index input_dim, Eigen::Index hidden, Rng& rng) {
    auto p = zeros(input_dim, hidden);
    const double k = 1.0 / std::sqrt(static_cast<double>(hidden));
    std::uniform_real_distribution<double> u(-k, k);
    // column-major fill order is part of the determinism contract
    for (Eigen::Index i = 0; i < p.w_input.size(); ++i) p.w_input.data()[i] = static_cast<T>(u(rng));
    for (Eigen::Index i = 0; i < p.w_hidden.size(); ++i) p.w_hidden.data()[i] = static_cast<T>(u(rng));
    p.bias.segment(hidden, hidden).setOnes();
    return p;
  }

  template <class U>
  LstmParams<U> cast() const {
    return {w_input.template cast<U>(), w_hidden.template cast<U>(), bias.template cast<U>()};
  }

  /// Visits tensors in the fixed order w_input, w_hidden, bias.
  template <class F>
  void for_each_tensor(F&& f) {
    f(w_input);
    f(w_hidden);
    f(bias);
  }
  template <class F>
  void for_each_tensor(F&& f) const {
    f(w_input);
    f(w_hidden);
    f(bias);
  }
};

template <class T>
struct LstmCache {
  Matrix<T> x, h_prev, c_prev;
  Matrix<T> gates;  // activated i, f, g, o stacked (4H x B)
  Matrix<T> mask;   // 1 where the pre-activation was inside the clamp
  Matrix<T> c, tanh_c;
};

template <class T>
struct LstmStep {
  Matrix<T> h, c;
  LstmCache<T> cache;
};

namespace detail {

template <class T>
T sigmoid(T z) {
  return T(1) / (T(1) + std::exp(-z));
}

}  // namespace detail

namespace detail {

template <class T>
void check_step_shapes(const Matrix<T>& x, const Matrix<T>& h_prev, const Matrix<T>& c_prev, const LstmParams<T>& p) {
  const auto hidden = p.hidden_size();
  const auto batch = x.cols();
  if (x.rows() != p.input_dim() || h_prev.rows() != hidden || c_prev.rows() != hidden ||
      h_prev.cols() != batch || c_prev.cols() != batch)
    throw ValidationError("lstm_step: x " + shape_str(x.rows(), x.cols()) + ", h " +
                          shape_str(h_prev.rows(), h_prev.cols()) + ", c " + shape_str(c_prev.rows(), c_prev.cols()) +
                          " incompatible with input dim " + std::to_string(p.input_dim()) + ", hidden " +
                          std::to_string(hidden));
}

/// Replaces pre-activations z (4H x B) by clamped, activated gates. `mask`
/// (if given) is set to 1 where z was inside the clamp.
template <class T>
void activate_gates(Matrix<T>& z, Eigen::Index hidden, Matrix<T>* mask) {
  const T lim = static_cast<T>(kGateClamp);
  if (mask) mask->resize(z.rows(), z.cols());
  for (Eigen::Index b = 0; b < z.cols(); ++b) {
    for (Eigen::Index r = 0; r < 4 * hidden; ++r) {
      const T raw = z(r, b);
      const T zc = std::clamp(raw, -lim, lim);
      if (mask) (*mask)(r, b) = raw >= -lim && raw <= lim ? T(1) : T(0);
      const bool candidate = r >= 2 * hidden && r < 3 * hidden;
      z(r, b) = candidate ? std::tanh(zc) : sigmoid(zc);
    }
  }
}

}  // namespace detail

template <class T>
LstmStep<T> lstm_step(const Matrix<T>& x, const Matrix<T>& h_prev, const Matrix<T>& c_prev,
                      const LstmParams<T>& p) {
  detail::check_step_shapes(x, h_prev, c_prev, p);
  const auto hidden = p.hidden_size();
  Matrix<T> z = p.w_input * x + p.w_hidden * h_prev;
  z.colwise() += p.bias;

  LstmStep<T> out;
  auto& cache = out.cache;
  cache.x = x;
  cache.h_prev = h_prev;
  cache.c_prev = c_prev;
  detail::activate_gates(z, hidden, &cache.mask);
  cache.gates = std::move(z);
  const auto i = cache.gates.topRows(hidden);
  const auto f = cache.gates.middleRows(hidden, hidden);
  const auto g = cache.gates.middleRows(2 * hidden, hidden);
  const auto o = cache.gates.bottomRows(hidden);
  cache.c = f.cwiseProduct(c_prev) + i.cwiseProduct(g);
  cache.tanh_c = cache.c.array().tanh().matrix();
  out.c = cache.c;
  out.h = o.cwiseProduct(cache.tanh_c);
  return out;
}

/// Same arithmetic as lstm_step, updating h and c in place and keeping no
/// cache. Bitwise equal to lstm_step's h and c.
template <class T>
void lstm_infer_step(const Matrix<T>& x, Matrix<T>& h, Matrix<T>& c, const LstmParams<T>& p) {
  detail::check_step_shapes(x, h, c, p);
  const auto hidden = p.hidden_size();
  Matrix<T> gates = p.w_input * x + p.w_hidden * h;
  gates.colwise() += p.bias;
  detail::activate_gates(gates, hidden, static_cast<Matrix<T>*>(nullptr));
  const auto i = gates.topRows(hidden);
  const auto f = gates.middleRows(hidden, hidden);
  const auto g = gates.middleRows(2 * hidden, hidden);
  const auto o = gates.bottomRows(hidden);
  Matrix<T> c_next = f.cwiseProduct(c) + i.cwiseProduct(g);
  const Matrix<T> tanh_c = c_next.array().tanh().matrix();
  c = std::move(c_next);
  h = o.cwiseProduct(tanh_c);
}

template <class T>
struct LstmBackward {
  LstmParams<T> grads;
  std::vector<Matrix<T>> grad_inputs;  // one D x B per step
  Matrix<T> grad_h0, grad_c0;
};

/// Reverse pass over a window. grad_h_seq[t] is dL/dh_t from outside the
/// recurrence; an empty matrix stands for zero.
template <class T>
LstmBackward<T> lstm_backward(const std::vector<Matrix<T>>& grad_h_seq, const std::vector<LstmCache<T>>& caches,
                              const LstmParams<T>& p) {
  if (caches.empty()) throw ValidationError("lstm_backward: no forward caches");
  if (grad_h_seq.size() != caches.size())
    throw ValidationError("lstm_backward: " + std::to_string(grad_h_seq.size()) + " gradients for " +
                          std::to_string(caches.size()) + " cached steps");
  const auto hidden = p.hidden_size();
  const auto batch = caches.front().x.cols();

  LstmBackward<T> out;
  out.grads = LstmParams<T>::zeros(p.input_dim(), hidden);
  out.grad_inputs.resize(caches.size());
  Matrix<T> dh_next = Matrix<T>::Zero(hidden, batch);
  Matrix<T> dc_next = Matrix<T>::Zero(hidden, batch);
  Matrix<T> dz(4 * hidden, batch);

  for (std::size_t step = caches.size(); step-- > 0;) {
    const auto& k = caches[step];
    Matrix<T> dh = dh_next;
    if (grad_h_seq[step].size() != 0) {
      if (grad_h_seq[step].rows() != hidden || grad_h_seq[step].cols() != batch)
        throw ValidationError("lstm_backward: gradient shape mismatch at step " + std::to_string(step));
      dh += grad_h_seq[step];
    }
    const auto i = k.gates.topRows(hidden).array();
    const auto f = k.gates.middleRows(hidden, hidden).array();
    const auto g = k.gates.middleRows(2 * hidden, hidden).array();
    const auto o = k.gates.bottomRows(hidden).array();
    const auto tc = k.tanh_c.array();

    const Matrix<T> dc = (dc_next.array() + dh.array() * o * (T(1) - tc * tc)).matrix();
    dz.topRows(hidden) = (dc.array() * g * i * (T(1) - i)).matrix();
    dz.middleRows(hidden, hidden) = (dc.array() * k.c_prev.array() * f * (T(1) - f)).matrix();
    dz.middleRows(2 * hidden, hidden) = (dc.array() * i * (T(1) - g * g)).matrix();
    dz.bottomRows(hidden) = (dh.array() * tc * o * (T(1) - o)).matrix();
    dz.array() *= k.mask.array();

    out.grads.w_input.noalias() += dz * k.x.transpose();
    out.grads.w_hidden.noalias() += dz * k.h_prev.transpose();
    out.grads.bias += dz.rowwise().sum();
    out.grad_inputs[step] = p.w_input.transpose() * dz;
    dh_next = p.w_hidden.transpose() * dz;
    dc_next = (dc.array() * f).matrix();
  }
  out.grad_h0 = std::move(dh_next);
  out.grad_c0 = std::move(dc_next);
  return out;
}

}  // namespace seqplace::nn
