#pragma once

#include "seqplace/core.hpp"

#include <span>
#include <vector>

namespace seqplace::nn {

template <class T>
using TensorViews = std::vector<std::span<T>>;

template <class T>
struct AdamState {
  std::vector<std::vector<T>> first_moment;
  std::vector<std::vector<T>> second_moment;
  std::uint64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  /// Zeroed accumulators shaped like `params`.
  template <class Views>
  static AdamState zeros_like(const Views& params) {
    AdamState s;
    for (const auto& p : params) {
      s.first_moment.emplace_back(p.size(), T(0));
      s.second_moment.emplace_back(p.size(), T(0));
    }
    return s;
  }
};

/// Bias-corrected Adam update, in place. No weight decay.
template <class T>
void adam_step(const TensorViews<T>& params, const TensorViews<const T>& grads, AdamState<T>& state, double lr) {
  require(params.size() == grads.size() && params.size() == state.first_moment.size(),
          "adam_step: tensor count mismatch");
  for (std::size_t k = 0; k < params.size(); ++k) {
    require(params[k].size() == grads[k].size() && params[k].size() == state.first_moment[k].size(),
            "adam_step: tensor " + std::to_string(k) + " size mismatch");
    for (const T g : grads[k])
      if (!std::isfinite(g)) throw NumericalError("adam_step: non-finite gradient in tensor " + std::to_string(k));
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const T b1 = static_cast<T>(state.beta1);
  const T b2 = static_cast<T>(state.beta2);
  const T correction1 = static_cast<T>(1.0 - std::pow(state.beta1, t));
  const T correction2 = static_cast<T>(1.0 - std::pow(state.beta2, t));
  const T rate = static_cast<T>(lr);
  const T eps = static_cast<T>(state.epsilon);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    const auto p = params[k];
    const auto g = grads[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = b1 * m[i] + (T(1) - b1) * g[i];
      v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
      const T m_hat = m[i] / correction1;
      const T v_hat = v[i] / correction2;
      p[i] -= rate * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

}  // namespace seqplace::nn
