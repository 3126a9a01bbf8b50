#pragma once

// Sequential place learning network.
//
//   spl:      x_t -> env LSTM([d_t ; w_p p_t]) -> h_env_t
//             SPL LSTM([d_t ; h_env_t]) -> h_t ... -> linear(h_tw) -> logits
//   baseline: env LSTM([d_t ; w_p p_t]) -> linear(h_tw) -> logits
//
// Every window starts from zero states. The class of a window is its start
// frame, so num_places = total_frames - tw.

#include "seqplace/core.hpp"
#include "seqplace/ingest.hpp"
#include "seqplace/nn/adam.hpp"
#include "seqplace/nn/linear.hpp"
#include "seqplace/nn/lstm.hpp"
#include "seqplace/nn/loss.hpp"

#include <optional>
#include <span>
#include <vector>

namespace seqplace::spl {

template <class T>
struct SplParams {
  nn::LstmParams<T> env;
  std::optional<nn::LstmParams<T>> head;  // absent for the baseline network
  nn::LinearParams<T> output;

  /// Fixed tensor order: env (w_input, w_hidden, bias), head (same), output (weight, bias).
  template <class F>
  void for_each_tensor(F&& f) {
    env.for_each_tensor(f);
    if (head) head->for_each_tensor(f);
    output.for_each_tensor(f);
  }
  template <class F>
  void for_each_tensor(F&& f) const {
    env.for_each_tensor(f);
    if (head) head->for_each_tensor(f);
    output.for_each_tensor(f);
  }

  nn::TensorViews<T> views() {
    nn::TensorViews<T> v;
    for_each_tensor([&](auto& t) { v.emplace_back(t.data(), static_cast<std::size_t>(t.size())); });
    return v;
  }
  nn::TensorViews<const T> views() const {
    nn::TensorViews<const T> v;
    for_each_tensor([&](const auto& t) { v.emplace_back(t.data(), static_cast<std::size_t>(t.size())); });
    return v;
  }

  template <class U>
  SplParams<U> cast() const {
    SplParams<U> out{env.template cast<U>(), std::nullopt, output.template cast<U>()};
    if (head) out.head = head->template cast<U>();
    return out;
  }

  SplParams zeros_like() const {
    SplParams z{nn::LstmParams<T>::zeros(env.input_dim(), env.hidden_size()), std::nullopt,
                nn::LinearParams<T>::zeros(output.in_dim(), output.out_dim())};
    if (head) z.head = nn::LstmParams<T>::zeros(head->input_dim(), head->hidden_size());
    return z;
  }

  bool operator==(const SplParams& o) const {
    auto a = views();
    auto b = o.views();
    if (a.size() != b.size()) return false;
    for (std::size_t k = 0; k < a.size(); ++k)
      if (a[k].size() != b[k].size() || !std::equal(a[k].begin(), a[k].end(), b[k].begin())) return false;
    return true;
  }
};

template <class T>
struct SplModel {
  ModelConfig config;
  SplParams<T> params;
  ingest::PoseStats pose_stats;  // captured from the training traversal

  template <class U>
  SplModel<U> cast() const {
    return {config, params.template cast<U>(), pose_stats};
  }

  bool operator==(const SplModel& o) const {
    return config == o.config && params == o.params && pose_stats.mean == o.pose_stats.mean &&
           pose_stats.std == o.pose_stats.std;
  }
};

/// Parameters drawn from seeded_rng(seed) in the order env, head, output.
template <class T = float>
SplModel<T> build_model(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng = seeded_rng(seed);
  const Eigen::Index n = cfg.descriptor_dim;
  const Eigen::Index h = cfg.hidden_size;
  SplModel<T> m;
  m.config = cfg;
  m.params.env = nn::LstmParams<T>::init(n + 2, h, rng);
  if (cfg.variant == Variant::kSpl) m.params.head = nn::LstmParams<T>::init(n + h, h, rng);
  m.params.output = nn::LinearParams<T>::init(h, cfg.num_places, rng);
  return m;
}

/// Column-batched windows: entry t holds frame t of every window.
template <class T>
struct WindowBatch {
  std::vector<Matrix<T>> env_inputs;   // (n + 2) x B: [d_t ; w_p * p_t]
  std::vector<Matrix<T>> descriptors;  // n x B
  Eigen::Index size() const { return env_inputs.empty() ? 0 : env_inputs.front().cols(); }
  std::size_t steps() const { return env_inputs.size(); }
};

/// Gathers windows starting at `starts`. Poses must already be standardized.
template <class T, class S = float>
WindowBatch<T> make_batch(const ModelConfig& cfg, const RowMatrix<S>& desc, const RowMatrix<double>& poses,
                          std::span<const int> starts) {
  const auto n = cfg.descriptor_dim;
  require(desc.cols() == n, "descriptor dim " + std::to_string(desc.cols()) + " does not match model dim " +
                                std::to_string(n));
  require(poses.rows() == desc.rows() && poses.cols() == 2, "pose rows must match descriptor rows");
  const auto batch = static_cast<Eigen::Index>(starts.size());
  WindowBatch<T> b;
  const T weight = static_cast<T>(cfg.pose_weight);
  for (int t = 0; t < cfg.tw; ++t) {
    Matrix<T> x(n + 2, batch);
    for (Eigen::Index k = 0; k < batch; ++k) {
      const auto frame = starts[static_cast<std::size_t>(k)] + t;
      require(frame >= 0 && frame < desc.rows(), "window exceeds sequence length");
      x.col(k).head(n) = desc.row(frame).transpose().template cast<T>();
      x(n, k) = weight * static_cast<T>(poses(frame, 0));
      x(n + 1, k) = weight * static_cast<T>(poses(frame, 1));
    }
    b.descriptors.push_back(x.topRows(n));
    b.env_inputs.push_back(std::move(x));
  }
  return b;
}

template <class T>
struct ForwardTrace {
  std::vector<nn::LstmCache<T>> env;
  std::vector<nn::LstmCache<T>> head;
  Matrix<T> final_hidden;  // H x B feeding the output layer
  Matrix<T> logits;        // N_out x B
};

template <class T>
ForwardTrace<T> forward_trace(const SplModel<T>& m, const WindowBatch<T>& batch) {
  require(static_cast<int>(batch.steps()) == m.config.tw, "window length " + std::to_string(batch.steps()) +
                                                              " does not match model tw " +
                                                              std::to_string(m.config.tw));
  const auto h = m.config.hidden_size;
  const auto bsz = batch.size();
  ForwardTrace<T> tr;
  Matrix<T> h_env = Matrix<T>::Zero(h, bsz), c_env = Matrix<T>::Zero(h, bsz);
  Matrix<T> h_head = Matrix<T>::Zero(h, bsz), c_head = Matrix<T>::Zero(h, bsz);
  const auto& p = m.params;
  for (std::size_t t = 0; t < batch.steps(); ++t) {
    auto env_step = nn::lstm_step(batch.env_inputs[t], h_env, c_env, p.env);
    h_env = std::move(env_step.h);
    c_env = std::move(env_step.c);
    tr.env.push_back(std::move(env_step.cache));
    if (p.head) {
      Matrix<T> x(batch.descriptors[t].rows() + h, bsz);
      x << batch.descriptors[t], h_env;
      auto head_step = nn::lstm_step(x, h_head, c_head, *p.head);
      h_head = std::move(head_step.h);
      c_head = std::move(head_step.c);
      tr.head.push_back(std::move(head_step.cache));
    }
  }
  tr.final_hidden = p.head ? h_head : h_env;
  tr.logits = nn::linear_forward(tr.final_hidden, p.output);
  return tr;
}

/// Logits only, without the per-step caches backward needs. Bitwise equal to
/// forward_trace(m, batch).logits.
template <class T>
Matrix<T> forward_logits(const SplModel<T>& m, const WindowBatch<T>& batch) {
  require(static_cast<int>(batch.steps()) == m.config.tw, "window length " + std::to_string(batch.steps()) +
                                                              " does not match model tw " +
                                                              std::to_string(m.config.tw));
  const auto h = m.config.hidden_size;
  const auto bsz = batch.size();
  Matrix<T> h_env = Matrix<T>::Zero(h, bsz), c_env = Matrix<T>::Zero(h, bsz);
  Matrix<T> h_head = Matrix<T>::Zero(h, bsz), c_head = Matrix<T>::Zero(h, bsz);
  const auto& p = m.params;
  Matrix<T> x;
  for (std::size_t t = 0; t < batch.steps(); ++t) {
    nn::lstm_infer_step(batch.env_inputs[t], h_env, c_env, p.env);
    if (p.head) {
      x.resize(batch.descriptors[t].rows() + h, bsz);
      x << batch.descriptors[t], h_env;
      nn::lstm_infer_step(x, h_head, c_head, *p.head);
    }
  }
  return nn::linear_forward(p.head ? h_head : h_env, p.output);
}

/// Gradients of sum_b (grad_logits[:, b] . logits[:, b]) w.r.t. every parameter.
template <class T>
SplParams<T> backward(const SplModel<T>& m, const ForwardTrace<T>& tr, const Matrix<T>& grad_logits) {
  const auto& p = m.params;
  const auto steps = tr.env.size();
  const auto h = m.config.hidden_size;
  auto out_back = nn::linear_backward(grad_logits, tr.final_hidden, p.output);

  SplParams<T> g;
  g.output = std::move(out_back.grads);
  std::vector<Matrix<T>> env_grad_h(steps);
  if (p.head) {
    std::vector<Matrix<T>> head_grad_h(steps);
    head_grad_h.back() = std::move(out_back.grad_x);
    auto head_back = nn::lstm_backward(head_grad_h, tr.head, *p.head);
    for (std::size_t t = 0; t < steps; ++t) env_grad_h[t] = head_back.grad_inputs[t].bottomRows(h);
    g.head = std::move(head_back.grads);
  } else {
    env_grad_h.back() = std::move(out_back.grad_x);
  }
  g.env = nn::lstm_backward(env_grad_h, tr.env, p.env).grads;
  return g;
}

template <class T>
Vector<T> forward(const SplModel<T>& m, const RowMatrix<T>& desc_window, const RowMatrix<T>& pose_window) {
  const auto tw = m.config.tw;
  if (desc_window.rows() != tw || desc_window.cols() != m.config.descriptor_dim || pose_window.rows() != tw ||
      pose_window.cols() != 2)
    throw ValidationError("forward: expected windows " + shape_str(tw, m.config.descriptor_dim) + " and " +
                          shape_str(tw, 2) + ", got " + shape_str(desc_window.rows(), desc_window.cols()) + " and " +
                          shape_str(pose_window.rows(), pose_window.cols()));
  const int starts[] = {0};
  const auto batch = make_batch<T, T>(m.config, desc_window, pose_window.template cast<double>(), starts);
  return forward_logits(m, batch).col(0);
}

template <class T>
struct LossAndGrad {
  double loss = 0.0;  // mean over the batch
  Vector<T> per_sample_loss;
  std::vector<int> predicted;
  SplParams<T> grads;  // gradient of the mean loss
};

template <class T>
LossAndGrad<T> loss_and_gradients(const SplModel<T>& m, const WindowBatch<T>& batch, std::span<const int> labels) {
  auto tr = forward_trace(m, batch);
  auto ce = nn::softmax_cross_entropy<T>(tr.logits, labels);
  LossAndGrad<T> r;
  const auto bsz = static_cast<double>(batch.size());
  r.loss = ce.losses.template cast<double>().sum() / bsz;
  r.predicted.resize(labels.size());
  for (Eigen::Index b = 0; b < tr.logits.cols(); ++b) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < tr.logits.rows(); ++k)
      if (tr.logits(k, b) > tr.logits(best, b)) best = k;
    r.predicted[static_cast<std::size_t>(b)] = static_cast<int>(best);
  }
  r.per_sample_loss = std::move(ce.losses);
  Matrix<T> grad = ce.grad / static_cast<T>(bsz);
  r.grads = backward(m, tr, grad);
  return r;
}

}  // namespace seqplace::spl
