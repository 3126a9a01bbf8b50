#pragma once

#include "seqplace/nn/plateau.hpp"
#include "seqplace/spl/model.hpp"

#include <algorithm>
#include <numeric>

namespace seqplace::spl {

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;      // mean cross-entropy over the epoch's samples
  double accuracy = 0.0;  // top-1 on the samples as they were visited
  double lr = 0.0;        // learning rate used during the epoch
};

using TrainHistory = std::vector<EpochRecord>;

struct TrainResult {
  SplModel<float> model;
  TrainHistory history;
};

/// Trains on every window of one traversal. `poses` are raw; their
/// statistics are stored on the model and used to standardize them.
inline TrainResult train(SplModel<float> model, const DescriptorSequence& desc, const PoseSequence& poses,
                         const TrainConfig& cfg) {
  cfg.validate();
  const auto& mc = model.config;
  require(desc.frames() == mc.total_frames, "training traversal has " + std::to_string(desc.frames()) +
                                                " frames, model expects " + std::to_string(mc.total_frames));
  require(desc.dim() == mc.descriptor_dim, "descriptor dim mismatch: " + std::to_string(desc.dim()) + " vs " +
                                               std::to_string(mc.descriptor_dim));
  require(poses.frames() == desc.frames(), "pose and descriptor frame counts differ");
  if (cfg.epochs == 0) return {std::move(model), {}};

  const auto windows = ingest::make_windows(static_cast<int>(desc.frames()), mc.tw);
  auto standardized = ingest::standardize_poses(poses);
  model.pose_stats = standardized.stats;
  const auto& pose_data = standardized.poses.data();

  const int count = windows.count();
  const int batch_size = std::min(cfg.batch_size.value_or(count), count);
  std::vector<int> order(static_cast<std::size_t>(count));
  std::iota(order.begin(), order.end(), 0);
  Rng rng = seeded_rng(cfg.seed);

  auto views = model.params.views();
  auto adam = nn::AdamState<float>::zeros_like(views);
  auto sched = nn::SchedulerState::start(cfg.initial_lr);
  TrainHistory history;
  history.reserve(static_cast<std::size_t>(cfg.epochs));

  std::vector<int> starts, labels;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.shuffle) std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    int correct = 0;
    for (int first = 0; first < count; first += batch_size) {
      const int last = std::min(first + batch_size, count);
      starts.clear();
      labels.clear();
      for (int k = first; k < last; ++k) {
        const auto& w = windows.samples[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])];
        starts.push_back(w.start);
        labels.push_back(w.label);
      }
      const auto batch = make_batch<float>(mc, desc.data(), pose_data, starts);
      auto lg = loss_and_gradients(model, batch, labels);
      for (Eigen::Index b = 0; b < lg.per_sample_loss.size(); ++b)
        if (!std::isfinite(lg.per_sample_loss[b]))
          throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) + ", sample " +
                               std::to_string(labels[static_cast<std::size_t>(b)]));
      loss_sum += lg.loss * static_cast<double>(last - first);
      for (std::size_t b = 0; b < labels.size(); ++b) correct += lg.predicted[b] == labels[b];
      nn::adam_step<float>(views, std::as_const(lg.grads).views(), adam, sched.current_lr);
    }
    const double mean_loss = loss_sum / count;
    history.push_back({epoch, mean_loss, static_cast<double>(correct) / count, sched.current_lr});
    sched = nn::plateau_step(sched, mean_loss, cfg.scheduler_factor, cfg.scheduler_patience, cfg.min_lr);
  }
  return {std::move(model), std::move(history)};
}

namespace detail {

inline void check_query(const ModelConfig& mc, const DescriptorSequence& desc, const PoseSequence& poses) {
  require(desc.frames() > mc.tw, "query has " + std::to_string(desc.frames()) + " frames, need more than tw = " +
                                     std::to_string(mc.tw));
  require(poses.frames() == desc.frames(), "query pose and descriptor frame counts differ");
}

/// Runs the model over every query window (the training windowing rule
/// applied to the query) in chunks; sink(first_row, logits) receives each
/// N_places x chunk logit block. Returns the start frame of each window.
template <class T, class Sink>
std::vector<std::int64_t> score_windows(const SplModel<T>& model, const DescriptorSequence& desc,
                                        const PoseSequence& poses, int chunk, Sink&& sink) {
  const auto& mc = model.config;
  check_query(mc, desc, poses);
  require(chunk >= 1, "chunk must be >= 1");
  const auto std_poses = poses.standardized() ? poses : ingest::apply_standardization(poses, model.pose_stats);
  const auto windows = ingest::make_windows(static_cast<int>(desc.frames()), mc.tw);
  const int count = windows.count();
  std::vector<std::int64_t> frames(static_cast<std::size_t>(count));
  std::vector<int> starts;
  for (int first = 0; first < count; first += chunk) {
    const int last = std::min(first + chunk, count);
    starts.clear();
    for (int k = first; k < last; ++k) {
      starts.push_back(windows.samples[static_cast<std::size_t>(k)].start);
      frames[static_cast<std::size_t>(k)] = windows.samples[static_cast<std::size_t>(k)].start;
    }
    const auto batch = make_batch<T>(mc, desc.data(), std_poses.data(), starts);
    sink(static_cast<Eigen::Index>(first), forward_logits(model, batch));
  }
  return frames;
}

}  // namespace detail

/// Full probability matrix: one row per query window, one column per place.
/// Raw poses are standardized with the model's stored statistics.
template <class T>
MatchScores infer(const SplModel<T>& model, const DescriptorSequence& desc, const PoseSequence& poses,
                  int chunk = 512) {
  detail::check_query(model.config, desc, poses);
  Matrix<double> scores(ingest::make_windows(static_cast<int>(desc.frames()), model.config.tw).count(),
                        model.config.num_places);
  auto frames = detail::score_windows(model, desc, poses, chunk, [&](Eigen::Index first, const Matrix<T>& logits) {
    const Matrix<T> probs = nn::softmax<T>(logits);
    // tiled transpose into the column-major score matrix
    constexpr Eigen::Index kTile = 32;
    const Eigen::Index rows = probs.cols();
    for (Eigen::Index c0 = 0; c0 < probs.rows(); c0 += kTile)
      for (Eigen::Index r0 = 0; r0 < rows; r0 += kTile) {
        const auto nc = std::min(kTile, probs.rows() - c0), nr = std::min(kTile, rows - r0);
        scores.block(first + r0, c0, nr, nc) = probs.block(c0, r0, nc, nr).transpose().template cast<double>();
      }
  });
  return MatchScores::from_scores(std::move(scores), std::move(frames));
}

/// Best place and its probability per query window, without keeping the
/// probability matrix (`scores` is 0 x num_places). Reduces the logits
/// directly: argmax, and confidence = 1 / sum exp(l - max).
template <class T>
MatchScores localize(const SplModel<T>& model, const DescriptorSequence& desc, const PoseSequence& poses,
                     int chunk = 512) {
  MatchScores out;
  out.scores = Matrix<double>::Zero(0, model.config.num_places);
  out.query_frames = detail::score_windows(model, desc, poses, chunk, [&](Eigen::Index, const Matrix<T>& logits) {
    for (Eigen::Index b = 0; b < logits.cols(); ++b) {
      Eigen::Index best = 0;
      const T top = logits.col(b).maxCoeff(&best);
      const T sum = (logits.col(b).array() - top).exp().sum();
      out.predicted.push_back(static_cast<int>(best));
      out.confidence.push_back(static_cast<double>(T(1) / sum));
    }
  });
  return out;
}

}  // namespace seqplace::spl
