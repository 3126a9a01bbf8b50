#pragma once

// Match-then-temporally-filter baselines: pairwise distance matrices,
// local contrast enhancement, constant-velocity line search (SeqSLAM-style),
// delta descriptors and single-frame matching.
//
// The SeqSLAM variant here operates on global descriptors rather than
// downsampled images.

#include "seqplace/core.hpp"

#include <limits>
#include <thread>
#include <vector>

namespace seqplace::classic {

enum class Metric { kSad, kCosine };

inline Metric parse_metric(const std::string& s) {
  if (s == "sad") return Metric::kSad;
  if (s == "cosine") return Metric::kCosine;
  throw ValidationError("unknown metric '" + s + "' (expected sad or cosine)");
}

struct SimilarityMatrix {
  Matrix<double> distances;  // N_ref x N_query, non-negative
  Metric metric = Metric::kCosine;
};

namespace detail {

/// Runs body(column) for columns [0, n) on up to `threads` workers. Each
/// column is owned by exactly one worker.
template <class F>
void for_columns(Eigen::Index n, int threads, F&& body) {
  if (threads <= 1 || n < 2) {
    for (Eigen::Index j = 0; j < n; ++j) body(j);
    return;
  }
  std::vector<std::thread> pool;
  const int workers = static_cast<int>(std::min<Eigen::Index>(threads, n));
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (Eigen::Index j = w; j < n; j += workers) body(j);
    });
  for (auto& t : pool) t.join();
}

}  // namespace detail

inline SimilarityMatrix similarity_matrix(const DescriptorSequence& ref, const DescriptorSequence& query,
                                          Metric metric, int threads = 1) {
  require(ref.dim() == query.dim(), "similarity_matrix: descriptor dims differ (" + std::to_string(ref.dim()) +
                                        " vs " + std::to_string(query.dim()) + ")");
  const Matrix<double> r = ref.data().cast<double>();
  const Matrix<double> q = query.data().cast<double>();
  SimilarityMatrix s;
  s.metric = metric;
  s.distances.resize(r.rows(), q.rows());
  if (metric == Metric::kSad) {
    detail::for_columns(q.rows(), threads, [&](Eigen::Index j) {
      for (Eigen::Index i = 0; i < r.rows(); ++i) s.distances(i, j) = (r.row(i) - q.row(j)).cwiseAbs().sum();
    });
    return s;
  }
  const Vector<double> rn = r.rowwise().norm();
  const Vector<double> qn = q.rowwise().norm();
  for (Eigen::Index i = 0; i < rn.size(); ++i)
    if (rn[i] == 0.0) throw ValidationError("similarity_matrix: zero-norm reference descriptor at frame " + std::to_string(i));
  for (Eigen::Index j = 0; j < qn.size(); ++j)
    if (qn[j] == 0.0) throw ValidationError("similarity_matrix: zero-norm query descriptor at frame " + std::to_string(j));
  detail::for_columns(q.rows(), threads, [&](Eigen::Index j) {
    for (Eigen::Index i = 0; i < r.rows(); ++i) {
      const double cos = r.row(i).dot(q.row(j)) / (rn[i] * qn[j]);
      s.distances(i, j) = std::clamp(1.0 - cos, 0.0, 2.0);
    }
  });
  return s;
}

inline constexpr double kContrastEpsilon = 1e-9;

/// Rows [lo, hi] of the r_window-long neighbourhood of row i, shifted to stay
/// inside [0, rows) and truncated if rows < r_window.
inline std::pair<Eigen::Index, Eigen::Index> local_window(Eigen::Index i, Eigen::Index rows, int r_window) {
  Eigen::Index lo = i - r_window / 2;
  Eigen::Index hi = lo + r_window - 1;
  if (lo < 0) {
    hi -= lo;
    lo = 0;
  }
  if (hi > rows - 1) {
    lo -= hi - (rows - 1);
    hi = rows - 1;
  }
  return {std::max<Eigen::Index>(lo, 0), hi};
}

/// (D - local mean) / (local std + eps), statistics taken down each column.
inline Matrix<double> contrast_enhance(const Matrix<double>& d, int r_window, int threads = 1) {
  require(r_window >= 2, "contrast_enhance: r_window must be >= 2");
  Matrix<double> out(d.rows(), d.cols());
  detail::for_columns(d.cols(), threads, [&](Eigen::Index j) {
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
      const auto [lo, hi] = local_window(i, d.rows(), r_window);
      const auto seg = d.col(j).segment(lo, hi - lo + 1);
      const double mean = seg.mean();
      const double var = (seg.array() - mean).square().mean();
      out(i, j) = (d(i, j) - mean) / (std::sqrt(var) + kContrastEpsilon);
    }
  });
  return out;
}

struct SeqSlamConfig {
  int ds = 10;
  double v_min = 0.8;
  double v_max = 1.2;
  double v_step = 0.1;
  int r_window = 10;

  void validate() const {
    require(ds >= 1, "ds must be >= 1");
    require(v_min > 0 && v_min <= v_max, "require 0 < v_min <= v_max");
    require(v_step > 0, "v_step must be positive");
    require(r_window >= 2, "r_window must be >= 2");
  }
};

/// v_min, v_min + v_step, ... up to v_max (inclusive within 1e-9).
inline std::vector<double> velocities(const SeqSlamConfig& c) {
  std::vector<double> v;
  const auto count = static_cast<int>(std::floor((c.v_max - c.v_min) / c.v_step + 1e-9)) + 1;
  for (int k = 0; k < count; ++k) v.push_back(c.v_min + k * c.v_step);
  return v;
}

/// Line score for the trajectory ending at (i, j): mean of D along
/// (i - round(v k), j - k), k = 0..ds-1, rows clamped into range.
inline double line_score(const Matrix<double>& d, Eigen::Index i, Eigen::Index j, double v, int ds) {
  double sum = 0.0;
  for (int k = 0; k < ds; ++k) {
    const auto row = std::clamp<Eigen::Index>(i - std::lround(v * k), 0, d.rows() - 1);
    sum += d(row, j - k);
  }
  return sum / ds;
}

/// Min-max rescale of negated costs over rows [first_row, rows) into [0, 1]
/// (1 = best); earlier rows are left at 0.
inline Matrix<double> costs_to_scores(const Matrix<double>& cost, Eigen::Index first_row) {
  Matrix<double> scores = Matrix<double>::Zero(cost.rows(), cost.cols());
  if (first_row >= cost.rows()) return scores;
  const auto valid = cost.bottomRows(cost.rows() - first_row);
  const double lo = valid.minCoeff();
  const double hi = valid.maxCoeff();
  for (Eigen::Index q = first_row; q < cost.rows(); ++q)
    for (Eigen::Index i = 0; i < cost.cols(); ++i)
      scores(q, i) = hi > lo ? (hi - cost(q, i)) / (hi - lo) : 1.0;
  return scores;
}

/// For every query j >= ds - 1 and reference endpoint i, the best line cost
/// over all velocities. Scores are rescaled negated costs; queries
/// j < ds - 1 have no full line and get all-zero rows.
inline MatchScores seqslam_match(const Matrix<double>& enhanced, const SeqSlamConfig& cfg, int threads = 1) {
  cfg.validate();
  const auto vs = velocities(cfg);
  if (vs.empty()) throw ValidationError("seqslam_match: empty velocity set");
  const auto n_ref = enhanced.rows();
  const auto n_query = enhanced.cols();
  require(n_ref > cfg.ds && n_query > cfg.ds, "seqslam_match: both traversals need more than ds = " +
                                                  std::to_string(cfg.ds) + " frames");
  Matrix<double> cost = Matrix<double>::Zero(n_query, n_ref);
  detail::for_columns(n_query, threads, [&](Eigen::Index j) {
    if (j < cfg.ds - 1) return;
    for (Eigen::Index i = 0; i < n_ref; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const double v : vs) best = std::min(best, line_score(enhanced, i, j, v, cfg.ds));
      cost(j, i) = best;
    }
  });
  auto scores = costs_to_scores(cost, cfg.ds - 1);
  return MatchScores::from_scores(std::move(scores));
}

/// Single-frame matching: argmin distance per query, confidence
/// 1 - min-max normalised distance over the whole matrix.
inline MatchScores pairwise_match(const Matrix<double>& d) {
  require(d.size() > 0, "pairwise_match: empty matrix");
  return MatchScores::from_scores(costs_to_scores(d.transpose(), 0));
}

/// Delta_t = mean(d[t, t+w)) - mean(d[t-w, t)), L2-normalised (zero stays
/// zero). Frames outside [w, N-w] copy the nearest defined Delta.
inline DescriptorSequence delta_descriptors(const DescriptorSequence& desc, int w) {
  require(w >= 1, "delta_descriptors: w must be >= 1");
  const auto n = desc.frames();
  require(n > 2 * w, "delta_descriptors: need more than 2w = " + std::to_string(2 * w) + " frames, got " +
                         std::to_string(n));
  const Matrix<double> d = desc.data().cast<double>();
  RowMatrix<float> out(n, d.cols());
  for (Eigen::Index t = 0; t < n; ++t) {
    const Eigen::Index src = std::clamp<Eigen::Index>(t, w, n - w);
    Vector<double> delta = (d.middleRows(src, w).colwise().mean() - d.middleRows(src - w, w).colwise().mean()).transpose();
    const double norm = delta.norm();
    if (norm > 0) delta /= norm;
    out.row(t) = delta.cast<float>().transpose();
  }
  return DescriptorSequence(std::move(out), desc.frame_ids());
}

}  // namespace seqplace::classic
