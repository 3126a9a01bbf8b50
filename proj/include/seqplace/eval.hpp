#pragma once

// Tolerance-aware precision-recall analysis and latency benchmarking.

#include "seqplace/core.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace seqplace::eval {

enum class Tolerance { kFrames, kMeters };

struct GroundTruth {
  std::vector<int> map;  // correct reference index per scored query
  Tolerance kind = Tolerance::kFrames;
  double radius = 0.0;
  RowMatrix<double> reference_poses;  // required in meters mode

  void validate(Eigen::Index n_ref) const {
    require(radius >= 0.0, "tolerance radius must be non-negative");
    for (const int r : map)
      require(r >= 0 && r < n_ref, "ground-truth reference " + std::to_string(r) + " outside [0, " +
                                       std::to_string(n_ref) + ")");
    if (kind == Tolerance::kMeters)
      require(reference_poses.rows() >= n_ref && reference_poses.cols() == 2,
              "meters tolerance needs a reference pose for every place");
  }
};

inline bool is_correct(int predicted, int truth, const GroundTruth& gt) {
  if (gt.kind == Tolerance::kFrames) return std::abs(predicted - truth) <= gt.radius;
  const auto& p = gt.reference_poses;
  if (predicted < 0 || predicted >= p.rows()) return false;
  const double dx = p(predicted, 0) - p(truth, 0);
  const double dy = p(predicted, 1) - p(truth, 1);
  return std::sqrt(dx * dx + dy * dy) <= gt.radius;
}

/// Trapezoid over recall, anchored at (0, precision of the first point).
inline double auc(const PrCurve& curve) {
  if (curve.points.empty()) return 0.0;
  double area = 0.0;
  double prev_r = 0.0;
  double prev_p = curve.points.front().precision;
  for (const auto& pt : curve.points) {
    area += (pt.recall - prev_r) * (pt.precision + prev_p) / 2.0;
    prev_r = pt.recall;
    prev_p = pt.precision;
  }
  return area;
}

inline double max_recall_at_full_precision(const PrCurve& curve) {
  double best = 0.0;
  for (const auto& pt : curve.points)
    if (pt.precision == 1.0) best = std::max(best, pt.recall);
  return best;
}

/// Sweeps every distinct confidence (descending); a query is retrieved when
/// its confidence is >= the threshold.
inline PrCurve pr_curve(const MatchScores& scores, const GroundTruth& gt) {
  const auto n = scores.size();
  require(gt.map.size() == n, "pr_curve: " + std::to_string(n) + " scored queries but " +
                                  std::to_string(gt.map.size()) + " ground-truth entries");
  gt.validate(scores.scores.cols() > 0 ? scores.scores.cols() : std::numeric_limits<Eigen::Index>::max());
  std::vector<std::size_t> order(n);
  for (std::size_t q = 0; q < n; ++q) order[q] = q;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores.confidence[a] > scores.confidence[b]; });

  PrCurve curve;
  std::size_t retrieved = 0, tp = 0;
  for (std::size_t k = 0; k < n;) {
    const double thr = scores.confidence[order[k]];
    while (k < n && scores.confidence[order[k]] == thr) {
      const auto q = order[k];
      tp += is_correct(scores.predicted[q], gt.map[q], gt);
      ++retrieved;
      ++k;
    }
    const double precision = static_cast<double>(tp) / static_cast<double>(retrieved);
    const double recall = static_cast<double>(tp) / static_cast<double>(n);
    curve.points.push_back({thr, precision, recall});
  }
  curve.auc = auc(curve);
  curve.max_recall_at_full_precision = max_recall_at_full_precision(curve);
  return curve;
}

struct RadiusAuc {
  double radius;
  double auc;
};

inline std::vector<RadiusAuc> auc_vs_tolerance(const MatchScores& scores, GroundTruth gt,
                                               const std::vector<double>& radii) {
  require(!radii.empty(), "auc_vs_tolerance: no radii");
  std::vector<RadiusAuc> out;
  for (const double r : radii) {
    gt.radius = r;
    out.push_back({r, pr_curve(scores, gt).auc});
  }
  return out;
}

struct LatencyReport {
  std::string matcher;
  std::int64_t dataset_size = 0;
  std::int64_t queries = 0;
  double total_seconds = 0.0;  // all timed repetitions, warm-up excluded
  double per_query_mean_us = 0.0;
  double per_query_p95_us = 0.0;
  int repetitions = 0;
};

/// Times `pass` (one full pass over `queries` queries) once untimed, then
/// `repetitions` times. Per-query figures are pass time / queries.
inline LatencyReport bench_latency(const std::string& name, std::int64_t dataset_size, std::int64_t queries,
                                   const std::function<void()>& pass, int repetitions) {
  require(repetitions >= 3, "bench_latency: need at least 3 repetitions");
  require(queries >= 1, "bench_latency: need at least one query");
  using clock = std::chrono::steady_clock;
  try {
    pass();
  } catch (const Error& e) {
    throw Error("bench_latency(" + name + "): warm-up failed: " + e.what());
  }
  std::vector<double> per_query;
  double total = 0.0;
  for (int rep = 0; rep < repetitions; ++rep) {
    const auto t0 = clock::now();
    try {
      pass();
    } catch (const Error& e) {
      throw Error("bench_latency(" + name + "): repetition " + std::to_string(rep) + " failed: " + e.what());
    }
    const double s = std::chrono::duration<double>(clock::now() - t0).count();
    total += s;
    per_query.push_back(s * 1e6 / static_cast<double>(queries));
  }
  LatencyReport r;
  r.matcher = name;
  r.dataset_size = dataset_size;
  r.queries = queries;
  r.total_seconds = total;
  r.repetitions = repetitions;
  double sum = 0.0;
  for (const double v : per_query) sum += v;
  r.per_query_mean_us = sum / repetitions;
  std::sort(per_query.begin(), per_query.end());
  // nearest-rank percentile
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * repetitions));
  r.per_query_p95_us = per_query[std::max<std::size_t>(rank, 1) - 1];
  return r;
}

}  // namespace seqplace::eval
