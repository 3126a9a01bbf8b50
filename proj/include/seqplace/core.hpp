#pragma once

// Shared domain types for the seqplace toolkit.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace seqplace {

template <class T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

inline constexpr const char* kVersion = "0.3.0";

/// Base of every error thrown by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad arguments, shapes or configuration. The CLI maps this to exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Corrupt or unreadable file contents.
class FormatError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// NaN/Inf encountered during training or evaluation. Exit code 2.
class NumericalError : public Error {
 public:
  using Error::Error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ValidationError(what);
}

inline std::string shape_str(Eigen::Index rows, Eigen::Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

using Rng = std::mt19937_64;

/// Deterministic random stream. Every seed, including 0, is valid.
inline Rng seeded_rng(std::uint64_t seed) { return Rng(seed); }

/// N x n matrix of per-frame global descriptors.
class DescriptorSequence {
 public:
  DescriptorSequence() = default;

  explicit DescriptorSequence(RowMatrix<float> data, std::vector<std::uint64_t> frame_ids = {})
      : data_(std::move(data)), frame_ids_(std::move(frame_ids)) {
    require(data_.rows() >= 1 && data_.cols() >= 1,
            "descriptor sequence must be at least 1x1, got " + shape_str(data_.rows(), data_.cols()));
    for (Eigen::Index r = 0; r < data_.rows(); ++r)
      for (Eigen::Index c = 0; c < data_.cols(); ++c)
        if (!std::isfinite(data_(r, c)))
          throw ValidationError("non-finite descriptor value at frame " + std::to_string(r) +
                                ", dim " + std::to_string(c));
    if (frame_ids_.empty()) {
      frame_ids_.resize(static_cast<std::size_t>(data_.rows()));
      for (std::size_t i = 0; i < frame_ids_.size(); ++i) frame_ids_[i] = i;
    }
    require(frame_ids_.size() == static_cast<std::size_t>(data_.rows()),
            "frame id count does not match descriptor rows");
    for (std::size_t i = 1; i < frame_ids_.size(); ++i)
      require(frame_ids_[i] > frame_ids_[i - 1], "frame ids must be strictly increasing");
  }

  Eigen::Index frames() const { return data_.rows(); }
  Eigen::Index dim() const { return data_.cols(); }
  const RowMatrix<float>& data() const { return data_; }
  const std::vector<std::uint64_t>& frame_ids() const { return frame_ids_; }

 private:
  RowMatrix<float> data_;
  std::vector<std::uint64_t> frame_ids_;
};

/// N x 2 positional encodings (meters, degrees, or standardized units).
class PoseSequence {
 public:
  PoseSequence() = default;

  explicit PoseSequence(RowMatrix<double> data, bool standardized = false)
      : data_(std::move(data)), standardized_(standardized) {
    require(data_.cols() == 2, "pose sequence must have 2 columns, got " + std::to_string(data_.cols()));
    require(data_.rows() >= 1, "pose sequence is empty");
    for (Eigen::Index r = 0; r < data_.rows(); ++r)
      require(std::isfinite(data_(r, 0)) && std::isfinite(data_(r, 1)),
              "non-finite pose at frame " + std::to_string(r));
  }

  Eigen::Index frames() const { return data_.rows(); }
  const RowMatrix<double>& data() const { return data_; }
  bool standardized() const { return standardized_; }

 private:
  RowMatrix<double> data_;
  bool standardized_ = false;
};

enum class Variant : std::uint32_t { kBaseline = 0, kSpl = 1 };

inline std::string to_string(Variant v) { return v == Variant::kBaseline ? "baseline" : "spl"; }

inline Variant parse_variant(const std::string& s) {
  if (s == "baseline") return Variant::kBaseline;
  if (s == "spl") return Variant::kSpl;
  throw ValidationError("unknown variant '" + s + "' (expected baseline or spl)");
}

struct ModelConfig {
  Variant variant = Variant::kSpl;
  int descriptor_dim = 4096;
  int hidden_size = 512;
  int total_frames = 0;
  int num_places = 0;
  double pose_weight = 500.0;
  int tw = 10;

  /// Fills num_places from total_frames - tw and validates.
  static ModelConfig make(Variant variant, int descriptor_dim, int hidden_size, int total_frames, int tw,
                          double pose_weight = 500.0) {
    ModelConfig c;
    c.variant = variant;
    c.descriptor_dim = descriptor_dim;
    c.hidden_size = hidden_size;
    c.total_frames = total_frames;
    c.tw = tw;
    c.num_places = total_frames - tw;
    c.pose_weight = pose_weight;
    c.validate();
    return c;
  }

  void validate() const {
    require(descriptor_dim >= 1, "descriptor_dim must be positive");
    require(hidden_size >= 1, "hidden_size must be positive");
    require(tw >= 1, "tw must be >= 1");
    require(tw < total_frames, "tw (" + std::to_string(tw) + ") must be smaller than total_frames (" +
                                   std::to_string(total_frames) + ")");
    require(num_places == total_frames - tw,
            "num_places must equal total_frames - tw (" + std::to_string(total_frames - tw) + "), got " +
                std::to_string(num_places));
    require(std::isfinite(pose_weight), "pose_weight must be finite");
  }

  bool operator==(const ModelConfig&) const = default;
};

struct TrainConfig {
  double initial_lr = 1e-3;
  double min_lr = 1e-6;
  double weight_decay = 0.0;
  int epochs = 200;
  std::optional<int> batch_size;  // nullopt = all samples in one batch
  std::uint64_t seed = 0;
  double scheduler_factor = 0.5;
  int scheduler_patience = 10;
  bool shuffle = false;

  void validate() const {
    require(min_lr > 0 && min_lr <= initial_lr, "require 0 < min_lr <= initial_lr");
    require(scheduler_factor > 0 && scheduler_factor < 1, "scheduler_factor must lie in (0, 1)");
    require(scheduler_patience >= 1, "scheduler_patience must be positive");
    require(epochs >= 0, "epochs must be non-negative");
    require(!batch_size || *batch_size >= 1, "batch_size must be positive or 'all'");
    require(weight_decay == 0.0, "only weight_decay = 0 is supported");
  }

  bool operator==(const TrainConfig&) const = default;
};

/// Row-wise argmax, lowest index wins ties.
template <class Derived>
Eigen::Index argmax_row(const Eigen::MatrixBase<Derived>& m, Eigen::Index row) {
  Eigen::Index best = 0;
  for (Eigen::Index c = 1; c < m.cols(); ++c)
    if (m(row, c) > m(row, best)) best = c;
  return best;
}

/// Per-query likelihood scores over reference places.
struct MatchScores {
  Matrix<double> scores;               // N_q x N_places, higher is better
  std::vector<int> predicted;          // argmax of each row
  std::vector<double> confidence;      // scores(q, predicted[q])
  std::vector<std::int64_t> query_frames;  // query frame each row refers to

  static MatchScores from_scores(Matrix<double> scores, std::vector<std::int64_t> query_frames = {}) {
    MatchScores m;
    const auto rows = scores.rows();
    require(scores.cols() >= 1, "score matrix has no places");
    if (query_frames.empty()) {
      query_frames.resize(static_cast<std::size_t>(rows));
      for (Eigen::Index q = 0; q < rows; ++q) query_frames[static_cast<std::size_t>(q)] = q;
    }
    require(query_frames.size() == static_cast<std::size_t>(rows), "query frame count mismatch");
    // column sweep keeps reads contiguous; strict > leaves ties at the lowest index
    m.predicted.assign(static_cast<std::size_t>(rows), 0);
    m.confidence.resize(static_cast<std::size_t>(rows));
    for (Eigen::Index q = 0; q < rows; ++q) m.confidence[static_cast<std::size_t>(q)] = scores(q, 0);
    for (Eigen::Index c = 1; c < scores.cols(); ++c) {
      const double* col = scores.col(c).data();
      for (Eigen::Index q = 0; q < rows; ++q)
        if (col[q] > m.confidence[static_cast<std::size_t>(q)]) {
          m.confidence[static_cast<std::size_t>(q)] = col[q];
          m.predicted[static_cast<std::size_t>(q)] = static_cast<int>(c);
        }
    }
    m.scores = std::move(scores);
    m.query_frames = std::move(query_frames);
    return m;
  }

  std::size_t size() const { return predicted.size(); }
};

struct PrPoint {
  double threshold;
  double precision;
  double recall;
};

struct PrCurve {
  std::vector<PrPoint> points;  // thresholds descending
  double auc = 0.0;
  double max_recall_at_full_precision = 0.0;
};

}  // namespace seqplace
