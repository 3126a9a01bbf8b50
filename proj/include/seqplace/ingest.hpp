#pragma once

// Descriptor/pose persistence, pose standardization, temporal windows and
// desk-scale synthetic traversals.

#include "seqplace/core.hpp"
#include "seqplace/io.hpp"

#include <array>
#include <numbers>
#include <string>
#include <vector>

namespace seqplace::ingest {

// ---------------------------------------------------------------------------
// Descriptor files
//
// SPLD layout: "SPLD", u32 version (=1), u32 N, u32 n, N*n f32 row-major,
// all little-endian. Files ending in ".csv" hold one comma-separated row per
// frame instead.

inline constexpr std::uint32_t kDescriptorVersion = 1;

inline bool has_csv_extension(const std::string& path) {
  return path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
}

inline std::string encode_descriptors(const RowMatrix<float>& m) {
  io::ByteWriter w;
  w.magic("SPLD");
  w.u32(kDescriptorVersion);
  w.u32(static_cast<std::uint32_t>(m.rows()));
  w.u32(static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) w.f32(m(r, c));
  return w.bytes();
}

inline DescriptorSequence decode_descriptors(io::ByteReader r) {
  r.expect_magic("SPLD");
  const auto version = r.u32();
  if (version != kDescriptorVersion)
    throw FormatError(r.origin() + ": unsupported SPLD version " + std::to_string(version));
  const auto rows = r.u32();
  const auto cols = r.u32();
  if (rows == 0 || cols == 0)
    throw FormatError(r.origin() + ": invalid shape " + shape_str(rows, cols));
  const std::size_t expected = 16 + 4ull * rows * cols;
  if (r.size() != expected)
    throw FormatError(r.origin() + ": expected " + std::to_string(expected) + " bytes for " +
                      shape_str(rows, cols) + ", got " + std::to_string(r.size()));
  RowMatrix<float> m(rows, cols);
  for (std::uint32_t i = 0; i < rows; ++i)
    for (std::uint32_t j = 0; j < cols; ++j) {
      const float v = r.f32();
      if (!std::isfinite(v))
        throw FormatError(r.origin() + ": non-finite value at frame " + std::to_string(i) + ", dim " +
                          std::to_string(j));
      m(i, j) = v;
    }
  return DescriptorSequence(std::move(m));
}

inline DescriptorSequence parse_descriptor_csv(const std::string& text, const std::string& origin) {
  std::vector<std::vector<float>> rows;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto where = origin + ":" + std::to_string(lineno);
    std::vector<float> row;
    for (const auto& cell : io::split(line)) {
      const double v = io::parse_double(cell, where);
      if (!std::isfinite(v)) throw FormatError(where + ": non-finite descriptor value");
      row.push_back(static_cast<float>(v));
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw FormatError(where + ": expected " + std::to_string(rows.front().size()) + " columns, got " +
                        std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError(origin + ": no descriptor rows");
  RowMatrix<float> m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return DescriptorSequence(std::move(m));
}

inline DescriptorSequence load_descriptors(const std::string& path) {
  if (has_csv_extension(path)) return parse_descriptor_csv(io::read_text(path), path);
  return decode_descriptors(io::ByteReader::from_file(path));
}

inline void save_descriptors(const RowMatrix<float>& m, const std::string& path) {
  if (has_csv_extension(path)) {
    std::ostringstream os;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) os << (c ? "," : "") << io::fmt(m(r, c));
      os << '\n';
    }
    io::write_text(path, os.str());
    return;
  }
  io::write_text(path, encode_descriptors(m));
}

inline void save_descriptors(const DescriptorSequence& d, const std::string& path) { save_descriptors(d.data(), path); }

// ---------------------------------------------------------------------------
// Pose and ground-truth CSV files

inline PoseSequence parse_pose_csv(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw FormatError(origin + ": empty pose file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "frame,x,y") throw FormatError(origin + ": expected header 'frame,x,y'");
  std::vector<std::array<double, 2>> xy;
  long long last = -1;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto where = origin + ":" + std::to_string(lineno);
    const auto cells = io::split(line);
    if (cells.size() != 3) throw FormatError(where + ": expected 3 columns");
    const auto frame = io::parse_int(cells[0], where);
    if (frame <= last) throw FormatError(where + ": frame indices must be strictly increasing");
    last = frame;
    xy.push_back({io::parse_double(cells[1], where), io::parse_double(cells[2], where)});
  }
  if (xy.empty()) throw FormatError(origin + ": no pose rows");
  RowMatrix<double> m(static_cast<Eigen::Index>(xy.size()), 2);
  for (std::size_t i = 0; i < xy.size(); ++i) {
    m(static_cast<Eigen::Index>(i), 0) = xy[i][0];
    m(static_cast<Eigen::Index>(i), 1) = xy[i][1];
  }
  return PoseSequence(std::move(m));
}

inline PoseSequence load_poses(const std::string& path) { return parse_pose_csv(io::read_text(path), path); }

inline std::string pose_csv(const PoseSequence& p) {
  std::ostringstream os;
  os << "frame,x,y\n";
  for (Eigen::Index r = 0; r < p.frames(); ++r)
    os << r << ',' << io::fmt(p.data()(r, 0)) << ',' << io::fmt(p.data()(r, 1)) << '\n';
  return os.str();
}

inline void save_poses(const PoseSequence& p, const std::string& path) { io::write_text(path, pose_csv(p)); }

/// Query frame -> reference frame. Rows must cover queries 0..M-1 in order.
inline std::vector<int> parse_ground_truth_csv(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw FormatError(origin + ": empty ground-truth file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "query,ref") throw FormatError(origin + ": expected header 'query,ref'");
  std::vector<int> map;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto where = origin + ":" + std::to_string(lineno);
    const auto cells = io::split(line);
    if (cells.size() != 2) throw FormatError(where + ": expected 2 columns");
    const auto q = io::parse_int(cells[0], where);
    const auto ref = io::parse_int(cells[1], where);
    if (q != static_cast<long long>(map.size())) throw FormatError(where + ": queries must be numbered 0,1,2,...");
    if (ref < 0) throw FormatError(where + ": negative reference index");
    map.push_back(static_cast<int>(ref));
  }
  return map;
}

inline std::vector<int> load_ground_truth(const std::string& path) {
  return parse_ground_truth_csv(io::read_text(path), path);
}

inline std::string ground_truth_csv(const std::vector<int>& map) {
  std::ostringstream os;
  os << "query,ref\n";
  for (std::size_t q = 0; q < map.size(); ++q) os << q << ',' << map[q] << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// Standardization

struct PoseStats {
  std::array<double, 2> mean{0.0, 0.0};
  std::array<double, 2> std{1.0, 1.0};  // 0 marks a constant column
};

struct StandardizedPoses {
  PoseSequence poses;
  PoseStats stats;
};

/// Applies (x - mean) / std per column; std == 0 columns become zeros.
inline PoseSequence apply_standardization(const PoseSequence& p, const PoseStats& s) {
  RowMatrix<double> out(p.frames(), 2);
  for (Eigen::Index r = 0; r < p.frames(); ++r)
    for (int c = 0; c < 2; ++c)
      out(r, c) = s.std[c] == 0.0 ? 0.0 : (p.data()(r, c) - s.mean[c]) / s.std[c];
  return PoseSequence(std::move(out), true);
}

inline PoseSequence unstandardize(const PoseSequence& p, const PoseStats& s) {
  RowMatrix<double> out(p.frames(), 2);
  for (Eigen::Index r = 0; r < p.frames(); ++r)
    for (int c = 0; c < 2; ++c) out(r, c) = p.data()(r, c) * s.std[c] + s.mean[c];
  return PoseSequence(std::move(out), false);
}

/// Population statistics (divide by N).
inline StandardizedPoses standardize_poses(const PoseSequence& p) {
  require(p.frames() >= 2, "standardize_poses: need at least 2 frames, got " + std::to_string(p.frames()));
  PoseStats s;
  const double n = static_cast<double>(p.frames());
  for (int c = 0; c < 2; ++c) {
    const auto col = p.data().col(c);
    const double mean = col.sum() / n;
    const double var = (col.array() - mean).square().sum() / n;
    s.mean[c] = mean;
    s.std[c] = std::sqrt(var);
  }
  return {apply_standardization(p, s), s};
}

// ---------------------------------------------------------------------------
// Temporal windows

struct Window {
  int start;  // covers frames [start, start + tw - 1]
  int label;
};

struct WindowSet {
  int tw = 0;
  std::vector<Window> samples;

  int count() const { return static_cast<int>(samples.size()); }
};

/// N - tw windows of tw consecutive frames. The last window ends at frame
/// N - 2, so the final frame never starts or ends a sample.
inline WindowSet make_windows(int frames, int tw) {
  require(tw >= 1, "make_windows: tw must be >= 1");
  require(tw < frames, "make_windows: tw (" + std::to_string(tw) + ") must be smaller than the frame count (" +
                           std::to_string(frames) + ")");
  WindowSet w;
  w.tw = tw;
  w.samples.reserve(static_cast<std::size_t>(frames - tw));
  for (int i = 0; i < frames - tw; ++i) w.samples.push_back({i, i});
  return w;
}

// ---------------------------------------------------------------------------
// Synthetic traversals

struct SynthOptions {
  int frames = 120;
  int dim = 32;
  std::uint64_t seed = 0;
  double smoothness = 0.6;  // weight of the previous descriptor, in [0, 1)
  double step_m = 2.5;      // mean distance between frames
};

struct SyntheticEnv {
  DescriptorSequence descriptors;
  PoseSequence poses;
  SynthOptions options;
};

namespace detail {

inline Vector<double> random_unit(int dim, Rng& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Vector<double> v(dim);
  do {
    for (int k = 0; k < dim; ++k) v[k] = n01(rng);
  } while (v.norm() == 0.0);
  return v / v.norm();
}

}  // namespace detail

/// Descriptors: d_t = normalize(s * d_{t-1} + (1 - s) * u_t) with u_t a fresh
/// random unit vector. Poses: an open loop around the origin, radius and
/// forward speed modulated smoothly, never closing on itself.
inline SyntheticEnv synth_traverse(const SynthOptions& opt) {
  require(opt.frames >= 4, "synth_traverse: need at least 4 frames");
  require(opt.dim >= 2, "synth_traverse: need dim >= 2");
  require(opt.smoothness >= 0.0 && opt.smoothness < 1.0, "synth_traverse: smoothness must lie in [0, 1)");
  require(opt.step_m > 0.0, "synth_traverse: step_m must be positive");
  Rng rng = seeded_rng(opt.seed);

  RowMatrix<float> desc(opt.frames, opt.dim);
  Vector<double> d = detail::random_unit(opt.dim, rng);
  for (int t = 0; t < opt.frames; ++t) {
    if (t > 0) {
      d = opt.smoothness * d + (1.0 - opt.smoothness) * detail::random_unit(opt.dim, rng);
      d /= d.norm();
    }
    for (int k = 0; k < opt.dim; ++k) desc(t, k) = static_cast<float>(d[k]);
  }

  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double phase = 2 * std::numbers::pi * u01(rng);
  const double wobble = 0.15 + 0.15 * u01(rng);
  const double arc = 0.9 * 2 * std::numbers::pi;  // total sweep angle
  const double base_radius = opt.frames * opt.step_m / arc;
  // piecewise speed: a handful of segments with smooth cosine blends between them
  const int segments = std::max(2, opt.frames / 40);
  std::vector<double> speeds(static_cast<std::size_t>(segments) + 1);
  for (auto& s : speeds) s = 0.7 + 0.6 * u01(rng);

  RowMatrix<double> poses(opt.frames, 2);
  std::vector<double> step(static_cast<std::size_t>(opt.frames), 0.0);
  double total = 0.0;
  for (int t = 1; t < opt.frames; ++t) {
    const double pos = static_cast<double>(t) / opt.frames * segments;
    const int seg = std::min(static_cast<int>(pos), segments - 1);
    const double frac = pos - seg;
    const double blend = 0.5 - 0.5 * std::cos(std::numbers::pi * frac);
    step[static_cast<std::size_t>(t)] = speeds[static_cast<std::size_t>(seg)] * (1 - blend) +
                                        speeds[static_cast<std::size_t>(seg) + 1] * blend;
    total += step[static_cast<std::size_t>(t)];
  }
  double theta = 0.0;
  for (int t = 0; t < opt.frames; ++t) {
    if (t > 0) theta += arc * step[static_cast<std::size_t>(t)] / total;
    const double radius = base_radius * (1.0 + wobble * std::sin(3.0 * theta + phase));
    poses(t, 0) = radius * std::cos(theta);
    poses(t, 1) = radius * std::sin(theta);
  }
  return {DescriptorSequence(std::move(desc)), PoseSequence(std::move(poses)), opt};
}

/// Piecewise-constant playback speed over equal slices of the reference.
struct SpeedProfile {
  std::vector<double> speeds{1.0};

  double at(double position, int reference_frames) const {
    const auto k = static_cast<std::size_t>(position / reference_frames * static_cast<double>(speeds.size()));
    return speeds[std::min(k, speeds.size() - 1)];
  }
};

struct QueryOptions {
  double noise_sigma = 0.0;  // per-dimension Gaussian descriptor noise
  double pose_sigma = 0.0;   // per-axis Gaussian pose noise, pose units
  SpeedProfile warp;
  std::uint64_t seed = 1;
};

struct PerturbedQuery {
  DescriptorSequence descriptors;
  PoseSequence poses;
  std::vector<int> ground_truth;  // query frame -> nearest reference frame
};

/// Replays the reference at the warp's speeds. Descriptors and poses are
/// linearly interpolated between neighbouring reference frames; ground truth
/// is whichever of those two reference poses lies closer to the noise-free
/// query pose (ties to the earlier frame).
inline PerturbedQuery perturb_query(const SyntheticEnv& env, const QueryOptions& opt) {
  require(opt.noise_sigma >= 0.0 && opt.pose_sigma >= 0.0, "perturb_query: noise must be non-negative");
  require(!opt.warp.speeds.empty(), "perturb_query: empty speed profile");
  for (const double s : opt.warp.speeds) require(s > 0.0 && std::isfinite(s), "perturb_query: speeds must be positive");
  const auto& ref = env.descriptors.data();
  const auto& ref_pose = env.poses.data();
  const int n = static_cast<int>(ref.rows());
  const int dim = static_cast<int>(ref.cols());

  std::vector<double> positions;
  for (double s = 0.0; s <= (n - 1) + 1e-9; s += opt.warp.at(s, n)) positions.push_back(std::min(s, n - 1.0));
  if (positions.size() < 4)
    throw ValidationError("perturb_query: warp yields " + std::to_string(positions.size()) + " frames, need >= 4");

  Rng rng = seeded_rng(opt.seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  const auto m = static_cast<Eigen::Index>(positions.size());
  RowMatrix<float> desc(m, dim);
  RowMatrix<double> pose(m, 2);
  std::vector<int> gt(positions.size());
  for (Eigen::Index q = 0; q < m; ++q) {
    const double s = positions[static_cast<std::size_t>(q)];
    const int lo = static_cast<int>(std::floor(s));
    const int hi = std::min(lo + 1, n - 1);
    const double frac = s - lo;
    const bool on_frame = frac == 0.0;

    Eigen::RowVector2d p = ref_pose.row(lo);
    if (!on_frame) p = (1 - frac) * ref_pose.row(lo) + frac * ref_pose.row(hi);
    const double d_lo = (p - ref_pose.row(lo)).norm();
    const double d_hi = (p - ref_pose.row(hi)).norm();
    gt[static_cast<std::size_t>(q)] = d_hi < d_lo ? hi : lo;

    if (on_frame && opt.noise_sigma == 0.0) {
      desc.row(q) = ref.row(lo);
    } else {
      Vector<double> v = ref.row(lo).cast<double>().transpose();
      if (!on_frame) v = (1 - frac) * v + frac * ref.row(hi).cast<double>().transpose();
      for (int k = 0; k < dim; ++k) v[k] += opt.noise_sigma * n01(rng);
      const double norm = v.norm();
      if (norm > 0) v /= norm;
      desc.row(q) = v.cast<float>().transpose();
    }
    if (opt.pose_sigma > 0.0) {
      p[0] += opt.pose_sigma * n01(rng);
      p[1] += opt.pose_sigma * n01(rng);
    }
    pose.row(q) = p;
  }
  return {DescriptorSequence(std::move(desc)), PoseSequence(std::move(pose)), std::move(gt)};
}

}  // namespace seqplace::ingest
