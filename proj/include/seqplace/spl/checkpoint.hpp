#pragma once

// SPLM checkpoint layout (little-endian):
//   "SPLM"  u32 version (=1)  u32 variant (0 baseline, 1 spl)
//   u32 descriptor_dim  u32 hidden_size  u32 total_frames  u32 num_places  u32 tw
//   f64 pose_weight  f64 pose_mean[2]  f64 pose_std[2]
//   f32 tensors in SplParams order, each column-major:
//     env.w_input, env.w_hidden, env.bias, [head.w_input, head.w_hidden, head.bias],
//     output.weight, output.bias

#include "seqplace/io.hpp"
#include "seqplace/spl/model.hpp"

#include <optional>

namespace seqplace::spl {

inline constexpr std::uint32_t kCheckpointVersion = 1;

inline std::string encode_checkpoint(const SplModel<float>& m) {
  io::ByteWriter w;
  w.magic("SPLM");
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(m.config.variant));
  w.u32(static_cast<std::uint32_t>(m.config.descriptor_dim));
  w.u32(static_cast<std::uint32_t>(m.config.hidden_size));
  w.u32(static_cast<std::uint32_t>(m.config.total_frames));
  w.u32(static_cast<std::uint32_t>(m.config.num_places));
  w.u32(static_cast<std::uint32_t>(m.config.tw));
  w.f64(m.config.pose_weight);
  for (const double v : m.pose_stats.mean) w.f64(v);
  for (const double v : m.pose_stats.std) w.f64(v);
  m.params.for_each_tensor([&](const auto& t) {
    for (Eigen::Index i = 0; i < t.size(); ++i) w.f32(t.data()[i]);
  });
  return w.bytes();
}

/// `expected` guards against loading the wrong network family.
inline SplModel<float> decode_checkpoint(io::ByteReader r, std::optional<Variant> expected = std::nullopt) {
  r.expect_magic("SPLM");
  const auto version = r.u32();
  if (version != kCheckpointVersion)
    throw FormatError(r.origin() + ": unsupported checkpoint version " + std::to_string(version));
  const auto tag = r.u32();
  if (tag > 1) throw FormatError(r.origin() + ": unknown variant tag " + std::to_string(tag));
  const auto variant = static_cast<Variant>(tag);
  if (expected && *expected != variant)
    throw FormatError(r.origin() + ": variant mismatch, checkpoint is " + to_string(variant) + ", expected " +
                      to_string(*expected));
  ModelConfig cfg;
  cfg.variant = variant;
  cfg.descriptor_dim = static_cast<int>(r.u32());
  cfg.hidden_size = static_cast<int>(r.u32());
  cfg.total_frames = static_cast<int>(r.u32());
  cfg.num_places = static_cast<int>(r.u32());
  cfg.tw = static_cast<int>(r.u32());
  cfg.pose_weight = r.f64();
  try {
    cfg.validate();
  } catch (const ValidationError& e) {
    throw FormatError(r.origin() + ": invalid config block: " + e.what());
  }
  SplModel<float> m;
  m.config = cfg;
  for (auto& v : m.pose_stats.mean) v = r.f64();
  for (auto& v : m.pose_stats.std) v = r.f64();

  const Eigen::Index n = cfg.descriptor_dim, h = cfg.hidden_size;
  m.params.env = nn::LstmParams<float>::zeros(n + 2, h);
  if (variant == Variant::kSpl) m.params.head = nn::LstmParams<float>::zeros(n + h, h);
  m.params.output = nn::LinearParams<float>::zeros(h, cfg.num_places);

  std::size_t floats = 0;
  m.params.for_each_tensor([&](const auto& t) { floats += static_cast<std::size_t>(t.size()); });
  const std::size_t expected_bytes = r.offset() + 4 * floats;
  if (r.size() != expected_bytes)
    throw FormatError(r.origin() + ": expected " + std::to_string(expected_bytes) + " bytes for declared shapes, got " +
                      std::to_string(r.size()));
  m.params.for_each_tensor([&](auto& t) {
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = r.f32();
  });
  r.expect_end();
  return m;
}

inline void save_checkpoint(const SplModel<float>& m, const std::string& path) {
  io::write_text(path, encode_checkpoint(m));
}

inline SplModel<float> load_checkpoint(const std::string& path, std::optional<Variant> expected = std::nullopt) {
  return decode_checkpoint(io::ByteReader::from_file(path), expected);
}

}  // namespace seqplace::spl
