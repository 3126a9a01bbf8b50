#pragma once

// key = value configuration files. One entry per line, '#' starts a comment.
// Keys are the lower_snake_case field names of ModelConfig and TrainConfig.

#include "seqplace/core.hpp"
#include "seqplace/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

namespace seqplace::config {

using Entries = std::map<std::string, std::string>;

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::string format_double(double v) { return io::fmt(v); }

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last)
    throw ValidationError("config key '" + key + "': cannot parse '" + text + "'");
  return value;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ValidationError("config key '" + key + "': expected true/false, got '" + text + "'");
}

}  // namespace detail

inline Entries parse(std::istream& in) {
  Entries out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    auto key = detail::trim(line.substr(0, eq));
    auto value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw FormatError("config line " + std::to_string(lineno) + ": empty key");
    out[key] = value;
  }
  return out;
}

inline Entries read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path);
  return parse(in);
}

inline void apply(const Entries& e, ModelConfig& m) {
  for (const auto& [k, v] : e) {
    if (k == "variant") m.variant = parse_variant(v);
    else if (k == "descriptor_dim") m.descriptor_dim = detail::parse_number<int>(k, v);
    else if (k == "hidden_size") m.hidden_size = detail::parse_number<int>(k, v);
    else if (k == "total_frames") m.total_frames = detail::parse_number<int>(k, v);
    else if (k == "num_places") m.num_places = detail::parse_number<int>(k, v);
    else if (k == "pose_weight") m.pose_weight = detail::parse_number<double>(k, v);
    else if (k == "tw") m.tw = detail::parse_number<int>(k, v);
  }
}

inline void apply(const Entries& e, TrainConfig& t) {
  for (const auto& [k, v] : e) {
    if (k == "initial_lr") t.initial_lr = detail::parse_number<double>(k, v);
    else if (k == "min_lr") t.min_lr = detail::parse_number<double>(k, v);
    else if (k == "weight_decay") t.weight_decay = detail::parse_number<double>(k, v);
    else if (k == "epochs") t.epochs = detail::parse_number<int>(k, v);
    else if (k == "batch_size") {
      if (v == "all") t.batch_size.reset();
      else t.batch_size = detail::parse_number<int>(k, v);
    } else if (k == "seed") t.seed = detail::parse_number<std::uint64_t>(k, v);
    else if (k == "scheduler_factor") t.scheduler_factor = detail::parse_number<double>(k, v);
    else if (k == "scheduler_patience") t.scheduler_patience = detail::parse_number<int>(k, v);
    else if (k == "shuffle") t.shuffle = detail::parse_bool(k, v);
  }
}

/// Rejects keys that belong to neither record.
inline void check_known_keys(const Entries& e) {
  static const char* known[] = {"variant", "descriptor_dim", "hidden_size", "total_frames", "num_places",
                                "pose_weight", "tw", "initial_lr", "min_lr", "weight_decay", "epochs",
                                "batch_size", "seed", "scheduler_factor", "scheduler_patience", "shuffle"};
  for (const auto& [k, v] : e) {
    bool ok = false;
    for (const char* name : known) ok = ok || k == name;
    if (!ok) throw ValidationError("unknown config key '" + k + "'");
  }
}

inline Entries entries(const ModelConfig& m) {
  return {{"variant", to_string(m.variant)},
          {"descriptor_dim", std::to_string(m.descriptor_dim)},
          {"hidden_size", std::to_string(m.hidden_size)},
          {"total_frames", std::to_string(m.total_frames)},
          {"num_places", std::to_string(m.num_places)},
          {"pose_weight", detail::format_double(m.pose_weight)},
          {"tw", std::to_string(m.tw)}};
}

inline Entries entries(const TrainConfig& t) {
  return {{"initial_lr", detail::format_double(t.initial_lr)},
          {"min_lr", detail::format_double(t.min_lr)},
          {"weight_decay", detail::format_double(t.weight_decay)},
          {"epochs", std::to_string(t.epochs)},
          {"batch_size", t.batch_size ? std::to_string(*t.batch_size) : std::string("all")},
          {"seed", std::to_string(t.seed)},
          {"scheduler_factor", detail::format_double(t.scheduler_factor)},
          {"scheduler_patience", std::to_string(t.scheduler_patience)},
          {"shuffle", t.shuffle ? "true" : "false"}};
}

inline void write(std::ostream& out, const Entries& e) {
  for (const auto& [k, v] : e) out << k << " = " << v << '\n';
}

inline std::string to_text(const ModelConfig& m, const TrainConfig& t) {
  std::ostringstream os;
  os << "# model\n";
  write(os, entries(m));
  os << "# training\n";
  write(os, entries(t));
  return os.str();
}

}  // namespace seqplace::config
