#pragma once

// seqplace command-line front end. Kept in a header so tests can drive it
// in-process.

#include "seqplace/seqplace.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace seqplace::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kNumerical = 2 };

using nlohmann::json;

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) != 1 || EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error("sha256 failed");
  }
  EVP_MD_CTX_free(ctx);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

inline std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Provenance record written next to each command's primary output.
class RunManifest {
 public:
  explicit RunManifest(std::string command) : command_(std::move(command)), started_(utc_now()) {}

  void input(const std::string& path) { inputs_[path] = sha256_hex(io::read_text(path)); }
  void set(const std::string& key, json value) { config_[key] = std::move(value); }
  void seed(std::uint64_t s) { seed_ = s; }
  void output(const std::string& path) { outputs_.push_back(path); }

  void write(const std::string& path) const {
    json j;
    j["command"] = command_;
    j["config"] = config_;
    j["inputs"] = inputs_;
    j["outputs"] = outputs_;
    if (seed_) j["seed"] = *seed_;
    j["version"] = kVersion;
    j["started"] = started_;
    j["finished"] = utc_now();
    io::write_text(path, j.dump(2) + "\n");
  }

 private:
  std::string command_;
  std::string started_;
  json config_ = json::object();
  std::map<std::string, std::string> inputs_;
  std::vector<std::string> outputs_;
  std::optional<std::uint64_t> seed_;
};

inline std::vector<double> parse_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  for (const auto& cell : io::split(text)) out.push_back(io::parse_double(cell, flag));
  if (out.empty()) throw ValidationError(flag + ": empty list");
  return out;
}

/// "a..b" (integer steps) or a comma-separated list.
inline std::vector<double> parse_radii(const std::string& text) {
  if (const auto dots = text.find(".."); dots != std::string::npos) {
    const auto lo = io::parse_int(text.substr(0, dots), "--radius-sweep");
    const auto hi = io::parse_int(text.substr(dots + 2), "--radius-sweep");
    if (lo < 0 || hi < lo) throw ValidationError("--radius-sweep: expected 'lo..hi' with 0 <= lo <= hi");
    std::vector<double> out;
    for (auto r = lo; r <= hi; ++r) out.push_back(static_cast<double>(r));
    return out;
  }
  return parse_list(text, "--radius-sweep");
}

inline int default_threads() {
  if (const char* env = std::getenv("SEQPLACE_THREADS")) {
    const auto v = std::atoi(env);
    if (v >= 1) return v;
  }
  return 1;
}

inline std::string scores_csv(const MatchScores& s) {
  std::ostringstream os;
  os << "query,predicted,confidence\n";
  for (std::size_t q = 0; q < s.size(); ++q)
    os << s.query_frames[q] << ',' << s.predicted[q] << ',' << io::fmt(s.confidence[q]) << '\n';
  return os.str();
}

struct ScoreRows {
  std::vector<std::int64_t> query;
  std::vector<int> predicted;
  std::vector<double> confidence;
};

inline ScoreRows load_scores_csv(const std::string& path) {
  std::istringstream in(io::read_text(path));
  std::string line;
  if (!std::getline(in, line) || line != "query,predicted,confidence")
    throw FormatError(path + ": expected header 'query,predicted,confidence'");
  ScoreRows rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto where = path + ":" + std::to_string(lineno);
    const auto cells = io::split(line);
    if (cells.size() != 3) throw FormatError(where + ": expected 3 columns");
    rows.query.push_back(io::parse_int(cells[0], where));
    rows.predicted.push_back(static_cast<int>(io::parse_int(cells[1], where)));
    rows.confidence.push_back(io::parse_double(cells[2], where));
  }
  if (rows.query.empty()) throw FormatError(path + ": no score rows");
  return rows;
}

inline std::string manifest_path(const std::string& primary) { return primary + ".manifest.json"; }

/// Output paths are checked up front so a bad path fails before any work or
/// any partial artifact.
inline void require_writable(const std::string& path, const std::string& flag) {
  namespace fs = std::filesystem;
  if (path.empty()) throw ValidationError(flag + ": empty path");
  const auto parent = fs::path(path).parent_path();
  if (!parent.empty() && !fs::is_directory(parent))
    throw ValidationError(flag + ": directory " + parent.string() + " does not exist");
  if (fs::is_directory(path)) throw ValidationError(flag + ": " + path + " is a directory");
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  int frames = 0;
  int dim = 32;
  std::uint64_t seed = 0;
  std::uint64_t query_seed = 0;
  double smoothness = 0.6;
  double step = 2.5;
  double noise = 0.0;
  double pose_noise = 0.0;
  std::string warp = "1.0";
  std::string out_dir = ".";
  std::string prefix = "synth";
};

inline int cmd_synth(const SynthArgs& a, CLI::App& sub, std::ostream& out) {
  ingest::SynthOptions so;
  so.frames = a.frames;
  so.dim = a.dim;
  so.seed = a.seed;
  so.smoothness = a.smoothness;
  so.step_m = a.step;
  ingest::QueryOptions qo;
  qo.noise_sigma = a.noise;
  qo.pose_sigma = a.pose_noise;
  qo.warp.speeds = parse_list(a.warp, "--warp");
  qo.seed = sub.count("--query-seed") ? a.query_seed : a.seed + 1;

  const auto env = ingest::synth_traverse(so);
  const auto query = ingest::perturb_query(env, qo);

  namespace fs = std::filesystem;
  if (!fs::is_directory(a.out_dir)) throw ValidationError("--out-dir " + a.out_dir + " is not a directory");
  const auto base = (fs::path(a.out_dir) / a.prefix).string();
  RunManifest manifest("synth");
  manifest.seed(a.seed);
  manifest.set("frames", a.frames);
  manifest.set("dim", a.dim);
  manifest.set("smoothness", a.smoothness);
  manifest.set("step", a.step);
  manifest.set("noise", a.noise);
  manifest.set("pose_noise", a.pose_noise);
  manifest.set("warp", qo.warp.speeds);
  manifest.set("query_seed", qo.seed);

  const std::vector<std::pair<std::string, std::string>> files = {
      {base + "_ref.spld", ingest::encode_descriptors(env.descriptors.data())},
      {base + "_ref_poses.csv", ingest::pose_csv(env.poses)},
      {base + "_query.spld", ingest::encode_descriptors(query.descriptors.data())},
      {base + "_query_poses.csv", ingest::pose_csv(query.poses)},
      {base + "_gt.csv", ingest::ground_truth_csv(query.ground_truth)}};
  for (const auto& [path, bytes] : files) {
    io::write_text(path, bytes);
    manifest.output(path);
  }
  manifest.write(base + ".manifest.json");
  out << "wrote " << env.descriptors.frames() << " reference and " << query.descriptors.frames()
      << " query frames to " << base << "_*\n";
  return kOk;
}

struct TrainArgs {
  std::string desc, poses, config, out = "model.splm", history;
  std::string variant = "spl";
  int tw = 10;
  int hidden = 512;
  int epochs = 200;
  double lr = 1e-3;
  double min_lr = 1e-6;
  double pos_weight = 500.0;
  std::string batch = "all";
  std::uint64_t seed = 0;
  bool shuffle = false;
  int patience = 10;
  double factor = 0.5;
};

inline int cmd_train(const TrainArgs& a, CLI::App& sub, std::ostream& out) {
  const auto desc = ingest::load_descriptors(a.desc);
  const auto poses = ingest::load_poses(a.poses);
  require(poses.frames() == desc.frames(), "pose file has " + std::to_string(poses.frames()) +
                                               " frames, descriptor file has " + std::to_string(desc.frames()));

  ModelConfig mc;
  TrainConfig tc;
  mc.variant = parse_variant(a.variant);
  mc.hidden_size = a.hidden;
  mc.pose_weight = a.pos_weight;
  mc.tw = a.tw;
  tc.epochs = a.epochs;
  tc.initial_lr = a.lr;
  tc.min_lr = a.min_lr;
  tc.seed = a.seed;
  tc.shuffle = a.shuffle;
  tc.scheduler_patience = a.patience;
  tc.scheduler_factor = a.factor;
  if (a.batch != "all") tc.batch_size = static_cast<int>(io::parse_int(a.batch, "--batch"));

  // precedence: defaults < config file < explicit flags
  if (!a.config.empty()) {
    const auto entries = config::read_file(a.config);
    config::check_known_keys(entries);
    config::apply(entries, mc);
    config::apply(entries, tc);
    if (sub.count("--variant")) mc.variant = parse_variant(a.variant);
    if (sub.count("--hidden")) mc.hidden_size = a.hidden;
    if (sub.count("--pos-weight")) mc.pose_weight = a.pos_weight;
    if (sub.count("--tw")) mc.tw = a.tw;
    if (sub.count("--epochs")) tc.epochs = a.epochs;
    if (sub.count("--lr")) tc.initial_lr = a.lr;
    if (sub.count("--min-lr")) tc.min_lr = a.min_lr;
    if (sub.count("--seed")) tc.seed = a.seed;
    if (sub.count("--shuffle")) tc.shuffle = a.shuffle;
    if (sub.count("--patience")) tc.scheduler_patience = a.patience;
    if (sub.count("--factor")) tc.scheduler_factor = a.factor;
    if (sub.count("--batch")) {
      if (a.batch == "all") tc.batch_size.reset();
      else tc.batch_size = static_cast<int>(io::parse_int(a.batch, "--batch"));
    }
  }
  mc.descriptor_dim = static_cast<int>(desc.dim());
  mc.total_frames = static_cast<int>(desc.frames());
  mc.num_places = mc.total_frames - mc.tw;
  mc.validate();
  tc.validate();

  const auto history_path = a.history.empty() ? a.out + ".history.csv" : a.history;
  require_writable(a.out, "--out");
  require_writable(history_path, "--history");
  RunManifest manifest("train");
  manifest.input(a.desc);
  manifest.input(a.poses);
  if (!a.config.empty()) manifest.input(a.config);
  manifest.seed(tc.seed);
  manifest.set("resolved", config::to_text(mc, tc));

  auto result = spl::train(spl::build_model(mc, tc.seed), desc, poses, tc);

  std::ostringstream hist;
  hist << "epoch,loss,acc,lr\n";
  for (const auto& e : result.history)
    hist << e.epoch << ',' << io::fmt(e.loss) << ',' << io::fmt(e.accuracy) << ',' << io::fmt(e.lr) << '\n';
  spl::save_checkpoint(result.model, a.out);
  io::write_text(history_path, hist.str());
  manifest.output(a.out);
  manifest.output(history_path);
  manifest.write(manifest_path(a.out));
  if (!result.history.empty())
    out << "epochs " << result.history.size() << ", final loss " << result.history.back().loss << ", accuracy "
        << result.history.back().accuracy << "\n";
  return kOk;
}

struct InferArgs {
  std::string model, desc, poses, out = "scores.csv", variant, full_scores;
};

inline int cmd_infer(const InferArgs& a, std::ostream& out) {
  std::optional<Variant> expected;
  if (!a.variant.empty()) expected = parse_variant(a.variant);
  const auto model = spl::load_checkpoint(a.model, expected);
  const auto desc = ingest::load_descriptors(a.desc);
  const auto poses = ingest::load_poses(a.poses);
  require(desc.dim() == model.config.descriptor_dim, "query descriptors have dim " + std::to_string(desc.dim()) +
                                                         ", model expects " +
                                                         std::to_string(model.config.descriptor_dim));
  require_writable(a.out, "--out");
  if (!a.full_scores.empty()) require_writable(a.full_scores, "--full-scores");
  RunManifest manifest("infer");
  manifest.input(a.model);
  manifest.input(a.desc);
  manifest.input(a.poses);

  const auto scores = a.full_scores.empty() ? spl::localize(model, desc, poses) : spl::infer(model, desc, poses);
  io::write_text(a.out, scores_csv(scores));
  manifest.output(a.out);
  if (!a.full_scores.empty()) {
    ingest::save_descriptors(RowMatrix<float>(scores.scores.cast<float>()), a.full_scores);
    manifest.output(a.full_scores);
  }
  manifest.write(manifest_path(a.out));
  out << "scored " << scores.size() << " query windows against " << model.config.num_places << " places\n";
  return kOk;
}

struct MatchArgs {
  std::string ref, query, method = "seqslam", metric = "cosine", out = "scores.csv", export_similarity;
  int ds = 10;
  double v_min = 0.8, v_max = 1.2, v_step = 0.1;
  int r_window = 10;
  int delta_window = 10;
  int threads = 0;
};

inline int cmd_match(const MatchArgs& a, std::ostream& out) {
  const auto ref = ingest::load_descriptors(a.ref);
  const auto query = ingest::load_descriptors(a.query);
  const auto metric = classic::parse_metric(a.metric);
  const int threads = a.threads > 0 ? a.threads : default_threads();
  classic::SeqSlamConfig sc{a.ds, a.v_min, a.v_max, a.v_step, a.r_window};
  if (a.method != "pairwise" && a.method != "seqslam" && a.method != "delta")
    throw ValidationError("--method must be pairwise, seqslam or delta");
  if (a.method == "seqslam") sc.validate();
  require_writable(a.out, "--out");
  if (!a.export_similarity.empty()) require_writable(a.export_similarity, "--export-similarity");

  RunManifest manifest("match");
  manifest.input(a.ref);
  manifest.input(a.query);
  manifest.set("method", a.method);
  manifest.set("metric", a.metric);
  if (a.method == "seqslam") {
    manifest.set("ds", a.ds);
    manifest.set("v_min", a.v_min);
    manifest.set("v_max", a.v_max);
    manifest.set("v_step", a.v_step);
    manifest.set("r_window", a.r_window);
  }
  if (a.method == "delta") manifest.set("delta_window", a.delta_window);

  classic::SimilarityMatrix sim;
  MatchScores scores;
  if (a.method == "delta") {
    sim = classic::similarity_matrix(classic::delta_descriptors(ref, a.delta_window),
                                     classic::delta_descriptors(query, a.delta_window), metric, threads);
    scores = classic::pairwise_match(sim.distances);
  } else {
    sim = classic::similarity_matrix(ref, query, metric, threads);
    scores = a.method == "pairwise"
                 ? classic::pairwise_match(sim.distances)
                 : classic::seqslam_match(classic::contrast_enhance(sim.distances, sc.r_window, threads), sc, threads);
  }
  io::write_text(a.out, scores_csv(scores));
  manifest.output(a.out);
  if (!a.export_similarity.empty()) {
    ingest::save_descriptors(RowMatrix<float>(sim.distances.cast<float>()), a.export_similarity);
    manifest.output(a.export_similarity);
  }
  manifest.write(manifest_path(a.out));
  out << a.method << ": matched " << scores.size() << " queries against " << ref.frames() << " reference frames\n";
  return kOk;
}

struct EvalArgs {
  std::string scores, gt, ref_poses, pr_out, auc_out = "auc.csv";
  double radius = 2.0;
  std::string sweep;
  bool meters = false;
};

inline int cmd_eval(const EvalArgs& a, CLI::App& sub, std::ostream& out) {
  const auto rows = load_scores_csv(a.scores);
  const auto gt_map = ingest::load_ground_truth(a.gt);
  std::vector<double> radii = {2.0, 10.0, 50.0};
  if (!a.sweep.empty() && sub.count("--radius")) throw ValidationError("use either --radius or --radius-sweep");
  if (!a.sweep.empty()) radii = parse_radii(a.sweep);
  if (sub.count("--radius")) radii = {a.radius};

  eval::GroundTruth gt;
  gt.kind = a.meters ? eval::Tolerance::kMeters : eval::Tolerance::kFrames;
  if (a.meters) {
    if (a.ref_poses.empty()) throw ValidationError("--meters requires --ref-poses");
    gt.reference_poses = ingest::load_poses(a.ref_poses).data();
  }
  // fake a one-column score matrix: pr_curve only needs predicted/confidence
  MatchScores scores;
  scores.predicted = rows.predicted;
  scores.confidence = rows.confidence;
  scores.query_frames = rows.query;
  int max_ref = 0;
  for (std::size_t q = 0; q < rows.query.size(); ++q) {
    const auto frame = rows.query[q];
    if (frame < 0 || frame >= static_cast<std::int64_t>(gt_map.size()))
      throw ValidationError("no ground truth for query frame " + std::to_string(frame));
    gt.map.push_back(gt_map[static_cast<std::size_t>(frame)]);
    max_ref = std::max({max_ref, gt.map.back(), rows.predicted[q]});
  }
  const Eigen::Index n_ref = a.meters ? gt.reference_poses.rows() : max_ref + 1;
  scores.scores = Matrix<double>::Zero(0, n_ref);
  gt.radius = radii.front();
  gt.validate(n_ref);

  require_writable(a.auc_out, "--auc-out");
  if (!a.pr_out.empty()) require_writable(a.pr_out, "--pr-out");
  RunManifest manifest("eval");
  manifest.input(a.scores);
  manifest.input(a.gt);
  if (a.meters) manifest.input(a.ref_poses);
  manifest.set("radii", radii);
  manifest.set("tolerance", a.meters ? "meters" : "frames");

  const auto curve = eval::pr_curve(scores, gt);
  const auto table = eval::auc_vs_tolerance(scores, gt, radii);
  if (!a.pr_out.empty()) {
    std::ostringstream os;
    os << "threshold,precision,recall\n";
    for (const auto& p : curve.points)
      os << io::fmt(p.threshold) << ',' << io::fmt(p.precision) << ',' << io::fmt(p.recall) << '\n';
    io::write_text(a.pr_out, os.str());
    manifest.output(a.pr_out);
  }
  std::ostringstream os;
  os << "radius,auc\n";
  for (const auto& r : table) os << io::fmt(r.radius) << ',' << io::fmt(r.auc) << '\n';
  io::write_text(a.auc_out, os.str());
  manifest.output(a.auc_out);
  manifest.write(manifest_path(a.auc_out));
  out << "radius " << radii.front() << ": auc " << curve.auc << ", max recall @100% precision "
      << curve.max_recall_at_full_precision << "\n";
  return kOk;
}

struct BenchArgs {
  std::string sizes = "500,1000,2000", out = "latency.json";
  int dim = 32, hidden = 64, tw = 10, ds = 10, reps = 5;
  std::uint64_t seed = 0;
};

inline json latency_json(const eval::LatencyReport& r) {
  return {{"matcher", r.matcher},
          {"dataset_size", r.dataset_size},
          {"queries", r.queries},
          {"total_seconds", r.total_seconds},
          {"per_query_mean_us", r.per_query_mean_us},
          {"per_query_p95_us", r.per_query_p95_us},
          {"repetitions", r.repetitions}};
}

/// SPL localisation vs the SeqSLAM pipeline (distance matrix, enhancement,
/// line search) over synthetic traversals of each size. Single-threaded.
inline std::vector<eval::LatencyReport> run_latency_sweep(const std::vector<int>& sizes, int dim, int hidden, int tw,
                                                          int ds, int reps, std::uint64_t seed) {
  std::vector<eval::LatencyReport> reports;
  for (const int n : sizes) {
    ingest::SynthOptions so;
    so.frames = n;
    so.dim = dim;
    so.seed = seed;
    const auto env = ingest::synth_traverse(so);
    ingest::QueryOptions qo;
    qo.noise_sigma = 0.1;
    qo.seed = seed + 1;
    const auto query = ingest::perturb_query(env, qo);
    const auto model = spl::build_model(ModelConfig::make(Variant::kSpl, dim, hidden, n, tw), seed);
    reports.push_back(eval::bench_latency(
        "spl", n, n - tw, [&] { (void)spl::localize(model, query.descriptors, query.poses); }, reps));
    classic::SeqSlamConfig sc;
    sc.ds = ds;
    reports.push_back(eval::bench_latency(
        "seqslam", n, query.descriptors.frames(),
        [&] {
          const auto sim = classic::similarity_matrix(env.descriptors, query.descriptors, classic::Metric::kCosine);
          (void)classic::seqslam_match(classic::contrast_enhance(sim.distances, sc.r_window), sc);
        },
        reps));
  }
  return reports;
}

inline int cmd_bench(const BenchArgs& a, std::ostream& out) {
  std::vector<int> sizes;
  for (const double s : parse_list(a.sizes, "--sizes")) {
    require(s > a.tw && s > a.ds && s == std::floor(s), "--sizes entries must be integers above tw and ds");
    sizes.push_back(static_cast<int>(s));
  }
  require_writable(a.out, "--out");
  RunManifest manifest("bench");
  manifest.seed(a.seed);
  manifest.set("sizes", sizes);
  manifest.set("dim", a.dim);
  manifest.set("hidden", a.hidden);
  manifest.set("tw", a.tw);
  manifest.set("ds", a.ds);
  manifest.set("reps", a.reps);
  const auto reports = run_latency_sweep(sizes, a.dim, a.hidden, a.tw, a.ds, a.reps, a.seed);
  json j = json::array();
  for (const auto& r : reports) {
    j.push_back(latency_json(r));
    out << r.matcher << " N=" << r.dataset_size << ": " << r.per_query_mean_us << " us/query\n";
  }
  io::write_text(a.out, json{{"reports", j}}.dump(2) + "\n");
  manifest.output(a.out);
  manifest.write(manifest_path(a.out));
  return kOk;
}

// ---------------------------------------------------------------------------

inline int run(std::vector<std::string> args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"seqplace: sequence-based place recognition toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "generate a synthetic reference traversal and query");
  synth->add_option("--frames", sa.frames, "reference frame count")->required()->check(CLI::Range(4, 1 << 24));
  synth->add_option("--dim", sa.dim, "descriptor dimension")->capture_default_str();
  synth->add_option("--seed", sa.seed, "reference seed")->capture_default_str();
  synth->add_option("--query-seed", sa.query_seed, "query perturbation seed (default seed + 1)");
  synth->add_option("--smoothness", sa.smoothness, "descriptor smoothness in [0, 1)")->capture_default_str();
  synth->add_option("--step", sa.step, "mean distance between frames (m)")->capture_default_str();
  synth->add_option("--noise", sa.noise, "query descriptor noise sigma")->capture_default_str();
  synth->add_option("--pose-noise", sa.pose_noise, "query pose noise sigma (m)")->capture_default_str();
  synth->add_option("--warp", sa.warp, "comma-separated playback speeds")->capture_default_str();
  synth->add_option("--out-dir", sa.out_dir, "output directory")->capture_default_str();
  synth->add_option("--prefix", sa.prefix, "output file prefix")->capture_default_str();

  TrainArgs ta;
  auto* trn = app.add_subcommand("train", "train an SPL or baseline network on one traversal");
  trn->add_option("--desc", ta.desc, "descriptor file (.spld or .csv)")->required();
  trn->add_option("--poses", ta.poses, "pose CSV")->required();
  trn->add_option("--config", ta.config, "key = value config file");
  trn->add_option("--tw", ta.tw, "temporal window")->capture_default_str();
  trn->add_option("--variant", ta.variant, "spl or baseline")->capture_default_str();
  trn->add_option("--hidden", ta.hidden, "LSTM hidden size")->capture_default_str();
  trn->add_option("--epochs", ta.epochs)->capture_default_str();
  trn->add_option("--lr", ta.lr, "initial learning rate")->capture_default_str();
  trn->add_option("--min-lr", ta.min_lr)->capture_default_str();
  trn->add_option("--pos-weight", ta.pos_weight, "positional encoding weight")->capture_default_str();
  trn->add_option("--batch", ta.batch, "batch size or 'all'")->capture_default_str();
  trn->add_option("--seed", ta.seed)->capture_default_str();
  trn->add_flag("--shuffle", ta.shuffle, "shuffle samples every epoch");
  trn->add_option("--patience", ta.patience, "plateau patience (epochs)")->capture_default_str();
  trn->add_option("--factor", ta.factor, "plateau reduction factor")->capture_default_str();
  trn->add_option("--out", ta.out, "checkpoint path")->capture_default_str();
  trn->add_option("--history", ta.history, "history CSV (default <out>.history.csv)");

  InferArgs ia;
  auto* inf = app.add_subcommand("infer", "score query windows with a trained checkpoint");
  inf->add_option("--model", ia.model)->required();
  inf->add_option("--desc", ia.desc)->required();
  inf->add_option("--poses", ia.poses)->required();
  inf->add_option("--variant", ia.variant, "reject checkpoints of the other variant");
  inf->add_option("--out", ia.out)->capture_default_str();
  inf->add_option("--full-scores", ia.full_scores, "also write the probability matrix as SPLD");

  MatchArgs ma;
  auto* mat = app.add_subcommand("match", "classical baselines: pairwise, seqslam, delta");
  mat->add_option("--ref", ma.ref)->required();
  mat->add_option("--query", ma.query)->required();
  mat->add_option("--method", ma.method)->capture_default_str()->check(CLI::IsMember({"pairwise", "seqslam", "delta"}));
  mat->add_option("--metric", ma.metric)->capture_default_str()->check(CLI::IsMember({"cosine", "sad"}));
  mat->add_option("--ds", ma.ds, "sequence length")->capture_default_str();
  mat->add_option("--vmin", ma.v_min)->capture_default_str();
  mat->add_option("--vmax", ma.v_max)->capture_default_str();
  mat->add_option("--vstep", ma.v_step)->capture_default_str();
  mat->add_option("--rwindow", ma.r_window, "contrast enhancement window")->capture_default_str();
  mat->add_option("--delta-window", ma.delta_window)->capture_default_str();
  mat->add_option("--threads", ma.threads, "worker threads (default $SEQPLACE_THREADS or 1)");
  mat->add_option("--out", ma.out)->capture_default_str();
  mat->add_option("--export-similarity", ma.export_similarity, "write the distance matrix as SPLD");

  EvalArgs ea;
  auto* evl = app.add_subcommand("eval", "precision-recall and AUC against ground truth");
  evl->add_option("--scores", ea.scores)->required();
  evl->add_option("--gt", ea.gt)->required();
  evl->add_option("--radius", ea.radius, "single tolerance radius");
  evl->add_option("--radius-sweep", ea.sweep, "'lo..hi' or comma list (default 2,10,50)");
  evl->add_flag("--meters", ea.meters, "radius in pose units instead of frames");
  evl->add_option("--ref-poses", ea.ref_poses, "reference pose CSV for --meters");
  evl->add_option("--pr-out", ea.pr_out, "PR curve CSV at the first radius");
  evl->add_option("--auc-out", ea.auc_out)->capture_default_str();

  BenchArgs ba;
  auto* bch = app.add_subcommand("bench", "deployment latency sweep, SPL vs SeqSLAM");
  bch->add_option("--sizes", ba.sizes)->capture_default_str();
  bch->add_option("--dim", ba.dim)->capture_default_str();
  bch->add_option("--hidden", ba.hidden)->capture_default_str();
  bch->add_option("--tw", ba.tw)->capture_default_str();
  bch->add_option("--ds", ba.ds)->capture_default_str();
  bch->add_option("--reps", ba.reps)->capture_default_str();
  bch->add_option("--seed", ba.seed)->capture_default_str();
  bch->add_option("--out", ba.out)->capture_default_str();

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    if (auto* last = app.get_subcommands().empty() ? &app : app.get_subcommands().front()) err << last->help();
    return kUsage;
  }

  try {
    if (*synth) return cmd_synth(sa, *synth, out);
    if (*trn) return cmd_train(ta, *trn, out);
    if (*inf) return cmd_infer(ia, out);
    if (*mat) return cmd_match(ma, out);
    if (*evl) return cmd_eval(ea, *evl, out);
    if (*bch) return cmd_bench(ba, out);
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace seqplace::cli
