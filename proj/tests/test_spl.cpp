#include "test_util.hpp"

#include "seqplace/nn/grad_check.hpp"
#include "seqplace/spl/checkpoint.hpp"
#include "seqplace/spl/train.hpp"

#include <gtest/gtest.h>

#include <cstring>

using namespace seqplace;
using namespace seqplace::spl;

namespace {

template <class T>
RowMatrix<T> random_rows(Eigen::Index r, Eigen::Index c, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  RowMatrix<T> m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(n(rng));
  return m;
}

template <class T>
void perturb_all(SplModel<T>& m, Rng& rng, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  m.params.for_each_tensor([&](auto& t) {
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] += static_cast<T>(n(rng));
  });
}

struct Fixture {
  ingest::SyntheticEnv env;
  TrainResult trained;
};

// One trained network shared by the inference and checkpoint tests.
const Fixture& trained_fixture() {
  static const Fixture f = [] {
    Fixture x{ingest::synth_traverse({120, 32, 7, 0.6, 2.5}), {}};
    TrainConfig tc;
    tc.epochs = 300;
    tc.shuffle = true;
    tc.seed = 3;
    x.trained = train(build_model(ModelConfig::make(Variant::kSpl, 32, 64, 120, 5), 1), x.env.descriptors,
                      x.env.poses, tc);
    return x;
  }();
  return f;
}

double max_abs_diff(const Matrix<double>& a, const Matrix<double>& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

TEST(BuildModel, SplShapes) {
  const auto m = build_model(ModelConfig::make(Variant::kSpl, 8, 12, 20, 4), 0);
  EXPECT_EQ(m.params.env.input_dim(), 10);
  EXPECT_EQ(m.params.env.hidden_size(), 12);
  ASSERT_TRUE(m.params.head.has_value());
  EXPECT_EQ(m.params.head->input_dim(), 20);
  EXPECT_EQ(m.params.head->hidden_size(), 12);
  EXPECT_EQ(m.params.output.in_dim(), 12);
  EXPECT_EQ(m.params.output.out_dim(), 16);
}

TEST(BuildModel, BaselineHasOneLstm) {
  const auto m = build_model(ModelConfig::make(Variant::kBaseline, 8, 12, 20, 4), 0);
  EXPECT_EQ(m.params.env.input_dim(), 10);
  EXPECT_FALSE(m.params.head.has_value());
  EXPECT_EQ(m.params.output.out_dim(), 16);
}

TEST(BuildModel, DeterministicAndSeedSensitive) {
  const auto cfg = ModelConfig::make(Variant::kSpl, 8, 12, 20, 4);
  EXPECT_TRUE(build_model(cfg, 5) == build_model(cfg, 5));
  EXPECT_FALSE(build_model(cfg, 5) == build_model(cfg, 6));
}

TEST(BuildModel, InvalidConfigRejected) {
  auto cfg = ModelConfig::make(Variant::kSpl, 8, 12, 20, 4);
  cfg.num_places = 10;
  EXPECT_THROW(build_model(cfg, 0), ValidationError);
}

TEST(Forward, SingleStepComposesCellAndLinear) {
  auto rng = seeded_rng(1);
  for (const auto variant : {Variant::kSpl, Variant::kBaseline}) {
    const auto m = build_model<double>(ModelConfig::make(variant, 6, 5, 9, 1, 3.0), 2);
    const auto d = random_rows<double>(1, 6, rng);
    const auto p = random_rows<double>(1, 2, rng);
    Matrix<double> x_env(8, 1);
    x_env << d.transpose(), 3.0 * p.transpose();
    const Matrix<double> zero = Matrix<double>::Zero(5, 1);
    const auto env = nn::lstm_step<double>(x_env, zero, zero, m.params.env);
    Matrix<double> h = env.h;
    if (variant == Variant::kSpl) {
      Matrix<double> x_head(11, 1);
      x_head << d.transpose(), env.h;
      h = nn::lstm_step<double>(x_head, zero, zero, *m.params.head).h;
    }
    const Matrix<double> expected = nn::linear_forward<double>(h, m.params.output);
    EXPECT_LT(max_abs_diff(forward(m, d, p), expected), 1e-14) << to_string(variant);
  }
}

TEST(Forward, ZeroParametersYieldOutputBias) {
  auto rng = seeded_rng(2);
  auto m = build_model(ModelConfig::make(Variant::kSpl, 4, 3, 10, 3), 0);
  m.params.for_each_tensor([](auto& t) { t.setZero(); });
  m.params.output.bias << 1, -2, 3, 0.5, 7, -1, 2;
  for (int trial = 0; trial < 5; ++trial) {
    const Vector<float> out = forward(m, random_rows<float>(3, 4, rng), random_rows<float>(3, 2, rng));
    EXPECT_EQ(out, m.params.output.bias);
  }
}

TEST(Forward, PoseWeightIrrelevantForZeroPoses) {
  auto rng = seeded_rng(3);
  auto a = build_model(ModelConfig::make(Variant::kSpl, 4, 3, 10, 3, 500.0), 4);
  auto b = a;
  b.config.pose_weight = 1000.0;
  const auto d = random_rows<float>(3, 4, rng);
  const RowMatrix<float> zero = RowMatrix<float>::Zero(3, 2);
  EXPECT_EQ(forward(a, d, zero), forward(b, d, zero));
}

TEST(Forward, ZeroPoseWeightIgnoresPoses) {
  auto rng = seeded_rng(4);
  const auto m = build_model(ModelConfig::make(Variant::kSpl, 4, 3, 10, 3, 0.0), 4);
  const auto d = random_rows<float>(3, 4, rng);
  const auto ref = forward(m, d, random_rows<float>(3, 2, rng));
  for (int trial = 0; trial < 5; ++trial) {
    RowMatrix<float> p = random_rows<float>(3, 2, rng) * 1e3f;
    EXPECT_EQ(forward(m, d, p), ref);
  }
}

TEST(Forward, PureFunction) {
  auto rng = seeded_rng(5);
  const auto m = build_model(ModelConfig::make(Variant::kSpl, 4, 3, 10, 3), 4);
  const auto d = random_rows<float>(3, 4, rng);
  const auto p = random_rows<float>(3, 2, rng);
  const Vector<float> a = forward(m, d, p), b = forward(m, d, p);
  EXPECT_EQ(std::memcmp(a.data(), b.data(), sizeof(float) * 7), 0);
}

TEST(Forward, WindowShapeMismatch) {
  const auto m = build_model(ModelConfig::make(Variant::kSpl, 4, 3, 10, 3), 4);
  const auto zeros = [](Eigen::Index r, Eigen::Index c) { return RowMatrix<float>(RowMatrix<float>::Zero(r, c)); };
  EXPECT_THROW(forward(m, zeros(2, 4), zeros(2, 2)), ValidationError);
  EXPECT_THROW(forward(m, zeros(3, 5), zeros(3, 2)), ValidationError);
  EXPECT_THROW(forward(m, zeros(3, 4), zeros(3, 3)), ValidationError);
}

TEST(Forward, BatchedColumnsMatchSingleWindows) {
  auto rng = seeded_rng(6);
  const auto m = build_model(ModelConfig::make(Variant::kSpl, 4, 3, 20, 3), 4);
  const auto desc = random_rows<float>(20, 4, rng);
  const RowMatrix<double> poses = random_rows<double>(20, 2, rng);
  const std::vector<int> starts = {0, 7, 3, 16};
  const auto tr = forward_trace(m, make_batch<float>(m.config, desc, poses, starts));
  for (std::size_t k = 0; k < starts.size(); ++k) {
    const Vector<float> single =
        forward(m, RowMatrix<float>(desc.middleRows(starts[k], 3)), RowMatrix<float>(poses.middleRows(starts[k], 3).cast<float>()));
    EXPECT_LT((tr.logits.col(static_cast<Eigen::Index>(k)) - single).cwiseAbs().maxCoeff(), 1e-6f);
  }
}

TEST(Forward, CacheFreePathIsBitwiseEqualToTrace) {
  auto rng = seeded_rng(8);
  for (const auto variant : {Variant::kSpl, Variant::kBaseline}) {
    const auto m = build_model(ModelConfig::make(variant, 7, 5, 30, 4), 2);
    const auto desc = random_rows<float>(30, 7, rng);
    const RowMatrix<double> poses = random_rows<double>(30, 2, rng);
    const std::vector<int> starts = {0, 3, 26, 11, 9};
    const auto batch = make_batch<float>(m.config, desc, poses, starts);
    const Matrix<float> a = forward_trace(m, batch).logits, b = forward_logits(m, batch);
    ASSERT_EQ(a.rows(), b.rows());
    EXPECT_EQ(std::memcmp(a.data(), b.data(), sizeof(float) * a.size()), 0) << to_string(variant);
  }
}

TEST(Gradients, FullModelMatchesFiniteDifferences) {
  for (const auto variant : {Variant::kSpl, Variant::kBaseline}) {
    for (std::uint64_t seed = 0; seed < 2; ++seed) {
      auto rng = seeded_rng(40 + seed);
      auto m = build_model<double>(ModelConfig::make(variant, 8, 12, 20, 4, 1.0), seed);
      perturb_all(m, rng, 0.2);
      const auto desc = random_rows<float>(20, 8, rng);
      const RowMatrix<double> poses = random_rows<double>(20, 2, rng);
      const std::vector<int> starts = {0, 5, 9, 16}, labels = {0, 5, 9, 15};
      const auto batch = make_batch<double>(m.config, desc, poses, starts);
      const auto lg = loss_and_gradients(m, batch, labels);
      const auto r = nn::grad_check([&] { return loss_and_gradients(m, batch, labels).loss; }, m.params.views(),
                                    lg.grads.views(), 1e-4);
      EXPECT_LE(r.max_relative_error, 1e-4) << to_string(variant) << " seed " << seed;
    }
  }
}

TEST(Gradients, BatchMeanEqualsAverageOfSingles) {
  auto rng = seeded_rng(7);
  auto m = build_model<double>(ModelConfig::make(Variant::kSpl, 5, 4, 12, 3), 1);
  const auto desc = random_rows<float>(12, 5, rng);
  const RowMatrix<double> poses = random_rows<double>(12, 2, rng) * 0.01;
  const std::vector<int> starts = {1, 4, 8}, labels = {1, 4, 8};
  const auto whole = loss_and_gradients(m, make_batch<double>(m.config, desc, poses, starts), labels);
  auto acc = m.params.zeros_like();
  double loss = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    const int s[] = {starts[k]}, l[] = {labels[k]};
    const auto one = loss_and_gradients(m, make_batch<double>(m.config, desc, poses, s), l);
    loss += one.loss / 3;
    auto dst = acc.views();
    const auto src = one.grads.views();
    for (std::size_t t = 0; t < dst.size(); ++t)
      for (std::size_t i = 0; i < dst[t].size(); ++i) dst[t][i] += src[t][i] / 3;
  }
  EXPECT_NEAR(whole.loss, loss, 1e-12);
  const auto a = whole.grads.views();
  const auto b = std::as_const(acc).views();
  for (std::size_t t = 0; t < a.size(); ++t)
    for (std::size_t i = 0; i < a[t].size(); ++i) EXPECT_NEAR(a[t][i], b[t][i], 1e-12);
}

TEST(Train, ZeroEpochsReturnsInput) {
  const auto env = ingest::synth_traverse({30, 6, 1, 0.6, 2.5});
  const auto m = build_model(ModelConfig::make(Variant::kSpl, 6, 8, 30, 4), 2);
  TrainConfig tc;
  tc.epochs = 0;
  const auto r = train(m, env.descriptors, env.poses, tc);
  EXPECT_TRUE(r.model == m);
  EXPECT_TRUE(r.history.empty());
}

TEST(Train, RejectsMismatchedData) {
  const auto env = ingest::synth_traverse({30, 6, 1, 0.6, 2.5});
  TrainConfig tc;
  tc.epochs = 1;
  EXPECT_THROW(train(build_model(ModelConfig::make(Variant::kSpl, 6, 8, 31, 4), 2), env.descriptors, env.poses, tc),
               ValidationError);
  EXPECT_THROW(train(build_model(ModelConfig::make(Variant::kSpl, 7, 8, 30, 4), 2), env.descriptors, env.poses, tc),
               ValidationError);
}

TEST(Train, LossHalvesWithinFiftyEpochs) {
  const auto env = ingest::synth_traverse({120, 32, 7, 0.6, 2.5});
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    TrainConfig tc;
    tc.epochs = 50;
    tc.batch_size = 16;
    tc.shuffle = true;
    tc.seed = seed;
    const auto r = train(build_model(ModelConfig::make(Variant::kSpl, 32, 64, 120, 5), seed), env.descriptors,
                         env.poses, tc);
    ASSERT_EQ(r.history.size(), 50u);
    EXPECT_LE(r.history.back().loss, 0.5 * r.history.front().loss) << "seed " << seed;
  }
}

TEST(Train, HistoryShape) {
  const auto& f = trained_fixture();
  ASSERT_EQ(f.trained.history.size(), 300u);
  for (std::size_t e = 0; e < f.trained.history.size(); ++e) {
    EXPECT_EQ(f.trained.history[e].epoch, static_cast<int>(e));
    if (e > 0) {
      EXPECT_LE(f.trained.history[e].lr, f.trained.history[e - 1].lr);
    }
  }
  EXPECT_GE(f.trained.history.back().accuracy, 0.99);
}

TEST(Train, ShuffleDoesNotChangeOutcome) {
  const auto env = ingest::synth_traverse({120, 32, 7, 0.6, 2.5});
  double acc[2];
  for (int shuffle = 0; shuffle < 2; ++shuffle) {
    TrainConfig tc;
    tc.epochs = 150;
    tc.batch_size = 23;
    tc.seed = 4;
    tc.shuffle = shuffle == 1;
    const auto r =
        train(build_model(ModelConfig::make(Variant::kSpl, 32, 64, 120, 5), 4), env.descriptors, env.poses, tc);
    const auto s = infer(r.model, env.descriptors, env.poses);
    int hits = 0;
    for (std::size_t q = 0; q < s.size(); ++q) hits += s.predicted[q] == static_cast<int>(q);
    acc[shuffle] = static_cast<double>(hits) / static_cast<double>(s.size());
  }
  EXPECT_LE(std::abs(acc[0] - acc[1]), 0.02) << acc[0] << " vs " << acc[1];
}

TEST(Train, DeterministicForSeed) {
  const auto env = ingest::synth_traverse({40, 8, 2, 0.6, 2.5});
  TrainConfig tc;
  tc.epochs = 20;
  tc.shuffle = true;
  tc.batch_size = 7;
  tc.seed = 9;
  const auto m = build_model(ModelConfig::make(Variant::kSpl, 8, 10, 40, 4), 3);
  const auto a = train(m, env.descriptors, env.poses, tc);
  const auto b = train(m, env.descriptors, env.poses, tc);
  EXPECT_TRUE(a.model == b.model);
  EXPECT_EQ(encode_checkpoint(a.model), encode_checkpoint(b.model));
}

TEST(Train, NonFiniteLossAbortsWithDiagnostic) {
  const auto env = ingest::synth_traverse({30, 6, 1, 0.6, 2.5});
  auto m = build_model(ModelConfig::make(Variant::kBaseline, 6, 8, 30, 4), 2);
  m.params.output.weight(3, 2) = std::numeric_limits<float>::quiet_NaN();
  TrainConfig tc;
  tc.epochs = 3;
  try {
    train(m, env.descriptors, env.poses, tc);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("epoch 0"), std::string::npos) << msg;
    EXPECT_NE(msg.find("sample"), std::string::npos) << msg;
  }
}

TEST(Infer, SelfQueryRecoversWindows) {
  const auto& f = trained_fixture();
  const auto s = infer(f.trained.model, f.env.descriptors, f.env.poses);
  ASSERT_EQ(s.size(), 115u);
  int hits = 0;
  for (std::size_t q = 0; q < s.size(); ++q) {
    hits += s.predicted[q] == static_cast<int>(q);
    EXPECT_EQ(s.query_frames[q], static_cast<std::int64_t>(q));
  }
  EXPECT_GE(hits, static_cast<int>(std::ceil(0.99 * 115)));
}

TEST(Infer, RowsAreProbabilities) {
  const auto& f = trained_fixture();
  const auto s = infer(f.trained.model, f.env.descriptors, f.env.poses);
  for (Eigen::Index q = 0; q < s.scores.rows(); ++q) {
    EXPECT_NEAR(s.scores.row(q).sum(), 1.0, 1e-5);
    EXPECT_GE(s.scores.row(q).minCoeff(), 0.0);
  }
}

TEST(Infer, CleanReplayEqualsSelfQuery) {
  const auto& f = trained_fixture();
  const auto replay = ingest::perturb_query(f.env, {});
  const auto a = infer(f.trained.model, f.env.descriptors, f.env.poses);
  const auto b = infer(f.trained.model, replay.descriptors, replay.poses);
  EXPECT_EQ(a.scores, b.scores);
}

TEST(Infer, ChunkingDoesNotChangeScores) {
  const auto& f = trained_fixture();
  const auto a = infer(f.trained.model, f.env.descriptors, f.env.poses, 512);
  const auto b = infer(f.trained.model, f.env.descriptors, f.env.poses, 7);
  EXPECT_LT(max_abs_diff(a.scores, b.scores), 1e-6);
  EXPECT_EQ(a.predicted, b.predicted);
}

TEST(Localize, MatchesInferWithoutScoreMatrix) {
  const auto& f = trained_fixture();
  const auto& m = f.trained.model;
  ingest::QueryOptions qo;
  qo.noise_sigma = 0.2;
  qo.seed = 5;
  const auto query = ingest::perturb_query(f.env, qo);
  const auto full = infer(m, query.descriptors, query.poses);
  for (int chunk : {512, 7}) {
    const auto light = localize(m, query.descriptors, query.poses, chunk);
    EXPECT_EQ(light.scores.rows(), 0);
    EXPECT_EQ(light.scores.cols(), m.config.num_places);
    EXPECT_EQ(light.predicted, full.predicted);
    EXPECT_EQ(light.query_frames, full.query_frames);
    ASSERT_EQ(light.confidence.size(), full.confidence.size());
    for (std::size_t q = 0; q < full.size(); ++q) EXPECT_NEAR(light.confidence[q], full.confidence[q], 1e-6);
  }
  const DescriptorSequence short_desc(RowMatrix<float>(f.env.descriptors.data().topRows(5)));
  const PoseSequence short_pose(RowMatrix<double>(f.env.poses.data().topRows(5)));
  EXPECT_THROW(localize(m, short_desc, short_pose), ValidationError);
}

TEST(Infer, RejectsShortOrIncompatibleQueries) {
  const auto& f = trained_fixture();
  const auto& m = f.trained.model;
  const DescriptorSequence short_desc(RowMatrix<float>(f.env.descriptors.data().topRows(5)));
  const PoseSequence short_pose(RowMatrix<double>(f.env.poses.data().topRows(5)));
  EXPECT_THROW(infer(m, short_desc, short_pose), ValidationError);
  const DescriptorSequence wrong_dim(RowMatrix<float>::Ones(20, 16));
  const PoseSequence poses20(RowMatrix<double>::Zero(20, 2));
  EXPECT_THROW(infer(m, wrong_dim, poses20), ValidationError);
  EXPECT_THROW(infer(m, f.env.descriptors, poses20), ValidationError);
}

TEST(Infer, ArgmaxInvariantUnderMonotoneTransform) {
  const auto& f = trained_fixture();
  const auto s = infer(f.trained.model, f.env.descriptors, f.env.poses);
  const Matrix<double> transformed = (s.scores.array() * 3.0 + 1.0).log().exp().cube();
  EXPECT_EQ(MatchScores::from_scores(transformed).predicted, s.predicted);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  testutil::TempDir dir;
  const auto& f = trained_fixture();
  save_checkpoint(f.trained.model, dir.file("m.splm"));
  const auto back = load_checkpoint(dir.file("m.splm"));
  EXPECT_TRUE(back == f.trained.model);
  EXPECT_EQ(back.pose_stats.mean, f.trained.model.pose_stats.mean);
  EXPECT_EQ(encode_checkpoint(back), encode_checkpoint(f.trained.model));
  auto rng = seeded_rng(8);
  const auto d = random_rows<float>(5, 32, rng);
  const auto p = random_rows<float>(5, 2, rng);
  const Vector<float> a = forward(f.trained.model, d, p), b = forward(back, d, p);
  EXPECT_EQ(std::memcmp(a.data(), b.data(), sizeof(float) * static_cast<std::size_t>(a.size())), 0);
}

TEST(Checkpoint, BaselineRoundTrip) {
  const auto m = build_model(ModelConfig::make(Variant::kBaseline, 5, 4, 12, 3, 2.5), 7);
  const auto bytes = encode_checkpoint(m);
  EXPECT_TRUE(decode_checkpoint(io::ByteReader(bytes, "mem")) == m);
  // header is 4 + 4 * 7 + 8 * 5 bytes
  EXPECT_EQ(bytes.size(), 72u + 4u * (4 * 4 * 7 + 4 * 4 * 4 + 16 + 9 * 4 + 9));
}

TEST(Checkpoint, CorruptionAndVariantGuards) {
  const auto spl = encode_checkpoint(build_model(ModelConfig::make(Variant::kSpl, 5, 4, 12, 3), 7));
  const auto base = encode_checkpoint(build_model(ModelConfig::make(Variant::kBaseline, 5, 4, 12, 3), 7));
  auto bad_magic = spl;
  bad_magic[1] = 'Q';
  EXPECT_THROW(decode_checkpoint(io::ByteReader(bad_magic, "m")), FormatError);
  auto bad_version = spl;
  bad_version[4] = 9;
  EXPECT_THROW(decode_checkpoint(io::ByteReader(bad_version, "m")), FormatError);
  auto bad_tag = spl;
  bad_tag[8] = 5;
  EXPECT_THROW(decode_checkpoint(io::ByteReader(bad_tag, "m")), FormatError);
  EXPECT_THROW(decode_checkpoint(io::ByteReader(spl.substr(0, spl.size() - 4), "m")), FormatError);
  EXPECT_THROW(decode_checkpoint(io::ByteReader(spl.substr(0, 20), "m")), FormatError);
  EXPECT_THROW(decode_checkpoint(io::ByteReader(spl + "abcd", "m")), FormatError);
  auto bad_places = spl;
  bad_places[24] = 3;  // num_places no longer total_frames - tw
  EXPECT_THROW(decode_checkpoint(io::ByteReader(bad_places, "m")), FormatError);
  try {
    decode_checkpoint(io::ByteReader(base, "m"), Variant::kSpl);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("variant mismatch"), std::string::npos);
  }
  EXPECT_NO_THROW(decode_checkpoint(io::ByteReader(base, "m"), Variant::kBaseline));
}
