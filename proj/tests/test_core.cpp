#include "seqplace/config_file.hpp"
#include "seqplace/core.hpp"
#include "seqplace/io.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

using namespace seqplace;

TEST(SeededRng, SameSeedSameStream) {
  auto a = seeded_rng(42), b = seeded_rng(42);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a(), b());
}

TEST(SeededRng, NeighbouringSeedsDiffer) {
  auto a = seeded_rng(42), b = seeded_rng(43);
  bool differ = false;
  for (int i = 0; i < 10; ++i) differ = differ || a() != b();
  EXPECT_TRUE(differ);
}

TEST(SeededRng, ZeroIsAnOrdinarySeed) {
  auto a = seeded_rng(0), b = seeded_rng(0), c = seeded_rng(1);
  const auto first = a();
  EXPECT_EQ(first, b());
  EXPECT_NE(first, c());
}

TEST(DescriptorSequence, DefaultFrameIdsAreSequential) {
  RowMatrix<float> m(3, 2);
  m << 1, 2, 3, 4, 5, 6;
  DescriptorSequence d(m);
  EXPECT_EQ(d.frames(), 3);
  EXPECT_EQ(d.dim(), 2);
  EXPECT_EQ(d.frame_ids(), (std::vector<std::uint64_t>{0, 1, 2}));
}

TEST(DescriptorSequence, RejectsEmptyNonFiniteAndUnorderedIds) {
  EXPECT_THROW(DescriptorSequence(RowMatrix<float>(0, 3)), ValidationError);
  EXPECT_THROW(DescriptorSequence(RowMatrix<float>(3, 0)), ValidationError);
  RowMatrix<float> m = RowMatrix<float>::Ones(2, 2);
  m(1, 0) = std::numeric_limits<float>::quiet_NaN();
  EXPECT_THROW(DescriptorSequence{m}, ValidationError);
  m(1, 0) = std::numeric_limits<float>::infinity();
  EXPECT_THROW(DescriptorSequence{m}, ValidationError);
  const RowMatrix<float> ok = RowMatrix<float>::Ones(3, 2);
  EXPECT_THROW(DescriptorSequence(ok, {0, 2, 2}), ValidationError);
  EXPECT_THROW(DescriptorSequence(ok, {3, 1, 2}), ValidationError);
  EXPECT_THROW(DescriptorSequence(ok, {0, 1}), ValidationError);
  EXPECT_NO_THROW(DescriptorSequence(ok, {4, 9, 100}));
}

TEST(PoseSequence, ShapeAndFiniteness) {
  EXPECT_THROW(PoseSequence(RowMatrix<double>(3, 3)), ValidationError);
  EXPECT_THROW(PoseSequence(RowMatrix<double>(0, 2)), ValidationError);
  RowMatrix<double> p = RowMatrix<double>::Zero(2, 2);
  p(0, 1) = std::nan("");
  EXPECT_THROW(PoseSequence{p}, ValidationError);
}

TEST(ModelConfig, NumPlacesMustEqualFramesMinusTw) {
  const auto c = ModelConfig::make(Variant::kSpl, 8, 12, 20, 4);
  EXPECT_EQ(c.num_places, 16);
  auto bad = c;
  bad.num_places = 17;
  EXPECT_THROW(bad.validate(), ValidationError);
  bad.num_places = 15;
  EXPECT_THROW(bad.validate(), ValidationError);
}

TEST(ModelConfig, TwBounds) {
  EXPECT_THROW(ModelConfig::make(Variant::kSpl, 8, 12, 20, 0), ValidationError);
  EXPECT_THROW(ModelConfig::make(Variant::kSpl, 8, 12, 20, 20), ValidationError);
  EXPECT_NO_THROW(ModelConfig::make(Variant::kSpl, 8, 12, 20, 19));
  EXPECT_THROW(ModelConfig::make(Variant::kSpl, 0, 12, 20, 2), ValidationError);
  EXPECT_THROW(ModelConfig::make(Variant::kSpl, 8, 0, 20, 2), ValidationError);
}

TEST(ModelConfig, DefaultValues) {
  ModelConfig c;
  EXPECT_EQ(c.hidden_size, 512);
  EXPECT_EQ(c.descriptor_dim, 4096);
  EXPECT_EQ(c.pose_weight, 500.0);
  EXPECT_EQ(c.tw, 10);
  TrainConfig t;
  EXPECT_EQ(t.initial_lr, 1e-3);
  EXPECT_EQ(t.min_lr, 1e-6);
  EXPECT_EQ(t.weight_decay, 0.0);
  EXPECT_EQ(t.scheduler_factor, 0.5);
  EXPECT_EQ(t.scheduler_patience, 10);
  EXPECT_FALSE(t.batch_size.has_value());
}

TEST(TrainConfig, Validation) {
  TrainConfig t;
  EXPECT_NO_THROW(t.validate());
  auto bad = t;
  bad.min_lr = 0;
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = t;
  bad.min_lr = 2e-3;
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = t;
  bad.scheduler_factor = 1.0;
  EXPECT_THROW(bad.validate(), ValidationError);
  bad.scheduler_factor = 0.0;
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = t;
  bad.batch_size = 0;
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = t;
  bad.weight_decay = 1e-4;
  EXPECT_THROW(bad.validate(), ValidationError);
}

TEST(Variant, ParseAndPrint) {
  EXPECT_EQ(parse_variant("spl"), Variant::kSpl);
  EXPECT_EQ(parse_variant("baseline"), Variant::kBaseline);
  EXPECT_EQ(to_string(Variant::kSpl), "spl");
  EXPECT_THROW(parse_variant("SPL"), ValidationError);
}

TEST(MatchScores, ArgmaxTiesGoToLowestIndex) {
  Matrix<double> s(3, 4);
  s << 0.1, 0.5, 0.5, 0.2,  //
      0.3, 0.3, 0.3, 0.3,   //
      0.0, 0.1, 0.2, 0.9;
  const auto m = MatchScores::from_scores(s);
  EXPECT_EQ(m.predicted, (std::vector<int>{1, 0, 3}));
  EXPECT_EQ(m.confidence, (std::vector<double>{0.5, 0.3, 0.9}));
  EXPECT_EQ(m.query_frames, (std::vector<std::int64_t>{0, 1, 2}));
}

TEST(MatchScores, InvariantsOnRandomMatrices) {
  auto rng = seeded_rng(5);
  std::uniform_int_distribution<int> small(0, 3);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix<double> s(6, 5);
    for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = small(rng);
    const auto m = MatchScores::from_scores(s);
    for (Eigen::Index q = 0; q < s.rows(); ++q) {
      const int p = m.predicted[static_cast<std::size_t>(q)];
      EXPECT_EQ(m.confidence[static_cast<std::size_t>(q)], s(q, p));
      for (int c = 0; c < s.cols(); ++c) {
        EXPECT_LE(s(q, c), s(q, p));
        if (c < p) {
          EXPECT_LT(s(q, c), s(q, p));
        }
      }
    }
  }
}

TEST(ConfigFile, RoundTripIsLossless) {
  auto m = ModelConfig::make(Variant::kBaseline, 33, 17, 121, 7, 0.1 + 0.2);
  TrainConfig t;
  t.initial_lr = 3.14159e-4;
  t.min_lr = 1e-7;
  t.epochs = 1234;
  t.batch_size = 19;
  t.seed = 18446744073709551615ull;
  t.scheduler_factor = 1.0 / 3.0;
  t.scheduler_patience = 4;
  t.shuffle = true;
  std::istringstream in(config::to_text(m, t));
  const auto e = config::parse(in);
  config::check_known_keys(e);
  ModelConfig m2;
  TrainConfig t2;
  config::apply(e, m2);
  config::apply(e, t2);
  EXPECT_EQ(m, m2);
  EXPECT_EQ(t, t2);

  t.batch_size.reset();
  std::istringstream in_all(config::to_text(m, t));
  TrainConfig t3;
  config::apply(config::parse(in_all), t3);
  EXPECT_EQ(t, t3);
}

TEST(ConfigFile, CommentsWhitespaceAndErrors) {
  std::istringstream in("# header\n  tw =  4   # window\n\nhidden_size=8\n");
  const auto e = config::parse(in);
  EXPECT_EQ(e.at("tw"), "4");
  EXPECT_EQ(e.at("hidden_size"), "8");

  std::istringstream no_eq("tw 4\n");
  EXPECT_THROW(config::parse(no_eq), FormatError);
  std::istringstream unknown("learning_rate = 1\n");
  EXPECT_THROW(config::check_known_keys(config::parse(unknown)), ValidationError);
  std::istringstream bad_num("tw = four\n");
  ModelConfig m;
  EXPECT_THROW(config::apply(config::parse(bad_num), m), ValidationError);
  std::istringstream bad_bool("shuffle = maybe\n");
  TrainConfig t;
  EXPECT_THROW(config::apply(config::parse(bad_bool), t), ValidationError);
}

TEST(Io, FormattedDoublesRoundTrip) {
  auto rng = seeded_rng(9);
  std::normal_distribution<double> n(0.0, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double v = n(rng) * std::pow(10.0, i % 20 - 10);
    EXPECT_EQ(io::parse_double(io::fmt(v), "test"), v);
  }
  EXPECT_EQ(io::fmt(1e-6), "1e-06");
  EXPECT_EQ(io::fmt(0.5), "0.5");
}

TEST(Io, ByteReaderReportsTruncation) {
  io::ByteWriter w;
  w.magic("ABCD");
  w.u32(7);
  io::ByteReader r(w.bytes().substr(0, 6), "mem");
  r.expect_magic("ABCD");
  try {
    r.u32();
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("expected at least 8 bytes, got 6"), std::string::npos) << e.what();
  }
}
